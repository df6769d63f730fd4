"""Cumulant sequences, sample cumulants, and the membership discrepancy.

Closed-form cumulants exist for every scalar law in targets: a gamma with
shape s and scale c contributes s*(r-1)!*c^r at order r, and everything here
is a linear combination of independent gammas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .poly import Polynomial, poly_from_roots, poly_mul
from .targets import (GammaCombination, McKayI, NormalSpec, SecondChaos,
                      TargetSpec, VarianceGammaSpec,
                      derive_levy_decomposition)


@dataclass(frozen=True)
class CumulantSequence:
    """values[r-2] holds kappa_r for r = 2..R."""
    values: tuple[float, ...]
    R: int

    def __post_init__(self):
        if self.R < 2 or len(self.values) != self.R - 1:
            raise ValueError("R: must be >= 2 with R-1 stored values")

    def kappa(self, r: int) -> float:
        if r < 2 or r > self.R:
            raise ValueError(f"order {r} outside stored range 2..{self.R}")
        return self.values[r - 2]


def cumulant_sequence(spec: TargetSpec, R: int) -> CumulantSequence:
    """Exact kappa_2..kappa_R for the supported scalar laws."""
    if R < 2:
        raise ValueError("R: must be at least 2")
    if isinstance(spec, SecondChaos):
        spec = spec.to_gamma_combination()
    if isinstance(spec, GammaCombination):
        vals = [
            math.factorial(r - 1)
            * sum(t.m * t.alpha * (t.lam * t.c) ** r for t in spec.terms)
            for r in range(2, R + 1)
        ]
    elif isinstance(spec, McKayI):
        shape, rate1, rate2 = derive_levy_decomposition(spec)
        vals = [
            shape * math.factorial(r - 1) * (rate1 ** -r + rate2 ** -r)
            for r in range(2, R + 1)
        ]
    elif isinstance(spec, NormalSpec):
        vals = [spec.sigma2] + [0.0] * (R - 2)
    elif isinstance(spec, VarianceGammaSpec):
        vals = [
            spec.lam * math.factorial(r - 1)
            * ((spec.alpha - spec.beta) ** -r
               + (-1) ** r * (spec.alpha + spec.beta) ** -r)
            for r in range(2, R + 1)
        ]
    else:
        raise ValueError(f"kind: no cumulant sequence for {type(spec).__name__}")
    return CumulantSequence(tuple(vals), R)


def first_cumulant(spec: TargetSpec) -> float:
    """The mean, needed to turn a CumulantSequence into raw moments."""
    if isinstance(spec, (GammaCombination, SecondChaos)):
        return 0.0
    if isinstance(spec, McKayI):
        return spec.mean
    if isinstance(spec, NormalSpec):
        return spec.mu
    if isinstance(spec, VarianceGammaSpec):
        g2 = spec.alpha**2 - spec.beta**2
        return spec.mu + 2 * spec.lam * spec.beta / g2
    raise ValueError(f"kind: no mean formula for {type(spec).__name__}")


def moments_from_cumulants(kappas: Sequence[float]) -> list[float]:
    """Raw moments m_1..m_R from cumulants kappa_1..kappa_R.

    Uses m_n = sum_k C(n-1, k-1) * kappa_k * m_{n-k} with m_0 = 1.
    """
    R = len(kappas)
    m = [1.0]
    for order in range(1, R + 1):
        m.append(sum(math.comb(order - 1, k - 1) * kappas[k - 1] * m[order - k]
                     for k in range(1, order + 1)))
    return m[1:]


# ---------------------------------------------------------------------------
# structural polynomials and discrepancy


def build_P(lambdas: Sequence[float]) -> Polynomial:
    """P(x) = x * prod(x - lambda_i), the degree d+1 annihilating polynomial."""
    lams = [float(l) for l in lambdas]
    if len(set(lams)) != len(lams) or any(l == 0 for l in lams):
        raise ValueError("lambdas: must be distinct and nonzero")
    return poly_from_roots([0.0] + lams, 1.0)


def build_Q(P: Polynomial) -> Polynomial:
    return poly_mul(P, P)


def delta_discrepancy(kappa_F: CumulantSequence, lambdas: Sequence[float]) -> float:
    """Weighted cumulant functional that vanishes exactly on the law with the
    given eigenvalues (all multiplicities one).

    Delta = sum_{r=2}^{deg Q} Q_r * kappa_r(F) / (2^{r-1} (r-1)!), with Q_r the
    coefficient of x^r in Q = P^2.
    """
    Q = build_Q(build_P(lambdas))
    deg = Q.degree
    if kappa_F.R < deg:
        raise ValueError(f"cumulants through order {deg} required, have {kappa_F.R}")
    total = 0.0
    for r in range(2, deg + 1):
        qr = Q.coeffs[r] if r < len(Q.coeffs) else 0.0
        total += qr * kappa_F.kappa(r) / (2 ** (r - 1) * math.factorial(r - 1))
    return total


# ---------------------------------------------------------------------------
# sample cumulants (k-statistics) up to order 6


def _k_from_power_sums(S: Sequence[float], n: float) -> list[float]:
    """k_1..k_6 (as many as provided sums allow) from raw power sums.

    The order-r numerator is the unique polynomial in p_1..p_r making the
    estimator exactly unbiased for kappa_r; denominators are falling
    factorials n(n-1)...(n-r+1).
    """
    p = [0.0] + list(S)
    r = len(S)
    out = [p[1] / n]
    if r >= 2:
        out.append((n * p[2] - p[1] ** 2) / (n * (n - 1)))
    if r >= 3:
        out.append((n**2 * p[3] - 3 * n * p[1] * p[2] + 2 * p[1] ** 3)
                   / (n * (n - 1) * (n - 2)))
    if r >= 4:
        num = (n**2 * (n + 1) * p[4] - 4 * n * (n + 1) * p[1] * p[3]
               - 3 * n * (n - 1) * p[2] ** 2 + 12 * n * p[1] ** 2 * p[2]
               - 6 * p[1] ** 4)
        out.append(num / (n * (n - 1) * (n - 2) * (n - 3)))
    if r >= 5:
        num = (n**3 * (n + 5) * p[5] - 5 * n**2 * (n + 5) * p[1] * p[4]
               - 10 * n**2 * (n - 1) * p[2] * p[3]
               + 20 * n * (n + 2) * p[1] ** 2 * p[3]
               + 30 * n * (n - 1) * p[1] * p[2] ** 2
               - 60 * n * p[1] ** 3 * p[2] + 24 * p[1] ** 5)
        out.append(num / (n * (n - 1) * (n - 2) * (n - 3) * (n - 4)))
    if r >= 6:
        num = (n**2 * (n + 1) * (n**2 + 15 * n - 4) * p[6]
               - 6 * n * (n + 1) * (n**2 + 15 * n - 4) * p[1] * p[5]
               - 15 * n * (n - 1) ** 2 * (n + 4) * p[2] * p[4]
               - 10 * n * (n - 1) * (n**2 - n + 4) * p[3] ** 2
               + 30 * n * (n**2 + 9 * n + 2) * p[1] ** 2 * p[4]
               + 120 * n * (n - 1) * (n + 1) * p[1] * p[2] * p[3]
               + 30 * n * (n - 1) * (n - 2) * p[2] ** 3
               - 120 * n * (n + 3) * p[1] ** 3 * p[3]
               - 270 * n * (n - 1) * p[1] ** 2 * p[2] ** 2
               + 360 * n * p[1] ** 4 * p[2] - 120 * p[1] ** 6)
        out.append(num / (n * (n - 1) * (n - 2) * (n - 3) * (n - 4) * (n - 5)))
    return out


def _power_sums(x: np.ndarray, r: int) -> list[float]:
    sums = []
    acc = np.ones_like(x)
    for _ in range(r):
        acc = acc * x
        sums.append(float(np.sum(acc)))
    return sums


def k_statistics(x: np.ndarray, max_order: int = 6) -> list[float]:
    """Unbiased sample cumulants k_1..k_max_order.

    Data are centered by the grand mean before accumulating power sums; the
    estimators for order >= 2 are translation invariant, so this only
    improves conditioning.  k_1 is the plain sample mean.
    """
    if not 1 <= max_order <= 6:
        raise ValueError("max_order: supported range is 1..6")
    x = np.asarray(x, dtype=float)
    n = x.size
    if n <= max_order:
        raise ValueError("need more observations than the requested order")
    mean = float(np.mean(x))
    ks = _k_from_power_sums(_power_sums(x - mean, max_order), n)
    ks[0] = mean
    return ks[:max_order]


def jackknife_se(x: np.ndarray, order: int, n_blocks: int = 30) -> float:
    """Delete-a-block jackknife standard error for k_statistics(x)[order-1]."""
    if not 1 <= order <= 6:
        raise ValueError("order: supported range is 1..6")
    x = np.asarray(x, dtype=float)
    n = x.size
    g = min(n_blocks, n)
    if g < 2:
        raise ValueError("need at least two blocks")
    mean = float(np.mean(x))
    y = x - mean
    blocks = np.array_split(y, g)
    totals = np.array([_power_sums(b, order) for b in blocks])  # (g, order)
    sizes = np.array([b.size for b in blocks], dtype=float)
    S = totals.sum(axis=0)
    thetas = np.array([
        _k_from_power_sums(S - totals[j], n - sizes[j])[order - 1]
        for j in range(g)
    ])
    return float(np.sqrt((g - 1) / g * np.sum((thetas - thetas.mean()) ** 2)))
