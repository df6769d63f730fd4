"""Dense polynomial arithmetic and symmetric-function primitives.

Coefficients are stored ascending: coeffs[k] multiplies x**k.  Everything here
is plain float64; degrees stay small (at most ~15) so no sparse or exact
representation is needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Trailing coefficients at or below this magnitude are trimmed on construction
# so that degree is well defined for equality-style tests.
TRIM_EPS = 1e-13


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        # adding positive zero maps -0.0 to 0.0 for clean serialization
        cs = [float(c) + 0.0 for c in coeffs]
        while cs and abs(cs[-1]) <= TRIM_EPS:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def degree(self) -> int:
        # zero polynomial has degree -1
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x):
        # Horner; works elementwise on numpy arrays as well as on scalars
        result = 0.0 * x if isinstance(x, np.ndarray) else 0.0
        for c in reversed(self.coeffs):
            result = result * x + c
        return result


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    a, b = list(p.coeffs), list(q.coeffs)
    if len(a) < len(b):
        a, b = b, a
    for i, c in enumerate(b):
        a[i] += c
    return Polynomial(a)


def poly_scale(p: Polynomial, s: float) -> Polynomial:
    return Polynomial([s * c for c in p.coeffs])


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    if p.is_zero or q.is_zero:
        return Polynomial([])
    out = [0.0] * (len(p.coeffs) + len(q.coeffs) - 1)
    for i, a in enumerate(p.coeffs):
        for j, b in enumerate(q.coeffs):
            out[i + j] += a * b
    return Polynomial(out)


def poly_derivative(p: Polynomial) -> Polynomial:
    return Polynomial([k * c for k, c in enumerate(p.coeffs)][1:])


def poly_from_roots(roots: Sequence[float], leading: float) -> Polynomial:
    """leading * prod(x - r) with coefficients accumulated one root at a time."""
    out = [float(leading)]
    for r in roots:
        nxt = [0.0] * (len(out) + 1)
        for i, c in enumerate(out):
            nxt[i + 1] += c
            nxt[i] -= r * c
        out = nxt
    return Polynomial(out)


def elementary_symmetric(values: Sequence[float], k: int) -> float:
    """e_k of the given values; e_0 = 1.

    Uses the one-pass recurrence e_k <- e_k + v*e_{k-1}, which needs no subset
    enumeration and is numerically stable for the small tuples used here.
    """
    if k < 0 or k > len(values):
        raise ValueError(f"order k={k} out of range for {len(values)} values")
    e = [0.0] * (k + 1)
    e[0] = 1.0
    for v in values:
        # descending update keeps each e_j based on the previous prefix
        for j in range(min(k, len(e) - 1), 0, -1):
            e[j] += v * e[j - 1]
    return e[k]


def _check_symmetric(C: np.ndarray) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(C)))) if C.size else 1.0
    if float(np.max(np.abs(C - C.T), initial=0.0)) > 1e-10 * scale:
        raise ValueError("matrix must be symmetric (tolerance 1e-10 relative)")
    return C


def principal_minor_sum(C, lambdas: Sequence[float], j: int) -> float:
    """r_j = sum over size-j index sets S of det(C[S,S]) * prod(lambdas[S]).

    r_0 = 1 by convention.  Subsets are enumerated by bitmask and each minor
    determinant is an LU factorization; d stays small so 2^d * d^3 is cheap.
    """
    C = _check_symmetric(C)
    d = C.shape[0]
    if len(lambdas) != d:
        raise ValueError(f"lambdas has length {len(lambdas)}, expected {d}")
    if j < 0 or j > d:
        raise ValueError(f"minor order j={j} out of range for d={d}")
    if j == 0:
        return 1.0
    lam = [float(v) for v in lambdas]
    total = 0.0
    for mask in range(1 << d):
        if mask.bit_count() != j:
            continue
        idx = [i for i in range(d) if mask >> i & 1]
        sub = C[np.ix_(idx, idx)]
        term = float(np.linalg.det(sub))
        for i in idx:
            term *= lam[i]
        total += term
    return total
