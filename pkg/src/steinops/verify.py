"""Monte Carlo certification: annihilation tests, moment recursion, law identity.

The engine estimates E[sum_k p_k(F) f^(k)(F)] by sampling F and reports a
z-score per test function.  All accumulation is chunk-indexed so reports are
byte-identical for a fixed seed regardless of the worker-thread count.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogorov

from .cumulants import (cumulant_sequence, first_cumulant, jackknife_se,
                        k_statistics, moments_from_cumulants)
from .operators import SteinOperator
from .poly import Polynomial, poly_add, poly_derivative, poly_mul, poly_scale
from .targets import (CHUNK_SIZE, McKayI, MultivariateGammaProjection,
                      TargetSpec, mckay_from_bivariate, sample, thread_count)

MIN_KS_SAMPLES = 10_000


# ---------------------------------------------------------------------------
# test functions


class PolynomialTest:
    """f(x) = x^n with exact derivatives."""

    def __init__(self, degree: int):
        if degree < 0:
            raise ValueError("degree: must be nonnegative")
        self.degree = degree
        self.name = f"poly_{degree}"

    def derivs_upto(self, x: np.ndarray, order: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros((order + 1, x.size))
        coef = 1.0
        for k in range(order + 1):
            p = self.degree - k
            if p < 0:
                break
            out[k] = coef * x**p
            coef *= p
        return out


class DampedPolynomial:
    """f(x) = x^n exp(-x^2/2); derivatives via q_{k+1} = q_k' - x q_k."""

    def __init__(self, degree: int):
        if degree < 0:
            raise ValueError("degree: must be nonnegative")
        self.degree = degree
        self.name = f"damped_{degree}"
        self._q = [Polynomial([0.0] * degree + [1.0])]

    def _poly(self, k: int) -> Polynomial:
        while len(self._q) <= k:
            q = self._q[-1]
            self._q.append(poly_add(poly_derivative(q),
                                    poly_scale(poly_mul(q, Polynomial([0.0, 1.0])),
                                               -1.0)))
        return self._q[k]

    def derivs_upto(self, x: np.ndarray, order: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        damp = np.exp(-x * x / 2)
        out = np.empty((order + 1, x.size))
        for k in range(order + 1):
            out[k] = self._poly(k)(x) * damp
        return out


TestFunction = PolynomialTest | DampedPolynomial


def scalar_derivs(fn: TestFunction, order: int):
    """Adapter: a callable x -> (f(x), ..., f^(order)(x)) of a scalar x."""
    def evaluate(x):
        return tuple(fn.derivs_upto(np.asarray([float(x)]), order)[:, 0])
    return evaluate


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class FnResult:
    fn: str
    estimate: float
    se: float
    z: float


@dataclass(frozen=True)
class VerificationReport:
    tests: tuple[FnResult, ...]
    verdict: str
    seed: int
    n: int
    attempts: int

    def to_json_dict(self) -> dict:
        return {
            "tests": [{"fn": t.fn, "estimate": t.estimate, "se": t.se, "z": t.z}
                      for t in self.tests],
            "verdict": self.verdict,
            "seed": self.seed,
            "n": self.n,
            "attempts": self.attempts,
        }

    def to_json_bytes(self) -> bytes:
        return report_json_bytes(self.to_json_dict())

    def to_text(self) -> str:
        lines = [f"{'function':<12} {'estimate':>14} {'se':>12} {'z':>8}"]
        for t in self.tests:
            lines.append(f"{t.fn:<12} {t.estimate:>14.6g} {t.se:>12.6g} {t.z:>8.3f}")
        lines.append(f"verdict: {self.verdict}   n={self.n} seed={self.seed} "
                     f"attempts={self.attempts}")
        return "\n".join(lines)


def report_json_bytes(doc: dict) -> bytes:
    """Canonical serialization: sorted keys, no whitespace, no timestamps."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


# ---------------------------------------------------------------------------
# annihilation testing


def _chunk_bounds(n: int) -> list[tuple[int, int, int]]:
    return [(i, lo, min(lo + CHUNK_SIZE, n))
            for i, lo in enumerate(range(0, n, CHUNK_SIZE))]


def _mean_se_by_fn(x: np.ndarray, evaluators) -> list[tuple[float, float]]:
    """Per evaluator: (mean, se) of its per-draw values over x.

    evaluators[i] maps an array chunk to per-draw values.  Partial first and
    second moments are stored per (evaluator, chunk) and reduced in chunk
    order, independent of the thread schedule.
    """
    n = x.size
    bounds = _chunk_bounds(n)
    sums = np.zeros((len(evaluators), len(bounds)))
    squares = np.zeros_like(sums)

    def run(task):
        f_idx, (c_idx, lo, hi) = task
        y = evaluators[f_idx](x[lo:hi])
        sums[f_idx, c_idx] = np.sum(y)
        squares[f_idx, c_idx] = np.sum(y * y)

    tasks = [(f, b) for f in range(len(evaluators)) for b in bounds]
    workers = thread_count()
    if workers == 1:
        for task in tasks:
            run(task)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, tasks))

    out = []
    for f in range(len(evaluators)):
        s1 = float(np.sum(sums[f]))
        s2 = float(np.sum(squares[f]))
        mean = s1 / n
        var = max(0.0, (s2 - n * mean * mean) / (n - 1))
        out.append((mean, math.sqrt(var / n)))
    return out


def _zscore(mean: float, se: float) -> float:
    if se == 0.0:
        return 0.0 if mean == 0.0 else math.inf
    return mean / se


def annihilation_test(op: SteinOperator, spec: TargetSpec,
                      fns: list[TestFunction], n: int, seed: int,
                      z_max: float = 4.0) -> VerificationReport:
    """Estimate E[sum_k p_k(F) f^(k)(F)] per test function; pass iff every
    |z| <= z_max.  One retry with a fresh seed and doubled n absorbs the
    expected rate of honest threshold crossings."""
    if not fns:
        raise ValueError("fns: at least one test function required")

    def attempt(n_run: int, seed_run: int):
        x = sample(spec, n_run, seed_run)
        order = op.order

        def make_eval(fn):
            def evaluate(chunk):
                derivs = fn.derivs_upto(chunk, order)
                y = np.zeros(chunk.size)
                for k, p in enumerate(op.coeff_polys):
                    if not p.is_zero:
                        y += p(chunk) * derivs[k]
                return y
            return evaluate

        stats = _mean_se_by_fn(x, [make_eval(fn) for fn in fns])
        results = tuple(
            FnResult(fn.name, mean, se, _zscore(mean, se))
            for fn, (mean, se) in zip(fns, stats)
        )
        ok = all(abs(r.z) <= z_max for r in results)
        return results, ok

    results, ok = attempt(n, seed)
    attempts = 1
    n_used, seed_used = n, seed
    if not ok:
        n_used, seed_used = 2 * n, seed + 1
        results, ok = attempt(n_used, seed_used)
        attempts = 2
    return VerificationReport(results, "pass" if ok else "fail",
                              seed_used, n_used, attempts)


# ---------------------------------------------------------------------------
# McKay moment recursion


def _mckay_recursion_coeffs(m: McKayI, order: int) -> tuple[float, float, float]:
    """Coefficients (t1, t2, t3) of the three-term moment identity
    t1*E[F^(order+1)] + t2*E[F^order] + t3*E[F^(order-1)] = 0."""
    a, b, c = m.a, m.b, m.c
    return (1 - c**2,
            b * c * (1 + 2 * (a + order)),
            -order * b**2 * (2 * a + order))


def mckay_recursion_test(m: McKayI, n_max: int, samples: int,
                         seed: int) -> dict:
    """Monte Carlo residuals of the three-term moment recursion for
    order = 2..n_max, each normalized by the largest term magnitude."""
    if n_max < 2:
        raise ValueError("n_max: must be at least 2")
    x = sample(m, samples, seed)
    rows = []
    evaluators = []
    orders = list(range(2, n_max + 1))
    for order in orders:
        t1, t2, t3 = _mckay_recursion_coeffs(m, order)

        def make(order=order, t1=t1, t2=t2, t3=t3):
            def evaluate(chunk):
                return (t1 * chunk ** (order + 1) + t2 * chunk**order
                        + t3 * chunk ** (order - 1))
            return evaluate

        evaluators.append(make())
    stats = _mean_se_by_fn(x, evaluators)
    # term magnitudes from the same sample for scale-free reporting
    moments = [float(np.mean(x**j)) for j in range(1, n_max + 2)]
    ok = True
    for order, (mean, se) in zip(orders, stats):
        t1, t2, t3 = _mckay_recursion_coeffs(m, order)
        scale = max(abs(t1 * moments[order]), abs(t2 * moments[order - 1]),
                    abs(t3 * moments[order - 2]))
        z = _zscore(mean, se)
        passed = abs(z) <= 4.0
        ok = ok and passed
        rows.append({"order": order, "residual": mean, "se": se, "z": z,
                     "normalized_residual": mean / scale if scale else mean})
    return {"recursion": rows, "verdict": "pass" if ok else "fail",
            "seed": seed, "n": samples}


def mckay_recursion_exact(m: McKayI, n_max: int) -> list[float]:
    """Residuals of the recursion computed from exact moments; all should be
    zero to rounding."""
    R = n_max + 1
    kappas = [first_cumulant(m)] + list(cumulant_sequence(m, R).values)
    moments = [1.0] + moments_from_cumulants(kappas)
    out = []
    for order in range(2, n_max + 1):
        t1, t2, t3 = _mckay_recursion_coeffs(m, order)
        terms = (t1 * moments[order + 1], t2 * moments[order],
                 t3 * moments[order - 1])
        scale = max(abs(t) for t in terms)
        out.append(sum(terms) / scale)
    return out


# ---------------------------------------------------------------------------
# two-sample comparison


def ks_two_sample(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and its asymptotic p-value."""
    n1, n2 = x.size, y.size
    if n1 < MIN_KS_SAMPLES or n2 < MIN_KS_SAMPLES:
        raise ValueError(f"n: need at least {MIN_KS_SAMPLES} draws per sample")
    xs = np.sort(x)
    ys = np.sort(y)
    grid = np.concatenate([xs, ys])
    cdf1 = np.searchsorted(xs, grid, side="right") / n1
    cdf2 = np.searchsorted(ys, grid, side="right") / n2
    d = float(np.max(np.abs(cdf1 - cdf2)))
    n_eff = n1 * n2 / (n1 + n2)
    p = float(kolmogorov(math.sqrt(n_eff) * d))
    return d, p


def identity_in_law_test(C, alpha: float, n: int, seed: int) -> dict:
    """Compare the correlated bivariate-projection sum against the sum of its
    two independent gamma factors: KS at the 1% level plus agreement of the
    first four sample cumulants within 4 combined standard errors."""
    mk = mckay_from_bivariate(C, alpha)
    C = np.asarray(C, dtype=float)
    spec = MultivariateGammaProjection(
        tuple(tuple(float(v) for v in row) for row in C),
        alpha, (1.0, 1.0))
    diagonal = C[0, 1] == 0.0
    if not diagonal and abs(2 * alpha - round(2 * alpha)) >= 1e-12:
        return {"verdict": "skip",
                "reason": "no correlated sampler: 2*alpha not an integer and "
                          "C not diagonal",
                "seed": seed, "n": n}
    correlated = sample(spec, n, seed)
    independent = sample(mk, n, seed + 1)
    d, p = ks_two_sample(correlated, independent)
    ok = p >= 0.01
    cum_rows = []
    ks_corr = k_statistics(correlated, 4)
    ks_indep = k_statistics(independent, 4)
    for order in range(1, 5):
        kx = ks_corr[order - 1]
        ky = ks_indep[order - 1]
        se = math.sqrt(jackknife_se(correlated, order) ** 2
                       + jackknife_se(independent, order) ** 2)
        z = _zscore(kx - ky, se)
        cum_rows.append({"order": order, "correlated": kx, "independent": ky,
                         "se": se, "z": z})
        ok = ok and abs(z) <= 4.0
    return {"ks": {"d": d, "p": p}, "cumulants": cum_rows,
            "verdict": "pass" if ok else "fail", "seed": seed, "n": n}
