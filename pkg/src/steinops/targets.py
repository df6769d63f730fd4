"""Target laws: declarative specs, exact samplers, characteristic functions.

Every law handled by this package is a (possibly shifted) linear combination
of gamma-type variables:

  * ``GammaCombination``: F = sum_i lambda_i * (gamma(m_i*alpha_i, c_i) - m_i*alpha_i*c_i),
    with c_i a scale parameter and the lambda_i pairwise distinct.
  * ``SecondChaos``: F = sum_i lambda_i * sum_{j in block i} (N_j^2 - 1); the
    special case alpha = 1/2, c = 2 of the above.
  * ``MultivariateGammaProjection``: F = <Gamma, lambda> - alpha*kappa where
    Gamma has the d-variate gamma law with characteristic function
    det(I - iCT)^(-alpha).
  * ``McKayI``: the positive law equal in distribution to the sum of two
    independent gammas with common shape a + 1/2 and rates (c-1)/b, (c+1)/b.
  * ``VarianceGammaSpec`` and ``NormalSpec``: classical comparison laws.

Samplers are pure functions of (spec, n, seed).  Sampling is chunked; chunk i
derives its generator from SeedSequence(entropy=seed, spawn_key=(i,)), so the
output array is byte-identical no matter how many worker threads fill it.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .poly import principal_minor_sum

CHUNK_SIZE = 1 << 16


# ---------------------------------------------------------------------------
# spec types


@dataclass(frozen=True)
class GammaTerm:
    lam: float
    m: int
    alpha: float
    c: float

    def __post_init__(self):
        if self.lam == 0:
            raise ValueError("terms: lambda must be nonzero")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("terms: m must be a positive integer")
        if self.alpha <= 0:
            raise ValueError("terms: alpha must be positive")
        if self.c <= 0:
            raise ValueError("terms: c must be positive")
        object.__setattr__(self, "m", int(self.m))


@dataclass(frozen=True)
class GammaCombination:
    terms: tuple[GammaTerm, ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("terms: at least one term required")
        lams = [t.lam for t in self.terms]
        if len(set(lams)) != len(lams):
            raise ValueError("terms: lambda values must be pairwise distinct")

    @property
    def mean_shift(self) -> float:
        # r_1 in the operator coefficients: sum lambda_k m_k alpha_k c_k
        return sum(t.lam * t.m * t.alpha * t.c for t in self.terms)


@dataclass(frozen=True)
class SecondChaos:
    lambdas: tuple[float, ...]
    multiplicities: tuple[int, ...]

    def __post_init__(self):
        if not self.lambdas:
            raise ValueError("lambdas: at least one eigenvalue required")
        if len(set(self.lambdas)) != len(self.lambdas):
            raise ValueError("lambdas: values must be pairwise distinct")
        if any(l == 0 for l in self.lambdas):
            raise ValueError("lambdas: values must be nonzero")
        if len(self.multiplicities) != len(self.lambdas):
            raise ValueError("multiplicities: length must match lambdas")
        if any(int(m) != m or m < 1 for m in self.multiplicities):
            raise ValueError("multiplicities: entries must be positive integers")
        object.__setattr__(self, "multiplicities",
                           tuple(int(m) for m in self.multiplicities))

    def to_gamma_combination(self) -> GammaCombination:
        return GammaCombination(
            tuple(GammaTerm(l, int(m), 0.5, 2.0)
                  for l, m in zip(self.lambdas, self.multiplicities))
        )


@dataclass(frozen=True)
class MultivariateGammaProjection:
    C: tuple[tuple[float, ...], ...]
    alpha: float
    lambdas: tuple[float, ...]
    K: tuple[float, ...] = ()
    kappa_offset: float = field(default=0.0)

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError("C: must be a square matrix")
        d = C.shape[0]
        if np.max(np.abs(C - C.T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(C))):
            raise ValueError("C: must be symmetric")
        try:
            np.linalg.cholesky(C)
        except np.linalg.LinAlgError:
            raise ValueError("C: must be positive definite") from None
        if self.alpha <= 0:
            raise ValueError("alpha: must be positive")
        if len(self.lambdas) != d:
            raise ValueError("lambdas: length must match C")
        K = self.K if self.K else tuple(0.0 for _ in range(d))
        if len(K) != d:
            raise ValueError("K: length must match C")
        object.__setattr__(self, "K", tuple(float(k) for k in K))
        kappa = float(sum(l * k for l, k in zip(self.lambdas, K)))
        if self.kappa_offset == 0.0:
            object.__setattr__(self, "kappa_offset", kappa)
        elif abs(self.kappa_offset - kappa) > 1e-12 * max(1.0, abs(kappa)):
            raise ValueError("kappa_offset: inconsistent with K and lambdas")

    @property
    def dim(self) -> int:
        return len(self.lambdas)

    def C_array(self) -> np.ndarray:
        return np.asarray(self.C, dtype=float)

    def minor_sums(self) -> list[float]:
        """[r_0, ..., r_d] with r_j the j-th principal-minor sum of (C, lambdas)."""
        C = self.C_array()
        return [principal_minor_sum(C, self.lambdas, j) for j in range(self.dim + 1)]


@dataclass(frozen=True)
class McKayI:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.a <= -0.5:
            raise ValueError("a: must exceed -1/2")
        if self.b <= 0:
            raise ValueError("b: must be positive")
        if self.c <= 1:
            raise ValueError("c: must exceed 1")

    @property
    def mean(self) -> float:
        return (1 + 2 * self.a) * self.b * self.c / (self.c**2 - 1)

    @property
    def second_moment(self) -> float:
        a, b, c = self.a, self.b, self.c
        return (2 * a + 1) * b**2 * (2 * (a + 1) * c**2 + 1) / (c**2 - 1) ** 2


@dataclass(frozen=True)
class VarianceGammaSpec:
    mu: float
    alpha: float
    beta: float
    lam: float

    def __post_init__(self):
        if self.alpha <= abs(self.beta):
            raise ValueError("alpha: must exceed |beta|")
        if self.lam <= 0:
            raise ValueError("lambda: must be positive")


@dataclass(frozen=True)
class NormalSpec:
    mu: float
    sigma2: float

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2: must be positive")


TargetSpec = Union[
    GammaCombination,
    SecondChaos,
    MultivariateGammaProjection,
    McKayI,
    VarianceGammaSpec,
    NormalSpec,
]


# ---------------------------------------------------------------------------
# JSON contract


def parse_spec(doc: dict) -> TargetSpec:
    """Build a TargetSpec from its JSON document {"kind": ..., parameters...}."""
    if not isinstance(doc, dict):
        raise ValueError("spec: document must be a JSON object")
    kind = doc.get("kind")
    if kind == "gamma_combination":
        terms = doc.get("terms")
        if not isinstance(terms, list) or not terms:
            raise ValueError("terms: must be a nonempty list")
        parsed = []
        for t in terms:
            if not isinstance(t, dict):
                raise ValueError("terms: each entry must be an object")
            try:
                parsed.append(GammaTerm(float(t["lambda"]), int(t["m"]),
                                        float(t["alpha"]), float(t["c"])))
            except KeyError as e:
                raise ValueError(f"terms: missing field {e.args[0]}") from None
        return GammaCombination(tuple(parsed))
    if kind == "second_chaos":
        lambdas = _float_list(doc, "lambdas")
        mult = doc.get("multiplicities", [1] * len(lambdas))
        if not isinstance(mult, list):
            raise ValueError("multiplicities: must be a list")
        return SecondChaos(tuple(lambdas), tuple(int(m) for m in mult))
    if kind == "multivariate_gamma":
        C = doc.get("C")
        if not isinstance(C, list) or not all(isinstance(r, list) for r in C):
            raise ValueError("C: must be a nested row-major array")
        lambdas = _float_list(doc, "lambdas")
        K = doc.get("K", [0.0] * len(lambdas))
        if not isinstance(K, list):
            raise ValueError("K: must be a list")
        return MultivariateGammaProjection(
            tuple(tuple(float(v) for v in row) for row in C),
            _float_field(doc, "alpha"),
            tuple(lambdas),
            tuple(float(k) for k in K),
        )
    if kind == "mckay":
        return McKayI(_float_field(doc, "a"), _float_field(doc, "b"),
                      _float_field(doc, "c"))
    if kind == "variance_gamma":
        return VarianceGammaSpec(_float_field(doc, "mu"), _float_field(doc, "alpha"),
                                 _float_field(doc, "beta"), _float_field(doc, "lambda"))
    if kind == "normal":
        return NormalSpec(_float_field(doc, "mu"), _float_field(doc, "sigma2"))
    raise ValueError(f"kind: unknown target kind {kind!r}")


def _float_field(doc: dict, name: str) -> float:
    if name not in doc:
        raise ValueError(f"{name}: missing required field")
    try:
        return float(doc[name])
    except (TypeError, ValueError):
        raise ValueError(f"{name}: must be a number") from None


def _float_list(doc: dict, name: str) -> list[float]:
    v = doc.get(name)
    if not isinstance(v, list) or not v:
        raise ValueError(f"{name}: must be a nonempty list")
    return [float(x) for x in v]


def spec_to_json(spec: TargetSpec) -> dict:
    if isinstance(spec, GammaCombination):
        return {"kind": "gamma_combination",
                "terms": [{"lambda": t.lam, "m": t.m, "alpha": t.alpha, "c": t.c}
                          for t in spec.terms]}
    if isinstance(spec, SecondChaos):
        return {"kind": "second_chaos", "lambdas": list(spec.lambdas),
                "multiplicities": list(spec.multiplicities)}
    if isinstance(spec, MultivariateGammaProjection):
        return {"kind": "multivariate_gamma", "C": [list(r) for r in spec.C],
                "alpha": spec.alpha, "lambdas": list(spec.lambdas),
                "K": list(spec.K)}
    if isinstance(spec, McKayI):
        return {"kind": "mckay", "a": spec.a, "b": spec.b, "c": spec.c}
    if isinstance(spec, VarianceGammaSpec):
        return {"kind": "variance_gamma", "mu": spec.mu, "alpha": spec.alpha,
                "beta": spec.beta, "lambda": spec.lam}
    if isinstance(spec, NormalSpec):
        return {"kind": "normal", "mu": spec.mu, "sigma2": spec.sigma2}
    raise TypeError(f"not a target spec: {type(spec).__name__}")


# ---------------------------------------------------------------------------
# parameter derivations


def mckay_from_bivariate(C, alpha: float) -> McKayI:
    """Map a 2x2 covariance-like matrix and shape alpha to McKay parameters.

    The projection <Gamma, (1,1)> of the bivariate gamma law with matrix C and
    shape alpha has the McKay Type I law with

        a = alpha - 1/2,
        b = 2*(c1*c2 - c12^2) / sqrt(disc),
        c = (c1 + c2) / sqrt(disc),       disc = (c1+c2)^2 - 4*(c1*c2 - c12^2).
    """
    C = np.asarray(C, dtype=float)
    if C.shape != (2, 2):
        raise ValueError("C: must be 2x2")
    if abs(C[0, 1] - C[1, 0]) > 1e-10 * max(1.0, float(np.max(np.abs(C)))):
        raise ValueError("C: must be symmetric")
    if alpha <= 0:
        raise ValueError("alpha: must be positive")
    c1, c2, c12 = C[0, 0], C[1, 1], C[0, 1]
    det = c1 * c2 - c12**2
    if det <= 0:
        raise ValueError("C: requires c1*c2 > c12^2 (positive definiteness)")
    disc = (c1 + c2) ** 2 - 4 * det
    if disc <= 0:
        raise ValueError("C: requires (c1+c2)^2 > 4*(c1*c2 - c12^2)")
    root = math.sqrt(disc)
    return McKayI(alpha - 0.5, 2 * det / root, (c1 + c2) / root)


def derive_levy_decomposition(m: McKayI) -> tuple[float, float, float]:
    """Split a McKay law into two independent gamma factors.

    Returns (shape, rate1, rate2): the law equals gamma(shape, rate1) +
    gamma(shape, rate2) with shape = a + 1/2 and rates (c-1)/b, (c+1)/b.
    The corresponding Levy density is shape * (exp(-rate1*x) + exp(-rate2*x))/x
    on x > 0.
    """
    return m.a + 0.5, (m.c - 1) / m.b, (m.c + 1) / m.b


# ---------------------------------------------------------------------------
# sampling


def thread_count() -> int:
    raw = os.environ.get("STEIN_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def sample(spec: TargetSpec, n: int, seed: int) -> np.ndarray:
    """n i.i.d. draws from the law of spec, reproducible for a given seed.

    The stream is split into fixed-size chunks, chunk i seeded independently
    of the thread schedule, so the result does not depend on STEIN_THREADS.
    """
    if n < 1:
        raise ValueError("n: must be positive")
    draw = _drawer(spec)
    out = np.empty(n, dtype=float)
    bounds = [(i, lo, min(lo + CHUNK_SIZE, n))
              for i, lo in enumerate(range(0, n, CHUNK_SIZE))]

    def fill(task):
        i, lo, hi = task
        out[lo:hi] = draw(hi - lo, _chunk_rng(seed, i))

    workers = thread_count()
    if workers == 1 or len(bounds) == 1:
        for task in bounds:
            fill(task)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, bounds))
    return out


def _drawer(spec: TargetSpec):
    """Return a function (count, rng) -> array of draws for the given law."""
    if isinstance(spec, GammaCombination):
        def draw(count, rng):
            acc = np.zeros(count)
            for t in spec.terms:
                shape = t.m * t.alpha
                acc += t.lam * (rng.gamma(shape, t.c, count) - shape * t.c)
            return acc
        return draw
    if isinstance(spec, SecondChaos):
        def draw(count, rng):
            acc = np.zeros(count)
            for lam, m in zip(spec.lambdas, spec.multiplicities):
                s = np.zeros(count)
                for _ in range(m):
                    z = rng.standard_normal(count)
                    s += z * z
                acc += lam * (s - m)
            return acc
        return draw
    if isinstance(spec, McKayI):
        shape, rate1, rate2 = derive_levy_decomposition(spec)
        def draw(count, rng):
            return rng.gamma(shape, 1 / rate1, count) + rng.gamma(shape, 1 / rate2, count)
        return draw
    if isinstance(spec, VarianceGammaSpec):
        gamma2 = spec.alpha**2 - spec.beta**2
        def draw(count, rng):
            w = rng.gamma(spec.lam, 2 / gamma2, count)
            return spec.mu + spec.beta * w + np.sqrt(w) * rng.standard_normal(count)
        return draw
    if isinstance(spec, NormalSpec):
        sd = math.sqrt(spec.sigma2)
        def draw(count, rng):
            return spec.mu + sd * rng.standard_normal(count)
        return draw
    if isinstance(spec, MultivariateGammaProjection):
        return _multivariate_drawer(spec)
    raise TypeError(f"not a target spec: {type(spec).__name__}")


def _multivariate_drawer(spec: MultivariateGammaProjection):
    C = spec.C_array()
    d = spec.dim
    lam = np.asarray(spec.lambdas)
    shift = spec.alpha * spec.kappa_offset

    if np.max(np.abs(C - np.diag(np.diag(C)))) == 0.0:
        scales = np.diag(C).copy()
        def draw(count, rng):
            acc = np.zeros(count)
            for j in range(d):
                acc += lam[j] * rng.gamma(spec.alpha, scales[j], count)
            return acc - shift
        return draw

    nu = 2 * spec.alpha
    if abs(nu - round(nu)) < 1e-12:
        # sum of round(nu) squared Gaussians with covariance C/2 realizes the
        # law exactly for any dimension
        nu = int(round(nu))
        L = np.linalg.cholesky(C / 2)
        def draw(count, rng):
            gam = np.zeros((count, d))
            for _ in range(nu):
                x = rng.standard_normal((count, d)) @ L.T
                gam += x * x
            return gam @ lam - shift
        return draw

    if d == 2 and spec.lambdas[0] == spec.lambdas[1]:
        try:
            mk = mckay_from_bivariate(C, spec.alpha)
        except ValueError as e:
            raise ValueError(f"unsupported sampler: {e}") from None
        shape, rate1, rate2 = derive_levy_decomposition(mk)
        l0 = spec.lambdas[0]
        def draw(count, rng):
            s = rng.gamma(shape, 1 / rate1, count) + rng.gamma(shape, 1 / rate2, count)
            return l0 * s - shift
        return draw

    raise ValueError(
        "unsupported sampler: multivariate gamma requires diagonal C, "
        "integer 2*alpha, or d=2 with equal lambdas")


# ---------------------------------------------------------------------------
# characteristic functions


def cf_eval(spec: TargetSpec, xi: float) -> complex:
    """Exact characteristic function of the law at the real argument xi."""
    if isinstance(spec, NormalSpec):
        return complex(np.exp(1j * spec.mu * xi - spec.sigma2 * xi**2 / 2))
    if isinstance(spec, SecondChaos):
        return cf_eval(spec.to_gamma_combination(), xi)
    if isinstance(spec, GammaCombination):
        val = complex(1.0)
        for t in spec.terms:
            shape = t.m * t.alpha
            # centered gamma factor; base has real part 1 so the principal
            # branch is continuous in xi
            val *= np.exp(-1j * t.lam * shape * t.c * xi) \
                * (1 - 1j * t.lam * t.c * xi) ** (-shape)
        return complex(val)
    if isinstance(spec, McKayI):
        shape, rate1, rate2 = derive_levy_decomposition(spec)
        return complex((1 - 1j * xi / rate1) ** (-shape)
                       * (1 - 1j * xi / rate2) ** (-shape))
    if isinstance(spec, VarianceGammaSpec):
        gamma2 = spec.alpha**2 - spec.beta**2
        denom = spec.alpha**2 - (spec.beta + 1j * xi) ** 2
        return complex(np.exp(1j * spec.mu * xi) * (gamma2 / denom) ** spec.lam)
    if isinstance(spec, MultivariateGammaProjection):
        return _cf_multivariate(spec, xi)
    raise TypeError(f"not a target spec: {type(spec).__name__}")


def _cf_multivariate(spec: MultivariateGammaProjection, xi: float) -> complex:
    """det(I - i*xi*C*Lambda)^(-alpha) times the offset phase.

    The determinant is the polynomial sum_j r_j (-i*xi)^j in the minor sums.
    Its log is unwound continuously from xi = 0 in steps of at most 0.05 so
    the complex power never jumps branches.
    """
    r = spec.minor_sums()

    def detval(t: float) -> complex:
        z = -1j * t
        acc = complex(0.0)
        for rj in reversed(r):
            acc = acc * z + rj
        return acc

    steps = max(1, math.ceil(abs(xi) / 0.05))
    prev = detval(0.0)
    arg = 0.0
    for k in range(1, steps + 1):
        cur = detval(xi * k / steps)
        delta = np.angle(cur) - np.angle(prev)
        if delta > math.pi:
            delta -= 2 * math.pi
        elif delta < -math.pi:
            delta += 2 * math.pi
        arg += delta
        prev = cur
    logdet = math.log(abs(prev)) + 1j * arg
    return complex(np.exp(-1j * spec.alpha * spec.kappa_offset * xi
                          - spec.alpha * logdet))
