"""Differential operators that annihilate the target laws in expectation.

A ``SteinOperator`` stores one coefficient polynomial per derivative order:
the operator acts as f -> sum_k p_k(x) f^(k)(x).  Two interchangeable
construction routes exist for every law:

  * the Fourier route: read the pair (A, B) off the characteristic-function
    ODE A(i xi) phi' = i B(i xi) phi and form p_k(x) = a_k x - b_k;
  * closed forms: the per-family formulas expressed through elementary
    symmetric functions, minor sums, or the variance structure directly.

Operators produced by different routes agree up to a scalar, never compared
by raw equality; ``scalar_equivalent`` decides proportionality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .cumulants import build_P, cumulant_sequence
from .poly import (Polynomial, elementary_symmetric, poly_add,
                   poly_derivative, poly_from_roots, poly_scale)
from .targets import (GammaCombination, McKayI, MultivariateGammaProjection,
                      NormalSpec, SecondChaos, TargetSpec, VarianceGammaSpec)


@dataclass(frozen=True)
class SteinOperator:
    coeff_polys: tuple[Polynomial, ...]

    def __init__(self, coeff_polys):
        polys = [p if isinstance(p, Polynomial) else Polynomial(p)
                 for p in coeff_polys]
        while polys and polys[-1].is_zero:
            polys.pop()
        object.__setattr__(self, "coeff_polys", tuple(polys))

    @property
    def order(self) -> int:
        return len(self.coeff_polys) - 1

    def to_json(self) -> dict:
        return {"coeff_polys": [list(p.coeffs) for p in self.coeff_polys]}


def operator_from_json(doc: dict) -> SteinOperator:
    if not isinstance(doc, dict) or "coeff_polys" not in doc:
        raise ValueError("coeff_polys: missing required field")
    polys = doc["coeff_polys"]
    if not isinstance(polys, list) or not all(isinstance(p, list) for p in polys):
        raise ValueError("coeff_polys: must be a list of coefficient arrays")
    return SteinOperator([Polynomial([float(c) for c in p]) for p in polys])


def apply(op: SteinOperator, f_derivs, x: float) -> float:
    """Evaluate sum_k p_k(x) f^(k)(x); f_derivs(x) supplies the derivative
    values (f(x), f'(x), ...) up to at least the operator order."""
    values = f_derivs(x)
    if len(values) < len(op.coeff_polys):
        raise ValueError(
            f"need derivatives through order {op.order}, got {len(values) - 1}")
    return float(sum(p(x) * v for p, v in zip(op.coeff_polys, values)))


@dataclass(frozen=True)
class CfOde:
    """Pair (A, B) with A(i xi) phi'(xi) = i B(i xi) phi(xi).

    Coefficient k of either polynomial multiplies (i xi)^k, so both store
    plain reals; the complex bookkeeping never leaves this module.
    """
    A: Polynomial
    B: Polynomial

    def __post_init__(self):
        if self.A.is_zero or self.A.coeffs[0] == 0.0:
            raise ValueError("A: constant term must be nonzero")


def from_cf_ode(ode: CfOde) -> SteinOperator:
    """Operator f -> x * sum a_k f^(k) - sum b_k f^(k) from the ODE pair."""
    top = max(ode.A.degree, ode.B.degree)
    polys = []
    for k in range(top + 1):
        a = ode.A.coeffs[k] if k <= ode.A.degree else 0.0
        b = ode.B.coeffs[k] if k <= ode.B.degree else 0.0
        polys.append(Polynomial([-b, a]))
    return SteinOperator(polys)


def cf_ode_for(spec: TargetSpec) -> CfOde:
    """The characteristic-function ODE pair of the given law."""
    if isinstance(spec, NormalSpec):
        return CfOde(Polynomial([1.0]), Polynomial([spec.mu, spec.sigma2]))
    if isinstance(spec, SecondChaos):
        spec = spec.to_gamma_combination()
    if isinstance(spec, GammaCombination):
        lc = [t.lam * t.c for t in spec.terms]
        nu = [1.0 / v for v in lc]
        lead = 1.0
        for v in lc:
            lead *= -v
        A = poly_from_roots(nu, lead)
        B = Polynomial([])
        for j, t in enumerate(spec.terms):
            rest = nu[:j] + nu[j + 1:]
            lead_j = 1.0
            for v in lc[:j] + lc[j + 1:]:
                lead_j *= -v
            partial = poly_from_roots(rest, lead_j)
            w = t.lam * t.m * t.alpha * t.c
            B = poly_add(B, poly_scale(poly_add(partial, poly_scale(A, -1.0)), w))
        return CfOde(A, B)
    if isinstance(spec, McKayI):
        a, b, c = spec.a, spec.b, spec.c
        return CfOde(Polynomial([1 - c**2, 2 * c * b, -(b**2)]),
                     Polynomial([-(1 + 2 * a) * b * c, (1 + 2 * a) * b**2]))
    if isinstance(spec, VarianceGammaSpec):
        mu, beta, lam = spec.mu, spec.beta, spec.lam
        g2 = spec.alpha**2 - beta**2
        return CfOde(Polynomial([g2, -2 * beta, -1.0]),
                     Polynomial([mu * g2 + 2 * lam * beta,
                                 -2 * beta * mu + 2 * lam, -mu]))
    if isinstance(spec, MultivariateGammaProjection):
        r = spec.minor_sums()
        A = Polynomial([(-1) ** j * rj for j, rj in enumerate(r)])
        B = poly_scale(poly_add(poly_scale(A, spec.kappa_offset),
                                poly_derivative(A)), -spec.alpha)
        return CfOde(A, B)
    raise ValueError(f"kind: no characteristic-function ODE for {type(spec).__name__}")


def gamma_combination_operator(spec: GammaCombination) -> SteinOperator:
    """Closed-form operator for a centered combination of independent gammas.

    With u = (lambda_1 c_1, ..., lambda_d c_d) and weights
    w_k = lambda_k m_k alpha_k c_k:

      p_0(x) = x,
      p_l(x) = (-1)^l * [ x e_l(u) + sum_k w_k (e_l(u) - e_l(u drop k)) ],

    where e_l of a tuple shorter than l is zero.
    """
    u = [t.lam * t.c for t in spec.terms]
    w = [t.lam * t.m * t.alpha * t.c for t in spec.terms]
    d = len(u)
    polys = [Polynomial([0.0, 1.0])]
    for l in range(1, d + 1):
        el = elementary_symmetric(u, l)
        const = 0.0
        for k in range(d):
            dropped = u[:k] + u[k + 1:]
            el_k = elementary_symmetric(dropped, l) if l <= d - 1 else 0.0
            const += w[k] * (el - el_k)
        sign = -1.0 if l % 2 else 1.0
        polys.append(Polynomial([sign * const, sign * el]))
    return SteinOperator(polys)


def second_chaos_operator_malliavin(spec: SecondChaos) -> SteinOperator:
    """Order-d operator from the annihilating polynomial P(x) = x prod(x - lambda_i).

    Requires all multiplicities one.  With a_l = P^(l)(0) / (l! 2^(l-1)) and
    b_l = sum_{r=l}^{d+1} a_r kappa_{r-l+2} / (r-l+1)!, the operator is

      f -> sum_{l=2}^{d+1} (b_l - a_{l-1} x) f^(d+2-l)(x) - a_{d+1} x f(x).
    """
    if any(m != 1 for m in spec.multiplicities):
        raise ValueError(
            "multiplicities: this route requires all ones; "
            "use the gamma-combination closed form instead")
    lams = spec.lambdas
    d = len(lams)
    P = build_P(lams)
    a = [0.0] * (d + 2)
    for l in range(1, d + 2):
        a[l] = P.coeffs[l] / 2 ** (l - 1)
    kap = cumulant_sequence(spec, max(2, d + 1))
    b = [0.0] * (d + 2)
    for l in range(2, d + 2):
        b[l] = sum(a[r] * kap.kappa(r - l + 2) / math.factorial(r - l + 1)
                   for r in range(l, d + 2))
    polys = [Polynomial([0.0, -a[d + 1]])]
    for k in range(1, d + 1):
        l = d + 2 - k
        polys.append(Polynomial([b[l], -a[l - 1]]))
    return SteinOperator(polys)


def multivariate_gamma_operator(spec: MultivariateGammaProjection) -> SteinOperator:
    """Closed-form operator from the principal-minor sums r_j:

      p_j(x) = (-1)^j * [ r_j (x + alpha*kappa) - alpha (j+1) r_{j+1} ],

    with r_{d+1} = 0, so p_0(x) = x + alpha (kappa - r_1).
    """
    r = spec.minor_sums() + [0.0]
    ak = spec.alpha * spec.kappa_offset
    polys = []
    for j in range(spec.dim + 1):
        sign = -1.0 if j % 2 else 1.0
        polys.append(Polynomial([
            sign * (r[j] * ak - spec.alpha * (j + 1) * r[j + 1]),
            sign * r[j],
        ]))
    return SteinOperator(polys)


def mckay_operator(m: McKayI) -> SteinOperator:
    """Second-order closed form, normalized to a unit linear coefficient in p_0."""
    a, b, c = m.a, m.b, m.c
    s = 1.0 / (1 - c**2)
    return SteinOperator([
        Polynomial([(1 + 2 * a) * b * c * s, 1.0]),
        Polynomial([-(1 + 2 * a) * b**2 * s, 2 * c * b * s]),
        Polynomial([0.0, -(b**2) * s]),
    ])


def scalar_equivalent(op1: SteinOperator, op2: SteinOperator,
                      tol: float = 1e-9):
    """The scalar s with op1 = s * op2 coefficient-wise, or None.

    s comes from the leading coefficients of the highest-order polynomials;
    all remaining coefficients must then match within tol relative to the
    largest coefficient magnitude in either operator.
    """
    if not op1.coeff_polys and not op2.coeff_polys:
        return 1.0
    if op1.order != op2.order:
        return None
    lead2 = op2.coeff_polys[-1]
    j = lead2.degree
    c1top = op1.coeff_polys[-1]
    c1 = c1top.coeffs[j] if j <= c1top.degree else 0.0
    if c1 == 0.0:
        return None
    s = c1 / lead2.coeffs[j]
    width = max(max((p.degree for p in op.coeff_polys), default=-1)
                for op in (op1, op2)) + 1
    scale = 0.0
    rows = []
    for p1, p2 in zip(op1.coeff_polys, op2.coeff_polys):
        a = list(p1.coeffs) + [0.0] * (width - len(p1.coeffs))
        b = list(p2.coeffs) + [0.0] * (width - len(p2.coeffs))
        rows.append((a, b))
        scale = max(scale, max(abs(v) for v in a), max(abs(s * v) for v in b))
    for a, b in rows:
        for va, vb in zip(a, b):
            if abs(va - s * vb) > tol * scale:
                return None
    return s


def build_operator(spec: TargetSpec, route: str) -> SteinOperator:
    """Construct the operator for spec via the named route.

    Routes: "fourier" (characteristic-function ODE, valid for every kind),
    "malliavin" (second-chaos only, multiplicities one), "closed-form"
    (per-family formulas).
    """
    if route == "fourier":
        return from_cf_ode(cf_ode_for(spec))
    if route == "malliavin":
        if not isinstance(spec, SecondChaos):
            raise ValueError("route: malliavin applies to second_chaos specs only")
        return second_chaos_operator_malliavin(spec)
    if route == "closed-form":
        if isinstance(spec, GammaCombination):
            return gamma_combination_operator(spec)
        if isinstance(spec, SecondChaos):
            return gamma_combination_operator(spec.to_gamma_combination())
        if isinstance(spec, MultivariateGammaProjection):
            return multivariate_gamma_operator(spec)
        if isinstance(spec, McKayI):
            return mckay_operator(spec)
        return from_cf_ode(cf_ode_for(spec))
    raise ValueError(f"route: unknown route {route!r}")
