"""Stein operators for linear combinations of gamma-type random variables.

Build explicit differential operators that characterize these laws, then
certify them by Monte Carlo: the operator applied to smooth test functions
must have zero expectation under its own target and nonzero expectation under
an imposter law.
"""
from .cumulants import (CumulantSequence, build_P, build_Q, cumulant_sequence,
                        delta_discrepancy, first_cumulant, jackknife_se,
                        k_statistics, moments_from_cumulants)
from .operators import (CfOde, SteinOperator, apply, build_operator,
                        cf_ode_for, from_cf_ode, gamma_combination_operator,
                        mckay_operator, multivariate_gamma_operator,
                        operator_from_json, scalar_equivalent,
                        second_chaos_operator_malliavin)
from .poly import (Polynomial, elementary_symmetric, poly_add,
                   poly_derivative, poly_from_roots, poly_mul, poly_scale,
                   principal_minor_sum)
from .targets import (GammaCombination, GammaTerm, McKayI,
                      MultivariateGammaProjection, NormalSpec, SecondChaos,
                      TargetSpec, VarianceGammaSpec, cf_eval,
                      derive_levy_decomposition, mckay_from_bivariate,
                      parse_spec, sample, spec_to_json)
from .verify import (DampedPolynomial, FnResult, PolynomialTest,
                     VerificationReport, annihilation_test,
                     identity_in_law_test, ks_two_sample,
                     mckay_recursion_exact, mckay_recursion_test,
                     report_json_bytes, scalar_derivs)

__version__ = "0.1.0"

__all__ = [
    "CfOde", "CumulantSequence", "DampedPolynomial", "FnResult",
    "GammaCombination", "GammaTerm", "McKayI", "MultivariateGammaProjection",
    "NormalSpec", "Polynomial", "PolynomialTest", "SecondChaos",
    "SteinOperator", "TargetSpec", "VarianceGammaSpec", "VerificationReport",
    "annihilation_test", "apply", "build_P", "build_Q", "build_operator",
    "cf_eval", "cf_ode_for", "cumulant_sequence", "delta_discrepancy",
    "derive_levy_decomposition", "elementary_symmetric", "first_cumulant",
    "from_cf_ode", "gamma_combination_operator", "identity_in_law_test",
    "jackknife_se", "k_statistics", "ks_two_sample", "mckay_from_bivariate",
    "mckay_operator", "mckay_recursion_exact", "mckay_recursion_test",
    "moments_from_cumulants", "multivariate_gamma_operator",
    "operator_from_json", "parse_spec", "poly_add", "poly_derivative",
    "poly_from_roots", "poly_mul", "poly_scale", "principal_minor_sum",
    "report_json_bytes", "sample", "scalar_derivs", "scalar_equivalent",
    "second_chaos_operator_malliavin", "spec_to_json",
]
