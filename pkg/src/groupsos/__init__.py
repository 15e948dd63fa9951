"""Sums of squares, Fejer-Riesz factorisation and positive semi-definite
extension problems on discrete groups, with checkable certificates."""
from .algebra import AlgebraElement, ToeplitzMatrix, marginals, pairing, toeplitz_lift
from .extension import (PartialFunction, cp_order_probe, extension_hierarchy, is_psd_on_domain,
                        kernel_propagation_check, sigma_extension_check, uos_membership)
from .fejer_riesz import (TrigPolynomial, evaluate_cyclic, fr_gap_probe, spectral_factor_interval,
                          torus_nonneg_certificate)
from .groups import (box, cyclic_product, difference_set, enumerate_maximal_sigmas, free_abelian,
                     free_group, make_sigma, validate_positivity_domain)
from .sdp import SdpProblem, SdpSettings, solve, verify_solution
from .sos import extract_factors, sos_membership

__all__ = [
    "AlgebraElement", "ToeplitzMatrix", "marginals", "pairing", "toeplitz_lift",
    "PartialFunction", "cp_order_probe", "extension_hierarchy", "is_psd_on_domain",
    "kernel_propagation_check", "sigma_extension_check", "uos_membership",
    "TrigPolynomial", "evaluate_cyclic", "fr_gap_probe", "spectral_factor_interval",
    "torus_nonneg_certificate", "box", "cyclic_product", "difference_set",
    "enumerate_maximal_sigmas", "free_abelian", "free_group", "make_sigma",
    "validate_positivity_domain", "SdpProblem", "SdpSettings", "solve", "verify_solution",
    "extract_factors", "sos_membership",
]
