"""Quantitative checks of the comparability, asymptotic and kernel statements."""

from .analytic import (REGRESSION_C_HALF, check_convolution_inequality, check_kernel,
                       check_lemma_identity, convolution_ratio, lemma_constant_mp)
from .checks import (SMALL_TIMES, check_large_time_rate, check_large_x, check_lp_decay,
                     check_small_time, check_two_sided, check_ustar_vanishing, rate_gamma,
                     ratio_field, ratio_report, ustar_tail)
from .quadrature import convolution_integral, lemma_constant
from .report import CheckResult, RateFit, RatioReport

__all__ = [
    "CheckResult", "RateFit", "RatioReport", "REGRESSION_C_HALF", "SMALL_TIMES",
    "check_convolution_inequality", "check_kernel", "check_large_time_rate", "check_large_x",
    "check_lemma_identity", "check_lp_decay", "check_small_time", "check_two_sided",
    "check_ustar_vanishing", "convolution_integral", "convolution_ratio", "lemma_constant",
    "lemma_constant_mp", "rate_gamma", "ratio_field", "ratio_report", "ustar_tail",
]
