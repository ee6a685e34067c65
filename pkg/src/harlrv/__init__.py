"""Prewhitened double-kernel HAC long-run variance estimation and HAR tests."""

from .errors import DegenerateError
from .lrv import DkConfig, LrvEstimate, LrvKind, classic_hac, dk_hac, estimate_lrv, fixed_b_lrv, pw_dk_hac

__version__ = "0.1.0"

__all__ = [
    "DegenerateError",
    "DkConfig",
    "LrvEstimate",
    "LrvKind",
    "classic_hac",
    "dk_hac",
    "estimate_lrv",
    "fixed_b_lrv",
    "pw_dk_hac",
]
