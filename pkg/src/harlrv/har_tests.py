"""HAR t-tests: regression coefficients, Diebold-Mariano and forecast breakdown.

Each test normalizes a scaled mean by a long-run variance estimate and
compares it with the critical value that matches the estimator: standard
normal for the consistent estimators, the fixed-b limit for KVB and
Student-t with ``B`` degrees of freedom for EWC.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DegenerateError
from .lrv import DkConfig, LrvEstimate, LrvKind, estimate_lrv, ewc_default_B, parse_kind


class CvFamily(str, enum.Enum):
    NORMAL = "Normal"
    FIXED_B_KVB = "FixedB_KVB"
    STUDENT_T_B = "Student_t_B"


def cv_family_for(kind) -> CvFamily:
    kind = parse_kind(kind)
    if kind is LrvKind.KVB:
        return CvFamily.FIXED_B_KVB
    if kind is LrvKind.EWC:
        return CvFamily.STUDENT_T_B
    return CvFamily.NORMAL


# Two-sided critical values of the Bartlett b = 1 fixed-b t statistic,
# W(1) / sqrt(2 int_0^1 Wbar(r)^2 dr) with Wbar the Brownian bridge.
# Regenerate with scripts/kvb_critical_value.py (50 000 paths, 2 000 steps, seed 20240501).
KVB_CRITICAL_VALUES = {
    0.01: 7.1751,
    0.025: 5.7957,
    0.05: 4.7462,
    0.10: 3.7473,
    0.20: 2.738,
    0.30: 2.1167,
    0.40: 1.6609,
    0.50: 1.3019,
}
KVB_SIM_SEED = 20240501


def simulate_kvb_critical_values(paths: int = 50_000, steps: int = 2_000, seed: int = KVB_SIM_SEED, alphas=None, chunk: int = 1_000) -> dict[float, float]:
    """Monte Carlo two-sided critical values of the KVB t statistic.

    Each path is a Gaussian random walk of ``steps`` increments; the
    statistic is ``S_n / sqrt(n J)`` with ``J = 2 n^-2 sum_t Shat_t^2`` the
    Bartlett ``b = 1`` estimate from the demeaned partial sums ``Shat``.
    """
    alphas = sorted(KVB_CRITICAL_VALUES) if alphas is None else list(alphas)
    rng = np.random.default_rng(seed)
    out = np.empty(paths)
    done = 0
    grid = np.arange(1, steps + 1) / steps
    while done < paths:
        m = min(chunk, paths - done)
        e = rng.standard_normal((m, steps))
        S = np.cumsum(e, axis=1)
        Sb = S - grid * S[:, -1:]
        J = 2.0 * np.sum(Sb * Sb, axis=1) / steps**2
        out[done : done + m] = S[:, -1] / math.sqrt(steps) / np.sqrt(J)
        done += m
    a = np.abs(out)
    return {float(al): float(np.quantile(a, 1.0 - al)) for al in alphas}


@functools.lru_cache(maxsize=1024)
def critical_value(family: CvFamily | str, alpha: float = 0.05, B: int | None = None) -> float:
    """Two-sided critical value at level ``alpha`` for ``family``.

    ``B`` is the degrees of freedom of ``Student_t_B``. Fixed-b values
    between tabulated levels are interpolated linearly.
    """
    family = CvFamily(family)
    if not 0.0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 0.5]")
    if family is CvFamily.NORMAL:
        return float(stats.norm.ppf(1.0 - alpha / 2.0))
    if family is CvFamily.STUDENT_T_B:
        if B is None or B < 1:
            raise ValueError("Student_t_B needs B >= 1 degrees of freedom")
        return float(stats.t.ppf(1.0 - alpha / 2.0, B))
    levels = np.array(sorted(KVB_CRITICAL_VALUES))
    if alpha < levels[0]:
        raise ValueError(f"fixed-b critical values are tabulated only for alpha >= {levels[0]}")
    return float(np.interp(alpha, levels, [KVB_CRITICAL_VALUES[a] for a in levels]))


@dataclass
class TestOutcome:
    statistic: float
    alpha: float
    critical_value: float
    cv_family: CvFamily
    reject: bool
    lrv_kind: LrvKind
    lrv: LrvEstimate | None = field(default=None, repr=False)
    estimate: float | None = None
    std_error: float | None = None

    __test__ = False  # keep pytest from collecting the class

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "alpha": self.alpha,
            "critical_value": self.critical_value,
            "cv_family": self.cv_family.value,
            "reject": self.reject,
            "lrv_kind": self.lrv_kind.value,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "lrv": None if self.lrv is None else self.lrv.to_dict(),
        }


def _outcome(stat: float, kind: LrvKind, est: LrvEstimate, alpha: float, T: int, estimate=None, se=None) -> TestOutcome:
    family = cv_family_for(kind)
    B = int(est.bandwidths) if kind is LrvKind.EWC else None
    cv = critical_value(family, alpha, B)
    return TestOutcome(float(stat), alpha, cv, family, bool(abs(stat) > cv), kind, est, estimate, se)


def _lrv(V, kind: LrvKind, weights, cfg: DkConfig | None, B: int | None) -> LrvEstimate:
    if cfg is not None and weights is not None:
        cfg = DkConfig(**{**cfg.__dict__, "weights": tuple(np.ravel(weights))})
    return estimate_lrv(V, kind, weights=weights, cfg=cfg, B=B)


def t_test_regression(
    y,
    X,
    coef_index: int,
    lrv_kind,
    alpha: float = 0.05,
    null_value: float = 0.0,
    cfg: DkConfig | None = None,
    B: int | None = None,
) -> TestOutcome:
    """t-test of ``beta[coef_index] == null_value`` with the sandwich variance.

    The scores ``x_t e_t`` go to the estimator; constant columns of ``X``
    get weight zero in the data-dependent bandwidths.
    """
    kind = parse_kind(lrv_kind)
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    T, q = X.shape
    if y.size != T:
        raise ValueError("y and X have different lengths")
    if not 0 <= coef_index < q:
        raise ValueError("coef_index out of range")
    if np.linalg.matrix_rank(X) < q:
        raise DegenerateError("design matrix is not of full column rank")
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    resid = y - X @ beta
    V = X * resid[:, None]
    if not np.any(V):
        raise DegenerateError("degenerate variance")
    weights = np.where(np.ptp(X, axis=0) == 0.0, 0.0, 1.0)
    if not np.any(weights):
        weights = np.ones(q)
    est = _lrv(V, kind, weights, cfg, B)
    Qinv = np.linalg.inv(X.T @ X / T)
    var = float((Qinv @ est.J @ Qinv)[coef_index, coef_index])
    if not var > 0.0:
        raise DegenerateError("degenerate variance")
    se = math.sqrt(var / T)
    stat = (beta[coef_index] - null_value) / se
    return _outcome(stat, kind, est, alpha, T, float(beta[coef_index]), se)


def _mean_test(d, kind, alpha, demean, cfg, B) -> TestOutcome:
    kind = parse_kind(kind)
    d = np.asarray(d, dtype=float).ravel()
    n = d.size
    if n < 20:
        raise ValueError("mean tests need at least 20 observations")
    m = float(d.mean())
    V = d - m if demean else d
    if not np.any(V):
        raise DegenerateError("degenerate variance")
    est = _lrv(V, kind, None, cfg, B)
    J = float(est.J[0, 0])
    if not J > 0.0:
        raise DegenerateError("degenerate variance")
    se = math.sqrt(J / n)
    return _outcome(m / se, kind, est, alpha, n, m, se)


def dm_test(d, lrv_kind, alpha: float = 0.05, demean: bool = False, cfg: DkConfig | None = None, B: int | None = None) -> TestOutcome:
    """Diebold-Mariano ``sqrt(n) mean(d) / sqrt(J_d)``.

    With ``demean=False`` the estimator sees the raw loss differential; with
    ``demean=True`` it sees ``d - mean(d)``.
    """
    return _mean_test(d, lrv_kind, alpha, demean, cfg, B)


def gr_test(
    in_losses,
    out_losses,
    lrv_kind,
    alpha: float = 0.05,
    demean: bool = False,
    cfg: DkConfig | None = None,
    B: int | None = None,
    in_sample_correction: bool = True,
) -> TestOutcome:
    """Forecast-breakdown test on surprise losses ``L_t - mean(in-sample losses)``.

    With ``in_sample_correction`` the long-run variance of the surprise
    losses is scaled by ``1 + n/m`` (``n`` out-of-sample, ``m`` in-sample
    observations), the fixed-scheme variance of the forecast-breakdown
    statistic when the in-sample average loss is itself estimated.
    """
    in_losses = np.asarray(in_losses, dtype=float).ravel()
    out_losses = np.asarray(out_losses, dtype=float).ravel()
    if in_losses.size == 0 or out_losses.size == 0:
        raise ValueError("loss series must be nonempty")
    sl = out_losses - in_losses.mean()
    kind = parse_kind(lrv_kind)
    if not np.any(sl):
        # no surprise at all: the statistic is zero rather than 0/0
        family = cv_family_for(kind)
        B_ = (ewc_default_B(sl.size) if B is None else B) if kind is LrvKind.EWC else None
        return TestOutcome(0.0, alpha, critical_value(family, alpha, B_), family, False, kind, None, 0.0, 0.0)
    res = _mean_test(sl, kind, alpha, demean, cfg, B)
    if not in_sample_correction:
        return res
    scale = math.sqrt(1.0 + out_losses.size / in_losses.size)
    stat = res.statistic / scale
    return TestOutcome(stat, alpha, res.critical_value, res.cv_family, bool(abs(stat) > res.critical_value), kind, res.lrv, res.estimate, res.std_error * scale)


__all__ = [
    "CvFamily",
    "KVB_CRITICAL_VALUES",
    "TestOutcome",
    "critical_value",
    "cv_family_for",
    "dm_test",
    "ewc_default_B",
    "gr_test",
    "simulate_kvb_critical_values",
    "t_test_regression",
]
