"""Segmented locally stationary simulation and the four Monte Carlo designs.

Every process here is a time-varying AR(1) in rescaled time ``u = t/T``::

    V_t = mu(t/T) + a(t/T) (V_{t-1} - mu((t-1)/T)) + sigma(t/T) u_t,   u_t ~ N(0, 1)

with piecewise regimes. The regression designs M1/M2, the Diebold-Mariano
design M3 and the forecast-breakdown design M4 are built on top of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import integrate, signal

CoefFn = Union[float, Callable[[np.ndarray], np.ndarray]]

BURN_IN = 200
MODELS = ("M1", "M2", "M3", "M4")


def _as_fn(value: CoefFn) -> Callable[[np.ndarray], np.ndarray]:
    if callable(value):
        return value
    const = float(value)
    return lambda u: np.full(np.shape(u), const)


@dataclass(frozen=True)
class Regime:
    """One regime of an SLS process, active for ``start <= u < end``.

    ``ar``, ``mean`` and ``sd`` are constants or vectorized functions of
    rescaled time on [0, 1].
    """

    end: float
    ar: CoefFn = 0.0
    mean: CoefFn = 0.0
    sd: CoefFn = 1.0

    def is_constant(self) -> bool:
        return not any(callable(v) for v in (self.ar, self.mean, self.sd))


@dataclass(frozen=True)
class SlsSpec:
    regimes: tuple[Regime, ...]
    check_grid: int = field(default=2001, repr=False)

    def __post_init__(self) -> None:
        if not self.regimes:
            raise ValueError("an SLS spec needs at least one regime")
        ends = np.array([r.end for r in self.regimes], dtype=float)
        if np.any(ends <= 0) or np.any(np.diff(ends) <= 0) or ends[-1] != 1.0:
            raise ValueError("break fractions must be strictly increasing in (0, 1] and end at 1")
        start = 0.0
        for j, reg in enumerate(self.regimes):
            u = np.linspace(start, reg.end, self.check_grid)
            a = _as_fn(reg.ar)(u)
            s = _as_fn(reg.sd)(u)
            if np.any(~np.isfinite(a)) or np.max(np.abs(a)) >= 1.0:
                raise ValueError(f"regime {j}: AR coefficient must satisfy |a(u)| < 1")
            if np.any(~np.isfinite(s)) or np.min(s) <= 0.0:
                raise ValueError(f"regime {j}: innovation sd must be positive")
            start = reg.end

    @classmethod
    def constant(cls, ar: float = 0.0, sd: float = 1.0, mean: float = 0.0) -> "SlsSpec":
        return cls((Regime(1.0, ar=ar, mean=mean, sd=sd),))

    def regime_index(self, u: np.ndarray) -> np.ndarray:
        ends = np.array([r.end for r in self.regimes])
        return np.minimum(np.searchsorted(ends, u, side="right"), len(ends) - 1)

    def coefficients(self, u) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(a(u), mu(u), sigma(u))`` evaluated at rescaled times ``u``."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        idx = self.regime_index(u)
        a = np.empty_like(u)
        mu = np.empty_like(u)
        sd = np.empty_like(u)
        for j, reg in enumerate(self.regimes):
            m = idx == j
            if m.any():
                a[m] = _as_fn(reg.ar)(u[m])
                mu[m] = _as_fn(reg.mean)(u[m])
                sd[m] = _as_fn(reg.sd)(u[m])
        return a, mu, sd


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate_sls(spec: SlsSpec, T: int, seed=None) -> np.ndarray:
    """Draw a length-``T`` path of ``spec``; returns a ``(T, 1)`` array.

    ``seed`` may be an int, ``None`` or a ``numpy.random.Generator``. A burn-in
    of 200 draws with the coefficients at ``u = 0`` is discarded.
    """
    if T < 1:
        raise ValueError("T must be positive")
    rng = _rng(seed)
    shocks = rng.standard_normal(BURN_IN + T)

    a0, mu0, sd0 = (c[0] for c in spec.coefficients(0.0))
    # stationary AR(1) start for the burn-in, then filter the burn-in draws
    x = mu0 + sd0 / np.sqrt(1.0 - a0**2) * rng.standard_normal()
    burn = signal.lfilter([sd0], [1.0, -a0], shocks[:BURN_IN], zi=[a0 * (x - mu0)])[0]
    prev_dev = burn[-1]

    u = np.arange(1, T + 1) / T
    a, mu, sd = spec.coefficients(u)
    eps = sd * shocks[BURN_IN:]
    if len(spec.regimes) == 1 and spec.regimes[0].is_constant():
        dev = signal.lfilter([1.0], [1.0, -a[0]], eps, zi=[a[0] * prev_dev])[0]
        return (mu + dev)[:, None]

    dev = np.empty(T)
    al = a.tolist()
    el = eps.tolist()
    for t in range(T):
        prev_dev = al[t] * prev_dev + el[t]
        dev[t] = prev_dev
    return (mu + dev)[:, None]


def true_lrv(spec: SlsSpec) -> float:
    """Long-run variance ``int_0^1 sigma^2(u) / (1 - a(u))^2 du`` of a zero-mean spec."""
    start = 0.0
    total = 0.0
    grid = np.linspace(0.0, 1.0, spec.check_grid)
    _, mu, _ = spec.coefficients(grid)
    if np.max(np.abs(mu)) > 0.0:
        raise ValueError("true_lrv requires a zero-mean spec")
    for reg in spec.regimes:
        a_fn, s_fn = _as_fn(reg.ar), _as_fn(reg.sd)
        ug = np.linspace(start, reg.end, spec.check_grid)
        if np.max(np.abs(a_fn(ug))) >= 1.0:
            raise ValueError("|a(u)| >= 1 on the quadrature grid")

        def integrand(v, a_fn=a_fn, s_fn=s_fn):
            v = np.array([v])
            return float(s_fn(v)[0] ** 2 / (1.0 - a_fn(v)[0]) ** 2)

        total += integrate.quad(integrand, start, reg.end, limit=200, epsabs=1e-12, epsrel=1e-12)[0]
        start = reg.end
    return total


# --------------------------------------------------------------------------
# Monte Carlo designs


@dataclass(frozen=True)
class DgpId:
    model: str
    T: int
    delta: float = 0.0
    rho: float = 0.4
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.delta < 0:
            raise ValueError("shift magnitude delta must be nonnegative")
        if self.T < 50:
            raise ValueError("T must be at least 50")


@dataclass
class RegressionData:
    """``y = X beta + e``; the test is on ``beta[coef_index] == null_value``."""

    y: np.ndarray
    X: np.ndarray
    coef_index: int
    null_value: float = 0.0


@dataclass
class LossDifferentialData:
    """Out-of-sample loss differential ``d_t = L_t(model 2) - L_t(model 1)``."""

    d: np.ndarray
    in_sample: int


@dataclass
class ForecastBreakdownData:
    in_losses: np.ndarray
    out_losses: np.ndarray

    @property
    def surprise_losses(self) -> np.ndarray:
        return self.out_losses - self.in_losses.mean()


def m2_error_ar(u: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 0.8 * np.cos(1.5 - np.cos(5.0 * u)))


def error_spec(model: str, rho: float = 0.4) -> SlsSpec:
    """Error process of each design (zero mean)."""
    if model == "M1":
        return SlsSpec.constant(ar=rho, sd=np.sqrt(0.7))
    if model == "M2":
        return SlsSpec((Regime(0.8, ar=m2_error_ar), Regime(1.0, ar=0.5)))
    if model == "M3":
        return SlsSpec.constant(ar=0.8)
    if model == "M4":
        return SlsSpec.constant(ar=0.3, sd=np.sqrt(0.7))
    raise ValueError(f"unknown model {model!r}")


def _ols(y: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.linalg.lstsq(X, y, rcond=None)[0]


def _fixed_scheme_losses(y, pred, T_m):
    """Fit ``y_t`` on ``[1, pred_t]`` over ``t < T_m`` (0-based) and return in/out losses.

    ``pred[t]`` is the predictor available one period before ``y[t]``. The
    out-of-sample targets run from ``T_m + 1`` to ``T - 1`` so that the
    forecast origins are ``T_m+1, ..., T-1`` in 1-based time.
    """
    X_in = np.column_stack([np.ones(T_m), pred[:T_m]])
    beta = _ols(y[:T_m], X_in)
    in_losses = (y[:T_m] - X_in @ beta) ** 2
    out = slice(T_m + 1, len(y))
    out_losses = (y[out] - beta[0] - beta[1] * pred[out]) ** 2
    return in_losses, out_losses


def make_dgp(dgp: DgpId, rng=None):
    """Simulate one data set of the design ``dgp``.

    Returns :class:`RegressionData` for M1/M2, :class:`LossDifferentialData`
    for M3 and :class:`ForecastBreakdownData` for M4. ``rng`` overrides
    ``dgp.seed`` when given.
    """
    rng = _rng(dgp.seed if rng is None else rng)
    T, delta = dgp.T, dgp.delta

    if dgp.model == "M1":
        x = 1.0 + rng.standard_normal(T)
        e = simulate_sls(error_spec("M1", dgp.rho), T, rng)[:, 0]
        y = delta + x + e
        return RegressionData(y, np.column_stack([np.ones(T), x]), coef_index=0)

    if dgp.model == "M2":
        x = simulate_sls(SlsSpec.constant(ar=0.8, mean=3.0), T, rng)[:, 0]
        e = simulate_sls(error_spec("M2"), T, rng)[:, 0]
        y = delta * x + e
        return RegressionData(y, np.column_stack([np.ones(T), x]), coef_index=1)

    if dgp.model == "M3":
        # index t = 0..T-1 is the target period; x*_prev[t] is the lagged predictor
        x0 = 1.0 + rng.standard_normal(T)
        e = simulate_sls(error_spec("M3"), T, rng)[:, 0]
        y = x0 + e
        T_m = T // 2
        if delta == 0.0:
            x1 = 1.0 + rng.standard_normal(T)
            x2 = 1.0 + rng.standard_normal(T)
        else:
            x1 = x0
            shift = np.where(np.arange(1, T + 1) > 3 * T / 4, delta, 0.0)
            x2 = x0 + shift + rng.standard_normal(T)
        _, L1 = _fixed_scheme_losses(y, x1, T_m)
        _, L2 = _fixed_scheme_losses(y, x2, T_m)
        return LossDifferentialData(L2 - L1, in_sample=T_m)

    # M4
    x = 1.5 + np.sqrt(1.5) * rng.standard_normal(T)
    e = simulate_sls(error_spec("M4"), T, rng)[:, 0]
    t = np.arange(1, T + 1)
    y = 1.0 + x + delta * x * (t > 0.85 * T) + e
    T_m = int(round(0.6 * T))
    in_l, out_l = _fixed_scheme_losses(y, x, T_m)
    return ForecastBreakdownData(in_l, out_l)
