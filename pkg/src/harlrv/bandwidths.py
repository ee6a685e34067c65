"""Data-dependent bandwidths for the double-kernel estimators.

The time bandwidth ``b2(u_r)`` is a plug-in of the MSE-optimal rule with the
constant 1.7781, its integrated version ``b2_bar`` feeds the lag bandwidth
``b1``, and ``b1`` uses a rolling-window AR(1) approximating model through
``phi_hat``.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError
from .kernels import K2_F, Kernel1Kind, kernel_constants
from .local_autocov import as_matrix, n_blocks, taper

B2_CONSTANT = 1.7781
B1_QS_CONSTANT = 0.6828
AR_CLAMP = 0.99


class BandwidthWarning(UserWarning):
    pass


@dataclass
class BandwidthSelection:
    b1: float
    u: np.ndarray
    b2_per_block: np.ndarray
    b2_bar: float
    phi_hat: float
    d1_per_block: np.ndarray
    d2_per_block: np.ndarray
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "b1": self.b1,
            "b2_bar": self.b2_bar,
            "phi_hat": self.phi_hat,
            "b2_per_block": [[float(u), float(b)] for u, b in zip(self.u, self.b2_per_block)],
            "d1_per_block": self.d1_per_block.tolist(),
            "d2_per_block": self.d2_per_block.tolist(),
            "notes": list(self.notes),
        }


def default_block_length(T: int, exponent: float = 2.0 / 3.0) -> int:
    # small epsilon so exact powers such as 1000**(2/3) are not floored to 99
    return max(1, int(math.floor(T**exponent + 1e-9)))


def d2_lag_window(T: int) -> int:
    return int(math.floor(T ** (4.0 / 25.0) + 1e-9))


def d1_hat(u: float, grid_size: int) -> float:
    """Plug-in ``D1(u)`` from the fixed tvAR reference model on an even grid over [-pi, pi].

    Returns the real part of the grid average; the imaginary part cancels on
    the symmetric grid.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must lie in [0, 1]")
    if grid_size < 8:
        raise ValueError("grid_size must be at least 8")
    return _d1_hat(float(u), int(grid_size))


@functools.lru_cache(maxsize=4096)
def _d1_hat(u: float, grid_size: int) -> float:
    omega = np.linspace(-np.pi, np.pi, grid_size)
    z = np.exp(-1j * omega)
    c = 0.8 * (np.cos(1.5) + np.cos(4.0 * np.pi * u))
    base = 1.0 + c * z
    first = (3.0 / np.pi) * base**-4 * (0.8 * (-4.0 * np.pi * np.sin(4.0 * np.pi * u))) * z
    second = -(1.0 / np.pi) * np.abs(base) ** -3 * (0.8 * (-16.0 * np.pi**2 * np.cos(4.0 * np.pi * u))) * z
    avg = np.mean(first + second)
    assert abs(avg.imag) <= 1e-8 * max(1.0, abs(avg.real)), "D1 grid average is not real"
    return float(avg.real)


def d2_hat(u: float, V, pilot_b2: float, n_T: int) -> float:
    """``2/p sum_c sum_{|l| <= floor(T^(4/25))} c^(c,c)(u, l)^2`` at the block nearest ``u``."""
    V = as_matrix(V)
    T, p = V.shape
    if not 0.0 < pilot_b2 <= 1.0:
        raise ValueError("pilot_b2 must lie in (0, 1]")
    r = int(round(u * T / n_T))
    L = d2_lag_window(T)
    W = taper(T, r, n_T, pilot_b2)[:, None] * V
    diag = np.array([np.einsum("tc,tc->c", W[k:], W[: T - k]) for k in range(L + 1)]) / (T * pilot_b2)
    # lags -l and +l have the same diagonal
    total = float(np.sum(diag[0] ** 2) + 2.0 * np.sum(diag[1:] ** 2))
    return 2.0 * total / p


def b2_from_plugins(d1: float, d2: float, T: int) -> tuple[float, bool]:
    """``1.7781 D1^(-1/5) D2^(1/5) T^(-1/5)`` clamped to [1/T, 1]; flag is True on fallback."""
    if not (d1 > 0.0 and d2 > 0.0 and math.isfinite(d1) and math.isfinite(d2)):
        return min(1.0, T**-0.2), True
    b2 = B2_CONSTANT * d1**-0.2 * d2**0.2 * T**-0.2
    return float(min(1.0, max(1.0 / T, b2))), False


def b2_select(V, n_T: int, pilot_b2: float | None = None, grid_size: int | None = None, scale_free: bool = True):
    """Per-block ``b2(u_r)``, ``u_r = r n_T / T``, and the integrated ``b2_bar``.

    The reference-model ``D1`` enters through its magnitude. With
    ``scale_free`` the series is standardized before ``D2`` is computed, so
    the selected bandwidths do not depend on the units of ``V``.

    Returns ``(u, b2_per_block, b2_bar, d1, d2, notes)``.
    """
    V = as_matrix(V)
    T = V.shape[0]
    if T < 2 * n_T:
        raise ValueError("b2 selection needs T >= 2 n_T")
    pilot = T**-0.2 if pilot_b2 is None else pilot_b2
    grid = T if grid_size is None else grid_size
    if scale_free:
        scale = math.sqrt(float(np.mean(V * V)))
        if scale > 0.0:
            V = V / scale
    nb = n_blocks(T, n_T)
    u = np.arange(nb) * n_T / T
    d1 = np.array([d1_hat(float(ur), grid) for ur in u])
    d2 = np.array([d2_hat(float(ur), V, pilot, n_T) for ur in u])
    b2 = np.empty(nb)
    notes = []
    for r in range(nb):
        b2[r], fell_back = b2_from_plugins(abs(d1[r]), d2[r], T)
        if fell_back:
            notes.append(f"b2 fallback T^(-1/5) at block {r}")
    b2_bar = n_T / T * float(np.sum(b2[1:]))
    if nb == 1:
        b2_bar = float(b2[0])
    return u, b2, b2_bar, d1, d2, notes


def rolling_ar1(v, t: int, n2: int) -> tuple[float, float]:
    """No-intercept AR(1) fit over the window ``t-n2+1 .. t`` (1-based ``t``).

    ``sigma`` is the root of the residual sum of squares without a
    degrees-of-freedom scaling; the coefficient is clamped to [-0.99, 0.99].
    """
    v = np.asarray(v, dtype=float).ravel()
    if not (t >= n2 >= 3) or t > v.size:
        raise ValueError("rolling_ar1 needs n2 >= 3 and n2 <= t <= len(v)")
    lo = max(2, t - n2 + 1)
    cur = v[lo - 1 : t]
    lag = v[lo - 2 : t - 1]
    sxx = float(lag @ lag)
    if sxx == 0.0:
        warnings.warn("zero-variance rolling window", BandwidthWarning, stacklevel=2)
        return 0.0, 0.0
    a = min(AR_CLAMP, max(-AR_CLAMP, float(cur @ lag) / sxx))
    resid = cur - a * lag
    return a, math.sqrt(float(resid @ resid))


def phi_hat(Vd, weights, n2: int, n3: int) -> float:
    """Ratio of weighted rolling-AR(1) curvature and level terms (``q = 2``)."""
    Vd = as_matrix(Vd)
    T, p = Vd.shape
    w = np.asarray(weights, dtype=float)
    if w.shape != (p,) or np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be nonnegative with at least one positive entry")
    if T < 2 * n3:
        raise ValueError("phi_hat needs T >= 2 n3")
    starts = np.arange(T // n3) * n3 + 1
    num = 0.0
    den = 0.0
    for c in range(p):
        if w[c] == 0.0:
            continue
        a = np.empty(starts.size)
        s2 = np.empty(starts.size)
        for j, t in enumerate(starts):
            a[j], s = rolling_ar1(Vd[:, c], min(T, max(int(t), n2 + 1)), n2)
            s2[j] = s * s
        curv = n3 / T * np.sum(s2 * a / (1.0 - a) ** 4)
        level = n3 / T * np.sum(s2 / (1.0 - a) ** 2)
        num += w[c] * 18.0 * curv**2
        den += w[c] * level**2
    if den <= 0.0:
        raise DegenerateError("degenerate weight/series")
    return num / den


def b1_select(phi: float, T: int, b2_bar: float, kind: Kernel1Kind | str = Kernel1Kind.QS) -> float:
    """Lag bandwidth ``b1``; capped at 1, which is also the white-noise value."""
    if phi < 0:
        raise ValueError("phi must be nonnegative")
    if not 0.0 < b2_bar <= 1.0:
        raise ValueError("b2_bar must lie in (0, 1]")
    if phi == 0.0:
        return 1.0
    kind = Kernel1Kind(kind)
    if kind is Kernel1Kind.QS:
        b1 = B1_QS_CONSTANT * (phi * T * b2_bar) ** -0.2
    else:
        kc = kernel_constants(kind)
        base = 2.0 * kc.q * kc.K1q**2 * phi * T * b2_bar / (kc.int_K1_sq * K2_F)
        b1 = base ** (-1.0 / (2.0 * kc.q + 1.0))
    return float(min(1.0, b1))


def select_bandwidths(
    V,
    n_T: int,
    weights=None,
    kind: Kernel1Kind | str = Kernel1Kind.QS,
    n2: int | None = None,
    n3: int | None = None,
    scale_free: bool = True,
) -> BandwidthSelection:
    """Run the full pipeline ``b2(u_r) -> b2_bar -> phi_hat -> b1`` on ``V``."""
    V = as_matrix(V)
    T, p = V.shape
    n2 = n_T if n2 is None else n2
    n3 = n_T if n3 is None else n3
    w = np.ones(p) if weights is None else np.asarray(weights, dtype=float)
    u, b2, b2_bar, d1, d2, notes = b2_select(V, n_T, scale_free=scale_free)
    phi = phi_hat(V, w, n2, n3)
    b1 = b1_select(phi, T, b2_bar, kind)
    return BandwidthSelection(b1, u, b2, b2_bar, phi, d1, d2, notes)
