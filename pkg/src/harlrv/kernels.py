"""Lag kernels K1, the time-smoothing kernel K2 and the tapered product K2*."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Kernel1Kind(str, enum.Enum):
    QS = "QS"
    BARTLETT = "Bartlett"
    PARZEN = "Parzen"
    TUKEY_HANNING = "TukeyHanning"
    TRUNCATED = "Truncated"


@dataclass(frozen=True)
class KernelConstants:
    """Characteristic exponent ``q``, generalized derivative ``K1q`` and ``int K1^2``."""

    q: float
    K1q: float
    int_K1_sq: float


# q, K_{1,q}, int K1^2 from the standard kernel literature (Andrews, 1991).
KERNEL_CONSTANTS: dict[Kernel1Kind, KernelConstants] = {
    Kernel1Kind.QS: KernelConstants(q=2.0, K1q=1.421223, int_K1_sq=1.0),
    Kernel1Kind.BARTLETT: KernelConstants(q=1.0, K1q=1.0, int_K1_sq=2.0 / 3.0),
    Kernel1Kind.PARZEN: KernelConstants(q=2.0, K1q=6.0, int_K1_sq=151.0 / 280.0),
    Kernel1Kind.TUKEY_HANNING: KernelConstants(q=2.0, K1q=np.pi**2 / 4.0, int_K1_sq=0.75),
}

# int_0^1 K2(x)^2 dx and (int_0^1 x^2 K2(x) dx)^2 for K2(x) = 6x(1-x).
K2_F = 1.2
K2_H = 0.09


def kernel_constants(kind: Kernel1Kind | str) -> KernelConstants:
    kind = Kernel1Kind(kind)
    if kind not in KERNEL_CONSTANTS:
        raise ValueError(f"{kind.value} kernel has no finite characteristic exponent")
    return KERNEL_CONSTANTS[kind]


def _qs(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    # the closed form cancels catastrophically near 0; below 1e-2 the series is exact to ~1e-16
    small = np.abs(x) < 1e-2
    z = 6.0 * np.pi * x[~small] / 5.0
    out[~small] = 25.0 / (12.0 * np.pi**2 * x[~small] ** 2) * (np.sin(z) / z - np.cos(z))
    z2 = (6.0 * np.pi * x[small] / 5.0) ** 2
    out[small] = 1.0 - z2 / 10.0 + z2**2 / 280.0 - z2**3 / 15120.0
    return out


def _bartlett(x: np.ndarray) -> np.ndarray:
    return np.clip(1.0 - np.abs(x), 0.0, None)


def _parzen(x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    return np.where(
        ax <= 0.5,
        1.0 - 6.0 * ax**2 + 6.0 * ax**3,
        np.where(ax <= 1.0, 2.0 * (1.0 - ax) ** 3, 0.0),
    )


def _tukey_hanning(x: np.ndarray) -> np.ndarray:
    return np.where(np.abs(x) <= 1.0, 0.5 * (1.0 + np.cos(np.pi * x)), 0.0)


def _truncated(x: np.ndarray) -> np.ndarray:
    return np.where(np.abs(x) <= 1.0, 1.0, 0.0)


_K1 = {
    Kernel1Kind.QS: _qs,
    Kernel1Kind.BARTLETT: _bartlett,
    Kernel1Kind.PARZEN: _parzen,
    Kernel1Kind.TUKEY_HANNING: _tukey_hanning,
    Kernel1Kind.TRUNCATED: _truncated,
}


def k1_eval(kind: Kernel1Kind | str, x):
    """Evaluate the lag kernel ``kind`` at ``x`` (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    out = _K1[Kernel1Kind(kind)](np.atleast_1d(arr))
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def k2_eval(x):
    """Quadratic time kernel ``6x(1-x)`` on [0, 1], zero elsewhere."""
    arr = np.asarray(x, dtype=float)
    out = np.where((arr >= 0.0) & (arr <= 1.0), 6.0 * arr * (1.0 - arr), 0.0)
    if arr.ndim == 0:
        return float(out)
    return out


def k2_star(a, b):
    """Product form ``sqrt(K2(a) K2(b))`` that keeps the local autocovariances PSD."""
    out = np.sqrt(np.asarray(k2_eval(a)) * np.asarray(k2_eval(b)))
    if np.ndim(out) == 0:
        return float(out)
    return out
