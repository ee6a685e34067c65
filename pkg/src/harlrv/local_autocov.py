"""Kernel-smoothed local autocovariances and their block averages.

For block ``r`` the local autocovariance at lag ``k >= 0`` is::

    c(r, k) = (T b2)^-1 sum_{s=k+1}^{T} K2*(x_s, x_{s-k}) V_s V_{s-k}'
    x_s     = ((r+1) n_T - s) / (T b2)

where ``K2*`` is the product taper ``sqrt(K2(a) K2(b))``. Because of the
product form, ``c(r, .)`` is the raw autocovariance sequence of the tapered
series ``g_r(s) V_s`` with ``g_r = sqrt(K2(x_s))``; :func:`kernel_lrv` uses
that to evaluate ``sum_k K1(b1 k) Gamma(k)`` as a quadratic form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.linalg import toeplitz

from .kernels import Kernel1Kind, k1_eval, k2_eval

Bandwidth2 = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class LocalAcovConfig:
    """Time bandwidth ``b2`` (scalar or one value per block) and block length ``n_T``."""

    b2: Bandwidth2
    n_T: int

    def b2_for(self, r: int) -> float:
        b2 = np.asarray(self.b2, dtype=float)
        return float(b2) if b2.ndim == 0 else float(b2[r])

    def check(self, T: int) -> None:
        b2 = np.asarray(self.b2, dtype=float)
        if np.any(b2 <= 0) or np.any(b2 > 1):
            raise ValueError("b2 must lie in (0, 1]")
        if not 1 <= self.n_T <= T:
            raise ValueError("block length n_T must satisfy 1 <= n_T <= T")


def as_matrix(V) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.ndim != 2:
        raise ValueError("series must be a vector or a T x p matrix")
    return V


def n_blocks(T: int, n_T: int) -> int:
    """Number of blocks ``r = 0, ..., floor((T - n_T)/n_T)`` entering the block average."""
    return (T - n_T) // n_T + 1


def block_weight(T: int, n_T: int) -> float:
    # single-block case: the average collapses to the one local estimate
    return n_T / (T - n_T) if T > n_T else 1.0


def taper(T: int, r: int, n_T: int, b2: float) -> np.ndarray:
    """``sqrt(K2(((r+1) n_T - s)/(T b2)))`` for ``s = 1..T``."""
    s = np.arange(1, T + 1)
    return np.sqrt(k2_eval(((r + 1) * n_T - s) / (T * b2)))


def local_acov(V, r: int, k: int, cfg: LocalAcovConfig) -> np.ndarray:
    """Local autocovariance ``c(r n_T / T, k)`` as a ``p x p`` matrix."""
    V = as_matrix(V)
    T = V.shape[0]
    if abs(k) >= T:
        raise ValueError("|k| must be smaller than T")
    cfg.check(T)
    g = taper(T, r, cfg.n_T, cfg.b2_for(r))
    W = g[:, None] * V
    m = abs(k)
    c = W[m:].T @ W[: T - m] / (T * cfg.b2_for(r))
    return c if k >= 0 else c.T


def block_avg_acov(V, k: int, cfg: LocalAcovConfig) -> np.ndarray:
    """Block-averaged autocovariance ``Gamma(k) = n_T/(T - n_T) sum_r c(r n_T/T, k)``."""
    V = as_matrix(V)
    T = V.shape[0]
    out = sum(local_acov(V, r, k, cfg) for r in range(n_blocks(T, cfg.n_T)))
    return block_weight(T, cfg.n_T) * out


def kernel_lrv(V, b1: float, cfg: LocalAcovConfig, kind: Kernel1Kind | str = Kernel1Kind.QS) -> np.ndarray:
    """``sum_{|k| < T} K1(b1 k) Gamma(k)`` for the block-averaged local autocovariances."""
    V = as_matrix(V)
    T, p = V.shape
    cfg.check(T)
    weights = k1_eval(kind, b1 * np.arange(T))
    total = np.zeros((p, p))
    for r in range(n_blocks(T, cfg.n_T)):
        b2 = cfg.b2_for(r)
        g = taper(T, r, cfg.n_T, b2)
        idx = np.flatnonzero(g)
        if idx.size == 0:
            continue
        lo, hi = idx[0], idx[-1] + 1
        W = g[lo:hi, None] * V[lo:hi]
        K = toeplitz(weights[: hi - lo])
        total += W.T @ K @ W / (T * b2)
    total *= block_weight(T, cfg.n_T)
    return 0.5 * (total + total.T)
