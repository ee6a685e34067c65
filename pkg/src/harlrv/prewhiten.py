"""Blockwise VAR whitening and per-observation recoloring matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .local_autocov import as_matrix

SINGULAR_VALUE_FLOOR = 0.03


class RankDeficientBlockError(ValueError):
    pass


@dataclass(frozen=True)
class PrewhitenFit:
    """Result of :func:`fit_blocks`.

    ``A_hat[r][j]`` is the lag-``j+1`` coefficient matrix of block ``r`` and
    ``block_of[s]`` maps 0-based time ``s`` to its block. ``residuals`` is
    aligned with the original time axis; the first ``p_A`` rows of every
    block have no regressors and are zero (``used`` is False there).
    ``D_hat`` has one ``p x p`` matrix per observation.
    """

    n_T: int
    p_A: int
    bounds: tuple[tuple[int, int], ...]
    A_hat: tuple[tuple[np.ndarray, ...], ...]
    mu_hat: tuple[np.ndarray, ...] | None
    residuals: np.ndarray
    used: np.ndarray
    D_block: tuple[np.ndarray, ...]
    block_of: np.ndarray

    @property
    def T(self) -> int:
        return self.block_of.size

    @property
    def D_hat(self) -> np.ndarray:
        return np.stack(self.D_block)[self.block_of]

    def recolored(self) -> np.ndarray:
        """``D_s V*_s`` on the original time axis (zero where no residual exists)."""
        E = self.residuals
        out = np.empty_like(E)
        for r, (lo, hi) in enumerate(self.bounds):
            out[lo:hi] = E[lo:hi] @ self.D_block[r].T
        return out


def recolor(A_block) -> np.ndarray:
    """``(I - sum_j A_j)^-1`` with singular values of ``I - sum_j A_j`` floored at 0.03."""
    A = [np.atleast_2d(np.asarray(a, dtype=float)) for a in A_block]
    p = A[0].shape[0]
    M = np.eye(p) - sum(A)
    U, s, Vt = np.linalg.svd(M)
    s = np.maximum(s, SINGULAR_VALUE_FLOOR)
    return (Vt.T / s) @ U.T


def block_bounds(T: int, n_T: int, min_len: int) -> list[tuple[int, int]]:
    """0-based half-open block bounds; a trailing partial block shorter than
    ``min_len`` is merged into its predecessor."""
    edges = list(range(0, T, n_T)) + [T]
    bounds = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    if len(bounds) > 1 and bounds[-1][1] - bounds[-1][0] < min_len:
        lo = bounds[-2][0]
        bounds = bounds[:-2] + [(lo, T)]
    return bounds


def fit_blocks(V, n_T: int, p_A: int = 1, with_intercept: bool = False) -> PrewhitenFit:
    """Fit a VAR(``p_A``) by least squares separately on each block of length ``n_T``.

    Each block is a self-contained regression of ``V_t`` on
    ``V_{t-1}, ..., V_{t-p_A}`` (plus an intercept when ``with_intercept``):
    lags are not borrowed from the previous block, so the first ``p_A``
    observations of every block lose their regressors.
    """
    V = as_matrix(V)
    T, p = V.shape
    if p_A < 1:
        raise ValueError("p_A must be at least 1")
    n_reg = p * p_A + int(with_intercept)
    min_len = n_reg + p_A + 2
    if n_T < min_len or T < min_len:
        raise ValueError(f"blocks of length {n_T} are too short for a VAR({p_A}) in dimension {p}")

    bounds = block_bounds(T, n_T, min_len)
    A_hat, mu_hat, D_block = [], [], []
    resid = np.zeros((T, p))
    used = np.zeros(T, dtype=bool)
    block_of = np.empty(T, dtype=int)
    for r, (lo, hi) in enumerate(bounds):
        block_of[lo:hi] = r
        start = lo + p_A
        cols = [V[start - j : hi - j] for j in range(1, p_A + 1)]
        if with_intercept:
            cols.append(np.ones((hi - start, 1)))
        X = np.hstack(cols)
        Y = V[start:hi]
        used[start:hi] = True
        coef, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
        if rank < X.shape[1]:
            raise RankDeficientBlockError(f"block {r} (t={lo + 1}..{hi}) has a rank-deficient regressor matrix")
        resid[start:hi] = Y - X @ coef
        A_r = tuple(coef[j * p : (j + 1) * p].T.copy() for j in range(p_A))
        A_hat.append(A_r)
        mu_hat.append(coef[-1].copy() if with_intercept else None)
        D_block.append(recolor(A_r))

    return PrewhitenFit(
        n_T=n_T,
        p_A=p_A,
        bounds=tuple(bounds),
        A_hat=tuple(A_hat),
        mu_hat=tuple(mu_hat) if with_intercept else None,
        residuals=resid,
        used=used,
        D_block=tuple(D_block),
        block_of=block_of,
    )
