"""Long-run variance estimators.

All estimators take a ``T x p`` series ``V`` (a vector is treated as
``p = 1``) and return an :class:`LrvEstimate` whose ``J`` is symmetric.

* ``DK``: double-kernel HAC with data-dependent ``b1`` and ``b2(u_r)``.
* ``pwDK_SLS``, ``pwDK_1``, ``pwDK_SLS_mu``: the same after blockwise VAR
  prewhitening (blocks of ``n_T``, one block, blocks with intercept).
* ``NW87``/``pwNW87``: Bartlett with the Newey-West (1994) lag selection.
* ``A91``/``pwA91``: QS with the Andrews (1991) AR(1) plug-in bandwidth;
  the ``pw`` versions use Andrews-Monahan VAR(1) prewhitening.
* ``KVB``: Bartlett with bandwidth equal to the sample size.
* ``EWC``: equal-weighted cosine estimator with ``B`` basis functions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .bandwidths import AR_CLAMP, BandwidthSelection, default_block_length, select_bandwidths
from .errors import DegenerateError
from .kernels import Kernel1Kind, k1_eval
from .local_autocov import LocalAcovConfig, as_matrix, kernel_lrv
from .prewhiten import fit_blocks

NW94_GAMMA = 1.1447
A91_QS_CONSTANT = 1.3221
AM_EIGEN_CAP = 0.97


class LrvKind(str, enum.Enum):
    DK = "DK"
    PW_DK_SLS = "pwDK_SLS"
    PW_DK_1 = "pwDK_1"
    PW_DK_SLS_MU = "pwDK_SLS_mu"
    NW87 = "NW87"
    PW_NW87 = "pwNW87"
    A91 = "A91"
    PW_A91 = "pwA91"
    KVB = "KVB"
    EWC = "EWC"


# command-line spellings
ESTIMATOR_ALIASES = {
    "dk": LrvKind.DK,
    "pwdk-sls": LrvKind.PW_DK_SLS,
    "pwdk-1": LrvKind.PW_DK_1,
    "pwdk-mu": LrvKind.PW_DK_SLS_MU,
    "nw": LrvKind.NW87,
    "pw-nw": LrvKind.PW_NW87,
    "a91": LrvKind.A91,
    "pw-a91": LrvKind.PW_A91,
    "kvb": LrvKind.KVB,
    "ewc": LrvKind.EWC,
}


def parse_kind(kind) -> LrvKind:
    if isinstance(kind, LrvKind):
        return kind
    if kind in ESTIMATOR_ALIASES:
        return ESTIMATOR_ALIASES[kind]
    return LrvKind(kind)


class PwVariant(str, enum.Enum):
    SLS = "SLS"
    SINGLE_BLOCK = "single_block"
    SLS_MU = "SLS_mu"


@dataclass
class LrvEstimate:
    J: np.ndarray
    kind: LrvKind
    bandwidths: BandwidthSelection | float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        bw = self.bandwidths
        if isinstance(bw, BandwidthSelection):
            bw = bw.to_dict()
        return {"kind": self.kind.value, "J": self.J.tolist(), "bandwidths": bw, "notes": list(self.notes)}


@dataclass(frozen=True)
class DkConfig:
    """Options of the double-kernel estimators.

    ``n_T`` defaults to ``floor(T**nt_exponent)``. ``bandwidths`` freezes
    the bandwidths instead of selecting them from the data. ``weights`` are
    the per-component weights of the ``b1`` plug-in (zero for an intercept).
    """

    n_T: int | None = None
    nt_exponent: float = 2.0 / 3.0
    p_A: int = 1
    weights: tuple[float, ...] | None = None
    kernel: Kernel1Kind = Kernel1Kind.QS
    bandwidths: BandwidthSelection | None = None
    scale_free: bool = True

    def block_length(self, T: int) -> int:
        return default_block_length(T, self.nt_exponent) if self.n_T is None else self.n_T


def _symmetric(J: np.ndarray) -> np.ndarray:
    return 0.5 * (J + J.T)


def _check_dk(T: int, n_T: int) -> None:
    if T < 4 * n_T:
        raise ValueError(f"double-kernel estimators need T >= 4 n_T (T={T}, n_T={n_T})")


def _weights(cfg: DkConfig, p: int):
    return None if cfg.weights is None else np.asarray(cfg.weights, dtype=float).reshape(p)


def dk_hac(V, cfg: DkConfig = DkConfig()) -> LrvEstimate:
    """Double-kernel HAC with bandwidths selected on ``V`` itself."""
    V = as_matrix(V)
    T, p = V.shape
    n_T = cfg.block_length(T)
    _check_dk(T, n_T)
    if not np.any(V):
        return LrvEstimate(np.zeros((p, p)), LrvKind.DK, None, ["zero series"])
    sel = cfg.bandwidths or select_bandwidths(V, n_T, _weights(cfg, p), cfg.kernel, scale_free=cfg.scale_free)
    J = kernel_lrv(V, sel.b1, LocalAcovConfig(sel.b2_per_block, n_T), cfg.kernel)
    return LrvEstimate(_symmetric(J), LrvKind.DK, sel, list(sel.notes))


_PW_KIND = {
    PwVariant.SLS: LrvKind.PW_DK_SLS,
    PwVariant.SINGLE_BLOCK: LrvKind.PW_DK_1,
    PwVariant.SLS_MU: LrvKind.PW_DK_SLS_MU,
}


def pw_dk_hac(V, variant: PwVariant | str = PwVariant.SLS, cfg: DkConfig = DkConfig()) -> LrvEstimate:
    """Prewhitened double-kernel HAC.

    The VAR(``p_A``) is fit on blocks of length ``n_T`` (``SLS``), on the
    whole sample (``single_block``) or on blocks with a block intercept
    (``SLS_mu``). Bandwidths are selected on the recolored residuals
    ``D_s V*_s`` and the result carries the factor ``T/(T - p_A)``.
    """
    variant = PwVariant(variant)
    V = as_matrix(V)
    T, p = V.shape
    n_T = cfg.block_length(T)
    _check_dk(T, n_T)
    kind = _PW_KIND[variant]
    if not np.any(V):
        return LrvEstimate(np.zeros((p, p)), kind, None, ["zero series"])
    fit_len = T if variant is PwVariant.SINGLE_BLOCK else n_T
    fit = fit_blocks(V, fit_len, cfg.p_A, with_intercept=variant is PwVariant.SLS_MU)
    Vd = fit.recolored()
    notes = []
    if any(np.max(np.abs(D)) >= 1.0 / 0.03 - 1e-9 for D in fit.D_block):
        notes.append("recoloring singular-value floor engaged")
    if not np.any(Vd):
        return LrvEstimate(np.zeros((p, p)), kind, None, notes + ["zero residuals"])
    sel = cfg.bandwidths or select_bandwidths(Vd, n_T, _weights(cfg, p), cfg.kernel, scale_free=cfg.scale_free)
    J = T / (T - cfg.p_A) * kernel_lrv(Vd, sel.b1, LocalAcovConfig(sel.b2_per_block, n_T), cfg.kernel)
    return LrvEstimate(_symmetric(J), kind, sel, notes + list(sel.notes))


# --------------------------------------------------------------------------
# classic HAC


def lag_weighted_sum(E: np.ndarray, lag_weights: np.ndarray, norm: int | None = None) -> np.ndarray:
    """``sum_{|k| < n} w_|k| Gamma(k)`` with ``Gamma(k) = norm^-1 sum_t E_t E_{t-k}'``."""
    n = E.shape[0]
    norm = n if norm is None else norm
    w = np.zeros(n)
    m = min(n, lag_weights.size)
    w[:m] = lag_weights[:m]
    support = np.flatnonzero(w)
    last = int(support[-1]) if support.size else 0
    if last < 32:
        S = w[0] * (E.T @ E)
        for k in range(1, last + 1):
            if w[k] != 0.0:
                G = E[k:].T @ E[:-k]
                S += w[k] * (G + G.T)
        return S / norm
    return E.T @ toeplitz(w) @ E / norm


def nw94_lag(E: np.ndarray, weights=None) -> tuple[int, float]:
    """Newey-West (1994) Bartlett lag: ``floor(1.1447 (s1/s0)^(2/3) n^(1/3))``.

    The pilot window is ``floor(4 (n/100)^(2/9))``. Returns the integer lag
    and the unrounded bandwidth; a nonpositive pilot long-run variance gives
    lag 0 and bandwidth NaN.
    """
    n, p = E.shape
    w = np.ones(p) if weights is None else np.asarray(weights, dtype=float)
    h = E @ w
    m = int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))
    sig = np.array([h[j:] @ h[: n - j] / n for j in range(m + 1)])
    j = np.arange(1, m + 1)
    s0 = sig[0] + 2.0 * sig[1:].sum()
    s1 = 2.0 * (j * sig[1:]).sum()
    if s0 <= 0.0:
        if not np.any(h):
            raise DegenerateError("degenerate weight/series in the Newey-West bandwidth")
        return 0, float("nan")
    bw = NW94_GAMMA * ((s1 / s0) ** 2) ** (1.0 / 3.0) * n ** (1.0 / 3.0)
    return min(int(math.floor(bw)), n - 1), float(bw)


def a91_bandwidth(E: np.ndarray, weights=None) -> float:
    """Andrews (1991) QS bandwidth ``1.3221 (alpha(2) n)^(1/5)`` from per-component AR(1) fits."""
    n, p = E.shape
    w = np.ones(p) if weights is None else np.asarray(weights, dtype=float)
    num = 0.0
    den = 0.0
    for c in range(p):
        if w[c] == 0.0:
            continue
        x, xl = E[1:, c], E[:-1, c]
        sxx = xl @ xl
        if sxx == 0.0:
            continue
        rho = min(AR_CLAMP, max(-AR_CLAMP, float(x @ xl / sxx)))
        s2 = float(np.sum((x - rho * xl) ** 2)) / (n - 1)
        num += w[c] * 4.0 * rho**2 * s2**2 / (1.0 - rho) ** 8
        den += w[c] * s2**2 / (1.0 - rho) ** 4
    if den <= 0.0:
        raise DegenerateError("degenerate weight/series in the Andrews bandwidth")
    return A91_QS_CONSTANT * (num / den * n) ** 0.2


def _am_prewhiten(V: np.ndarray):
    """Global VAR(1) without intercept; eigenvalues of ``A`` with modulus above 0.97 are shrunk to 0.97."""
    Y, X = V[1:], V[:-1]
    coef, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
    if rank < X.shape[1]:
        raise DegenerateError("rank-deficient VAR(1) regressors in prewhitening")
    A = coef.T
    lam, P = np.linalg.eig(A)
    mod = np.abs(lam)
    capped = mod > AM_EIGEN_CAP
    if np.any(capped):
        lam = np.where(capped, lam * AM_EIGEN_CAP / np.maximum(mod, 1e-300), lam)
        A = np.real(P @ np.diag(lam) @ np.linalg.inv(P))
    E = Y - X @ A.T
    D = np.linalg.inv(np.eye(A.shape[0]) - A)
    return E, D, bool(np.any(capped))


def classic_hac(V, kind: LrvKind | str, prewhitened: bool = False, weights=None, bandwidth: float | None = None) -> LrvEstimate:
    """Newey-West (``NW87``) or Andrews (``A91``) HAC, optionally prewhitened.

    ``bandwidth`` overrides the automatic choice (the Bartlett lag for
    ``NW87``, the QS bandwidth for ``A91``).
    """
    kind = parse_kind(kind)
    if kind in (LrvKind.PW_NW87, LrvKind.PW_A91):
        prewhitened = True
        kind = LrvKind.NW87 if kind is LrvKind.PW_NW87 else LrvKind.A91
    if kind not in (LrvKind.NW87, LrvKind.A91):
        raise ValueError(f"{kind.value} is not a classic HAC kind")
    V = as_matrix(V)
    T, p = V.shape
    if T < 20:
        raise ValueError("classic HAC needs T >= 20")
    notes = []
    if prewhitened:
        E, D, capped = _am_prewhiten(V)
        if capped:
            notes.append("VAR(1) eigenvalues shrunk to modulus 0.97")
    else:
        E, D = V, None
    n = E.shape[0]

    if kind is LrvKind.NW87:
        if bandwidth is None:
            lag, raw = nw94_lag(E, weights)
            if math.isnan(raw):
                notes.append("nonpositive pilot long-run variance; lag set to 0")
        else:
            lag = int(bandwidth)
        lw = 1.0 - np.arange(lag + 1) / (lag + 1.0)
        J = lag_weighted_sum(E, lw)
        bw = float(lag)
    else:
        S = a91_bandwidth(E, weights) if bandwidth is None else float(bandwidth)
        if S <= 0.0:
            lw = np.array([1.0])
        else:
            lw = k1_eval(Kernel1Kind.QS, np.arange(n) / S)
        J = lag_weighted_sum(E, lw)
        bw = S

    if D is not None:
        J = D @ J @ D.T
    out_kind = {
        (LrvKind.NW87, False): LrvKind.NW87,
        (LrvKind.NW87, True): LrvKind.PW_NW87,
        (LrvKind.A91, False): LrvKind.A91,
        (LrvKind.A91, True): LrvKind.PW_A91,
    }[(kind, prewhitened)]
    return LrvEstimate(_symmetric(J), out_kind, bw, notes)


# --------------------------------------------------------------------------
# fixed-b


def ewc_default_B(T: int) -> int:
    """``max(2, 0.4 T^(2/3))`` rounded to the nearest even integer."""
    return max(2, 2 * int(round(0.2 * T ** (2.0 / 3.0))))


def cosine_basis(T: int, B: int) -> np.ndarray:
    t = np.arange(1, T + 1) - 0.5
    j = np.arange(1, B + 1)[:, None]
    return math.sqrt(2.0 / T) * np.cos(np.pi * j * t / T)


def fixed_b_lrv(V, kind: LrvKind | str, B: int | None = None) -> LrvEstimate:
    """``KVB`` (Bartlett, bandwidth ``T``) or ``EWC`` with ``B`` cosine terms."""
    kind = parse_kind(kind)
    V = as_matrix(V)
    T, p = V.shape
    if T < 8:
        raise ValueError("fixed-b estimators need T >= 8")
    if kind is LrvKind.KVB:
        J = lag_weighted_sum(V, 1.0 - np.arange(T) / T)
        return LrvEstimate(_symmetric(J), kind, 1.0)
    if kind is LrvKind.EWC:
        B = ewc_default_B(T) if B is None else int(B)
        if not 1 <= B < T:
            raise ValueError("EWC needs 1 <= B < T")
        L = cosine_basis(T, B) @ V
        return LrvEstimate(_symmetric(L.T @ L / B), kind, float(B))
    raise ValueError(f"{kind.value} is not a fixed-b kind")


def estimate_lrv(V, kind, weights=None, cfg: DkConfig | None = None, B: int | None = None) -> LrvEstimate:
    """Dispatch on ``kind`` (an :class:`LrvKind` or a command-line alias)."""
    kind = parse_kind(kind)
    if cfg is None:
        cfg = DkConfig(weights=None if weights is None else tuple(np.ravel(weights)))
    if kind is LrvKind.DK:
        return dk_hac(V, cfg)
    if kind in _PW_KIND.values():
        variant = next(v for v, k in _PW_KIND.items() if k is kind)
        return pw_dk_hac(V, variant, cfg)
    if kind in (LrvKind.NW87, LrvKind.PW_NW87, LrvKind.A91, LrvKind.PW_A91):
        return classic_hac(V, kind, weights=weights)
    return fixed_b_lrv(V, kind, B)
