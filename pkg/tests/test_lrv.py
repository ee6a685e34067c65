import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from harlrv.bandwidths import select_bandwidths
from harlrv.errors import DegenerateError
from harlrv.local_autocov import LocalAcovConfig, kernel_lrv
from harlrv.lrv import (
    DkConfig,
    LrvKind,
    PwVariant,
    classic_hac,
    dk_hac,
    estimate_lrv,
    ewc_default_B,
    fixed_b_lrv,
    lag_weighted_sum,
    nw94_lag,
    parse_kind,
    pw_dk_hac,
)
from harlrv.prewhiten import fit_blocks
from harlrv.sls_sim import SlsSpec, simulate_sls

ALL_KINDS = list(LrvKind)


def ar1(T, a, seed, p=1):
    rng = np.random.default_rng(seed)
    return np.hstack([simulate_sls(SlsSpec.constant(ar=a), T, rng) for _ in range(p)])


def kvb_loop(V):
    T = V.shape[0]
    J = np.zeros((V.shape[1],) * 2)
    for t in range(T):
        for s in range(T):
            J += (1 - abs(t - s) / T) * np.outer(V[t], V[s])
    return J / T


def test_kvb_double_sum_matches_loop():
    V = np.random.default_rng(0).standard_normal((8, 2))
    assert_allclose(fixed_b_lrv(V, "kvb").J, kvb_loop(V), rtol=0, atol=1e-12)


def test_kvb_partial_sum_identity():
    V = np.random.default_rng(1).standard_normal(50)
    V = V - V.mean()
    S = np.cumsum(V)
    assert_allclose(fixed_b_lrv(V, "kvb").J[0, 0], 2 * np.sum(S**2) / 50**2, rtol=1e-12)


def test_ewc_full_basis_is_sample_variance():
    V = np.random.default_rng(2).standard_normal((40, 1))
    assert_allclose(fixed_b_lrv(V, "ewc", B=39).J[0, 0], V.var(ddof=1), rtol=1e-12)


def test_ewc_default_B():
    assert ewc_default_B(200) == 14
    assert ewc_default_B(10) == 2
    assert ewc_default_B(400) % 2 == 0


@pytest.mark.parametrize("variant", list(PwVariant))
def test_zero_series(variant):
    assert np.all(pw_dk_hac(np.zeros((200, 2)), variant).J == 0)
    assert np.all(dk_hac(np.zeros((200, 2))).J == 0)


def test_single_block_identity():
    V = ar1(400, 0.6, 3)
    est = pw_dk_hac(V, "single_block")
    fit = fit_blocks(V, 400, 1)
    resid = fit.residuals
    D = fit.D_block[0][0, 0]
    sel = est.bandwidths
    n_T = DkConfig().block_length(400)
    want = 400 / 399 * D**2 * kernel_lrv(resid, sel.b1, LocalAcovConfig(sel.b2_per_block, n_T))
    assert_allclose(est.J, want, rtol=1e-14)
    # bandwidths are selected on the recolored residuals
    again = select_bandwidths(D * resid, n_T)
    assert_allclose(again.b1, sel.b1, rtol=1e-14)


def test_dk_requires_enough_blocks():
    with pytest.raises(ValueError, match="T >= 4 n_T"):
        dk_hac(np.ones(50), DkConfig(n_T=20))


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_scale_equivariance(kind):
    V = ar1(300, 0.5, 4, p=2)
    c = 3.7
    J = estimate_lrv(V, kind).J
    Jc = estimate_lrv(c * V, kind).J
    assert_allclose(Jc, c**2 * J, rtol=1e-10, atol=1e-12 * np.abs(J).max())


def _frozen(kind, V):
    """Matrix-equivariant configuration: bandwidths fixed from the untransformed data."""
    est = estimate_lrv(V, kind)
    if kind in (LrvKind.DK, LrvKind.PW_DK_SLS, LrvKind.PW_DK_1, LrvKind.PW_DK_SLS_MU):
        cfg = DkConfig(bandwidths=est.bandwidths)
        return lambda X: estimate_lrv(X, kind, cfg=cfg).J
    if kind in (LrvKind.NW87, LrvKind.PW_NW87, LrvKind.A91, LrvKind.PW_A91):
        return lambda X: classic_hac(X, kind, bandwidth=est.bandwidths).J
    return lambda X: estimate_lrv(X, kind).J


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_matrix_equivariance_with_frozen_bandwidths(kind):
    V = ar1(300, 0.4, 5, p=2)
    M = np.array([[1.3, -0.4], [0.7, 0.9]])
    f = _frozen(kind, V)
    assert_allclose(f(V @ M.T), M @ f(V) @ M.T, rtol=1e-9, atol=1e-10)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_symmetric_output(kind):
    J = estimate_lrv(ar1(300, 0.3, 6, p=3), kind).J
    assert np.array_equal(J, J.T)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), c=st.floats(0.01, 100.0))
def test_scale_equivariance_property(seed, c):
    V = ar1(240, 0.5, seed)
    for kind in (LrvKind.PW_DK_SLS, LrvKind.NW87, LrvKind.PW_A91):
        J = estimate_lrv(V, kind).J
        assert_allclose(estimate_lrv(c * V, kind).J, c**2 * J, rtol=1e-10)


def test_constant_series_contaminates_nw():
    c = 2.0
    J = classic_hac(np.full(100, c), "nw", bandwidth=4).J[0, 0]
    lag_sum = sum((1 - k / 5) * (100 - k) / 100 * (1 if k == 0 else 2) for k in range(5))
    assert_allclose(J, c**2 * lag_sum)
    assert np.isfinite(J) and J > c**2


@pytest.mark.parametrize("kind", ["nw", "a91"])
def test_classic_white_noise_consistency(kind):
    rng = np.random.default_rng(7)
    vals = [classic_hac(rng.standard_normal(2000), kind).J[0, 0] for _ in range(40)]
    assert abs(np.mean(vals) - 1.0) < 0.1


@pytest.mark.parametrize("variant", list(PwVariant))
def test_pw_dk_white_noise(variant):
    rng = np.random.default_rng(8)
    vals = [pw_dk_hac(rng.standard_normal(1000), variant).J[0, 0] for _ in range(20)]
    assert abs(np.mean(vals) - 1.0) < 0.15


def test_lag_weighted_sum_branches_agree():
    E = np.random.default_rng(9).standard_normal((200, 2))
    w = 1 - np.arange(40) / 40
    loop = w[0] * E.T @ E + sum(w[k] * (E[k:].T @ E[:-k] + E[:-k].T @ E[k:]) for k in range(1, 40))
    assert_allclose(lag_weighted_sum(E, w), loop / 200, rtol=1e-12)


def test_nw94_lag_white_noise_small():
    lag, bw = nw94_lag(np.random.default_rng(10).standard_normal((500, 1)))
    assert 0 <= lag <= 10 and lag == int(np.floor(bw))
    with pytest.raises(DegenerateError):
        nw94_lag(np.zeros((100, 1)))


def test_parse_kind_aliases():
    assert parse_kind("pwdk-sls") is LrvKind.PW_DK_SLS
    assert parse_kind("pw-nw") is LrvKind.PW_NW87
    assert parse_kind(LrvKind.KVB) is LrvKind.KVB
    with pytest.raises(ValueError):
        parse_kind("bogus")


def test_estimate_json_fields():
    d = estimate_lrv(ar1(300, 0.5, 11), "pwdk-sls").to_dict()
    assert set(d) == {"kind", "J", "bandwidths", "notes"}
    assert dataclasses.is_dataclass(DkConfig())
