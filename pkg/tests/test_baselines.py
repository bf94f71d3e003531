import numpy as np
import pytest

from mvopr.baselines import (bai_ng_ic, cooperative_design, estimate_factors,
                             factor_adjusted_design, fit_cooperative, fit_factor_adjusted,
                             fit_integrative_factor, integrative_factor_design,
                             select_num_factors)
from mvopr.penalized import solve_path
from mvopr.simulation import builtin_scenario, simulate_scenario


def test_cooperative_design_blocks(rng):
    m1, m2 = rng.standard_normal((6, 3)), rng.standard_normal((6, 2))
    y = rng.standard_normal(6)
    x, ya = cooperative_design([m1, m2], y, 0.25)
    np.testing.assert_array_equal(x[:6], np.hstack([m1, m2]))
    np.testing.assert_array_equal(x[6:, :3], -0.5 * m1)
    np.testing.assert_array_equal(x[6:, 3:], 0.5 * m2)
    assert ya.size == 12 and not ya[6:].any()
    x1, _ = cooperative_design([m1, m2], y, 1.0)
    np.testing.assert_array_equal(x1[6:], np.hstack([-m1, m2]))
    x0, _ = cooperative_design([m1, m2], y, 0.0)
    assert not x0[6:].any()


def test_cooperative_negative_rho(rng):
    with pytest.raises(ValueError):
        cooperative_design([np.eye(2), np.eye(2)], np.ones(2), -0.1)


def test_cooperative_rho_zero_is_lasso(rng):
    m1, m2 = rng.standard_normal((40, 6)), rng.standard_normal((40, 5))
    y = m1[:, 0] - 2 * m2[:, 1] + 0.3 * rng.standard_normal(40)
    coop = fit_cooperative([m1, m2], y, 0.0, length=30)
    plain = solve_path(np.hstack([m1, m2]), None, y, length=30)
    np.testing.assert_allclose(coop.lambdas, plain.lambdas, rtol=1e-12)
    assert np.max(np.abs(coop.beta - plain.beta)) <= 1e-6
    np.testing.assert_allclose(coop.predict(np.hstack([m1, m2])),
                               plain.predict(np.hstack([m1, m2])), atol=1e-6)


def test_cooperative_agreement_objective(rng):
    # augmented lasso equals the agreement-penalised loss on standardised data
    m1, m2 = rng.standard_normal((30, 3)), rng.standard_normal((30, 2))
    y = rng.standard_normal(30)
    b = rng.standard_normal(5)
    rho = 0.7
    x, ya = cooperative_design([m1, m2], y, rho)
    lhs = np.sum((ya - x @ b) ** 2)
    rhs = np.sum((y - m1 @ b[:3] - m2 @ b[3:]) ** 2) + rho * np.sum((m1 @ b[:3] - m2 @ b[3:]) ** 2)
    assert lhs == pytest.approx(rhs)


def test_three_view_cooperative_pairs(rng):
    mods = [rng.standard_normal((5, 2)) for _ in range(3)]
    x, ya = cooperative_design(mods, np.ones(5), 1.0)
    assert x.shape == (20, 6) and ya.shape == (20,)


def test_factors_exact_rank_one(rng):
    u = rng.standard_normal(30)
    u -= u.mean()
    m = np.outer(u, rng.standard_normal(10))
    dec = estimate_factors(m, 1)
    assert np.max(np.abs(dec.idiosyncratic)) <= 1e-8


def test_factors_k_zero(rng):
    m = rng.standard_normal((10, 4))
    dec = estimate_factors(m, 0)
    np.testing.assert_array_equal(dec.idiosyncratic, m)
    with pytest.raises(ValueError):
        estimate_factors(m, 5)


def test_factor_invariants(rng):
    m = rng.standard_normal((50, 12)) + 3
    dec = estimate_factors(m, 3)
    n = m.shape[0]
    assert np.max(np.abs(dec.factors.T @ dec.factors / n - np.eye(3))) <= 1e-8
    assert np.max(np.abs(dec.factors.T @ dec.idiosyncratic)) <= 1e-8
    np.testing.assert_allclose(dec.factors @ dec.loadings.T, m - dec.idiosyncratic, atol=1e-10)
    f, idio = dec.apply(m)
    np.testing.assert_allclose(f, dec.factors, atol=1e-8)
    np.testing.assert_allclose(idio, dec.idiosyncratic, atol=1e-8)


def test_strong_factors_recovered(rng):
    f0 = rng.standard_normal((100, 3))
    lam = rng.standard_normal((40, 3))
    m = f0 @ lam.T + 0.01 * rng.standard_normal((100, 40))
    dec = estimate_factors(m, 3)
    resid = dec.idiosyncratic - dec.idiosyncratic.mean(axis=0)
    assert np.linalg.norm(resid) / np.linalg.norm(m - m.mean(axis=0)) <= 0.05


def _noise(seed):
    return np.random.default_rng(seed).standard_normal((200, 100))


def _spiked(seed):
    rng = np.random.default_rng(seed)
    f0 = rng.standard_normal((200, 3))
    lam = rng.standard_normal((100, 3))
    scale = 10 / np.sqrt(np.mean((f0 @ lam.T) ** 2))
    return f0 @ lam.T * scale + rng.standard_normal((200, 100))


def test_bai_ng_isotropic_noise():
    assert sum(select_num_factors(_noise(s)) == 0 for s in range(20)) >= 18


def test_bai_ng_spiked():
    assert sum(select_num_factors(_spiked(s)) == 3 for s in range(20)) >= 18


def test_bai_ng_kmax_zero(rng):
    assert select_num_factors(rng.standard_normal((20, 10)), 0) == 0
    assert bai_ng_ic(rng.standard_normal((20, 10)), 2).shape == (3,)


def test_factor_adjusted_without_factors_is_lasso(rng):
    m1, m2 = rng.standard_normal((120, 10)), rng.standard_normal((120, 10))
    y = m1[:, 0] + m2[:, 3] + 0.5 * rng.standard_normal(120)
    assert factor_adjusted_design([m1, m2]).k == 0
    path = fit_factor_adjusted([m1, m2], y, length=30)
    plain = solve_path(np.hstack([m1, m2]), None, y, length=30)
    assert np.max(np.abs(path.beta - plain.beta)) <= 1e-6


def test_integrative_single_modality_matches_global(rng):
    f = rng.standard_normal((80, 2))
    m = f @ rng.standard_normal((2, 15)) * 3 + rng.standard_normal((80, 15))
    y = m[:, 0] + 0.3 * rng.standard_normal(80)
    a = fit_factor_adjusted([m], y, length=20)
    b = fit_integrative_factor([m], y, length=20)
    assert np.max(np.abs(a.beta - b.beta)) <= 1e-10
    assert np.max(np.abs(a.gamma - b.gamma)) <= 1e-10


def test_integrative_zero_factor_block_passes_through(rng):
    m1 = rng.standard_normal((100, 10))
    f = rng.standard_normal((100, 1))
    m2 = f @ rng.standard_normal((1, 10)) * 4 + rng.standard_normal((100, 10))
    decs = integrative_factor_design([m1, m2])
    assert decs[0].k == 0 and decs[1].k >= 1
    np.testing.assert_array_equal(decs[0].idiosyncratic, m1)


def test_rank_one_link_yields_a_factor():
    cfg = builtin_scenario("s1", dims=(100, 100), snr2=10)
    data = simulate_scenario(cfg, 0)
    assert factor_adjusted_design(data.chain.modalities).k >= 1
