import numpy as np
import pytest

from mvopr.projection import (ModalityChain, build_transform, chain_residualize,
                              orthogonality_gap, project_out)
from mvopr.rrr import RrrFit
from mvopr.simulation import builtin_scenario, simulate_scenario


def test_project_out_coordinate():
    u = np.zeros((4, 1))
    u[0] = 1
    x = np.array([[3.0], [1.0], [-2.0], [5.0]])
    np.testing.assert_array_equal(project_out(u, x), [[0.0], [1.0], [-2.0], [5.0]])


def test_project_out_empty(rng):
    m = rng.standard_normal((5, 3))
    np.testing.assert_array_equal(project_out(np.zeros((5, 0)), m), m)


def test_project_out_idempotent(rng):
    u = np.linalg.qr(rng.standard_normal((30, 4)))[0]
    m = rng.standard_normal((30, 6))
    once = project_out(u, m)
    assert np.max(np.abs(project_out(u, once) - once)) <= 1e-12
    assert np.max(np.abs(u.T @ once)) <= 1e-10


def test_project_out_row_mismatch(rng):
    with pytest.raises(ValueError):
        project_out(np.eye(3)[:, :1], rng.standard_normal((4, 2)))


def test_chain_needs_matching_rows(rng):
    with pytest.raises(ValueError):
        ModalityChain([rng.standard_normal((5, 2)), rng.standard_normal((4, 2))])


def test_noiseless_link(rng):
    m1 = rng.standard_normal((50, 8))
    m2 = m1 @ np.outer(rng.standard_normal(8), rng.standard_normal(6))
    fits = chain_residualize(ModalityChain([m1, m2]), [range(0, 4)])
    assert fits[0].rank == 1
    assert np.max(np.abs(fits[0].residuals)) <= 1e-8
    td = build_transform(ModalityChain([m1, m2]), fits)
    assert td.diagnostics


def test_independent_link_selects_rank_zero(rng):
    m1 = rng.standard_normal((200, 20))
    m2 = rng.standard_normal((200, 20))
    fits = chain_residualize(ModalityChain([m1, m2]), [range(0, 5)])
    assert fits[0].rank == 0
    np.testing.assert_array_equal(fits[0].residuals, m2)


def test_three_modality_recovery():
    rng = np.random.default_rng(4)
    n, p = 300, 15
    m1 = rng.standard_normal((n, p))
    b21 = rng.standard_normal((p, 2)) @ rng.standard_normal((2, p))
    b31 = np.outer(rng.standard_normal(p), rng.standard_normal(p))
    b32 = np.outer(rng.standard_normal(p), rng.standard_normal(p))
    m2 = m1 @ b21 + 1e-3 * rng.standard_normal((n, p))
    m3 = m1 @ b31 + m2 @ b32 + 1e-3 * rng.standard_normal((n, p))
    fits = chain_residualize(ModalityChain([m1, m2, m3]))
    assert np.linalg.norm(fits[0].b_hat - b21) <= 0.1 * np.linalg.norm(b21)
    # (M1, M2) -> M3 is only identified through its fitted values, so compare those
    fitted = np.hstack([m1, m2]) @ fits[1].b_hat
    truth = m1 @ b31 + m2 @ b32
    assert np.linalg.norm(fitted - truth) <= 0.1 * np.linalg.norm(truth)


def test_null_link_reduces_to_plain_design(rng):
    m1, m2 = rng.standard_normal((20, 4)), rng.standard_normal((20, 3))
    chain = ModalityChain([m1, m2])
    fit = RrrFit(np.zeros((4, 3)), 0, m2.copy())
    td = build_transform(chain, [fit])
    assert td.nuisance.concatenated.shape == (20, 0)
    np.testing.assert_array_equal(td.blocks[0], m1)
    np.testing.assert_array_equal(td.blocks[1], m2)


def test_rank_one_link_orthogonality(rng):
    m1 = rng.standard_normal((100, 10))
    m2 = m1 @ np.outer(rng.standard_normal(10), rng.standard_normal(8)) + 0.3 * rng.standard_normal((100, 8))
    chain = ModalityChain([m1, m2])
    td = build_transform(chain, chain_residualize(chain, [[0, 1, 2]]))
    assert td.nuisance.concatenated.shape[1] == td.link_fits[0].rank == 1
    assert orthogonality_gap(td.blocks[0], td.nuisance.concatenated) <= 1e-8
    assert orthogonality_gap(td.blocks[1], td.nuisance.concatenated) <= 1e-8
    assert [b.shape for b in td.blocks] == [m1.shape, m2.shape]


def _s6(rep, **kw):
    cfg = builtin_scenario("s6_chain", **kw)
    data = simulate_scenario(cfg, rep)
    fits = chain_residualize(data.chain)
    return data, build_transform(data.chain, fits)


def test_three_modality_nuisance_orthogonality():
    data, td = _s6(0, n=120, dims=(30, 30, 30))
    u = td.nuisance.concatenated
    for b in td.blocks:
        assert orthogonality_gap(b, u) <= 1e-8
    for j, uj in enumerate(td.nuisance.u_blocks):
        assert np.max(np.abs(uj.T @ uj - np.eye(uj.shape[1]))) <= 1e-10
    # every block is invariant to re-projection
    for b in td.blocks:
        assert np.max(np.abs(project_out(td.basis, b) - b)) <= 1e-12 * max(1, np.abs(b).max())


def test_apply_reproduces_training_rows():
    data, td = _s6(1, n=80, dims=(20, 25, 15))
    blocks, nuis = td.apply(data.chain.modalities)
    for a, b in zip(blocks, td.blocks):
        np.testing.assert_allclose(a, b, atol=1e-8)
    np.testing.assert_allclose(nuis, td.nuisance.concatenated, atol=1e-8)


def test_build_transform_rejects_mismatched_fits(rng):
    chain = ModalityChain([rng.standard_normal((10, 3)), rng.standard_normal((10, 2))])
    with pytest.raises(ValueError):
        build_transform(chain, [])
    with pytest.raises(ValueError):
        build_transform(chain, [RrrFit(np.zeros((2, 2)), 0, np.zeros((10, 2)))])
