"""Multivariate reduced-rank regression with GIC rank selection."""

from dataclasses import dataclass, field

import numpy as np

from .numerics import RANK_TOL

GIC_FLOOR = 1e-12


@dataclass
class RrrFit:
    b_hat: np.ndarray
    rank: int
    residuals: np.ndarray
    gic_scores: list = field(default_factory=list)


class _RrrProblem:
    """Shared OLS fit and SVD of the fitted values, reused across candidate ranks."""

    def __init__(self, m1, m2):
        m1 = np.asarray(m1, dtype=float)
        m2 = np.asarray(m2, dtype=float)
        if m1.ndim != 2 or m2.ndim != 2:
            raise ValueError("m1 and m2 must be 2-d")
        if m1.shape[0] != m2.shape[0]:
            raise ValueError(f"row mismatch: {m1.shape[0]} vs {m2.shape[0]}")
        self.m1, self.m2 = m1, m2
        self.n, self.p = m1.shape
        self.q = m2.shape[1]
        # minimum-norm least squares; handles p > n
        self.b_ols = np.linalg.lstsq(m1, m2, rcond=RANK_TOL)[0]
        fitted = m1 @ self.b_ols
        _, self.s, vt = np.linalg.svd(fitted, full_matrices=False)
        self.v = vt.T
        self.ols_rss = float(np.sum((m2 - fitted) ** 2))

    def fit(self, rank):
        if not 0 <= rank <= min(self.p, self.q):
            raise ValueError(f"rank {rank} outside [0, {min(self.p, self.q)}]")
        if rank == 0:
            return RrrFit(np.zeros((self.p, self.q)), 0, self.m2.copy())
        vr = self.v[:, :rank]
        b_hat = self.b_ols @ vr @ vr.T
        return RrrFit(b_hat, rank, self.m2 - self.m1 @ b_hat)

    def rss(self, rank):
        # residual energy of a rank-r fit, without forming it
        return self.ols_rss + float(np.sum(self.s[rank:] ** 2))


def fit_rrr(m1, m2, rank):
    """Reduced-rank regression of ``m2`` on ``m1`` at a fixed rank.

    The estimate is ``B_ols V_r V_r^T`` where ``B_ols`` is the minimum-norm
    least-squares coefficient and ``V_r`` holds the leading right singular
    vectors of the fitted values ``m1 @ B_ols``.
    """
    return _RrrProblem(m1, m2).fit(rank)


def gic_value(rss, n, p, q, rank):
    mse = max(rss / (n * q), GIC_FLOOR)
    df = rank * (p + q - rank)
    return float(np.log(mse) + df * np.log(np.log(max(n, 3))) * np.log(p * q) / (n * q))


def gic_score(m1, m2, fit):
    n, p = np.shape(m1)
    q = np.shape(m2)[1]
    return gic_value(float(np.sum(fit.residuals ** 2)), n, p, q, fit.rank)


def default_rank_grid(n, p, q, max_rank=None):
    """Ranks ``0..min(p, q, n-1)``, optionally capped by ``max_rank``.

    When ``p >= n - 1`` the least-squares fit reproduces ``m2`` exactly, so
    the residual of a near-full-rank fit is only the tail of ``m2``'s own
    spectrum and the log-RSS term runs off to the floor. The search is then
    limited to the lower half of the range.
    """
    top = min(p, q, n - 1)
    if p >= n - 1:
        top //= 2
    if max_rank is not None:
        top = min(top, max_rank)
    return list(range(0, max(top, 0) + 1))


def validate_grid(grid, n, p, q):
    grid = [int(r) for r in grid]
    if not grid:
        raise ValueError("rank grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("rank grid must be strictly increasing")
    if grid[0] < 0 or grid[-1] > min(p, q, max(n - 1, 0)):
        raise ValueError(f"rank grid {grid} exceeds min(p, q, n-1) = {min(p, q, n - 1)}")
    return grid


def select_rank(m1, m2, grid=None):
    """Fit every candidate rank and keep the GIC minimiser (ties go to the smaller rank)."""
    prob = _RrrProblem(m1, m2)
    if grid is None:
        grid = default_rank_grid(prob.n, prob.p, prob.q)
    grid = validate_grid(grid, prob.n, prob.p, prob.q)
    scores = [(r, gic_value(prob.rss(r), prob.n, prob.p, prob.q, r)) for r in grid]
    best = min(scores, key=lambda rs: (rs[1], rs[0]))[0]
    fit = prob.fit(best)
    fit.gic_scores = scores
    return fit
