"""Penalised least squares along a lambda path with an unpenalised nuisance block.

Objective at each lambda::

    (1 / 2n) ||y - X beta - N gamma - b0||^2 + lambda * sum_j w_j |beta_j|

``gamma`` (nuisance) and the intercept ``b0`` are unpenalised. The nuisance
block is profiled out exactly, so coordinate descent only runs over ``beta``.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._cd import cd_solve
from .numerics import orthonormal_basis

KKT_TOL = 1e-6
POLISH_EVERY = 50


class ConvergenceError(RuntimeError):
    def __init__(self, index, kkt):
        super().__init__(f"no convergence at lambda index {index} (KKT residual {kkt:.3g})")
        self.index = index
        self.kkt = kkt


class DegenerateGridError(ValueError):
    pass


def soft_threshold(z, t):
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be nonnegative")
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


@dataclass(frozen=True)
class PenaltySpec:
    """``kind`` is ``"l1"`` or ``"adaptive"``; adaptive weights are built from a
    ridge pilot fit unless given explicitly."""

    kind: str = "l1"
    gamma_exponent: float = 1.0
    weights: tuple = None

    def __post_init__(self):
        if self.kind not in ("l1", "adaptive"):
            raise ValueError(f"unknown penalty {self.kind!r}")
        if self.gamma_exponent <= 0:
            raise ValueError("gamma_exponent must be positive")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValueError("penalty weights must be finite and positive")


@dataclass
class RegularizationPath:
    lambdas: np.ndarray
    beta: np.ndarray        # (L, p), standardised scale
    gamma: np.ndarray       # (L, m), nuisance units
    intercept: np.ndarray   # (L,)
    x_mean: np.ndarray
    x_scale: np.ndarray
    n_mean: np.ndarray
    weights: np.ndarray
    kkt: np.ndarray
    sweeps: np.ndarray

    def __len__(self):
        return self.lambdas.size

    @property
    def coef(self):
        """Penalised coefficients on the original column scale."""
        return self.beta / self.x_scale

    def nonzero(self):
        return self.beta != 0

    def predict(self, design, nuisance=None):
        design = np.atleast_2d(np.asarray(design, dtype=float))
        out = design @ self.coef.T + self.intercept
        if self.gamma.shape[1]:
            out += np.atleast_2d(np.asarray(nuisance, dtype=float)) @ self.gamma.T
        return out


class _Prepared:
    """Centred/scaled copies of the inputs plus the nuisance-profiled design."""

    def __init__(self, design, nuisance, y, standardize=True, fit_intercept=True):
        x = np.asarray(design, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        if x.ndim != 2:
            raise ValueError("design must be 2-d")
        n, p = x.shape
        if y.size != n:
            raise ValueError(f"y has {y.size} entries, design has {n} rows")
        if nuisance is None:
            nuisance = np.zeros((n, 0))
        nz = np.asarray(nuisance, dtype=float).reshape(n, -1)
        self.n = n
        if fit_intercept:
            self.x_mean = x.mean(axis=0)
            self.n_mean = nz.mean(axis=0)
            self.y_mean = y.mean()
        else:
            self.x_mean = np.zeros(p)
            self.n_mean = np.zeros(nz.shape[1])
            self.y_mean = 0.0
        xc = x - self.x_mean
        if standardize:
            sd = np.sqrt(np.mean(xc ** 2, axis=0))
            self.x_scale = np.where(sd > 1e-12 * max(sd.max(initial=0.0), 1.0), sd, 1.0)
            xc = np.where(sd > 0, xc / self.x_scale, 0.0)
        else:
            self.x_scale = np.ones(p)
        self.xs = xc
        self.nc = nz - self.n_mean
        self.yc = y - self.y_mean
        self.q = orthonormal_basis(self.nc)
        if self.q.shape[1]:
            self.xt = self.xs - self.q @ (self.q.T @ self.xs)
            self.yt = self.yc - self.q @ (self.q.T @ self.yc)
        else:
            self.xt, self.yt = self.xs, self.yc

    def gamma(self, beta):
        if self.nc.shape[1] == 0:
            return np.zeros(0)
        return np.linalg.lstsq(self.nc, self.yc - self.xs @ beta, rcond=None)[0]


def _quad_objective(gram, c, b, thresh):
    return 0.5 * b @ gram @ b - c @ b + thresh @ np.abs(b)


def _polish(gram, c, beta, thresh, max_steps=None):
    """Finish a coordinate-descent iterate by feature-sign search.

    Starting from the support and signs of ``beta``, alternately solve the
    smooth problem on the active set exactly, line-search back to the first
    sign change when the signs are inconsistent, and activate the worst KKT
    violator. Slow coordinate descent on ill-conditioned designs usually has
    nearly the right support long before its coefficients settle, so this
    terminates in a handful of steps. ``beta`` is updated in place only on
    success.
    """
    p = beta.size
    b = beta.copy()
    active = np.flatnonzero(b)
    if active.size == 0:
        return False
    theta = np.sign(b)
    budget = 10 * p + 10 if max_steps is None else max_steps
    while budget > 0:
        budget -= 1
        ga = gram[np.ix_(active, active)]
        ca, ta = c[active], thresh[active] * theta[active]
        if np.linalg.cond(ga) > 1e12:
            # columns not in general position: the solution is not unique
            return False
        try:
            sol = np.linalg.solve(ga, ca - ta)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(sol)):
            return False
        cur = b[active]
        if not np.all(np.sign(sol) == theta[active]):
            # walk towards sol, stopping at whichever sign change is cheapest;
            # on the active block the objective is smooth with fixed signs
            direction = sol - cur
            with np.errstate(divide="ignore", invalid="ignore"):
                ts = -cur / direction
            cand = np.flatnonzero((ts > 0) & (ts < 1) & (cur != 0))
            best, best_val = sol, 0.5 * sol @ ga @ sol - ca @ sol + thresh[active] @ np.abs(sol)
            for i in cand:
                trial = cur + ts[i] * direction
                trial[ts == ts[i]] = 0.0
                trial[i] = 0.0
                val = 0.5 * trial @ ga @ trial - ca @ trial + thresh[active] @ np.abs(trial)
                if val < best_val:
                    best, best_val = trial, val
            keep = (best != 0) & (np.sign(best) == theta[active])
            b[active] = np.where(keep, best, 0.0)
            active = active[keep]
            if active.size:
                continue
        else:
            b[active] = sol
        g = c - gram @ b
        inactive = np.ones(p, dtype=bool)
        inactive[active] = False
        viol = np.where(inactive, np.abs(g) - thresh * (1 + 1e-9), -np.inf)
        j = int(np.argmax(viol))
        if viol[j] <= 0:
            beta[:] = b
            return True
        theta[j] = np.sign(g[j])
        active = np.sort(np.append(active, j))
    return False


def _unique_support(gram, beta):
    """False when the active columns are linearly dependent (flat solution set)."""
    active = np.flatnonzero(beta)
    return active.size == 0 or np.linalg.cond(gram[np.ix_(active, active)]) <= 1e12


def _lambda_max(prep, weights):
    corr = np.abs(prep.xt.T @ prep.yt) / prep.n
    # nudge up so lambda_max * w_j cannot round below |corr_j|
    return float(np.max(corr / weights)) * (1 + 1e-12) if corr.size else 0.0


def _grid(lmax, length, ratio):
    return np.geomspace(lmax, ratio * lmax, length)


def lambda_grid(design, nuisance, y, length=100, weights=None, ratio=1e-3,
                standardize=True, fit_intercept=True):
    """Log-spaced grid from lambda_max down to ``ratio * lambda_max``.

    lambda_max is the smallest lambda at which every penalised coefficient is
    zero, after regressing ``y`` on the intercept and nuisance columns.
    """
    prep = _Prepared(design, nuisance, y, standardize, fit_intercept)
    return _grid_from_prepared(prep, length, weights, ratio)


def _grid_from_prepared(prep, length, weights, ratio):
    if length < 2:
        raise ValueError("grid length must be >= 2")
    p = prep.xt.shape[1]
    if p == 0 or not np.any(np.abs(prep.xt) > 1e-12):
        raise DegenerateGridError("design has no usable penalised column")
    w = np.ones(p) if weights is None else np.asarray(weights, dtype=float)
    lmax = _lambda_max(prep, w)
    floor = 1e-12 * max(1.0, float(np.sqrt(np.mean(prep.yc ** 2))))
    if lmax <= floor:
        warnings.warn("response is orthogonal to every penalised column; "
                      "the whole path is zero", RuntimeWarning, stacklevel=3)
        lmax = floor
    return _grid(lmax, length, ratio)


def adaptive_weights(design, nuisance, y, gamma_exponent=1.0, standardize=True,
                     fit_intercept=True, ridge=1e-3, floor=1e-6):
    """Adaptive-lasso weights ``1 / (|b|+floor)^gamma`` from a ridge pilot fit.

    The pilot is a ridge regression with penalty ``ridge * n`` on the
    penalised columns (nuisance and intercept left free).
    """
    if gamma_exponent <= 0:
        raise ValueError("gamma_exponent must be positive")
    prep = _Prepared(design, nuisance, y, standardize, fit_intercept)
    return _adaptive_from_prepared(prep, gamma_exponent, ridge, floor)


def _adaptive_from_prepared(prep, gamma_exponent, ridge=1e-3, floor=1e-6):
    x, yv = prep.xt, prep.yt
    n, p = x.shape
    lam = ridge * n
    if p <= n:
        pilot = np.linalg.solve(x.T @ x + lam * np.eye(p), x.T @ yv)
    else:
        pilot = x.T @ np.linalg.solve(x @ x.T + lam * np.eye(n), yv)
    return ridge_to_weights(pilot, gamma_exponent, floor)


def ridge_to_weights(pilot, gamma_exponent=1.0, floor=1e-6):
    return 1.0 / (np.abs(pilot) + floor) ** gamma_exponent


def penalized_objective(design, nuisance, y, beta, gamma, lam, weights=None):
    x = np.asarray(design, dtype=float)
    n = x.shape[0]
    r = np.asarray(y, dtype=float) - x @ beta
    if nuisance is not None and np.size(gamma):
        r = r - np.asarray(nuisance) @ gamma
    w = np.ones(x.shape[1]) if weights is None else np.asarray(weights)
    return float(r @ r / (2 * n) + lam * np.sum(w * np.abs(beta)))


def kkt_residual(design, nuisance, y, beta, gamma, lam, weights=None):
    """Largest violation of the optimality conditions at ``(beta, gamma)``.

    Inputs are used as given (no centring); pass the same design the solver
    optimised over.
    """
    x = np.asarray(design, dtype=float)
    n = x.shape[0]
    beta = np.asarray(beta, dtype=float)
    r = np.asarray(y, dtype=float) - x @ beta
    has_nuis = nuisance is not None and np.size(nuisance) and np.size(gamma)
    if has_nuis:
        r = r - np.asarray(nuisance, dtype=float) @ np.asarray(gamma, dtype=float)
    g = -(x.T @ r) / n
    w = np.ones(beta.size) if weights is None else np.asarray(weights, dtype=float)
    tw = lam * w
    zero = beta == 0
    viol = np.where(zero, np.maximum(0.0, np.abs(g) - tw), np.abs(g + tw * np.sign(beta)))
    out = float(viol.max()) if viol.size else 0.0
    if has_nuis:
        out = max(out, float(np.max(np.abs(np.asarray(nuisance).T @ r)) / n))
    return out


def solve_path(design, nuisance, y, penalty=None, lambdas=None, length=100,
               standardize=True, fit_intercept=True, tol=1e-7, kkt_tol=KKT_TOL,
               max_sweeps=100_000):
    """Warm-started coordinate descent over a decreasing lambda grid.

    Parameters
    ----------
    design : (n, p) array
        Penalised columns.
    nuisance : (n, m) array or None
        Unpenalised columns.
    y : (n,) array
    penalty : PenaltySpec, optional
        Defaults to plain L1.
    lambdas : array, optional
        Decreasing grid; computed with :func:`lambda_grid` when omitted.
    standardize, fit_intercept : bool
        Centre (and scale to unit 1/n variance) the columns and centre ``y``.

    Returns
    -------
    RegularizationPath
        Every point carries a KKT certificate no larger than ``kkt_tol``;
        otherwise :class:`ConvergenceError` is raised.
    """
    penalty = penalty or PenaltySpec()
    prep = _Prepared(design, nuisance, y, standardize, fit_intercept)
    p = prep.xs.shape[1]
    if penalty.weights is not None:
        weights = np.asarray(penalty.weights, dtype=float)
        if weights.size != p:
            raise ValueError(f"{weights.size} weights for {p} columns")
    elif penalty.kind == "adaptive":
        weights = _adaptive_from_prepared(prep, penalty.gamma_exponent)
    else:
        weights = np.ones(p)

    if lambdas is None:
        lambdas = _grid_from_prepared(prep, length, weights, 1e-3)
    lambdas = np.asarray(lambdas, dtype=float).ravel()
    if np.any(lambdas <= 0) or np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambdas must be positive and strictly decreasing")

    n = prep.n
    gram = prep.xt.T @ prep.xt / n
    c = prep.xt.T @ prep.yt / n
    beta = np.zeros(p)
    grad = c.copy()
    L = lambdas.size
    betas = np.zeros((L, p))
    gammas = np.zeros((L, prep.nc.shape[1]))
    kkts = np.zeros(L)
    sweeps = np.zeros(L, dtype=int)
    for i, lam in enumerate(lambdas):
        thresh = lam * weights
        step_tol = tol
        used = 0
        next_polish = POLISH_EVERY
        while True:
            budget = min(next_polish - used if next_polish > used else POLISH_EVERY,
                         max_sweeps - used)
            s = cd_solve(gram, grad, beta, thresh, step_tol, budget)
            used += s if s > 0 else budget
            if s < 0 and used >= next_polish:
                if _polish(gram, c, beta, thresh):
                    grad = c - gram @ beta
                    s = 0
                else:
                    next_polish = used + 2 * (next_polish - used + POLISH_EVERY)
            gamma = prep.gamma(beta)
            kkt = kkt_residual(prep.xs, prep.nc, prep.yc, beta, gamma, lam, weights)
            if kkt <= kkt_tol and (s >= 0 or not _unique_support(gram, beta)):
                # a stalled sweep on a non-unique solution set is still certified
                break
            if s >= 0:
                step_tol *= 1e-2
                # refresh the tracked gradient to shed accumulated rounding
                grad = c - gram @ beta
            if used >= max_sweeps or step_tol < 1e-15:
                raise ConvergenceError(i, kkt)
        betas[i] = beta
        gammas[i] = gamma
        kkts[i] = kkt
        sweeps[i] = used

    coef = betas / prep.x_scale
    intercept = prep.y_mean - coef @ prep.x_mean - gammas @ prep.n_mean
    return RegularizationPath(lambdas, betas, gammas, intercept, prep.x_mean,
                              prep.x_scale, prep.n_mean, weights, kkts, sweeps)
