"""Competitor methods: cooperative regularised regression and factor-based models."""

from dataclasses import dataclass

import numpy as np

from .penalized import solve_path

COOPERATIVE_RHOS = (0.0, 0.25, 0.5, 1.0)


@dataclass
class FactorDecomposition:
    factors: np.ndarray        # n x K, factors'factors / n = I
    loadings: np.ndarray       # p x K
    idiosyncratic: np.ndarray  # n x p
    k: int
    mean: np.ndarray = None
    # maps centred rows to factor scores: f = (m - mean) @ score_map
    score_map: np.ndarray = None

    def apply(self, m):
        m = np.atleast_2d(np.asarray(m, dtype=float))
        f = (m - self.mean) @ self.score_map
        return f, m - f @ self.loadings.T


def cooperative_design(modalities, y, rho):
    """Row-augmented design whose lasso solves the agreement-penalised problem.

    For two views the bottom block is ``(-sqrt(rho) M1, sqrt(rho) M2)``; with
    more views one such block is stacked per pair ``i < j``.
    """
    if rho < 0 or not np.isfinite(rho):
        raise ValueError("rho must be finite and nonnegative")
    mods = [np.asarray(m, dtype=float) for m in modalities]
    n = mods[0].shape[0]
    if any(m.shape[0] != n for m in mods):
        raise ValueError("modalities must share the row count")
    top = np.hstack(mods)
    offsets = np.concatenate([[0], np.cumsum([m.shape[1] for m in mods])]).astype(int)
    root = np.sqrt(rho)
    rows = [top]
    for i in range(len(mods)):
        for j in range(i + 1, len(mods)):
            block = np.zeros_like(top)
            block[:, offsets[i]:offsets[i + 1]] = -root * mods[i]
            block[:, offsets[j]:offsets[j + 1]] = root * mods[j]
            rows.append(block)
    y = np.asarray(y, dtype=float).ravel()
    aug_y = np.concatenate([y, np.zeros(n * (len(rows) - 1))])
    return np.vstack(rows), aug_y


def fit_cooperative(modalities, y, rho, penalty=None, lambdas=None, length=100):
    """Cooperative lasso path with a shared lambda across views.

    Columns are standardised and ``y`` centred on the original rows before
    augmentation; the augmented problem is rescaled so that its loss carries
    the same ``1/(2n)`` factor as a plain lasso on ``n`` rows. At ``rho = 0``
    the path therefore coincides with the plain lasso on the stacked views.
    """
    mods = [np.asarray(m, dtype=float) for m in modalities]
    x = np.hstack(mods)
    y = np.asarray(y, dtype=float).ravel()
    x_mean = x.mean(axis=0)
    sd = np.sqrt(np.mean((x - x_mean) ** 2, axis=0))
    scale = np.where(sd > 0, sd, 1.0)
    xs = (x - x_mean) / scale
    y_mean = y.mean()
    offsets = np.concatenate([[0], np.cumsum([m.shape[1] for m in mods])]).astype(int)
    std_mods = [xs[:, offsets[i]:offsets[i + 1]] for i in range(len(mods))]
    aug_x, aug_y = cooperative_design(std_mods, y - y_mean, rho)
    factor = np.sqrt(aug_x.shape[0] / x.shape[0])
    path = solve_path(aug_x * factor, None, aug_y * factor, penalty=penalty, lambdas=lambdas,
                      length=length, standardize=False, fit_intercept=False)
    # report on the same footing as solve_path on the raw stacked design
    path.x_mean = x_mean
    path.x_scale = scale
    path.intercept = y_mean - path.coef @ x_mean
    return path


def estimate_factors(m, k):
    """Principal-components factor estimate on the column-centred matrix."""
    m = np.asarray(m, dtype=float)
    n, p = m.shape
    if not 0 <= k <= min(n, p):
        raise ValueError(f"k={k} outside [0, {min(n, p)}]")
    mean = m.mean(axis=0)
    if k == 0:
        return FactorDecomposition(np.zeros((n, 0)), np.zeros((p, 0)), m.copy(), 0,
                                   mean, np.zeros((p, 0)))
    mc = m - mean
    u, s, vt = np.linalg.svd(mc, full_matrices=False)
    factors = np.sqrt(n) * u[:, :k]
    loadings = m.T @ factors / n
    score_map = vt[:k].T / s[:k] * np.sqrt(n)
    return FactorDecomposition(factors, loadings, m - factors @ loadings.T, k, mean, score_map)


def bai_ng_ic(m, k_max):
    """IC_p1 values for k = 0..k_max on the column-centred matrix."""
    m = np.asarray(m, dtype=float)
    n, p = m.shape
    mc = m - m.mean(axis=0)
    s2 = np.linalg.svd(mc, compute_uv=False) ** 2
    total = float(np.sum(s2))
    penalty = (n + p) / (n * p) * np.log(n * p / (n + p))
    out = []
    for k in range(k_max + 1):
        v = max((total - float(np.sum(s2[:k]))) / (n * p), 1e-300)
        out.append(np.log(v) + k * penalty)
    return np.array(out)


def default_k_max(n, p):
    return int(min(8, min(n, p) // 2))


def select_num_factors(m, k_max=None):
    """Number of factors minimising IC_p1 (ties to the smaller count)."""
    n, p = np.shape(m)
    if k_max is None:
        k_max = default_k_max(n, p)
    if not 0 <= k_max <= min(n, p) - 1:
        raise ValueError(f"k_max={k_max} outside [0, {min(n, p) - 1}]")
    return int(np.argmin(bai_ng_ic(m, k_max)))


def factor_adjusted_design(modalities, k=None):
    """Global factor decomposition of the stacked modalities."""
    m = np.hstack([np.asarray(x, dtype=float) for x in modalities])
    if k is None:
        k = select_num_factors(m)
    return estimate_factors(m, k)


def integrative_factor_design(modalities, ks=None):
    """One factor decomposition per modality."""
    mods = [np.asarray(x, dtype=float) for x in modalities]
    if ks is None:
        ks = [select_num_factors(m) for m in mods]
    return [estimate_factors(m, k) for m, k in zip(mods, ks)]


def fit_factor_adjusted(modalities, y, penalty=None, lambdas=None, k=None, length=100):
    """Factor-adjusted regression: idiosyncratic parts of the stacked design are
    penalised, the global factors enter unpenalised."""
    dec = factor_adjusted_design(modalities, k)
    return solve_path(dec.idiosyncratic, dec.factors, y, penalty=penalty, lambdas=lambdas,
                      length=length)


def fit_integrative_factor(modalities, y, penalty=None, lambdas=None, ks=None, length=100):
    """Integrative factor regression: per-modality idiosyncratic parts are
    penalised, the concatenated per-modality factors enter unpenalised."""
    decs = integrative_factor_design(modalities, ks)
    design = np.hstack([d.idiosyncratic for d in decs])
    factors = np.hstack([d.factors for d in decs])
    return solve_path(design, factors, y, penalty=penalty, lambdas=lambdas, length=length)
