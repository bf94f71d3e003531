"""Chain residualisation and orthogonal projection of ordered modalities.

Modalities are ordered upstream first. Each downstream block is regressed on
everything above it by reduced-rank regression; the fitted link signal of
every block is summarised by its leading left singular vectors (the nuisance
directions), and every block is projected onto the orthogonal complement of
the nuisance span before penalised regression.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import numerical_rank, orthonormal_basis
from .rrr import select_rank

DEGENERATE_LINK_TOL = 1e-6


@dataclass
class ModalityChain:
    modalities: list
    names: list = None

    def __post_init__(self):
        self.modalities = [np.asarray(m, dtype=float) for m in self.modalities]
        if not self.modalities:
            raise ValueError("a chain needs at least one modality")
        n = self.modalities[0].shape[0]
        for j, m in enumerate(self.modalities):
            if m.ndim != 2:
                raise ValueError(f"modality {j} is not a matrix")
            if m.shape[0] != n:
                raise ValueError(f"modality {j} has {m.shape[0]} rows, expected {n}")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"modality {j} has non-finite entries")
        if self.names is None:
            self.names = [f"M{j + 1}" for j in range(len(self.modalities))]
        if len(self.names) != len(self.modalities):
            raise ValueError("one name per modality required")

    @property
    def k(self):
        return len(self.modalities)

    @property
    def n(self):
        return self.modalities[0].shape[0]

    @property
    def dims(self):
        return [m.shape[1] for m in self.modalities]

    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.dims)]).astype(int)


@dataclass
class NuisanceBlock:
    u_blocks: list
    concatenated: np.ndarray


@dataclass
class TransformedDesign:
    blocks: list
    nuisance: NuisanceBlock
    link_fits: list
    # orthonormal basis of the nuisance span used for every projection
    basis: np.ndarray = None
    # per-block linear maps so that new samples can be transformed (see apply)
    _maps: dict = field(default=None, repr=False)
    diagnostics: list = field(default_factory=list)

    @property
    def design(self):
        return np.hstack(self.blocks)

    def apply(self, modalities):
        """Transform new rows with the maps learnt on the training chain.

        Returns ``(blocks, nuisance)`` for the new samples. On the training
        rows this reproduces ``self.blocks`` and ``self.nuisance.concatenated``.
        """
        maps = self._maps
        mods = [np.atleast_2d(np.asarray(m, dtype=float)) for m in modalities]
        k = len(mods)
        if k != len(self.blocks):
            raise ValueError(f"expected {len(self.blocks)} modalities, got {k}")
        bases = [mods[0]]
        for j in range(1, k):
            upstream = np.hstack(mods[:j])
            bases.append(mods[j] - upstream @ self.link_fits[j - 1].b_hat)
        u_parts = [bases[j] @ maps["u"][j] for j in range(len(maps["u"]))]
        nuis = np.hstack(u_parts) if u_parts else np.zeros((mods[0].shape[0], 0))
        q = nuis @ maps["q"] if maps["q"].shape[1] else np.zeros((mods[0].shape[0], 0))
        blocks = [bases[j] - q @ maps["k"][j] for j in range(k)]
        return blocks, nuis


def project_out(u, m):
    """Remove the span of the orthonormal columns of ``u`` from ``m``."""
    u = np.asarray(u, dtype=float)
    m = np.asarray(m, dtype=float)
    if u.size == 0 or (u.ndim == 2 and u.shape[1] == 0):
        return m.copy()
    if u.shape[0] != m.shape[0]:
        raise ValueError(f"row mismatch: {u.shape[0]} vs {m.shape[0]}")
    return m - u @ (u.T @ m)


def chain_residualize(chain, grids=None):
    """Regress each downstream modality on all upstream ones (reduced-rank, GIC rank).

    ``grids`` holds one rank grid per link (modality 2..k); ``None`` entries
    use the full default grid.
    """
    if grids is None:
        grids = [None] * (chain.k - 1)
    if len(grids) != chain.k - 1:
        raise ValueError(f"need {chain.k - 1} rank grids, got {len(grids)}")
    fits = []
    for j in range(1, chain.k):
        upstream = np.hstack(chain.modalities[:j])
        fits.append(select_rank(upstream, chain.modalities[j], grids[j - 1]))
    return fits


def _basis_coefficients(chain, fits):
    """Re-express each link in the residual basis (M1, E2, ..., E_{j-1}).

    Returns ``coef[j][i]`` (0-based) such that the fitted part of modality j
    equals ``sum_i basis_i @ coef[j][i]``. Uses ``M_m = basis_m + sum_i
    basis_i @ coef[m][i]`` recursively.
    """
    offsets = chain.offsets()
    coef = {}
    for j in range(1, chain.k):
        b = fits[j - 1].b_hat
        raw = [b[offsets[i]:offsets[i + 1]] for i in range(j)]
        coef[j] = {}
        for i in range(j):
            c = raw[i].copy()
            for m in range(i + 1, j):
                c += coef[m][i] @ raw[m]
            coef[j][i] = c
    return coef


def build_transform(chain, fits):
    """Build the de-correlated design from a chain and its link fits."""
    k = chain.k
    if len(fits) != k - 1:
        raise ValueError(f"expected {k - 1} link fits, got {len(fits)}")
    offsets = chain.offsets()
    for j, fit in enumerate(fits, start=1):
        if fit.b_hat.shape != (offsets[j], chain.dims[j]):
            raise ValueError(f"link fit {j} has shape {fit.b_hat.shape}, "
                             f"expected {(offsets[j], chain.dims[j])}")

    n = chain.n
    bases = [chain.modalities[0]] + [f.residuals for f in fits]
    diagnostics = []
    for j, fit in enumerate(fits, start=1):
        norm_m = np.linalg.norm(chain.modalities[j])
        if norm_m > 0 and np.linalg.norm(fit.residuals) <= DEGENERATE_LINK_TOL * norm_m:
            diagnostics.append(
                f"{chain.names[j]}: residual is negligible relative to the modality; "
                "its coefficients are close to unidentifiable")

    coef = _basis_coefficients(chain, fits)
    u_blocks, u_maps = [], []
    for j in range(k - 1):
        downstream = [coef[m][j] for m in range(j + 1, k)]
        d = np.hstack(downstream)
        cap = sum(fits[m - 1].rank for m in range(j + 1, k))
        signal = bases[j] @ d
        if cap == 0 or not np.any(signal):
            u_blocks.append(np.zeros((n, 0)))
            u_maps.append(np.zeros((chain.dims[j], 0)))
            continue
        _, s, vt = np.linalg.svd(signal, full_matrices=False)
        r = min(numerical_rank(s), cap)
        # U = basis @ D @ V_r / s_r keeps U a linear map of the block's rows
        a = d @ vt[:r].T / s[:r]
        u_blocks.append(bases[j] @ a)
        u_maps.append(a)

    nuis = np.hstack(u_blocks) if u_blocks else np.zeros((n, 0))
    if nuis.shape[1]:
        u, s, vt = np.linalg.svd(nuis, full_matrices=False)
        r = numerical_rank(s)
        qmap = vt[:r].T / s[:r]
        q = nuis @ qmap
    else:
        qmap = np.zeros((0, 0))
        q = np.zeros((n, 0))
    kmaps = [q.T @ b for b in bases]
    blocks = [b - q @ km for b, km in zip(bases, kmaps)]
    return TransformedDesign(
        blocks=blocks,
        nuisance=NuisanceBlock(u_blocks, nuis),
        link_fits=list(fits),
        basis=q,
        _maps={"u": u_maps, "q": qmap, "k": kmaps},
        diagnostics=diagnostics,
    )


def orthogonality_gap(a, b):
    """Largest |cosine| between any column of ``a`` and any column of ``b``.

    Zero-norm columns are skipped. Returns 0 when either side is empty.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        return 0.0
    na = np.linalg.norm(a, axis=0)
    nb = np.linalg.norm(b, axis=0)
    scale = max(na.max(), nb.max(), 1.0)
    ka = na > 1e-12 * scale
    kb = nb > 1e-12 * scale
    if not ka.any() or not kb.any():
        return 0.0
    cos = (a[:, ka] / na[ka]).T @ (b[:, kb] / nb[kb])
    return float(np.max(np.abs(cos)))
