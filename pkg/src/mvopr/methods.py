"""Uniform fit/predict wrappers around MVOPR and its competitors.

Every method maps ``(modalities, y)`` to a :class:`FittedModel` whose path
columns follow the stacked feature order (modality 1 first).
"""

from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .penalized import PenaltySpec, solve_path
from .projection import ModalityChain, build_transform, chain_residualize
from .rrr import default_rank_grid

METHOD_NAMES = ("mvopr", "mvopr_adaptive", "lasso", "adaptive_lasso", "cooperative",
                "factor", "integfactor")


@dataclass
class FittedModel:
    method: str
    path: object
    dims: list
    _features: object = field(repr=False, default=None)
    info: dict = field(default_factory=dict)

    def features(self, modalities):
        """Penalised design and nuisance block for (possibly new) samples."""
        return self._features(modalities)

    def predict(self, modalities):
        design, nuisance = self.features(modalities)
        return self.path.predict(design, nuisance)

    def selected(self, index):
        return set(np.flatnonzero(self.path.beta[index]).tolist())


def _stack(modalities):
    return np.hstack([np.atleast_2d(np.asarray(m, dtype=float)) for m in modalities])


class Method:
    """A named fitting procedure. Subclasses implement :meth:`fit`."""

    name = "method"

    def __init__(self, penalty=None, length=100):
        self.penalty = penalty or PenaltySpec()
        self.length = length

    def fit(self, modalities, y, lambdas=None):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r}, penalty={self.penalty.kind!r})"


class Lasso(Method):
    name = "lasso"

    def fit(self, modalities, y, lambdas=None):
        x = _stack(modalities)
        path = solve_path(x, None, y, penalty=self.penalty, lambdas=lambdas, length=self.length)
        return FittedModel(self.name, path, [np.shape(m)[1] for m in modalities],
                           lambda mods: (_stack(mods), None))


class Mvopr(Method):
    """Chain residualisation, nuisance projection, then a penalised path."""

    name = "mvopr"

    def __init__(self, penalty=None, length=100, max_rank=None, rank_grids=None):
        super().__init__(penalty, length)
        self.max_rank = max_rank
        self.rank_grids = rank_grids

    def transform(self, modalities):
        mods = [np.asarray(m, dtype=float) for m in modalities]
        means = [m.mean(axis=0) for m in mods]
        chain = ModalityChain([m - mu for m, mu in zip(mods, means)])
        grids = self.rank_grids
        if grids is None:
            offsets = chain.offsets()
            grids = [default_rank_grid(chain.n, offsets[j], chain.dims[j], self.max_rank)
                     for j in range(1, chain.k)]
        fits = chain_residualize(chain, grids)
        return build_transform(chain, fits), means

    def fit(self, modalities, y, lambdas=None):
        td, means = self.transform(modalities)
        path = solve_path(td.design, td.nuisance.concatenated, y, penalty=self.penalty,
                          lambdas=lambdas, length=self.length)

        def features(mods):
            blocks, nuis = td.apply([np.atleast_2d(np.asarray(m, dtype=float)) - mu
                                     for m, mu in zip(mods, means)])
            return np.hstack(blocks), nuis

        info = {"link_ranks": [f.rank for f in td.link_fits],
                "nuisance_columns": td.nuisance.concatenated.shape[1],
                "diagnostics": list(td.diagnostics)}
        model = FittedModel(self.name, path, [b.shape[1] for b in td.blocks], features, info)
        model.transform = td
        return model


class Cooperative(Method):
    name = "cooperative"

    def __init__(self, rho=0.5, penalty=None, length=100):
        super().__init__(penalty, length)
        self.rho = rho

    def fit(self, modalities, y, lambdas=None):
        path = baselines.fit_cooperative(modalities, y, self.rho, penalty=self.penalty,
                                         lambdas=lambdas, length=self.length)
        return FittedModel(self.name, path, [np.shape(m)[1] for m in modalities],
                           lambda mods: (_stack(mods), None), {"rho": self.rho})


class FactorAdjusted(Method):
    name = "factor"

    def fit(self, modalities, y, lambdas=None):
        dec = baselines.factor_adjusted_design(modalities)
        path = solve_path(dec.idiosyncratic, dec.factors, y, penalty=self.penalty,
                          lambdas=lambdas, length=self.length)

        def features(mods):
            f, idio = dec.apply(_stack(mods))
            return idio, f

        return FittedModel(self.name, path, [np.shape(m)[1] for m in modalities], features,
                           {"n_factors": dec.k})


class IntegrativeFactor(Method):
    name = "integfactor"

    def fit(self, modalities, y, lambdas=None):
        decs = baselines.integrative_factor_design(modalities)
        design = np.hstack([d.idiosyncratic for d in decs])
        factors = np.hstack([d.factors for d in decs])
        path = solve_path(design, factors, y, penalty=self.penalty, lambdas=lambdas,
                          length=self.length)

        def features(mods):
            parts = [d.apply(m) for d, m in zip(decs, mods)]
            return np.hstack([p[1] for p in parts]), np.hstack([p[0] for p in parts])

        return FittedModel(self.name, path, [np.shape(m)[1] for m in modalities], features,
                           {"n_factors": [d.k for d in decs]})


def make_method(name, **options):
    """Build a method from its registry name.

    ``mvopr_adaptive`` and ``adaptive_lasso`` use the adaptive penalty; the
    other names default to plain L1 unless ``penalty`` is given.
    """
    adaptive = PenaltySpec("adaptive")
    if name == "mvopr":
        return Mvopr(**options)
    if name == "mvopr_adaptive":
        m = Mvopr(penalty=options.pop("penalty", adaptive), **options)
        m.name = name
        return m
    if name == "lasso":
        return Lasso(**options)
    if name == "adaptive_lasso":
        m = Lasso(penalty=options.pop("penalty", adaptive), **options)
        m.name = name
        return m
    if name == "cooperative":
        return Cooperative(**options)
    if name == "factor":
        return FactorAdjusted(**options)
    if name == "integfactor":
        return IntegrativeFactor(**options)
    raise KeyError(f"unknown method {name!r}; choose from {', '.join(METHOD_NAMES)}")
