"""Dense matrix kernels, structured covariances and reproducible sampling."""

from dataclasses import dataclass

import numpy as np

# singular values at or below RANK_TOL * s_max are treated as zero
RANK_TOL = 1e-10


class InvalidSpecError(ValueError):
    pass


@dataclass(frozen=True)
class CovarianceSpec:
    """Unit-diagonal covariance pattern.

    ``kind`` is one of ``"identity"``, ``"ar1"`` (uses ``param`` as rho) or
    ``"compound_symmetry"`` (uses ``param`` as the common off-diagonal mu).
    """

    kind: str = "identity"
    param: float = 0.0

    def validate(self):
        if self.kind == "identity":
            return
        if self.kind == "ar1":
            if not -1.0 < self.param < 1.0:
                raise InvalidSpecError(f"ar1 rho must lie in (-1, 1), got {self.param}")
        elif self.kind in ("compound_symmetry", "cs"):
            if not 0.0 <= self.param < 1.0:
                raise InvalidSpecError(f"compound symmetry mu must lie in [0, 1), got {self.param}")
        else:
            raise InvalidSpecError(f"unknown covariance kind {self.kind!r}")

    @classmethod
    def parse(cls, text):
        """Parse ``identity``, ``ar1:0.9`` or ``cs:0.7``."""
        text = text.strip()
        if ":" in text:
            kind, value = text.split(":", 1)
            spec = cls(kind.strip(), float(value))
        else:
            spec = cls(text)
        spec.validate()
        return spec

    def __str__(self):
        return self.kind if self.kind == "identity" else f"{self.kind}:{self.param:g}"


@dataclass(frozen=True)
class RngStream:
    """Immutable (seed, stream_id) descriptor; each id maps to an independent stream."""

    seed: int
    stream_id: int = 0

    def generator(self):
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(ss)


def as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass
class ThinSvd:
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    @property
    def rank(self):
        return self.singular_values.size

    def reconstruct(self):
        return (self.u * self.singular_values) @ self.v.T


def build_covariance(spec, dim):
    """Return the ``dim x dim`` covariance matrix described by ``spec``."""
    spec.validate()
    if dim < 1:
        raise InvalidSpecError("dim must be >= 1")
    if spec.kind == "identity":
        return np.eye(dim)
    if spec.kind == "ar1":
        idx = np.arange(dim)
        return spec.param ** np.abs(idx[:, None] - idx[None, :]).astype(float)
    cov = np.full((dim, dim), float(spec.param))
    np.fill_diagonal(cov, 1.0)
    return cov


def sample_mvn(n, dim, spec, rng):
    """Draw ``n`` i.i.d. rows from N(0, cov) via the Cholesky factor of the covariance."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = as_generator(rng)
    z = gen.standard_normal((n, dim))
    if spec.kind == "identity":
        return z
    chol = np.linalg.cholesky(build_covariance(spec, dim))
    return z @ chol.T


def numerical_rank(singular_values, tol=RANK_TOL):
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def thin_svd(m, rank):
    """Top-``rank`` singular triplets of ``m``."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if not 1 <= rank <= min(m.shape):
        raise ValueError(f"rank {rank} outside [1, {min(m.shape)}]")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return ThinSvd(u[:, :rank], s[:rank], vt[:rank].T)


def orthonormal_basis(m, tol=RANK_TOL):
    """Orthonormal basis of the column space of ``m`` (n x rank, possibly empty)."""
    m = np.asarray(m, dtype=float)
    if m.size == 0 or m.shape[1] == 0:
        return np.zeros((m.shape[0], 0))
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    return u[:, : numerical_rank(s, tol)]
