"""Synthetic multi-modality scenarios with known supports and link matrices.

SNR is the ratio of the empirical variance of the signal entries to that of
the noise entries, and it is enforced exactly by rescaling the drawn noise.
"""

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .numerics import CovarianceSpec, RngStream, as_generator, sample_mvn
from .projection import ModalityChain

SCENARIO_IDS = ("s1", "s2", "s3", "s4_ar1", "s4_cs", "s5_null", "s6_chain")


class DegenerateSignalError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one simulation scenario.

    Links are listed in the order (2,1), (3,1), (3,2), (4,1), ... i.e. target
    modality first, then each upstream source. ``snr_links`` holds one value
    per downstream modality.
    """

    scenario_id: str
    n: int
    dims: tuple
    link_ranks: tuple = ()
    zero_row_fracs: tuple = ()
    support_sizes: tuple = ()
    coef_lo: float = 1.0
    coef_hi: float = 2.0
    sign_rule: str = "positive"
    snr_eps1: float = 100.0
    snr_links: tuple = ()
    design_cov: CovarianceSpec = CovarianceSpec()
    link_cov: CovarianceSpec = CovarianceSpec()
    independent: bool = False
    reps: int = 100
    seed: int = 0

    def __post_init__(self):
        for name in ("dims", "link_ranks", "zero_row_fracs", "support_sizes", "snr_links"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def k(self):
        return len(self.dims)

    def links(self):
        return [(j, i) for j in range(1, self.k) for i in range(j)]

    def validate(self):
        k = self.k
        if k < 1 or self.n < 2:
            raise ValueError("need at least one modality and two samples")
        if len(self.support_sizes) != k:
            raise ValueError("one support size per modality required")
        for d, s in zip(self.dims, self.support_sizes):
            if not 0 <= s <= d:
                raise ValueError(f"support size {s} exceeds dimension {d}")
        if not 0 < self.coef_lo < self.coef_hi:
            raise ValueError("need 0 < coef_lo < coef_hi")
        if self.sign_rule not in ("positive", "random"):
            raise ValueError(f"unknown sign rule {self.sign_rule!r}")
        if self.snr_eps1 <= 0:
            raise ValueError("snr_eps1 must be positive")
        self.design_cov.validate()
        self.link_cov.validate()
        if self.independent:
            return self
        nl = len(self.links())
        if len(self.link_ranks) != nl or len(self.zero_row_fracs) != nl:
            raise ValueError(f"{nl} link ranks and zero-row fractions required")
        if len(self.snr_links) != k - 1 or any(s <= 0 for s in self.snr_links):
            raise ValueError(f"{k - 1} positive link SNRs required")
        for (j, i), r, frac in zip(self.links(), self.link_ranks, self.zero_row_fracs):
            nonzero = int(np.ceil((1 - frac) * self.dims[i] - 1e-9))
            if r < 0 or r > min(self.dims[j], nonzero):
                raise ValueError(f"link ({j + 1},{i + 1}) rank {r} infeasible")
        return self

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["design_cov"] = str(self.design_cov)
        d["link_cov"] = str(self.link_cov)
        return d

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class SimulatedDataset:
    chain: ModalityChain
    y: np.ndarray
    true_supports: list
    true_b: dict
    betas: list
    noise: dict = field(default_factory=dict)
    noise_scales: dict = field(default_factory=dict)

    def global_support(self):
        offsets = self.chain.offsets()
        return sorted(int(offsets[j] + i) for j, s in enumerate(self.true_supports) for i in s)


def generate_sparse_lowrank_b(p, q, rank, zero_row_frac, rng):
    """Row-sparse ``p x q`` matrix of the given rank (``L @ R.T``, Gaussian factors)."""
    if not 0 <= zero_row_frac <= 1:
        raise ValueError("zero_row_frac must lie in [0, 1]")
    nonzero = int(np.ceil((1 - zero_row_frac) * p - 1e-9))
    if rank < 1 or rank > min(q, nonzero):
        raise ValueError(f"rank {rank} infeasible with {nonzero} nonzero rows and q={q}")
    gen = as_generator(rng)
    rows = np.sort(gen.choice(p, size=nonzero, replace=False))
    left = np.zeros((p, rank))
    left[rows] = gen.standard_normal((nonzero, rank))
    right = gen.standard_normal((q, rank))
    return left @ right.T


def generate_coefficients(dim, support_size, lo, hi, sign_rule, rng):
    """Sparse coefficient vector; returns ``(beta, sorted support indices)``."""
    if not 0 <= support_size <= dim:
        raise ValueError("support_size must lie in [0, dim]")
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    beta = np.zeros(dim)
    if support_size == 0:
        return beta, []
    support = np.sort(rng.choice(dim, size=support_size, replace=False))
    values = rng.uniform(lo, hi, size=support_size)
    if sign_rule == "random":
        values *= rng.choice([-1.0, 1.0], size=support_size)
    elif sign_rule != "positive":
        raise ValueError(f"unknown sign rule {sign_rule!r}")
    beta[support] = values
    return beta, support.tolist()


def scale_to_snr(signal, target_snr, base_noise):
    """Rescale ``base_noise`` so that var(signal) / var(noise) equals ``target_snr``."""
    if target_snr <= 0:
        raise ValueError("target_snr must be positive")
    signal = np.asarray(signal, dtype=float)
    base_noise = np.asarray(base_noise, dtype=float)
    if signal.shape != base_noise.shape:
        raise ValueError(f"shape mismatch {signal.shape} vs {base_noise.shape}")
    return base_noise * snr_factor(signal, target_snr, base_noise)


def snr_factor(signal, target_snr, base_noise):
    vs = float(np.var(signal))
    vn = float(np.var(base_noise))
    if vs <= 0:
        raise DegenerateSignalError("signal has zero variance")
    if vn <= 0:
        raise DegenerateSignalError("noise has zero variance")
    return float(np.sqrt(vs / (target_snr * vn)))


def empirical_snr(signal, noise):
    return float(np.var(signal) / np.var(noise))


def simulate_scenario(config, rep_index=0):
    """Draw one replication; fully determined by ``(config.seed, rep_index)``."""
    config.validate()
    gen = RngStream(config.seed, rep_index).generator()
    n, dims = config.n, config.dims
    mods = [sample_mvn(n, dims[0], config.design_cov, gen)]
    true_b, noise, scales = {}, {}, {}
    link_params = dict(zip(config.links(), zip(config.link_ranks, config.zero_row_fracs)))
    for j in range(1, config.k):
        if config.independent:
            mods.append(sample_mvn(n, dims[j], config.design_cov, gen))
            continue
        signal = np.zeros((n, dims[j]))
        for i in range(j):
            rank, frac = link_params[(j, i)]
            if rank == 0:
                continue
            b = generate_sparse_lowrank_b(dims[i], dims[j], rank, frac, gen)
            true_b[(j + 1, i + 1)] = b
            signal += mods[i] @ b
        base = sample_mvn(n, dims[j], config.link_cov, gen)
        if np.any(signal):
            scales[j + 1] = snr_factor(signal, config.snr_links[j - 1], base)
            e = base * scales[j + 1]
        else:
            e = base
        noise[j + 1] = e
        mods.append(signal + e)

    betas, supports = [], []
    for d, s in zip(dims, config.support_sizes):
        beta, support = generate_coefficients(d, s, config.coef_lo, config.coef_hi,
                                              config.sign_rule, gen)
        betas.append(beta)
        supports.append(support)
    signal_y = sum(m @ b for m, b in zip(mods, betas))
    base = gen.standard_normal(n)
    scales["y"] = snr_factor(signal_y, config.snr_eps1, base)
    eps = base * scales["y"]
    noise["y"] = eps
    return SimulatedDataset(ModalityChain(mods), signal_y + eps, supports, true_b, betas,
                            noise, scales)


def builtin_scenario(scenario_id, **overrides):
    """Built-in scenario catalogue at the published scale; ``overrides`` replace fields.

    ``snr2`` is accepted as a shorthand for the first link SNR.
    """
    base = {
        "s1": ScenarioConfig("s1", 200, (300, 300), (1,), (0.95,), (10, 10),
                             snr_eps1=100, snr_links=(10.0,)),
        "s2": ScenarioConfig("s2", 200, (50, 300), (9,), (0.7,), (10, 10),
                             snr_eps1=100, snr_links=(30.0,)),
        "s3": ScenarioConfig("s3", 200, (50, 50), (3,), (0.5,), (25, 25),
                             snr_eps1=100, snr_links=(20.0,)),
        "s4_ar1": ScenarioConfig("s4_ar1", 200, (100, 100), (1,), (0.5,), (10, 10),
                                 sign_rule="random", snr_eps1=3, snr_links=(5.0,),
                                 link_cov=CovarianceSpec("ar1", 0.9)),
        "s4_cs": ScenarioConfig("s4_cs", 200, (100, 100), (1,), (0.5,), (10, 10),
                                sign_rule="random", snr_eps1=3, snr_links=(5.0,),
                                link_cov=CovarianceSpec("compound_symmetry", 0.7)),
        "s5_null": ScenarioConfig("s5_null", 200, (100, 100), (), (), (10, 10),
                                  sign_rule="random", snr_eps1=3, independent=True),
        "s6_chain": ScenarioConfig("s6_chain", 100, (100, 100, 100), (3, 1, 1),
                                   (0.0, 0.0, 0.0), (10, 10, 10), snr_eps1=100,
                                   snr_links=(10.0, 20.0)),
    }
    if scenario_id not in base:
        raise KeyError(f"unknown scenario {scenario_id!r}; choose from {', '.join(SCENARIO_IDS)}")
    overrides = dict(overrides)
    cfg = base[scenario_id]
    snr2 = overrides.pop("snr2", None)
    if snr2 is not None:
        links = list(cfg.snr_links)
        links[0] = float(snr2)
        overrides["snr_links"] = tuple(links)
    return dataclasses.replace(cfg, **overrides).validate()


_TUPLE_FIELDS = {"dims": int, "link_ranks": int, "zero_row_fracs": float,
                 "support_sizes": int, "snr_links": float}
_SCALAR_FIELDS = {"n": int, "coef_lo": float, "coef_hi": float, "snr_eps1": float,
                  "reps": int, "seed": int, "sign_rule": str, "scenario_id": str}


def parse_config_text(text):
    """Parse a flat ``key = value`` scenario file (an INI ``[scenario]`` section).

    ``base = s1`` starts from a built-in scenario; list values are
    comma-separated; covariances use ``identity``, ``ar1:0.9`` or ``cs:0.7``.
    """
    cp = configparser.ConfigParser()
    if not text.lstrip().startswith("["):
        text = "[scenario]\n" + text
    cp.read_string(text)
    sec = cp["scenario"]
    values = {}
    for key, raw in sec.items():
        raw = raw.strip()
        if key == "base":
            continue
        if key in _TUPLE_FIELDS:
            conv = _TUPLE_FIELDS[key]
            values[key] = tuple(conv(v) for v in raw.split(",") if v.strip()) if raw else ()
        elif key in _SCALAR_FIELDS:
            values[key] = _SCALAR_FIELDS[key](raw)
        elif key in ("design_cov", "link_cov"):
            values[key] = CovarianceSpec.parse(raw)
        elif key == "independent":
            values[key] = sec.getboolean(key)
        elif key == "snr2":
            values[key] = float(raw)
        else:
            raise ValueError(f"unknown scenario key {key!r}")
    if "base" in sec:
        return builtin_scenario(sec["base"].strip(), **values)
    if "snr2" in values:
        raise ValueError("snr2 is only valid together with base")
    values.setdefault("scenario_id", "custom")
    return ScenarioConfig(**values).validate()


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())
