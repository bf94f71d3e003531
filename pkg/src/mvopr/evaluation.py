"""Selection AUC, pairwise stability indicators, leave-one-out and benchmarks."""

import csv
import io
import itertools
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .methods import Cooperative, make_method
from .baselines import COOPERATIVE_RHOS
from .numerics import RngStream
from .simulation import simulate_scenario

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.85


class UndefinedMetricError(ValueError):
    pass


def roc_points(nonzero, true_support):
    """(FPR, TPR) pairs for each row of a boolean selection matrix."""
    nonzero = np.atleast_2d(np.asarray(nonzero, dtype=bool))
    p = nonzero.shape[1]
    truth = np.zeros(p, dtype=bool)
    truth[list(true_support)] = True
    n_pos = int(truth.sum())
    n_neg = p - n_pos
    if n_pos == 0:
        raise UndefinedMetricError("no true variables among the scored features")
    if n_neg == 0:
        raise UndefinedMetricError("no null variables among the scored features")
    tpr = (nonzero & truth).sum(axis=1) / n_pos
    fpr = (nonzero & ~truth).sum(axis=1) / n_neg
    return fpr, tpr


def auc_from_points(fpr, tpr):
    pts = sorted(zip([0.0, *map(float, fpr), 1.0], [0.0, *map(float, tpr), 1.0]))
    x = np.array([a for a, _ in pts])
    y = np.array([b for _, b in pts])
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2))


def selection_auc(path, true_support, modality_slice=None):
    """Area under the ROC curve traced by the nonzero pattern along a path.

    ``path`` is a RegularizationPath or a boolean/numeric ``(L, p)`` array.
    ``true_support`` uses global column indices; ``modality_slice``
    (a ``slice`` or ``(start, stop)``) restricts scoring to one block.
    """
    beta = path.beta if hasattr(path, "beta") else np.asarray(path)
    nonzero = np.atleast_2d(beta) != 0
    support = np.asarray(sorted(true_support), dtype=int)
    if modality_slice is not None:
        if not isinstance(modality_slice, slice):
            modality_slice = slice(*modality_slice)
        start, stop, _ = modality_slice.indices(nonzero.shape[1])
        nonzero = nonzero[:, start:stop]
        support = support[(support >= start) & (support < stop)] - start
    return auc_from_points(*roc_points(nonzero, support))


def jaccard(a, b):
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def ochiai(a, b):
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / math.sqrt(len(a) * len(b))


def dice(a, b):
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return 2 * len(a & b) / (len(a) + len(b))


def stability_summary(sets):
    """Mean Jaccard, Ochiai and Dice over all unordered pairs of selected sets."""
    sets = [set(s) for s in sets]
    if len(sets) < 2:
        raise ValueError("need at least two selection sets")
    pairs = list(itertools.combinations(sets, 2))
    return tuple(float(np.mean([f(a, b) for a, b in pairs])) for f in (jaccard, ochiai, dice))


@dataclass
class SelectionReport:
    method: str
    loo_mse: float = float("nan")
    jaccard: float = float("nan")
    ochiai: float = float("nan")
    dice: float = float("nan")
    selection_frequencies: np.ndarray = None
    selected_features: list = field(default_factory=list)
    n_folds: int = 0
    failed_folds: list = field(default_factory=list)
    auc_overall: float = None
    auc_per_modality: list = None
    selected_sets: list = field(default_factory=list, repr=False)


def _kfold(n, k, rng):
    order = rng.permutation(n)
    return [np.sort(f) for f in np.array_split(order, k)]


def cv_lambda_index(method, modalities, y, lambdas, folds=5, rng=None):
    """Index into ``lambdas`` minimising K-fold prediction error (ties to larger lambda).

    Folds whose fit fails are scored with the training-mean prediction.
    """
    n = len(y)
    k = min(folds, n)
    rng = np.random.default_rng(0) if rng is None else rng
    err = np.zeros(len(lambdas))
    for test in _kfold(n, k, rng):
        train = np.setdiff1d(np.arange(n), test)
        mods_tr = [m[train] for m in modalities]
        mods_te = [m[test] for m in modalities]
        try:
            model = method.fit(mods_tr, y[train], lambdas=lambdas)
            pred = model.predict(mods_te)
        except (ValueError, np.linalg.LinAlgError, RuntimeError) as exc:
            log.debug("inner CV fold failed: %s", exc)
            pred = np.full((len(test), len(lambdas)), y[train].mean())
        err += np.sum((pred - y[test][:, None]) ** 2, axis=0)
    return int(np.argmin(err))


def loo_evaluate(modalities, y, method, lambda_rule="cv", threshold=DEFAULT_THRESHOLD,
                 seed=0, inner_folds=5):
    """Leave-one-out selection stability and prediction error.

    ``lambda_rule`` is ``"cv"`` (inner K-fold CV on each training fold, over
    that fold's own lambda grid) or a positive float used as a fixed lambda.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    modalities = [np.asarray(m, dtype=float) for m in modalities]
    y = np.asarray(y, dtype=float).ravel()
    n = len(y)
    if n < 3:
        raise ValueError("leave-one-out needs at least 3 samples")
    p = sum(m.shape[1] for m in modalities)
    sets, sq_err, failed = [], [], []
    for i in range(n):
        train = np.delete(np.arange(n), i)
        mods_tr = [m[train] for m in modalities]
        try:
            if lambda_rule == "cv":
                model = method.fit(mods_tr, y[train])
                rng = RngStream(seed, i).generator()
                idx = cv_lambda_index(method, mods_tr, y[train], model.path.lambdas,
                                      inner_folds, rng)
            else:
                lam = float(lambda_rule)
                model = method.fit(mods_tr, y[train], lambdas=np.array([lam]))
                idx = 0
            pred = model.predict([m[i:i + 1] for m in modalities])[0, idx]
        except (ValueError, np.linalg.LinAlgError, RuntimeError) as exc:
            failed.append((i, str(exc)))
            continue
        sets.append(model.selected(idx))
        sq_err.append(float((y[i] - pred) ** 2))

    freq = np.zeros(p)
    for s in sets:
        freq[list(s)] += 1
    if sets:
        freq /= len(sets)
    report = SelectionReport(
        method=getattr(method, "name", str(method)),
        loo_mse=float(np.mean(sq_err)) if sq_err else float("nan"),
        selection_frequencies=freq,
        selected_features=[int(j) for j in np.flatnonzero(freq >= threshold - 1e-12)],
        n_folds=len(sets),
        failed_folds=failed,
        selected_sets=sets,
    )
    if len(sets) >= 2:
        report.jaccard, report.ochiai, report.dice = stability_summary(sets)
    return report


class ResultRow(NamedTuple):
    scenario: str
    rep: int
    seed: int
    method: str
    metric: str
    modality: str
    value: float


CSV_COLUMNS = ResultRow._fields


def _aucs(path, dataset):
    support = dataset.global_support()
    offsets = dataset.chain.offsets()
    out = {"overall": selection_auc(path, support)}
    for j, name in enumerate(dataset.chain.names):
        try:
            out[name] = selection_auc(path, support, (offsets[j], offsets[j + 1]))
        except UndefinedMetricError:
            pass
    return out


def _run_rep(config, methods, rep):
    data = simulate_scenario(config, rep)
    mods, y = data.chain.modalities, data.y
    rows = []
    for name in methods:
        try:
            if name == "cooperative":
                best = None
                for rho in COOPERATIVE_RHOS:
                    aucs = _aucs(Cooperative(rho=rho).fit(mods, y).path, data)
                    if best is None or aucs["overall"] > best[1]["overall"]:
                        best = (rho, aucs)
                rho, aucs = best
                rows.append(ResultRow(config.scenario_id, rep, config.seed, name, "rho",
                                      "overall", float(rho)))
            else:
                model = make_method(name).fit(mods, y)
                aucs = _aucs(model.path, data)
                if "link_ranks" in model.info:
                    for j, r in enumerate(model.info["link_ranks"], start=2):
                        rows.append(ResultRow(config.scenario_id, rep, config.seed, name,
                                              "link_rank", f"M{j}", float(r)))
                if "n_factors" in model.info:
                    nf = np.atleast_1d(model.info["n_factors"])
                    labels = ["overall"] if nf.size == 1 else data.chain.names
                    for lab, v in zip(labels, nf):
                        rows.append(ResultRow(config.scenario_id, rep, config.seed, name,
                                              "n_factors", lab, float(v)))
        except (ValueError, np.linalg.LinAlgError, RuntimeError) as exc:
            log.warning("rep %d method %s failed: %s", rep, name, exc)
            rows.append(ResultRow(config.scenario_id, rep, config.seed, name, "error",
                                  type(exc).__name__, float("nan")))
            continue
        for mod, v in aucs.items():
            rows.append(ResultRow(config.scenario_id, rep, config.seed, name, "auc", mod, v))
    return rows


def worker_count():
    try:
        cap = int(os.environ.get("MVOPR_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, cap)


def run_benchmark(config, methods, reps=None, workers=None):
    """Simulate ``reps`` replications and score every method on each.

    Returns rows sorted by (scenario, rep, method, metric, modality); the
    result depends only on ``config`` and ``methods``.
    """
    methods = list(methods)
    if not methods:
        raise ValueError("no methods requested")
    for name in methods:
        if name != "cooperative":
            make_method(name)
    reps = config.reps if reps is None else reps
    workers = worker_count() if workers is None else workers
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=min(workers, reps)) as pool:
            chunks = list(pool.map(_run_rep, [config] * reps, [methods] * reps, range(reps)))
    else:
        chunks = [_run_rep(config, methods, r) for r in range(reps)]
    rows = [r for chunk in chunks for r in chunk]
    return sorted(rows, key=lambda r: (r.scenario, r.rep, r.method, r.metric, r.modality))


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.scenario, r.rep, r.seed, r.method, r.metric, r.modality, repr(float(r.value))])
    return buf.getvalue()


def mean_metric(rows, method, metric="auc", modality="overall"):
    vals = [r.value for r in rows if r.method == method and r.metric == metric
            and r.modality == modality]
    return float(np.mean(vals)) if vals else float("nan")
