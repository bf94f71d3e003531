"""Command-line entry point: ``mvopr simulate | fit | evaluate``.

Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 numerical failure.
"""

import argparse
import csv
import dataclasses
import datetime
import hashlib
import json
import logging
import sys
import warnings

import numpy as np

from . import __version__
from .evaluation import (DEFAULT_THRESHOLD, cv_lambda_index, loo_evaluate, rows_to_csv,
                         run_benchmark)
from .methods import METHOD_NAMES, make_method
from .penalized import ConvergenceError, DegenerateGridError, PenaltySpec
from .preprocess import DEFAULT_PSEUDOCOUNT, PreprocessError, apply_steps
from .simulation import SCENARIO_IDS, builtin_scenario, load_config

log = logging.getLogger("mvopr")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

SNR_DEFINITION = ("variance of realised signal entries divided by variance of realised "
                  "noise entries, enforced exactly by rescaling the noise")


class UsageError(Exception):
    pass


class InputIOError(Exception):
    pass


class Table:
    """A numeric CSV: sample ids, feature names and an ``(n, p)`` matrix."""

    def __init__(self, ids, names, values, path=None):
        self.ids = ids
        self.names = names
        self.values = values
        self.path = path


def read_table(path):
    """Read a CSV whose first row holds feature names and first column sample ids."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise UsageError(f"{path}: not valid UTF-8") from None
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise UsageError(f"{path}: need a header row and at least one sample")
    header, body = rows[0], rows[1:]
    names = [h.strip() for h in header[1:]]
    if not names:
        raise UsageError(f"{path}: no feature columns")
    values = np.empty((len(body), len(names)))
    ids = []
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise UsageError(f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}")
        ids.append(row[0].strip())
        for c, cell in enumerate(row[1:]):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise UsageError(f"{path}: non-numeric cell {cell!r} at row {r + 2}, "
                                 f"column {c + 2} ({names[c]})") from None
    if not np.all(np.isfinite(values)):
        r, c = np.argwhere(~np.isfinite(values))[0]
        raise UsageError(f"{path}: non-finite value at row {r + 2}, column {c + 2}")
    return Table(ids, names, values, path)


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def _methods(text, default):
    names = _split(text) or list(default)
    bad = [m for m in names if m not in METHOD_NAMES]
    if bad:
        raise UsageError(f"unknown method(s) {', '.join(bad)}; choose from "
                         f"{', '.join(METHOD_NAMES)}")
    return names


def load_inputs(args):
    """Read, align and preprocess modality and response tables."""
    paths = _split(args.modalities)
    if not paths:
        raise UsageError("--modalities needs at least one CSV path")
    tables = [read_table(p) for p in paths]
    response = read_table(args.response)
    if response.values.shape[1] != 1:
        raise UsageError(f"{args.response}: expected exactly one response column, "
                         f"found {response.values.shape[1]}")
    for t in tables:
        if t.values.shape[0] != response.values.shape[0]:
            raise UsageError(f"row count mismatch: {t.path} has {t.values.shape[0]} samples, "
                             f"{response.path} has {response.values.shape[0]}")
        if t.ids != response.ids:
            raise UsageError(f"sample ids of {t.path} do not match {response.path}")
    steps = [s if s.lower() != "none" else "" for s in _split(args.preprocess)]
    if len(steps) > len(tables) + 1:
        raise UsageError("--preprocess has more entries than input files")
    steps += [""] * (len(tables) + 1 - len(steps))
    mods, names = [], []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for t, st in zip(tables, steps):
            x, nm = apply_steps(t.values, st, t.names, args.pseudocount)
            if x.shape[1] == 0:
                raise UsageError(f"{t.path}: no columns left after preprocessing")
            mods.append(x)
            names.append(nm)
        y, _ = apply_steps(response.values, steps[-1], response.names, args.pseudocount)
    for w in caught:
        log.warning("%s", w.message)
    if len(y) < 3:
        raise UsageError("need at least 3 samples")
    digests = {p: file_digest(p) for p in [*paths, args.response]}
    return mods, names, y.ravel(), digests


def _penalty(args):
    return PenaltySpec("adaptive" if args.penalty == "adaptive" else "l1")


def cmd_fit(args, out):
    mods, names, y, digests = load_inputs(args)
    method = make_method("mvopr", penalty=_penalty(args), length=args.length)
    td, _ = method.transform(mods)
    try:
        model = method.fit(mods, y)
    except DegenerateGridError as exc:
        # every penalised column vanished after projection; still report the links
        model, status = None, f"degenerate ({exc})"
    else:
        status = "ok"
    labels = [f"M{j + 1}" for j in range(len(mods))]
    flat = [(lab, nm) for lab, nms in zip(labels, names) for nm in nms]

    w = out.write
    w("[run]\n")
    w(f"version = {__version__}\n")
    w(f"penalty = {args.penalty}\n")
    w(f"samples = {len(y)}\n")
    w(f"modalities = {', '.join(f'{lab}:{len(n)}' for lab, n in zip(labels, names))}\n")
    for p, d in digests.items():
        w(f"input = {p} sha256:{d}\n")
    w("\n[links]\n")
    if len(mods) == 1:
        w("note = single modality, no projection (plain penalised path)\n")
    for j, f in enumerate(td.link_fits, start=2):
        w(f"M{j} = rank {f.rank}\n")
    w(f"nuisance_columns = {td.nuisance.concatenated.shape[1]}\n")
    w("\n[path]\n")
    w(f"status = {status}\n")
    nz, beta = np.array([], dtype=int), None
    if model is not None:
        lams = model.path.lambdas
        idx = cv_lambda_index(method, mods, y, lams, args.folds,
                              np.random.default_rng(args.seed))
        beta = model.path.beta[idx]
        nz = np.flatnonzero(beta)
        w(f"length = {lams.size}\n")
        w(f"lambda_max = {lams[0]:.6g}\n")
        w(f"lambda_min = {lams[-1]:.6g}\n")
        w(f"max_kkt_residual = {float(np.max(model.path.kkt)):.3g}\n")
        w(f"cv_folds = {args.folds}\n")
        w(f"cv_lambda_index = {idx}\n")
        w(f"cv_lambda = {lams[idx]:.6g}\n")
    w(f"nonzero_at_cv = {nz.size}\n")
    w("\n[diagnostics]\n")
    if not td.diagnostics:
        w("none\n")
    for d in td.diagnostics:
        w(f"- {d}\n")
    w("\n[coefficients]\n")
    w("# standardised scale; modality, feature, coefficient\n")
    for j in nz:
        lab, nm = flat[j]
        w(f"{lab}\t{nm}\t{beta[j]:.6g}\n")
    return EXIT_OK


def cmd_evaluate(args, out):
    if not 0 < args.threshold <= 1:
        raise UsageError("--threshold must lie in (0, 1]")
    mods, names, y, _ = load_inputs(args)
    methods = _methods(args.methods, ["mvopr"])
    flat = [nm for nms in names for nm in nms]
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["method", "loo_mse", "jaccard", "ochiai", "dice", "n_folds",
                     "failed_folds", "threshold", "selected_features"])
    for name in methods:
        opts = {"length": args.length}
        if args.penalty == "adaptive" and name in ("mvopr", "lasso"):
            opts["penalty"] = _penalty(args)
        rep = loo_evaluate(mods, y, make_method(name, **opts), threshold=args.threshold,
                           seed=args.seed, inner_folds=args.folds)
        for i, msg in rep.failed_folds:
            log.warning("%s: fold %d failed: %s", name, i, msg)
        writer.writerow([name, repr(rep.loo_mse), repr(rep.jaccard), repr(rep.ochiai),
                         repr(rep.dice), rep.n_folds, len(rep.failed_folds), args.threshold,
                         ";".join(str(flat[j]) for j in rep.selected_features)])
    return EXIT_OK


def _scenario(args):
    if bool(args.scenario) == bool(args.config):
        raise UsageError("give exactly one of --scenario and --config")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.config:
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise InputIOError(f"cannot read {args.config}: {exc.strerror or exc}") from None
        if args.snr2 is not None:
            links = list(cfg.snr_links)
            if not links:
                raise UsageError("--snr2 needs a scenario with at least one link")
            links[0] = args.snr2
            overrides["snr_links"] = tuple(links)
        return dataclasses.replace(cfg, **overrides).validate()
    if args.scenario not in SCENARIO_IDS:
        raise UsageError(f"unknown scenario {args.scenario!r}; choose from "
                         f"{', '.join(SCENARIO_IDS)}")
    if args.snr2 is not None:
        if args.scenario == "s5_null":
            raise UsageError("--snr2 does not apply to s5_null (no link)")
        overrides["snr2"] = args.snr2
    return builtin_scenario(args.scenario, **overrides)


def cmd_simulate(args, out):
    cfg = _scenario(args)
    methods = _methods(args.methods, METHOD_NAMES)
    rows = run_benchmark(cfg, methods)
    body = rows_to_csv(rows)
    manifest = {
        "command": ["mvopr", *args.argv],
        "config": cfg.to_dict(),
        "config_digest": cfg.digest(),
        "seed": cfg.seed,
        "methods": methods,
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "input_digests": {args.config: file_digest(args.config)} if args.config else {},
        "snr_definition": SNR_DEFINITION,
    }
    if args.out in (None, "-"):
        out.write(body)
        return EXIT_OK
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(body)
        with open(args.out + ".manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise InputIOError(f"cannot write {args.out}: {exc.strerror or exc}") from None
    log.info("wrote %d rows to %s", len(rows), args.out)
    return EXIT_OK


def _add_data_args(p):
    p.add_argument("--modalities", required=True,
                   help="comma-separated CSVs, upstream to downstream")
    p.add_argument("--response", required=True, help="CSV with one response column")
    p.add_argument("--penalty", choices=("l1", "adaptive"), default="l1")
    p.add_argument("--preprocess", default="",
                   help="comma-separated step lists, one per modality then the response; "
                        "steps joined by '+', e.g. clr+center_scale,none,sqrt_response")
    p.add_argument("--pseudocount", type=float, default=DEFAULT_PSEUDOCOUNT)
    p.add_argument("--length", type=int, default=100, help="lambda grid length")
    p.add_argument("--folds", type=int, default=5, help="inner CV folds for lambda")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="mvopr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a simulation benchmark")
    sim.add_argument("--scenario", help=f"one of {', '.join(SCENARIO_IDS)}")
    sim.add_argument("--config", help="scenario file (INI [scenario] section)")
    sim.add_argument("--snr2", type=float, help="SNR of the first link noise")
    sim.add_argument("--reps", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--methods", default="", help=f"subset of {','.join(METHOD_NAMES)}")
    sim.add_argument("--out", help="result CSV (manifest written alongside); stdout if omitted")
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="fit MVOPR on CSV inputs and print a report")
    _add_data_args(fit)
    fit.set_defaults(func=cmd_fit)

    ev = sub.add_parser("evaluate", help="leave-one-out stability report")
    _add_data_args(ev)
    ev.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    ev.add_argument("--methods", default="mvopr")
    ev.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None, out=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except (UsageError, PreprocessError, KeyError) as exc:
        print(f"mvopr: error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputIOError as exc:
        print(f"mvopr: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConvergenceError, DegenerateGridError, np.linalg.LinAlgError) as exc:
        print(f"mvopr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"mvopr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
