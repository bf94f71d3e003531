"""Per-table transformations applied to real inputs before fitting.

Each function takes a 2-d array (rows are samples) plus optional column
names and returns the transformed array with the surviving names.
"""

import warnings

import numpy as np

DEFAULT_PSEUDOCOUNT = 0.5


class PreprocessError(ValueError):
    pass


def clr(x, pseudocount=DEFAULT_PSEUDOCOUNT):
    """Centered log-ratio of each row after adding ``pseudocount``."""
    x = np.asarray(x, dtype=float) + pseudocount
    if np.any(x <= 0):
        raise PreprocessError("clr needs strictly positive entries after the pseudocount")
    logs = np.log(x)
    return logs - logs.mean(axis=1, keepdims=True)


def center_scale(x, names=None):
    """Zero column means and unit sample variance (ddof=1).

    Constant columns cannot be scaled; they are dropped with a warning.
    """
    x = np.asarray(x, dtype=float)
    names = list(range(x.shape[1])) if names is None else list(names)
    if x.shape[0] < 2:
        raise PreprocessError("center_scale needs at least two rows")
    sd = x.std(axis=0, ddof=1)
    keep = sd > 0
    if not keep.all():
        dropped = [names[j] for j in np.flatnonzero(~keep)]
        warnings.warn(f"dropping zero-variance columns: {dropped}", UserWarning, stacklevel=2)
    x = x[:, keep]
    out = (x - x.mean(axis=0)) / sd[keep]
    return out, [nm for nm, k in zip(names, keep) if k]


def sqrt_response(y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        bad = int(np.flatnonzero(np.ravel(y) < 0)[0])
        raise PreprocessError(f"sqrt_response: negative value at row {bad}")
    return np.sqrt(y)


def top_variance(x, k, names=None):
    """Keep the ``k`` highest-variance columns, ordered by decreasing variance."""
    x = np.asarray(x, dtype=float)
    names = list(range(x.shape[1])) if names is None else list(names)
    if k < 1:
        raise PreprocessError("top_variance needs k >= 1")
    order = np.argsort(-x.var(axis=0, ddof=1), kind="stable")[:k]
    return x[:, order], [names[j] for j in order]


def apply_steps(x, steps, names=None, pseudocount=DEFAULT_PSEUDOCOUNT):
    """Apply a ``+``-joined step list such as ``"clr+top_variance:200+center_scale"``."""
    x = np.asarray(x, dtype=float)
    names = list(range(x.shape[1])) if names is None else list(names)
    if not steps:
        return x, names
    for step in steps.split("+"):
        kind, _, arg = step.strip().partition(":")
        if kind == "clr":
            x = clr(x, pseudocount)
        elif kind == "center_scale":
            x, names = center_scale(x, names)
        elif kind == "sqrt_response":
            x = sqrt_response(x)
        elif kind == "top_variance":
            try:
                k = int(arg)
            except ValueError:
                raise PreprocessError(f"top_variance needs an integer, got {arg!r}") from None
            x, names = top_variance(x, k, names)
        elif kind:
            raise PreprocessError(f"unknown preprocessing step {kind!r}")
    return x, names
