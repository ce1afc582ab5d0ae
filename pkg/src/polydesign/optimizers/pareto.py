"""Pareto dominance, non-dominated filtering and 2-D hypervolume (minimisation)."""

from __future__ import annotations

import numpy as np


def dominates(a, b) -> bool:
    """``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if a.shape != b.shape:
        raise ValueError(f"objective length mismatch: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def domination_matrix(objs) -> np.ndarray:
    """``M[i, j]`` is True iff row i dominates row j."""
    y = np.asarray(objs, float)
    le = np.all(y[:, None, :] <= y[None, :, :], axis=-1)
    lt = np.any(y[:, None, :] < y[None, :, :], axis=-1)
    return le & lt


def pareto_front(objs) -> list[int]:
    """Indices of rows dominated by no other row. Duplicates are all kept."""
    y = np.asarray(objs, float)
    if y.ndim != 2 or len(y) == 0:
        raise ValueError("expected a non-empty (n, m) objective array")
    return np.flatnonzero(~domination_matrix(y).any(axis=0)).tolist()


def hypervolume_2d(front, ref) -> float:
    """Area dominated by ``front`` and bounded by ``ref``.

    Points not strictly better than ``ref`` in both coordinates contribute
    nothing and are dropped. Dominated points may be present.
    """
    y = np.asarray(front, float).reshape(-1, 2)
    r = np.asarray(ref, float)
    if r.shape != (2,):
        raise ValueError("hypervolume_2d needs a 2-component reference point")
    y = y[np.all(y < r, axis=1)]
    if len(y) == 0:
        return 0.0
    y = y[np.lexsort((y[:, 1], y[:, 0]))]
    area = 0.0
    ceiling = r[1]
    for x, v in y:
        if v < ceiling:
            area += (r[0] - x) * (ceiling - v)
            ceiling = v
    return float(area)
