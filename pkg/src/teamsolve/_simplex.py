"""Euclidean projection onto the probability simplex."""

from __future__ import annotations

import numpy as np


def project_simplex(v):
    """Closest probability vector to ``v`` in Euclidean distance.

    Sort-and-threshold: find the largest prefix of the sorted entries
    whose common shift keeps them positive, subtract that shift and clip.
    Exact up to float rounding, idempotent, and nearly linear time in the
    vector length.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a nonempty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("expected finite entries")
    n = v.size
    if n == 1:
        return np.ones(1)
    if n == 2:
        # Projection moves along (1, -1); the threshold is the clip.
        a = 0.5 * (v[0] - v[1] + 1.0)
        a = 0.0 if a < 0.0 else (1.0 if a > 1.0 else a)
        return np.array([a, 1.0 - a])
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    ranks = np.arange(1, n + 1)
    support = np.nonzero(u * ranks > cumulative)[0]
    rho = support[-1]
    shift = cumulative[rho] / (rho + 1.0)
    return np.maximum(v - shift, 0.0)
