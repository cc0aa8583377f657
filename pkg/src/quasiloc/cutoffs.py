"""Smooth compact-support cutoff shapes shared by the frequency and scale decompositions."""

import numpy as np


def _mollifier(x):
    """exp(-1/x) for x > 0, identically 0 for x <= 0; all derivatives vanish at 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, strictly monotone in between."""
    f = _mollifier(np.asarray(x, dtype=float))
    g = _mollifier(1.0 - np.asarray(x, dtype=float))
    return f / (f + g)


def smooth_cutoff(t, gamma):
    """C-infinity cutoff equal to 1 for t <= 1 and 0 for t >= gamma (gamma > 1).

    Only the plateau, the support edge and smoothness matter downstream; the
    transition profile is a standard mollifier smoothstep.
    """
    if gamma <= 1.0:
        raise ValueError("cutoff shape requires gamma > 1")
    t = np.asarray(t, dtype=float)
    out = smooth_step((gamma - t) / (gamma - 1.0))
    if out.ndim == 0:
        return float(out)
    return out
