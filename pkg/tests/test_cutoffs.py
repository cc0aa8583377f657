import numpy as np
import pytest

from quasiloc.cutoffs import smooth_step, smooth_cutoff


def test_smooth_step_endpoints():
    assert smooth_step(-1.0) == 0.0
    assert smooth_step(0.0) == 0.0
    assert smooth_step(1.0) == 1.0
    assert smooth_step(2.0) == 1.0
    assert smooth_step(0.5) == pytest.approx(0.5)


def test_smooth_step_monotone():
    x = np.linspace(-0.5, 1.5, 401)
    y = smooth_step(x)
    assert np.all(np.diff(y) >= 0.0)
    assert np.all((y >= 0.0) & (y <= 1.0))


def test_smooth_cutoff_plateau_and_support():
    gamma = 8.0
    assert smooth_cutoff(0.0, gamma) == 1.0
    assert smooth_cutoff(1.0, gamma) == 1.0
    assert smooth_cutoff(gamma, gamma) == 0.0
    assert smooth_cutoff(2.0 * gamma, gamma) == 0.0
    mid = smooth_cutoff(0.5 * (1.0 + gamma), gamma)
    assert 0.0 < mid < 1.0


def test_smooth_cutoff_smooth_at_edges():
    # numerical derivatives stay tiny approaching both edges of the ramp
    gamma = 2.0
    for edge in (1.0, gamma):
        h = 1e-4
        d = (smooth_cutoff(edge + h, gamma) - smooth_cutoff(edge - h, gamma)) / (2 * h)
        assert abs(d) < 1e-3


def test_smooth_cutoff_rejects_bad_gamma():
    with pytest.raises(ValueError):
        smooth_cutoff(0.5, 1.0)
