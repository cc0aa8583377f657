import math

import numpy as np
import pytest

import quasiloc as q
from quasiloc.analysis import _log_correction


def _synthetic_corr(rate, L=16, with_log_factor=False, tau=1.5):
    sites = np.arange(-L // 2, L // 2 + 1)
    n = sites.size
    s = np.zeros((1, n, n))
    for i, x in enumerate(sites):
        for j, y in enumerate(sites):
            v = math.exp(-rate * abs(x - y))
            if with_log_factor:
                v *= _log_correction(x, y, tau)
            s[0, i, j] = v
    meta = {"eps": 0.1, "U": 0.0, "tau": tau}
    return q.CorrelationFunction(times=np.array([0.0]), sites=sites,
                                 values=s, meta=meta)


def test_fit_exact_exponential():
    corr = _synthetic_corr(2.0)
    fit = q.fit_spatial_decay(corr, 0.0, window=(2, 8),
                              divide_log_factor=False)
    assert fit.rate == pytest.approx(2.0, abs=1e-6)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.xi_fit == pytest.approx(0.5, abs=1e-6)
    assert fit.theorem_rate == pytest.approx(abs(math.log(0.1)))


def test_fit_divides_out_log_factor():
    corr = _synthetic_corr(1.3, with_log_factor=True)
    fit = q.fit_spatial_decay(corr, 0.0, window=(2, 8))
    assert fit.rate == pytest.approx(1.3, abs=1e-6)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-10)


def test_fit_rejects_ultralocal():
    p = q.ModelParams(L=12, beta=6.0)
    spd = q.diagonalize(p)
    corr = q.compute_correlation(p, spd, [0.0])
    with pytest.raises(q.FitError):
        q.fit_spatial_decay(corr, 0.0, window=(2, 8))


def test_fit_window_too_narrow():
    corr = _synthetic_corr(1.0)
    with pytest.raises(q.FitError):
        q.fit_spatial_decay(corr, 0.0, window=(2, 4))


def test_temporal_decay_free_case():
    p = q.ModelParams(L=8, beta=10.0)
    spd = q.diagonalize(p)
    times = [0.0, 0.5, 1.0, 2.0, 4.0, -0.5, -2.0]
    corr = q.compute_correlation(p, spd, times)
    td = q.fit_temporal_decay(corr, 1, 1)
    assert td.tail_monotone
    assert all(np.isfinite(v) for v in td.constants.values())
    assert set(td.constants) == {1, 2, 3}
    # x = 1 pair: delta = 2^(-tau)
    assert td.delta == pytest.approx((1 + 1) ** -1.5)


def test_temporal_decay_needs_samples():
    p = q.ModelParams(L=8, beta=10.0)
    spd = q.diagonalize(p)
    corr = q.compute_correlation(p, spd, [0.0, 1.0])
    with pytest.raises(q.FitError):
        q.fit_temporal_decay(corr, 0, 0)


def test_temporal_decay_interacting_bounded():
    p = q.ModelParams(L=8, beta=10.0, eps=0.1, U=0.1)
    spd = q.diagonalize(p)
    times = [0.0, 0.6, 1.2, 2.4, 4.8, -1.2, -4.8]
    corr = q.compute_correlation(p, spd, times)
    td = q.fit_temporal_decay(corr, 0, 2)
    # no blow-up across the tested powers
    assert max(td.constants.values()) < 100.0


def test_phase_scan_small_grid():
    grid = q.phase_scan([0.0, 0.2], [0.0], [60, 120], 6.0, mb_L=6)
    assert set(grid) == {(0.0, 0.0), (0.2, 0.0)}
    origin = grid[(0.0, 0.0)]
    assert origin.decay_rate == math.inf
    assert origin.error is None
    loc = grid[(0.2, 0.0)]
    assert loc.verdict == "localized"
    assert loc.lyapunov > 0.5


def test_phase_scan_extended_side():
    grid = q.phase_scan([0.6], [0.0], [100, 200], 6.0, mb_L=6)
    pt = grid[(0.6, 0.0)]
    assert pt.verdict == "extended"
    assert abs(pt.lyapunov) < 0.05


def test_phase_scan_captures_point_errors():
    # beta <= 0 is rejected per point, not fatally
    grid = q.phase_scan([0.1], [0.0], [40], -1.0)
    pt = grid[(0.1, 0.0)]
    assert pt.verdict == "error"
    assert "beta" in pt.error


def test_phase_scan_order_invariant():
    a = q.phase_scan([0.0, 0.2], [0.0], [60], 6.0, mb_L=6)
    b = q.phase_scan([0.2, 0.0], [0.0], [60], 6.0, mb_L=6)
    for key in a:
        assert a[key].decay_rate == b[key].decay_rate
        assert a[key].median_ipr == b[key].median_ipr
