import math

import numpy as np
import pytest

import quasiloc as q
from quasiloc.diophantine import (exact_fractional_part,
                                  exact_convergent_denominators)


def test_torus_norm_basic():
    assert q.torus_norm(0.3) == pytest.approx(0.3)
    assert q.torus_norm(0.7) == pytest.approx(0.3)
    assert q.torus_norm(-1.2) == pytest.approx(0.2)
    assert q.torus_norm(5.0) == 0.0
    np.testing.assert_allclose(q.torus_norm([0.25, 1.75]), [0.25, 0.25])


def test_torus_norm_rejects_non_finite():
    with pytest.raises(ValueError):
        q.torus_norm(float("nan"))
    with pytest.raises(ValueError):
        q.torus_norm(float("inf"))


def test_golden_continued_fraction_all_ones():
    pq = q.continued_fraction(q.GOLDEN_MEAN, 20)
    assert pq == [1] * 20


def test_silver_continued_fraction_all_twos():
    pq = q.continued_fraction(q.SILVER_MEAN, 15)
    assert pq == [2] * 15


def test_rational_frequency_detected():
    with pytest.raises(q.RationalFrequencyError):
        q.continued_fraction(0.5, 10)
    with pytest.raises(q.RationalFrequencyError):
        q.continued_fraction(3.0 / 7.0, 30)


def test_convergents_are_fibonacci_for_golden():
    pq = q.continued_fraction(q.GOLDEN_MEAN, 10)
    cs = q.convergents(pq)
    qs = [c[1] for c in cs]
    assert qs == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    # convergent property |omega - p/q| < 1/q^2
    for p, qd in cs:
        assert abs(q.GOLDEN_MEAN - p / qd) < 1.0 / qd ** 2


def test_frequency_constant_positive_and_stable():
    # enlarging the scan range can only decrease the minimum
    c_small = q.frequency_diophantine_constant(q.GOLDEN_MEAN, 1.5, 10 ** 3)
    c_large = q.frequency_diophantine_constant(q.GOLDEN_MEAN, 1.5, 10 ** 5)
    assert 0.0 < c_large <= c_small
    # tau = 1.5 > 1: golden minimum is attained at x = 1
    c, arg = q.frequency_diophantine_constant(q.GOLDEN_MEAN, 1.5, 10 ** 4,
                                              return_argmin=True)
    assert arg == 1
    assert c == pytest.approx(q.torus_norm(q.GOLDEN_MEAN), rel=1e-12)


def test_phase_constant_gap_case_vanishes():
    # 2 theta = 3 omega makes ||omega x - 2 theta|| hit zero at x = 3
    theta = 1.5 * q.GOLDEN_MEAN
    c = q.phase_diophantine_constant(q.GOLDEN_MEAN, theta, 1.5, 100)
    assert c == pytest.approx(0.0, abs=1e-12)


def test_phase_constant_generic_positive():
    c = q.phase_diophantine_constant(q.GOLDEN_MEAN, 0.2377, 1.5, 10 ** 4)
    assert c > 0.0


def test_certify_roundtrip():
    freq = q.DiophantineFrequency.certify(q.GOLDEN_MEAN, tau=1.5,
                                          q_max=10 ** 4, thetas=(0.2377,))
    assert freq.check_convergents()
    assert freq.c0_freq > 0.0
    assert freq.c0_phase[0.2377] > 0.0
    assert freq.tau == 1.5


def test_certify_rejects_tau_at_most_one():
    with pytest.raises(ValueError):
        q.DiophantineFrequency.certify(q.GOLDEN_MEAN, tau=1.0)


def test_exact_fractional_part_matches_float_for_small_x():
    for x in (1, 7, 144):
        expect = q.GOLDEN_MEAN * x
        expect -= round(expect)
        assert exact_fractional_part(q.GOLDEN_MEAN, x) == pytest.approx(
            expect, abs=1e-12)


def test_exact_convergent_denominators_reach_tiny_values():
    pairs = exact_convergent_denominators(q.GOLDEN_MEAN, 10 ** 12)
    qs = [p[0] for p in pairs]
    assert qs[:6] == [1, 2, 3, 5, 8, 13]
    # the fractional parts shrink below anything the float product resolves
    assert min(abs(p[1]) for p in pairs) < 1e-11
    # alternating signs of q*omega - p along the expansion
    signs = [math.copysign(1, p[1]) for p in pairs[:10]]
    assert signs == [(-1.0) ** (k + 1) for k in range(10)]
