import math

import numpy as np
import pytest

import quasiloc as q


@pytest.fixture(scope="module")
def params():
    return q.ModelParams(L=8, beta=10.0, eps=0.1)


def test_params_validation():
    with pytest.raises(ValueError):
        q.ModelParams(L=7, beta=1.0)          # odd L
    with pytest.raises(ValueError):
        q.ModelParams(L=8, beta=-1.0)
    with pytest.raises(ValueError):
        q.ModelParams(L=8, beta=1.0, theta=0.0)
    with pytest.raises(ValueError):
        q.ModelParams(L=8, beta=1.0, x_hat=0)
    with pytest.raises(ValueError):
        q.ModelParams(L=8, beta=1.0, x_hat=9)


def test_mu_derived_not_stored(params):
    assert params.mu == pytest.approx(params.mu0)
    shifted = params.with_nu(0.25)
    assert shifted.mu == pytest.approx(params.mu0 + 0.25)
    assert shifted.mu0 == pytest.approx(params.mu0)


def test_onsite_energy_matches_cosine(params):
    om = params.omega_value
    for x in (-4, 0, 3):
        expect = math.cos(2 * math.pi * (om * x + params.theta))
        assert q.onsite_energy(params, x) == pytest.approx(expect)
    with pytest.raises(ValueError):
        q.onsite_energy(params, 5)


def test_spectrum_matches_dense_matrix(params):
    h = q.build_single_particle_matrix(params)
    evals, evecs = q.single_particle_spectrum(params)
    np.testing.assert_allclose(np.linalg.eigvalsh(h), evals, atol=1e-12)
    np.testing.assert_allclose(h @ evecs, evecs * evals, atol=1e-12)


def test_fermi_occupation_limits():
    assert q.fermi_occupation(0.0, 10.0) == pytest.approx(0.5)
    assert q.fermi_occupation(500.0, 10.0) == pytest.approx(0.0, abs=1e-300)
    assert q.fermi_occupation(-500.0, 10.0) == pytest.approx(1.0)
    # no overflow for huge arguments
    assert np.isfinite(q.fermi_occupation(1e6, 100.0))


def test_free_propagator_closed_form(params):
    beta = params.beta
    x = 1
    delta = q.onsite_energy(params, x) - params.mu
    n = q.fermi_occupation(delta, beta)
    assert q.free_propagator(params, x, 2.0) == pytest.approx(
        math.exp(-delta * 2.0) * (1.0 - n))
    assert q.free_propagator(params, x, -2.0) == pytest.approx(
        -math.exp(-delta * -2.0) * n)
    assert q.free_propagator(params, x, 0.0) == pytest.approx(0.5 * (1 - 2 * n))
    with pytest.raises(ValueError):
        q.free_propagator(params, x, beta)


def test_free_propagator_kms(params):
    beta = params.beta
    for x in (-2, 0, 2):
        for t in (1.0, 3.3, 7.0):
            a = q.free_propagator(params, x, t - beta)
            b = q.free_propagator(params, x, t)
            assert a + b == pytest.approx(0.0, abs=1e-14)


def test_free_propagator_stable_at_large_beta_delta():
    p = q.ModelParams(L=8, beta=5000.0)
    for x in p.sites:
        for t in (0.0, 2000.0, -2000.0):
            g = q.free_propagator(p, int(x), t)
            assert np.isfinite(g)
            assert abs(g) <= 1.0


def test_matsubara_sum_converges_to_closed_form():
    p = q.ModelParams(L=8, beta=4.0)
    for x, t in ((1, 0.7), (2, -1.1), (0, 1.9)):
        exact = q.free_propagator(p, x, t)
        approx = q.matsubara_propagator_sum(p, x, t, M=26)
        assert approx == pytest.approx(exact, abs=5e-4)


def test_matsubara_sum_pins_equal_time_convention():
    # the truncated frequency sum converges to the mean of the one-sided
    # limits at t = 0, which fixes the tadpole normalization
    p = q.ModelParams(L=8, beta=4.0)
    for x in (0, 1, -3):
        exact = q.free_propagator(p, x, 0.0)
        approx = q.matsubara_propagator_sum(p, x, 0.0, M=26)
        assert approx == pytest.approx(exact, abs=5e-4)


def test_tadpole_nu_tilde_is_half(params):
    # half the jump of gbar across t = 0 is 1/2 identically
    for x in (-3, 0, 2):
        assert q.tadpole_nu_tilde(params, x) == pytest.approx(0.5)


def test_tadpole_counterterm_boundaries():
    p = q.ModelParams(L=8, beta=10.0, U=0.3)
    # bulk site: both neighbors contribute
    assert q.tadpole_counterterm(p, 0) == pytest.approx(0.3 * 1.0)
    # edge site: one missing neighbor
    assert q.tadpole_counterterm(p, 4) == pytest.approx(0.3 * 0.5)
    assert q.tadpole_counterterm(p, -4) == pytest.approx(0.3 * 0.5)


def test_transfer_matrix_determinant():
    m = q.transfer_matrix(0.3, 0.2, 1.0, q.GOLDEN_MEAN, 0.2377, 5)
    assert np.linalg.det(m) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        q.transfer_matrix(0.3, 0.0, 1.0, q.GOLDEN_MEAN, 0.2377, 5)


def test_lyapunov_localized_value():
    # localized regime: exponent = log(u / (2 eps)) at spectrum energies
    lam = q.lyapunov_exponent(0.0, 0.2, 1.0, q.GOLDEN_MEAN, 0.2377, 10 ** 5)
    assert lam == pytest.approx(math.log(1.0 / 0.4), rel=0.02)


def test_lyapunov_extended_value():
    lam = q.lyapunov_exponent(0.0, 0.6, 1.0, q.GOLDEN_MEAN, 0.2377, 10 ** 5)
    assert abs(lam) < 0.02


def test_lyapunov_input_checks():
    with pytest.raises(ValueError):
        q.lyapunov_exponent(0.0, 0.0, 1.0, q.GOLDEN_MEAN, 0.2377, 10 ** 4)
    with pytest.raises(ValueError):
        q.lyapunov_exponent(0.0, 0.2, 1.0, q.GOLDEN_MEAN, 0.2377, 10)


def test_eigenstate_localization_synthetic():
    x = np.arange(-40, 41)
    psi = np.exp(-np.abs(x) / 3.0)
    psi /= np.linalg.norm(psi)
    xi, ipr = q.eigenstate_localization(psi)
    assert xi == pytest.approx(3.0, rel=1e-6)
    assert 0.0 < ipr <= 1.0
    # uniform state: degenerate fit reported as infinite length
    flat = np.full(81, 1.0 / 9.0)
    xi_flat, ipr_flat = q.eigenstate_localization(flat)
    assert xi_flat == math.inf
    assert ipr_flat == pytest.approx(np.sum(flat ** 4))


def test_localization_table_shape(params):
    rows = q.localization_table(params)
    assert len(rows) == params.n_sites
    energies = [r[0] for r in rows]
    assert energies == sorted(energies)


def test_one_body_two_point_reduces_to_free_at_eps_zero():
    p = q.ModelParams(L=8, beta=6.0)
    for t in (0.0, 1.3, -2.1):
        for x in (-2, 0, 3):
            assert q.one_body_two_point(p, x, x, t) == pytest.approx(
                q.free_propagator(p, x, t), abs=1e-12)
            # no hopping: strictly diagonal in space
            assert q.one_body_two_point(p, x, x + 1, t) == pytest.approx(
                0.0, abs=1e-12)


def test_one_body_matrix_matches_scalar(params):
    m = q.one_body_correlation_matrix(params, 1.7)
    half = params.L // 2
    for x, y in ((0, 0), (-2, 3), (1, -1)):
        assert m[x + half, y + half] == pytest.approx(
            q.one_body_two_point(params, x, y, 1.7), abs=1e-13)


def test_free_density_monotone_in_mu(params):
    mus = np.linspace(params.mu0 - 1.0, params.mu0 + 1.0, 9)
    dens = [q.free_density(params, m) for m in mus]
    assert all(b >= a for a, b in zip(dens, dens[1:]))
    assert 0.0 <= dens[0] <= dens[-1] <= 1.0
