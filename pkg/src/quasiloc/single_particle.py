"""Non-interacting layer: almost-Mathieu diagnostics and the free imaginary-time propagator.

The chain lives on sites x in {-L/2, ..., L/2} with open (Dirichlet) ends,
on-site potential phi_x = u cos 2 pi (omega x + theta) and hopping -eps.  The
free propagator gbar(x, t) is evaluated in closed form; truncated Matsubara
sums exist only as test oracles for the regularized limit.
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .cutoffs import smooth_cutoff
from .diophantine import DiophantineFrequency, golden_frequency


@dataclass(frozen=True)
class ModelParams:
    """Full parameter record of the interacting chain.

    The chemical potential mu = u cos 2 pi (omega x_hat + theta) + nu is always
    derived from (x_hat, nu), never stored, so the two cannot drift apart.
    """
    L: int
    beta: float
    eps: float = 0.0
    u: float = 1.0
    U: float = 0.0
    omega: DiophantineFrequency = None
    theta: float = 0.2377
    x_hat: int = 2
    nu: float = 0.0
    M: int = 20

    def __post_init__(self):
        if self.omega is None:
            object.__setattr__(self, "omega", golden_frequency())
        elif isinstance(self.omega, (int, float)):
            object.__setattr__(
                self, "omega", DiophantineFrequency.certify(float(self.omega)))
        if self.L <= 0 or self.L % 2 != 0:
            raise ValueError("L must be a positive even integer")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self.theta == 0.0:
            raise ValueError("theta must be non-vanishing")
        if self.x_hat == 0:
            raise ValueError("x_hat must be non-vanishing")
        if abs(self.x_hat) > self.L // 2:
            raise ValueError("x_hat must lie in the lattice")
        if self.v0 == 0.0:
            raise ValueError("sin 2 pi (omega x_hat + theta) must not vanish")

    @property
    def n_sites(self):
        return self.L + 1

    @property
    def sites(self):
        return np.arange(-self.L // 2, self.L // 2 + 1)

    @property
    def omega_value(self):
        return self.omega.omega

    @property
    def mu0(self):
        """Chemical potential of the free reference, u cos 2 pi (omega x_hat + theta)."""
        return self.u * math.cos(2.0 * math.pi *
                                 (self.omega_value * self.x_hat + self.theta))

    @property
    def mu(self):
        return self.mu0 + self.nu

    @property
    def v0(self):
        return math.sin(2.0 * math.pi *
                        (self.omega_value * self.x_hat + self.theta))

    def with_nu(self, nu):
        d = asdict(self)
        d["nu"] = nu
        d["omega"] = self.omega
        return ModelParams(**d)

    def to_dict(self):
        """JSON-friendly snapshot used in output headers and metadata."""
        return {
            "L": self.L, "beta": self.beta, "eps": self.eps, "u": self.u,
            "U": self.U, "omega": self.omega_value, "tau": self.omega.tau,
            "theta": self.theta, "x_hat": self.x_hat, "nu": self.nu,
            "M": self.M,
        }


def onsite_potential(u, omega, theta, x):
    """u cos 2 pi (omega x + theta); standalone so arbitrary (u, theta) can be probed."""
    if isinstance(omega, DiophantineFrequency):
        omega = omega.omega
    return u * np.cos(2.0 * math.pi * (omega * np.asarray(x, dtype=float) + theta))


def onsite_energy(params, x):
    x_arr = np.asarray(x)
    if np.any(np.abs(x_arr) > params.L // 2):
        raise ValueError("site outside lattice")
    return onsite_potential(params.u, params.omega_value, params.theta, x)


def build_single_particle_matrix(params):
    """Symmetric tridiagonal (L+1)x(L+1) matrix: onsite energies on the diagonal,
    -eps on nearest neighbors, no wraparound (open ends)."""
    diag = onsite_energy(params, params.sites)
    n = params.n_sites
    h = np.diag(np.asarray(diag, dtype=float))
    off = -params.eps * np.ones(n - 1)
    h += np.diag(off, 1) + np.diag(off, -1)
    return h


def single_particle_spectrum(params):
    """Eigenvalues (ascending) and orthonormal eigenvectors of the open chain."""
    diag = np.asarray(onsite_energy(params, params.sites), dtype=float)
    off = -params.eps * np.ones(params.n_sites - 1)
    return eigh_tridiagonal(diag, off)


def fermi_occupation(delta, beta):
    """1 / (exp(beta * delta) + 1), evaluated stably for large |beta * delta|."""
    return 0.5 * (1.0 - np.tanh(0.5 * beta * np.asarray(delta, dtype=float)))


def propagator_kernel(delta, beta, t):
    """Time kernel of a single fermionic level at energy delta above mu.

    exp(-delta t)(1 - n) for t > 0, -exp(-delta t) n for t < 0, and the mean of
    the one-sided limits (1 - 2n)/2 at t = 0.  Written through logaddexp so no
    intermediate exponential overflows.
    """
    delta = np.asarray(delta, dtype=float)
    if t > 0.0:
        return np.exp(-np.logaddexp(delta * t, -delta * (beta - t)))
    if t < 0.0:
        return -np.exp(-np.logaddexp(delta * (beta + t), delta * t))
    return 0.5 * np.tanh(0.5 * beta * delta)


def free_propagator(params, x, t):
    """gbar(x, t) of the eps = U = 0 chain for |t| < beta.

    The full two-point function carries an additional delta_{x,y}; the caller
    is responsible for the off-diagonal zero.
    """
    if abs(t) >= params.beta:
        raise ValueError("time difference must satisfy |t| < beta")
    delta = onsite_energy(params, x) - params.mu
    return propagator_kernel(delta, params.beta, t)


def matsubara_propagator_sum(params, x, t, M, cutoff_gamma=1.5):
    """Truncated Matsubara sum for gbar(x, t) with a smooth frequency cutoff.

    (1/beta) sum over fermionic k0 with chi(gamma^-M |k0|) > 0 of
    exp(-i k0 t) / (-i k0 + delta).  Test oracle for the closed form; the sum
    is real by the k0 -> -k0 symmetry.
    """
    beta = params.beta
    delta = float(onsite_energy(params, x) - params.mu)
    k_max = cutoff_gamma ** (M + 1)
    n_max = int(math.floor(k_max * beta / (2.0 * math.pi) - 0.5))
    n0 = np.arange(0, n_max + 1)
    k0 = (2.0 * math.pi / beta) * (n0 + 0.5)
    chi = smooth_cutoff(k0 / cutoff_gamma ** M, cutoff_gamma)
    terms = chi * (delta * np.cos(k0 * t) + k0 * np.sin(k0 * t)) / (k0 ** 2 + delta ** 2)
    return (2.0 / beta) * float(np.sum(terms))


def tadpole_nu_tilde(params, x):
    """Half the jump of gbar across t = 0, from the closed-form one-sided limits.

    This equals the mean-of-limits regularized equal-time value minus the
    t -> 0- (density) value; the truncated Matsubara sum is the oracle pinning
    this convention.
    """
    delta = onsite_energy(params, x) - params.mu
    g_plus = 1.0 - fermi_occupation(delta, params.beta)   # t -> 0+
    g_minus = -fermi_occupation(delta, params.beta)       # t -> 0-
    return 0.5 * (g_plus - g_minus)


def tadpole_counterterm(params, x):
    """nu_C(x) = U (nu_tilde(x+1) + nu_tilde(x-1)); missing neighbors at the
    open ends contribute 0."""
    half = params.L // 2
    out = 0.0
    for y in (x + 1, x - 1):
        if -half <= y <= half:
            out += tadpole_nu_tilde(params, y)
    return params.U * out


def transfer_matrix(E, eps, u, omega, theta, x):
    """2x2 transfer matrix [[(phi_x - E)/eps, -1], [1, 0]] of the difference equation."""
    if eps == 0.0:
        raise ValueError("transfer matrix undefined at eps = 0")
    phi = onsite_potential(u, omega, theta, x)
    return np.array([[(phi - E) / eps, -1.0], [1.0, 0.0]])


def lyapunov_exponent(E, eps, u, omega, theta, n_steps, psi0=(1.0, 0.0),
                      renorm_every=16):
    """Growth rate of the transfer-matrix cocycle along the orbit x = 0, 1, 2, ...

    The running vector is renormalized every few steps to avoid overflow;
    the accumulated log norms divided by n_steps estimate the exponent.
    """
    if eps == 0.0:
        raise ValueError("transfer matrix undefined at eps = 0")
    if n_steps < 10 ** 3:
        raise ValueError("n_steps must be >= 1000")
    if isinstance(omega, DiophantineFrequency):
        omega = omega.omega
    inv_eps = 1.0 / eps
    two_pi_omega = 2.0 * math.pi * omega
    two_pi_theta = 2.0 * math.pi * theta
    psi_cur, psi_old = float(psi0[0]), float(psi0[1])
    log_sum = 0.0
    cos = math.cos
    for x in range(n_steps):
        a = inv_eps * (u * cos(two_pi_omega * x + two_pi_theta) - E)
        psi_cur, psi_old = a * psi_cur - psi_old, psi_cur
        if (x + 1) % renorm_every == 0:
            scale = max(abs(psi_cur), abs(psi_old))
            if scale > 0.0:
                log_sum += math.log(scale)
                psi_cur /= scale
                psi_old /= scale
    scale = max(abs(psi_cur), abs(psi_old))
    if scale > 0.0:
        log_sum += math.log(scale)
    return log_sum / n_steps


def eigenstate_localization(eigvec, threshold=1e-12):
    """Localization length xi and inverse participation ratio of a normalized state.

    xi = -1/slope of the least-squares line of log|psi| against the distance
    from the peak, restricted to amplitudes above threshold.  Fewer than 4
    usable sites (or 2 distinct distances) means the fit is degenerate and xi
    is reported as 0.
    """
    psi = np.abs(np.asarray(eigvec, dtype=float))
    ipr = float(np.sum(psi ** 4))
    peak = int(np.argmax(psi))
    mask = psi > threshold
    if int(np.sum(mask)) < 4:
        return 0.0, ipr
    d = np.abs(np.arange(psi.size) - peak)[mask].astype(float)
    if np.unique(d).size < 2:
        return 0.0, ipr
    slope, _ = np.polyfit(d, np.log(psi[mask]), 1)
    if slope >= 0.0:
        return math.inf, ipr
    return -1.0 / slope, ipr


def localization_table(params):
    """Per-eigenstate (energy, xi, ipr) for the open chain."""
    evals, evecs = single_particle_spectrum(params)
    rows = []
    for k in range(evals.size):
        xi, ipr = eigenstate_localization(evecs[:, k])
        rows.append((float(evals[k]), xi, ipr))
    return rows


def one_body_two_point(params, x, y, t):
    """Free-fermion two-point function from the one-body eigenpairs only.

    Independent of the many-body machinery: exact at U = 0 for any eps.
    """
    if abs(t) >= params.beta:
        raise ValueError("time difference must satisfy |t| < beta")
    evals, evecs = single_particle_spectrum(params)
    half = params.L // 2
    ix, iy = x + half, y + half
    kern = propagator_kernel(evals - params.mu, params.beta, t)
    return float(np.sum(evecs[ix, :] * evecs[iy, :] * kern))


def one_body_correlation_matrix(params, t):
    """All-pairs version of one_body_two_point."""
    if abs(t) >= params.beta:
        raise ValueError("time difference must satisfy |t| < beta")
    evals, evecs = single_particle_spectrum(params)
    kern = propagator_kernel(evals - params.mu, params.beta, t)
    return (evecs * kern) @ evecs.T


def free_density(params, mu=None):
    """Mean filling of the U = 0 chain at chemical potential mu (default params.mu)."""
    if mu is None:
        mu = params.mu
    evals, _ = single_particle_spectrum(params)
    return float(np.mean(fermi_occupation(evals - mu, params.beta)))
