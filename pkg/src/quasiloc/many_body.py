"""Exact grand-canonical layer: Fock basis, Hamiltonian, Lehmann two-point function.

Sites map to bits (site x <-> bit x + L/2); sectors of fixed particle number
are diagonalized densely so Lehmann sums run over complete spectra.  Energies
entering any exponential are shifted by the global ground value of E - mu N,
which leaves all observables invariant and keeps every weight in (0, 1].
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh

from .single_particle import onsite_energy, tadpole_counterterm


class IncompleteSpectralDataError(RuntimeError):
    """Lehmann sums need every particle-number sector."""


@dataclass(frozen=True)
class FockSector:
    """Ordered occupation-mask basis of a fixed particle number."""
    n_particles: int
    n_sites: int
    states: np.ndarray
    index_of: dict = field(repr=False)

    def __len__(self):
        return self.states.size


def enumerate_sector(L, n_particles):
    n_sites = L + 1
    if not 0 <= n_particles <= n_sites:
        raise ValueError("n_particles outside [0, L+1]")
    masks = sorted(
        sum(1 << b for b in combo)
        for combo in itertools.combinations(range(n_sites), n_particles))
    states = np.array(masks, dtype=np.int64)
    return FockSector(n_particles=n_particles, n_sites=n_sites, states=states,
                      index_of={m: i for i, m in enumerate(masks)})


def _occupancy(sector):
    """(dim, n_sites) 0/1 array of bit occupations."""
    bits = np.arange(sector.n_sites)
    return (sector.states[:, None] >> bits[None, :]) & 1


def build_hamiltonian(params, sector, include_counterterms=False):
    """Sparse symmetric Hamiltonian block of one particle-number sector.

    Diagonal: sum_x phi_x n_x plus the two-sided-delta pair term, which counts
    every bond twice (coefficient 2U per bond).  Hopping -eps between
    neighbors, open ends.  With include_counterterms the one-body nu + nu_C(x)
    term joins the diagonal.
    """
    occ = _occupancy(sector)
    phi = np.asarray(onsite_energy(params, params.sites), dtype=float)
    if include_counterterms:
        phi = phi + params.nu + np.array(
            [tadpole_counterterm(params, x) for x in params.sites])
    diag = occ @ phi
    if params.U != 0.0:
        diag = diag + 2.0 * params.U * np.sum(occ[:, :-1] * occ[:, 1:], axis=1)

    rows, cols, vals = [], [], []
    dim = len(sector)
    rows.extend(range(dim))
    cols.extend(range(dim))
    vals.extend(diag.tolist())
    if params.eps != 0.0:
        index_of = sector.index_of
        for i, mask in enumerate(sector.states.tolist()):
            for b in range(sector.n_sites - 1):
                pair = 0b11 << b
                # exactly one of the two neighboring sites occupied
                if bin(mask & pair).count("1") == 1:
                    j = index_of[mask ^ pair]
                    if j > i:
                        # adjacent hop: no occupied sites in between, sign +1
                        rows.extend((i, j))
                        cols.extend((j, i))
                        vals.extend((-params.eps, -params.eps))
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def annihilation_matrix(sector_n, sector_np1, x_bit):
    """Matrix of a_x from the (N+1)-sector to the N-sector, occupation basis.

    Convention: removing (or adding) a particle at bit b carries the sign
    (-1)^(number of occupied bits below b).
    """
    bit = 1 << x_bit
    below = bit - 1
    rows, cols, vals = [], [], []
    index_of = sector_n.index_of
    for j, mask in enumerate(sector_np1.states.tolist()):
        if mask & bit:
            sign = -1.0 if bin(mask & below).count("1") % 2 else 1.0
            rows.append(index_of[mask ^ bit])
            cols.append(j)
            vals.append(sign)
    return sp.csr_matrix((vals, (rows, cols)),
                         shape=(len(sector_n), len(sector_np1)))


@dataclass
class SpectralDecomposition:
    """Complete per-sector eigen-decomposition of the many-body Hamiltonian.

    Eigenvalues are stored raw (no chemical potential); everything
    mu-dependent is assembled on demand so the counterterm search can reweight
    one decomposition instead of rediagonalizing.
    """
    params: object
    sectors: list
    energies: list
    vectors: list
    include_counterterms: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_sectors(self):
        return len(self.sectors)

    def _require_complete(self):
        if self.n_sectors != self.params.n_sites + 1:
            raise IncompleteSpectralDataError(
                f"need {self.params.n_sites + 1} sectors, have {self.n_sectors}")

    def grand_energies(self, mu):
        return [e - mu * s.n_particles
                for e, s in zip(self.energies, self.sectors)]

    def ground_shift(self, mu):
        """Global minimum of E - mu N, subtracted before any exponential."""
        return min(float(np.min(k)) for k in self.grand_energies(mu))

    def shifted_energies(self, mu):
        k0 = self.ground_shift(mu)
        return [k - k0 for k in self.grand_energies(mu)]

    def sector_weights(self, mu):
        beta = self.params.beta
        return [np.exp(-beta * k) for k in self.shifted_energies(mu)]

    def partition_function(self, mu):
        return sum(float(np.sum(w)) for w in self.sector_weights(mu))

    def sector_probabilities(self, mu=None):
        if mu is None:
            mu = self.params.mu
        w = self.sector_weights(mu)
        z = sum(float(np.sum(wi)) for wi in w)
        return np.array([float(np.sum(wi)) / z for wi in w])

    def a_eigen(self, n, x):
        """a_x between sectors (n, n+1), rotated to the eigenbases (cached)."""
        key = ("a_eigen", n, x)
        if key not in self._cache:
            half = self.params.L // 2
            a = annihilation_matrix(self.sectors[n], self.sectors[n + 1],
                                    x + half)
            self._cache[key] = self.vectors[n].T @ (a @ self.vectors[n + 1])
        return self._cache[key]

    def a_occ(self, n, x):
        """a_x between sectors (n, n+1) in the occupation basis (cached, sparse)."""
        key = ("a_occ", n, x)
        if key not in self._cache:
            half = self.params.L // 2
            self._cache[key] = annihilation_matrix(
                self.sectors[n], self.sectors[n + 1], x + half).tocoo()
        return self._cache[key]

    def sector_boltzmann(self, n):
        """V diag(exp(-beta (E - E_min))) V^T of sector n, occupation basis (cached)."""
        key = ("boltz", n)
        if key not in self._cache:
            e = self.energies[n]
            w = np.exp(-self.params.beta * (e - float(np.min(e))))
            v = self.vectors[n]
            self._cache[key] = (v * w) @ v.T
        return self._cache[key]

    def _sector_scale(self, n, mu):
        """Scalar relating sector_boltzmann(n) to the mu-shifted weights."""
        e_min = float(np.min(self.energies[n]))
        k0 = self.ground_shift(mu)
        return math.exp(-self.params.beta *
                        (e_min - mu * self.sectors[n].n_particles - k0))

    def residual_norm(self, n):
        """max_k ||H v_k - E_k v_k|| / ||H|| for sector n (diagnostic)."""
        h = build_hamiltonian(self.params, self.sectors[n],
                              self.include_counterterms).toarray()
        r = h @ self.vectors[n] - self.vectors[n] * self.energies[n]
        hnorm = max(np.linalg.norm(h, 2), 1e-300)
        return float(np.max(np.linalg.norm(r, axis=0))) / hnorm


def diagonalize(params, include_counterterms=False):
    """Dense eigh of every particle-number sector."""
    sectors, energies, vectors = [], [], []
    for n in range(params.n_sites + 1):
        sec = enumerate_sector(params.L, n)
        h = build_hamiltonian(params, sec, include_counterterms).toarray()
        e, v = eigh(h)
        sectors.append(sec)
        energies.append(e)
        vectors.append(v)
    return SpectralDecomposition(params=params, sectors=sectors,
                                 energies=energies, vectors=vectors,
                                 include_counterterms=include_counterterms)


def _branch_scalar(spectral, mu, x, y, t, branch):
    """One time-ordering branch of the Lehmann sum for S2(x, y, t).

    branch '+': t in [0, beta), the a a+ ordering.
    branch '-': t in (-beta, 0], minus the a+ a ordering.
    """
    params = spectral.params
    beta = params.beta
    shifted = spectral.shifted_energies(mu)
    z = spectral.partition_function(mu)
    total = 0.0
    for n in range(spectral.n_sectors - 1):
        ax = spectral.a_eigen(n, x)
        ay = ax if y == x else spectral.a_eigen(n, y)
        if branch == "+":
            wr = np.exp(-(beta - t) * shifted[n])
            wc = np.exp(-t * shifted[n + 1])
            total += float(wr @ (ax * ay) @ wc)
        else:
            wr = np.exp(t * shifted[n])
            wc = np.exp(-(beta + t) * shifted[n + 1])
            total -= float(wr @ (ay * ax) @ wc)
    return total / z


def two_point_function(params, spectral, x, y, t, mu=None):
    """Imaginary-time-ordered two-point function S2(x, y; t), Lehmann form.

    At t = 0 the mean of the two one-sided limits is returned, matching the
    regularized equal-time convention of the free propagator.
    """
    if abs(t) >= params.beta:
        raise ValueError("time difference must satisfy |t| < beta")
    spectral._require_complete()
    if mu is None:
        mu = params.mu
    if t > 0.0:
        return _branch_scalar(spectral, mu, x, y, t, "+")
    if t < 0.0:
        return _branch_scalar(spectral, mu, x, y, t, "-")
    return 0.5 * (_branch_scalar(spectral, mu, x, y, 0.0, "+")
                  + _branch_scalar(spectral, mu, x, y, 0.0, "-"))


def _coo_trace(dense, coo):
    """sum_{ij} dense[i, j] * coo[j, i] without forming products of matrices."""
    return float(np.sum(dense[coo.col, coo.row] * coo.data))


def equal_time_matrix(params, spectral, mu=None):
    """All-pairs S2(x, y; 0) (mean-of-limits convention), occupation-basis route.

    At equal time one side of each branch carries unit weights, so only one
    dense Boltzmann matrix per sector is needed and every (x, y) entry reduces
    to a sparse-sparse trace.
    """
    spectral._require_complete()
    if mu is None:
        mu = params.mu
    ns = params.n_sites
    z = spectral.partition_function(mu)
    s = np.zeros((ns, ns))
    for n in range(spectral.n_sectors - 1):
        bn = spectral.sector_boltzmann(n) * spectral._sector_scale(n, mu)
        bnp = spectral.sector_boltzmann(n + 1) * spectral._sector_scale(n + 1, mu)
        axs = [spectral.a_occ(n, x) for x in params.sites]
        for ix in range(ns):
            ax = axs[ix]
            for iy in range(ns):
                ay = axs[iy]
                # + branch, t -> 0+: rows Boltzmann(N), columns identity
                g = (ax @ ay.T).tocoo()
                plus = _coo_trace(bn, g)
                # - branch, t -> 0-: rows identity, columns Boltzmann(N+1)
                g2 = (ay.T @ ax).tocoo()
                minus = -_coo_trace(bnp, g2)
                s[ix, iy] += 0.5 * (plus + minus) / z
    return s


def correlation_matrix(params, spectral, t, mu=None):
    """All-pairs S2(x, y; t) for one time difference."""
    if abs(t) >= params.beta:
        raise ValueError("time difference must satisfy |t| < beta")
    spectral._require_complete()
    if mu is None:
        mu = params.mu
    if t == 0.0:
        return equal_time_matrix(params, spectral, mu)
    ns = params.n_sites
    beta = params.beta
    shifted = spectral.shifted_energies(mu)
    z = spectral.partition_function(mu)
    s = np.zeros((ns, ns))
    for n in range(spectral.n_sectors - 1):
        vn, vnp = spectral.vectors[n], spectral.vectors[n + 1]
        if t > 0.0:
            r = (vn * np.exp(-(beta - t) * shifted[n])) @ vn.T
            q = (vnp * np.exp(-t * shifted[n + 1])) @ vnp.T
        else:
            r = (vn * np.exp(t * shifted[n])) @ vn.T
            q = (vnp * np.exp(-(beta + t) * shifted[n + 1])) @ vnp.T
        axs = [spectral.a_occ(n, x).tocsr() for x in params.sites]
        left = [np.asarray((ax @ q)) for ax in axs]       # a_x Q
        right = [np.asarray((ax.T @ r).T) for ax in axs]  # (a_y^T R)^T = R^T a_y
        for ix in range(ns):
            for iy in range(ns):
                if t > 0.0:
                    # tr(R a_x Q a_y^T) = sum (R^T a_y) * (a_x Q)
                    s[ix, iy] += float(np.sum(right[iy] * left[ix])) / z
                else:
                    s[ix, iy] -= float(np.sum(right[ix] * left[iy])) / z
    return s


def occupations(params, spectral, mu=None):
    """Equal-time occupations <n_x> from the t -> 0- branch of the correlation."""
    spectral._require_complete()
    if mu is None:
        mu = params.mu
    ns = params.n_sites
    z = spectral.partition_function(mu)
    occ = np.zeros(ns)
    for n in range(spectral.n_sectors - 1):
        scale = spectral._sector_scale(n + 1, mu)
        for ix in range(ns):
            key = ("occ_trace", n, ix)
            if key not in spectral._cache:
                ax = spectral.a_occ(n, ix - params.L // 2)
                bnp = spectral.sector_boltzmann(n + 1)
                g = (ax.T @ ax).tocoo()
                spectral._cache[key] = _coo_trace(bnp, g)
            occ[ix] += spectral._cache[key] * scale / z
    return occ


def density(params, spectral, mu=None):
    """Mean filling (1/(L+1)) sum_x <n_x> from the correlation route."""
    return float(np.mean(occupations(params, spectral, mu)))


def occupations_expectation(params, spectral, mu=None):
    """Independent route: <n_x> as a thermal expectation over eigenvectors."""
    spectral._require_complete()
    if mu is None:
        mu = params.mu
    weights = spectral.sector_weights(mu)
    z = spectral.partition_function(mu)
    occ = np.zeros(params.n_sites)
    for n in range(spectral.n_sectors):
        key = ("occ_expect", n)
        if key not in spectral._cache:
            spectral._cache[key] = (spectral.vectors[n] ** 2).T @ _occupancy(
                spectral.sectors[n])
        occ += weights[n] @ spectral._cache[key] / z
    return occ


def mean_particle_number(params, spectral, mu=None):
    """<N> from sector weights alone; cheap objective for the counterterm search."""
    spectral._require_complete()
    if mu is None:
        mu = params.mu
    weights = spectral.sector_weights(mu)
    z = sum(float(np.sum(w)) for w in weights)
    return sum(s.n_particles * float(np.sum(w))
               for s, w in zip(spectral.sectors, weights)) / z


@dataclass
class CorrelationFunction:
    """Sampled S2 values on a (time, x, y) grid with the generating parameters."""
    times: np.ndarray
    sites: np.ndarray
    values: np.ndarray          # shape (n_times, n_sites, n_sites)
    meta: dict
    convention: str = "equal-time mean of one-sided limits"

    def at_time(self, t):
        idx = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(float(self.times[idx]), t, abs_tol=1e-12):
            raise KeyError(f"time {t} not sampled")
        return self.values[idx]

    def value(self, x, y, t):
        half = (self.sites.size - 1) // 2
        return float(self.at_time(t)[x + half, y + half])


def compute_correlation(params, spectral, times, mu=None):
    """Sample the two-point function on a grid of time differences."""
    times = np.asarray(sorted(set(float(t) for t in times)))
    values = np.stack([correlation_matrix(params, spectral, t, mu)
                       for t in times])
    return CorrelationFunction(times=times, sites=params.sites, values=values,
                               meta=params.to_dict())
