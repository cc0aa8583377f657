"""Fixing the counterterm nu so the interacting chain keeps the free filling.

The interacting density at chemical potential mu0 + nu is matched to the
density of the eps = U = 0 reference at mu0.  Since the Hamiltonian commutes
with N, nu enters the grand-canonical weights only through mu, so one spectral
decomposition serves the whole root search: each trial nu just reweights the
stored sector spectra.
"""

import math
from dataclasses import dataclass, field

from .many_body import diagonalize, mean_particle_number
from .single_particle import ModelParams, fermi_occupation, free_density


class BracketError(RuntimeError):
    """The density objective could not be bracketed around zero."""


@dataclass
class CountertermResult:
    eps: float
    U: float
    nu: float
    target_density: float
    achieved_density: float
    iterations: int
    converged: bool
    L: int
    beta: float
    bracket_history: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "eps": self.eps, "U": self.U, "nu": self.nu,
            "target_density": self.target_density,
            "achieved_density": self.achieved_density,
            "iterations": self.iterations, "converged": self.converged,
            "L": self.L, "beta": self.beta,
        }


def _reference_density(params):
    """Filling of the U = 0 chain (same eps) at mu0; the matching target."""
    free = ModelParams(L=params.L, beta=params.beta, eps=params.eps,
                       u=params.u, U=0.0, omega=params.omega,
                       theta=params.theta, x_hat=params.x_hat, nu=0.0,
                       M=params.M)
    return free_density(free)


def fix_counterterm(params, tolerance=1e-6, spectral=None, max_iter=200):
    """Solve density(mu0 + nu) = density_free(mu0) for nu by bisection.

    The density is monotone increasing in mu (grand-canonical compressibility
    is a variance), so a sign change brackets the unique root.  The bracket
    starts at +-4 max(|eps|, |U|, 1e-3) and widens geometrically if needed.
    Returns a CountertermResult; params itself is never mutated.
    """
    base = params.with_nu(0.0) if params.nu != 0.0 else params
    target = _reference_density(base)
    if spectral is None:
        spectral = diagonalize(base)
    n_sites = base.n_sites

    def objective(nu):
        return mean_particle_number(base, spectral,
                                    mu=base.mu0 + nu) / n_sites - target

    history = []
    f0 = objective(0.0)
    history.append((0.0, f0))
    if abs(f0) <= tolerance:
        # eps = U = 0 (or an accidental exact match): nu = 0 by construction
        return CountertermResult(
            eps=base.eps, U=base.U, nu=0.0, target_density=target,
            achieved_density=target + f0, iterations=0, converged=True,
            L=base.L, beta=base.beta, bracket_history=history)

    width = 4.0 * max(abs(base.eps), abs(base.U), 1e-3)
    lo, hi = -width, width
    flo, fhi = objective(lo), objective(hi)
    history.extend([(lo, flo), (hi, fhi)])
    widenings = 0
    while flo * fhi > 0.0 and widenings < 4:
        lo *= 2.0
        hi *= 2.0
        flo, fhi = objective(lo), objective(hi)
        history.extend([(lo, flo), (hi, fhi)])
        widenings += 1
    if flo * fhi > 0.0:
        raise BracketError(
            f"no sign change of the density objective in [{lo}, {hi}]")

    # density tolerance converted to a nu tolerance through bisection alone;
    # iterate until the objective itself is inside tolerance
    nu = 0.5 * (lo + hi)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        nu = 0.5 * (lo + hi)
        f = objective(nu)
        history.append((nu, f))
        if abs(f) <= tolerance:
            converged = True
            break
        if flo * f < 0.0:
            hi, fhi = nu, f
        else:
            lo, flo = nu, f
        if hi - lo < 1e-15 * max(1.0, abs(nu)):
            break
    achieved = target + history[-1][1]
    return CountertermResult(
        eps=base.eps, U=base.U, nu=float(nu), target_density=target,
        achieved_density=achieved, iterations=it, converged=converged,
        L=base.L, beta=base.beta, bracket_history=history)


def counterterm_grid(L, beta, eps_values, U_values, tolerance=1e-6, **kwargs):
    """fix_counterterm over the (eps, U) product grid; one diagonalization each."""
    results = {}
    for eps in sorted(set(float(e) for e in eps_values)):
        for U in sorted(set(float(u) for u in U_values)):
            params = ModelParams(L=L, beta=beta, eps=eps, U=U, **kwargs)
            results[(eps, U)] = fix_counterterm(params, tolerance=tolerance)
    return results


def counterterm_flow_check(results, ratio_bound=2.0, continuity_factor=0.5):
    """Sanity report on a grid of CountertermResult values.

    Checks that nu vanishes at (0, 0), that sup |nu| / max(|eps|, |U|) stays
    below ratio_bound, and that nu moves by at most continuity_factor times
    the larger coupling step between adjacent grid points.
    """
    report = {"zero_at_origin": None, "max_ratio": 0.0,
              "ratio_ok": True, "continuity_ok": True,
              "worst_jump": 0.0, "ratio_bound": ratio_bound}
    eps_vals = sorted(set(k[0] for k in results))
    u_vals = sorted(set(k[1] for k in results))
    if (0.0, 0.0) in results:
        report["zero_at_origin"] = results[(0.0, 0.0)].nu == 0.0
    for (eps, U), res in results.items():
        denom = max(abs(eps), abs(U))
        if denom > 0.0:
            ratio = abs(res.nu) / denom
            report["max_ratio"] = max(report["max_ratio"], ratio)
            if ratio > ratio_bound:
                report["ratio_ok"] = False
    for i, eps in enumerate(eps_vals):
        for j, U in enumerate(u_vals):
            here = results[(eps, U)].nu
            if i + 1 < len(eps_vals):
                step = eps_vals[i + 1] - eps
                jump = abs(results[(eps_vals[i + 1], U)].nu - here)
                report["worst_jump"] = max(report["worst_jump"], jump)
                if jump > continuity_factor * step:
                    report["continuity_ok"] = False
            if j + 1 < len(u_vals):
                step = u_vals[j + 1] - U
                jump = abs(results[(eps, u_vals[j + 1])].nu - here)
                report["worst_jump"] = max(report["worst_jump"], jump)
                if jump > continuity_factor * step:
                    report["continuity_ok"] = False
    report["ok"] = bool(report["zero_at_origin"] and report["ratio_ok"]
                        and report["continuity_ok"])
    return report
