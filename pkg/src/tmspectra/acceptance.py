"""End-to-end acceptance checks with a machine-readable pass/fail report.

Each criterion computes a measured value with the library, compares it to a
target at a stated tolerance, and returns a CriterionResult.  Ground states
are memoized on disk (see cache_dir) because the variational optimization
dominates the runtime; the measured quantities themselves are always
recomputed from the cached tensors.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .models import SiteOperator, build_hamiltonian, single_site, spin_operators
from .mps import apply_symmetry, canonicalize, expectation, random_umps, zero_meaned
from .itebd import itebd_ground_state, energy_density
from .spectra import (cluster_branches, estimate_velocity, extrapolate_power,
                      tm_spectrum)
from .correlations import (connected_correlation, correlation_from_spectrum,
                           form_factors, oscillator_strength, oz_fit,
                           sma_dispersion, structure_factor)
from .momentum_filter import bound_rate, decay_rate_fit, filtered_correlation
from .exact import ed_dispersion, lorentz_velocity, xy_dispersion, xy_gap_location
from .peps import aklt_tensor, dispersion_cut, ring_tm_spectrum
from .serialize import load_mps, save_mps

DEFAULT_SEED = 7
XY_BROKEN = (0.3, 0.2)
XY_POLAR = (0.5, 1.05)
BLBQ_THETA = 0.15652 * np.pi
XXZ_SOFT = (0.3, 0.4)


@dataclass(frozen=True)
class CriterionResult:
    """One acceptance criterion outcome."""

    cid: str
    description: str
    measured: float
    target: float
    tol: float
    passed: bool
    detail: str = ""
    soft: bool = False

    def line(self) -> str:
        status = "PASS" if self.passed else ("SOFT" if self.soft else "FAIL")
        if self.soft and not self.passed:
            status = "SOFT-MISS"
        text = (f"{self.cid} {status}: {self.description} | "
                f"measured={self.measured:.6g} target={self.target:.6g} "
                f"tol={self.tol:.3g}")
        if self.detail:
            text += f" | {self.detail}"
        return text


def cache_dir() -> str:
    path = os.environ.get("TMSPECTRA_CACHE",
                          os.path.expanduser("~/.cache/tmspectra"))
    os.makedirs(path, exist_ok=True)
    return path


def ground_state(model: str, params, D: int, seed: int = DEFAULT_SEED):
    """Disk-memoized variational ground state for a named model."""
    ps = "_".join(format(float(p), ".10g") for p in np.atleast_1d(params))
    path = os.path.join(cache_dir(), f"gs_{model}_{ps}_D{D}_seed{seed}.umps")
    if os.path.exists(path):
        state, _ = load_mps(path)
        return state
    ham = build_hamiltonian(model, params)
    state = itebd_ground_state(ham, D, rng=seed)
    save_mps(path, state, model=model, params=list(np.atleast_1d(params)),
             energy=energy_density(state, ham), seed=seed)
    return state


def _sx() -> SiteOperator:
    return single_site(spin_operators(1)[0])


def _sz() -> SiteOperator:
    return single_site(spin_operators(1)[2])


def _circular_distance(a: float, b: float) -> float:
    d = (a - b) % (2 * np.pi)
    return float(min(d, 2 * np.pi - d))


def criterion_a1() -> CriterionResult:
    """Mixed-TM dominant phase vs the dispersion-minimum momentum."""
    state = ground_state("XY", XY_BROKEN, 32)
    partner = apply_symmetry(state, np.diag([1.0, -1.0]))
    spec = tm_spectrum(partner, state, m=4)
    phi1 = abs(float(spec.phi[0]))
    k_min, _ = xy_gap_location(XY_BROKEN)
    tol = 5e-3 * np.pi
    return CriterionResult(
        "A1", "mixed-TM phase matches dispersion minimum (units of pi)",
        phi1 / np.pi, k_min / np.pi, tol / np.pi,
        abs(phi1 - k_min) <= tol,
        f"|phi1 - k_min| = {abs(phi1 - k_min) / np.pi:.5f} pi",
    )


def criterion_a2() -> CriterionResult:
    """Characteristic velocity from the 1/D-extrapolated gap eigenvalue."""
    Ds = np.array([16, 24, 32, 40])
    eps1 = []
    for D in Ds:
        state = ground_state("XY", XY_BROKEN, int(D))
        partner = apply_symmetry(state, np.diag([1.0, -1.0]))
        spec = tm_spectrum(partner, state, m=2)
        eps1.append(float(spec.eps[0]))
    eps_inf, _, _, resid = extrapolate_power(Ds, np.array(eps1), exponent=1.0)
    _, e_min = xy_gap_location(XY_BROKEN)
    v = estimate_velocity(eps_inf, e_min)
    v_lor = lorentz_velocity(XY_BROKEN)
    rel = abs(v - v_lor) / v_lor
    passed = (abs(v - 0.9409) <= 0.02 * 0.9409
              and abs(v_lor - 0.9306) <= 5e-5
              and rel <= 0.02)
    return CriterionResult(
        "A2", "extrapolated velocity vs relativistic-fit value",
        v, 0.9409, 0.02 * 0.9409, passed,
        f"eps1(D)={[round(e, 6) for e in eps1]}, eps1_inf={eps_inf:.5f} "
        f"(fit residual {resid:.1e}), lorentz={v_lor:.4f}, "
        f"difference {100 * rel:.2f}%",
    )


def _polar_branch_fit():
    state = ground_state("XY", XY_POLAR, 32)
    spec = tm_spectrum(state, state, m=20)
    ff = form_factors(state, spec, _sx(), _sx())
    fmap = dict(zip(ff.j.tolist(), np.abs(ff.f)))
    branches = cluster_branches(spec)
    weights = [sum(fmap.get(int(j), 0.0) for j in b.members) for b in branches]
    branch = branches[int(np.argmax(weights))]
    return oz_fit(spec, ff, branch)


def criterion_a3() -> CriterionResult:
    """Ornstein-Zernike exponents of the dominant correlation branch."""
    fit = _polar_branch_fit()
    passed = (1.8 <= fit.kappa <= 2.2 and abs(fit.rho) <= 0.2
              and 0.4 <= fit.eta <= 0.65)
    return CriterionResult(
        "A3", "branch exponents kappa (target 2), rho (target 0), eta",
        fit.kappa, 2.0, 0.2, passed,
        f"kappa={fit.kappa:.4f}, rho={fit.rho:.4f}, eta={fit.eta:.4f}, "
        f"xi={fit.xi:.4f}",
    )


def _random_injective_states(count: int, seed: int = 11):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        D = int(rng.integers(2, 7))
        d = int(rng.integers(2, 4))
        state = canonicalize(random_umps(D, d, rng))
        if state.injective:
            herm = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            op = single_site((herm + herm.conj().T) / 2)
            out.append((state, op))
    return out


def criterion_a4() -> CriterionResult:
    """Spectral resummation of C(n) vs direct contraction."""
    worst = 0.0
    for state, op in _random_injective_states(50):
        spec = tm_spectrum(state, state, m=state.D ** 2)
        ff = form_factors(state, spec, op, op)
        c_sum = correlation_from_spectrum(spec, ff, range(1, 51))
        c_dir = connected_correlation(state, op, op, 50)
        worst = max(worst, float(np.max(np.abs(c_sum - c_dir))))
    return CriterionResult(
        "A4", "resummed vs direct correlator, 50 random states, n <= 50",
        worst, 0.0, 1e-10, worst <= 1e-10,
    )


def criterion_a5() -> CriterionResult:
    """Resolvent structure factor vs a truncated Fourier sum."""
    worst = 0.0
    used = 0
    for state, op in _random_injective_states(50):
        spec = tm_spectrum(state, state, m=2)
        eps1 = float(spec.eps[1])
        if eps1 < 0.05:
            continue
        used += 1
        sf = structure_factor(state, op)
        n_max = int(np.ceil(45.0 / eps1))
        c = connected_correlation(state, op, op, n_max)
        oz = zero_meaned(op, state)
        c0 = complex(expectation(
            state, SiteOperator(1, oz.matrix @ oz.matrix))).real
        n = np.arange(1, n_max + 1)
        phases = np.exp(1j * np.outer(sf.kgrid, n))
        s_trunc = c0 + 2.0 * np.real(phases @ c)
        worst = max(worst, float(np.max(np.abs(sf.values - s_trunc))))
    return CriterionResult(
        "A5", "resolvent S(k) vs truncated sum on the 512-point grid",
        worst, 0.0, 1e-6, worst <= 1e-6 and used > 0,
        f"{used} states with eps1 >= 0.05",
    )


def criterion_a6() -> CriterionResult:
    """S(k) peak sits on a transfer-matrix branch phase."""
    state = ground_state("XY", XY_BROKEN, 16)
    sf = structure_factor(state, _sz())
    k_peak = float(sf.kgrid[int(np.argmax(sf.values))])
    spec = tm_spectrum(state, state, m=10)
    phases = [b.phi % (2 * np.pi) for b in cluster_branches(spec)]
    dist = min(_circular_distance(k_peak, p) for p in phases)
    step = 2 * np.pi / sf.kgrid.size
    return CriterionResult(
        "A6", "S(k) argmax to nearest branch phase (units of grid step)",
        dist / step, 0.0, 1.0, dist <= step * (1 + 1e-9),
        f"k_peak={k_peak / np.pi:.4f} pi",
    )


def criterion_a7() -> CriterionResult:
    """Single-mode dispersion upper-bounds the finite-chain excitations."""
    ham = build_hamiltonian("XY", XY_POLAR)
    state = ground_state("XY", XY_POLAR, 32)
    momenta, gaps = ed_dispersion(ham, 12)
    op = _sx()
    sf = structure_factor(state, op, kgrid=momenta)
    fk = oscillator_strength(state, ham, op, kgrid=momenta)
    e_sma = sma_dispersion(fk, sf)
    margin = float(np.min(e_sma - gaps))
    return CriterionResult(
        "A7", "min_k (E_SMA - E_ED) over the L=12 momentum grid",
        margin, 0.0, 1e-8, margin >= -1e-8,
        f"momenta={len(momenta)}",
    )


def criterion_a8() -> CriterionResult:
    """Momentum-filtered decay lengths obey the dispersion-window bound."""
    ham = build_hamiltonian("XY", XY_POLAR)
    state = ground_state("XY", XY_POLAR, 32)
    v_lr = 2.0 * ham.norm
    delta_grid = np.linspace(0.1, 1.2, 23)
    op = _sx()
    details = []
    passed = True
    worst = -np.inf
    for k in (0.0, np.pi / 2, np.pi):
        fc = filtered_correlation(state, op, op, k, ell_max=60, r=16.0)
        fit = decay_rate_fit(fc)
        xi_fit = np.inf if fit.rate <= 0 else 1.0 / fit.rate
        gb = bound_rate(lambda q: xy_dispersion(XY_POLAR, q), k,
                        delta_grid, v_lr)
        ok = xi_fit <= gb.xi_bound
        passed = passed and ok
        worst = max(worst, xi_fit / gb.xi_bound)
        details.append(
            f"k={k / np.pi:.2f}pi: xi_fit={xi_fit:.3f} <= bound={gb.xi_bound:.3f}"
        )
    return CriterionResult(
        "A8", "max_k xi_fitted / xi_bound with v_LR = 2||h||",
        worst, 1.0, 0.0, passed, "; ".join(details),
    )


def criterion_a9() -> CriterionResult:
    """Square-lattice AKLT cylinder dispersion minimum and continuum marker."""
    tensor = aklt_tensor("square")
    details = []
    passed = True
    worst = 0.0
    for n_y in (4, 6):
        cut = dispersion_cut(ring_tm_spectrum(tensor, n_y, m=6))
        nontrivial = [r for r in cut.entries if r[2] > 1e-10]
        low = min(nontrivial, key=lambda r: r[2])
        kx, ky, eps, deg, spin = low
        at_corner = (abs(kx - np.pi) < 1e-9
                     and _circular_distance(ky, np.pi) < 1e-9)
        marker_rel = abs(cut.continuum - 2.0 * eps) / (2.0 * eps)
        ok = at_corner and deg == 3 and spin == 1 and marker_rel <= 0.25
        passed = passed and ok
        worst = max(worst, marker_rel)
        above = sorted(r[2] for r in nontrivial if r[2] > eps + 1e-10)
        nxt = above[0] if above else np.nan
        details.append(
            f"Ny={n_y}: min at ({kx / np.pi:.0f}pi, {ky / np.pi:.0f}pi) "
            f"deg={deg} S={spin} eps={eps:.4f}, marker={cut.continuum:.4f}, "
            f"next level={nxt:.4f}"
        )
    return CriterionResult(
        "A9", "continuum marker offset from twice the lowest quasi-energy",
        worst, 0.0, 0.25, passed, "; ".join(details),
    )


def criterion_a10() -> CriterionResult:
    """Bilinear-biquadratic crossover branch phase (slow)."""
    state = ground_state("BLBQ", (BLBQ_THETA,), 64)
    spec = tm_spectrum(state, state, m=12)
    branches = cluster_branches(spec)
    branch = min(branches, key=lambda b: b.delta)
    phi = abs(float(branch.phi))
    tol = 0.02 * np.pi
    return CriterionResult(
        "A10", "dominant branch phase (units of pi)",
        phi / np.pi, 0.755, tol / np.pi,
        abs(phi - 0.755 * np.pi) <= tol,
        f"delta={branch.delta:.4f}, members={branch.count}",
    )


def soft_xxz_report() -> CriterionResult:
    """Fermi-momentum self-consistency of the gapless XXZ phase (soft)."""
    state = ground_state("XXZ", XXZ_SOFT, 32)
    m_z = complex(expectation(state, _sz())).real
    k_f = (0.5 - m_z) * np.pi
    spec = tm_spectrum(state, state, m=10)
    branches = cluster_branches(spec)
    nonzero = [b for b in branches if abs(b.phi) > 1e-6]
    phi = abs(float(min(nonzero, key=lambda b: b.delta).phi)) if nonzero else 0.0
    dist = min(abs(phi - n * k_f) for n in (1, 2))
    return CriterionResult(
        "XXZ", "soft: branch phase vs Fermi-momentum multiple (units of pi)",
        dist / np.pi, 0.0, 0.01, dist <= 0.01 * np.pi,
        f"m_z={m_z:.4f}, k_F={k_f / np.pi:.4f} pi, phi={phi / np.pi:.4f} pi",
        soft=True,
    )


CRITERIA = {
    "A1": criterion_a1,
    "A2": criterion_a2,
    "A3": criterion_a3,
    "A4": criterion_a4,
    "A5": criterion_a5,
    "A6": criterion_a6,
    "A7": criterion_a7,
    "A8": criterion_a8,
    "A9": criterion_a9,
    "A10": criterion_a10,
}


def run_all(include_slow: bool = False, include_soft: bool = True) -> list:
    results = []
    for cid, fn in CRITERIA.items():
        if cid == "A10" and not include_slow:
            continue
        results.append(fn())
    if include_soft:
        results.append(soft_xxz_report())
    return results


def format_report(results) -> str:
    lines = [r.line() for r in results]
    hard = [r for r in results if not r.soft]
    n_pass = sum(r.passed for r in hard)
    lines.append(f"{n_pass}/{len(hard)} criteria passed")
    return "\n".join(lines)


def all_passed(results) -> bool:
    return all(r.passed for r in results if not r.soft)
