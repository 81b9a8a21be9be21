"""Reference results: free-fermion solution of the XY chain and small-chain
exact diagonalization with translation symmetry.

These serve as independent oracles for the variational machinery and never
touch the MPS code paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .models import TwoSiteHamiltonian

ED_DIM_CAP = 2 ** 18


@dataclass(frozen=True)
class XyParams:
    """Anisotropy and field of the XY chain."""

    gamma: float
    g: float

    @property
    def incommensurate(self) -> bool:
        """True when correlations oscillate with a non-trivial wave vector."""
        return self.gamma ** 2 + self.g ** 2 < 1.0


def _params(p) -> XyParams:
    return p if isinstance(p, XyParams) else XyParams(*p)


def xy_dispersion(p, k):
    """Single-mode excitation energy E(k) = sqrt((g - cos k)^2 + gamma^2 sin^2 k)."""
    p = _params(p)
    k = np.asarray(k, dtype=float)
    return np.sqrt((p.g - np.cos(k)) ** 2 + (p.gamma * np.sin(k)) ** 2)


def xy_gap_location(p):
    """Return (k_min, E_min) of the XY dispersion on [0, pi].

    In the oscillatory regime the minimum sits at cos k = g / (1 - gamma^2);
    otherwise it is pinned to a zone boundary.
    """
    p = _params(p)
    denom = 1.0 - p.gamma ** 2
    if denom > 0 and abs(p.g) < denom:
        kmin = float(np.arccos(p.g / denom))
    else:
        kmin = 0.0 if p.g > 0 else np.pi
        edge = np.pi if p.g > 0 else 0.0
        if xy_dispersion(p, edge) < xy_dispersion(p, kmin):
            kmin = edge
    return kmin, float(xy_dispersion(p, kmin))


def lorentz_velocity(p) -> float:
    """Velocity of the relativistic dispersion fit near the minimum,
    v^2 = ((1 - gamma^2)^2 - g^2) / (1 - gamma^2)."""
    p = _params(p)
    denom = 1.0 - p.gamma ** 2
    v2 = (denom ** 2 - p.g ** 2) / denom
    if v2 < 0:
        raise ValueError("dispersion minimum is not in the oscillatory regime")
    return float(np.sqrt(v2))


def xy_ground_energy(p) -> float:
    """Ground-state energy per site, e0 = -(1/2 pi) int_0^pi E(k) dk."""
    p = _params(p)
    val, _ = quad(lambda k: xy_dispersion(p, k), 0.0, np.pi, limit=200)
    return float(-val / (2 * np.pi))


# ---------------------------------------------------------------------------
# translation-symmetric exact diagonalization on a periodic chain


def _translate(state: int, L: int, d: int) -> int:
    """Cyclically shift a base-d integer state by one site."""
    last = state % d
    return state // d + last * d ** (L - 1)


def _representative(state: int, L: int, d: int):
    """Smallest translate of `state` and the shift count that reaches it."""
    rep, shift = state, 0
    t = state
    for i in range(1, L):
        t = _translate(t, L, d)
        if t < rep:
            rep, shift = t, i
    return rep, shift


def _periodicity(rep: int, L: int, d: int) -> int:
    t = rep
    for i in range(1, L + 1):
        t = _translate(t, L, d)
        if t == rep:
            return i
    raise AssertionError("unreachable")


def _orbit_reps(L: int, d: int):
    reps = []
    periods = {}
    for s in range(d ** L):
        r, _ = _representative(s, L, d)
        if r == s:
            reps.append(s)
            periods[s] = _periodicity(s, L, d)
    return reps, periods


def _sector_hamiltonian(ham: TwoSiteHamiltonian, L: int, m: int, reps, periods):
    """Dense Hamiltonian in the momentum sector k = 2 pi m / L."""
    d = ham.d
    h = ham.h.reshape(d, d, d, d)
    sector = [r for r in reps if (m * periods[r]) % L == 0]
    if not sector:
        return np.zeros((0, 0), dtype=complex), sector
    idx = {r: i for i, r in enumerate(sector)}
    n = len(sector)
    norms = np.array([np.sqrt(periods[r]) for r in sector])
    H = np.zeros((n, n), dtype=complex)
    phase = np.exp(-2j * np.pi * m / L)

    def digits(state):
        out = np.empty(L, dtype=np.int64)
        for i in range(L - 1, -1, -1):
            out[i] = state % d
            state //= d
        return out

    for a, r in enumerate(sector):
        dig = digits(r)
        for bond in range(L):
            i, j = bond, (bond + 1) % L
            si, sj = dig[i], dig[j]
            col = h[:, :, si, sj]
            for ti in range(d):
                for tj in range(d):
                    amp = col[ti, tj]
                    if abs(amp) < 1e-15:
                        continue
                    new = dig.copy()
                    new[i], new[j] = ti, tj
                    state = 0
                    for x in new:
                        state = state * d + int(x)
                    rnew, shift = _representative(state, L, d)
                    b = idx.get(rnew)
                    if b is None:
                        continue
                    # <b(k)|H|a(k)> = amp e^{-ik l} sqrt(R_a / R_b)
                    H[b, a] += amp * phase ** shift * norms[a] / norms[b]
    herm_err = np.max(np.abs(H - H.conj().T))
    if herm_err > 1e-9:
        raise AssertionError(f"sector Hamiltonian not Hermitian ({herm_err:.2e})")
    return (H + H.conj().T) / 2, sector


def ed_momentum_spectrum(ham: TwoSiteHamiltonian, L: int):
    """Eigenvalues of the periodic L-site chain, resolved by momentum.

    Returns a dict {m: sorted energies} where the momentum is k = 2 pi m / L.
    The bond term is summed over all L bonds including the wrap-around one.
    """
    d = ham.d
    if d ** L > ED_DIM_CAP:
        raise ValueError(f"Hilbert space d^L = {d**L} exceeds cap {ED_DIM_CAP}")
    reps, periods = _orbit_reps(L, d)
    spectra = {}
    for m in range(L):
        H, sector = _sector_hamiltonian(ham, L, m, reps, periods)
        spectra[m] = np.sort(np.linalg.eigvalsh(H)) if sector else np.array([])
    return spectra


@dataclass(frozen=True)
class EdResult:
    """Ground-state data of a periodic chain, translation-sector resolved."""

    L: int
    E0: float
    gap: float
    ground_vector: np.ndarray  # in the symmetry-reduced basis of its sector
    momentum_index: int  # ground sector: k = 2 pi momentum_index / L
    sector_energies: dict


def ed_ground_state(ham: TwoSiteHamiltonian, L: int, k_sector: int | None = None) -> EdResult:
    """Lowest eigenpair of the periodic chain (optionally within one sector).

    The gap is measured to the next level across all momentum sectors (or
    within the requested sector when k_sector is given).
    """
    d = ham.d
    if d ** L > ED_DIM_CAP:
        raise ValueError(f"Hilbert space d^L = {d**L} exceeds cap {ED_DIM_CAP}")
    reps, periods = _orbit_reps(L, d)
    sectors = [k_sector] if k_sector is not None else list(range(L))
    energies = {}
    best = None
    for m in sectors:
        H, sector = _sector_hamiltonian(ham, L, m, reps, periods)
        if not sector:
            energies[m] = np.array([])
            continue
        vals, vecs = np.linalg.eigh(H)
        energies[m] = vals
        if best is None or vals[0] < best[0]:
            best = (vals[0], vecs[:, 0], m)
    if best is None:
        raise ValueError("no states in the requested sector")
    E0, vec, m0 = best
    levels = np.sort(np.concatenate([v for v in energies.values() if v.size]))
    gap = float(levels[1] - levels[0]) if levels.size > 1 else 0.0
    return EdResult(L, float(E0), gap, vec, m0, energies)


def ed_ground_energy(ham: TwoSiteHamiltonian, L: int) -> float:
    """Ground energy per site of the periodic L-site chain."""
    spectra = ed_momentum_spectrum(ham, L)
    e0 = min(s[0] for s in spectra.values() if s.size)
    return float(e0 / L)


def ed_dispersion(ham: TwoSiteHamiltonian, L: int):
    """Lowest excitation energy above the global ground state, per sector.

    Returns (momenta, gaps): momenta[i] = 2 pi m_i / L in [0, 2 pi).  In the
    ground-state sector the first excited level is used.
    """
    spectra = ed_momentum_spectrum(ham, L)
    e0 = min(s[0] for s in spectra.values() if s.size)
    m0 = min((m for m, s in spectra.items() if s.size), key=lambda m: spectra[m][0])
    momenta, gaps = [], []
    for m in sorted(spectra):
        s = spectra[m]
        if not s.size:
            continue
        lowest = s[1] if (m == m0 and s.size > 1) else s[0]
        momenta.append(2 * np.pi * m / L)
        gaps.append(lowest - e0)
    return np.array(momenta), np.array(gaps)
