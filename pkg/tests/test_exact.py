import numpy as np
import pytest

from tmspectra.exact import (ed_dispersion, ed_ground_energy, ed_ground_state,
                             ed_momentum_spectrum, lorentz_velocity,
                             xy_dispersion, xy_gap_location, xy_ground_energy)
from tmspectra.models import build_hamiltonian

XY = (0.3, 0.2)


def test_xy_dispersion_closed_form():
    gamma, g = XY
    k = np.linspace(0, np.pi, 7)
    e = xy_dispersion(XY, k)
    ref = np.sqrt((g - np.cos(k)) ** 2 + gamma ** 2 * np.sin(k) ** 2)
    assert np.allclose(e, ref)


def test_xy_gap_location_is_the_minimum():
    k_min, e_min = xy_gap_location(XY)
    k = np.linspace(0, np.pi, 20001)
    e = xy_dispersion(XY, k)
    assert e_min <= np.min(e) + 1e-12
    assert abs(k[np.argmin(e)] - k_min) < 2e-4
    assert np.isclose(xy_dispersion(XY, np.array([k_min]))[0], e_min)


def test_lorentz_velocity_positive():
    assert lorentz_velocity(XY) > 0


def test_xy_ground_energy_vs_finite_chain():
    ham = build_hamiltonian("XY", XY)
    e_12 = ed_ground_energy(ham, 12)
    e_10 = ed_ground_energy(ham, 10)
    e_inf = xy_ground_energy(XY)
    assert abs(e_12 - e_inf) < 1e-3
    # finite-size error shrinks with L
    assert abs(e_12 - e_inf) < abs(e_10 - e_inf)


@pytest.mark.parametrize("model,params,L", [("XY", XY, 8), ("XXZ", (0.5, 0.1), 8)])
def test_momentum_sectors_recover_full_spectrum(model, params, L):
    ham = build_hamiltonian(model, params)
    sectors = ed_momentum_spectrum(ham, L)
    pooled = np.sort(np.concatenate([np.atleast_1d(v) for v in sectors.values()]))
    assert pooled.size == ham.d ** L
    # full dense periodic-chain Hamiltonian as an independent oracle
    d = ham.d
    bond = np.kron(ham.h, np.eye(d ** (L - 2)))
    bond = bond.reshape((d,) * (2 * L))
    H = np.zeros((d ** L, d ** L), dtype=complex)
    for j in range(L):
        sites = [(j + s) % L for s in range(L)]  # site 0 of `bond` -> site j
        perm = np.argsort(sites).tolist()
        H += bond.transpose(perm + [L + p for p in perm]).reshape(d ** L, d ** L)
    dense = np.sort(np.linalg.eigvalsh(H))
    assert np.allclose(pooled, dense, atol=1e-8)


def test_ed_dispersion_shape():
    ham = build_hamiltonian("XY", XY)
    momenta, gaps = ed_dispersion(ham, 10)
    assert len(momenta) == 10
    # gaps are to the lowest excitation, strictly positive for a gapped chain
    assert np.min(gaps) > 0


def test_ed_ground_state_consistency():
    ham = build_hamiltonian("XY", XY)
    res = ed_ground_state(ham, 10)
    assert np.isclose(res.E0 / 10, ed_ground_energy(ham, 10))
    assert res.gap > 0
