import numpy as np
import pytest

from tmspectra.exact import ed_ground_energy, xy_ground_energy
from tmspectra.itebd import energy_density, itebd_ground_state
from tmspectra.models import build_hamiltonian
from tmspectra.mps import gauge_residual


def test_field_only_reaches_product_state():
    ham = build_hamiltonian("FIELD_ONLY", (1.0,))
    state = itebd_ground_state(ham, 2, rng=0)
    assert np.isclose(energy_density(state, ham), -0.5, atol=1e-10)


def test_xy_energy_against_free_fermions():
    params = (0.3, 0.2)
    ham = build_hamiltonian("XY", params)
    state = itebd_ground_state(ham, 8, rng=1)
    e = energy_density(state, ham)
    e0 = xy_ground_energy(params)
    assert e >= e0 - 1e-12  # variational
    assert abs(e - e0) < 1e-5
    assert state.injective
    assert gauge_residual(state) < 1e-9


def test_xxz_energy_against_finite_chain():
    params = (0.5, 0.0)
    ham = build_hamiltonian("XXZ", params)
    state = itebd_ground_state(ham, 8, rng=2)
    e = energy_density(state, ham)
    # periodic L=12 energy density brackets the thermodynamic value loosely
    e_ed = ed_ground_energy(ham, 12)
    assert abs(e - e_ed) < 5e-3


def test_energy_density_matches_bond_expectation():
    ham = build_hamiltonian("XY", (0.3, 0.2))
    state = itebd_ground_state(ham, 4, rng=3)
    from tmspectra.models import SiteOperator
    from tmspectra.mps import expectation
    direct = complex(expectation(state, SiteOperator(2, ham.h))).real
    assert np.isclose(energy_density(state, ham), direct, atol=1e-12)


def test_deterministic_given_seed():
    ham = build_hamiltonian("XY", (0.3, 0.2))
    a = itebd_ground_state(ham, 4, rng=7)
    b = itebd_ground_state(ham, 4, rng=7)
    assert np.array_equal(a.A, b.A)
