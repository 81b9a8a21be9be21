import numpy as np
import pytest

from tmspectra.correlations import (connected_correlation,
                                    correlation_from_spectrum, default_kgrid,
                                    form_factors, oscillator_strength, oz_fit,
                                    sma_dispersion, structure_factor)
from tmspectra.models import SiteOperator, build_hamiltonian, single_site, spin_operators
from tmspectra.mps import expectation, random_umps, zero_meaned
from tmspectra.spectra import Branch, TmSpectrum, tm_spectrum


def _state(D=4, d=2, seed=21):
    return random_umps(D, d, np.random.default_rng(seed))


def _op(d=2, seed=22):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return single_site((m + m.conj().T) / 2)


def test_connected_correlation_decays_and_is_connected():
    state = _state()
    op = _op()
    c = connected_correlation(state, op, op, 40)
    assert c.shape == (40,)
    assert abs(c[-1]) < abs(c[0])
    # identity has zero connected correlation
    c_id = connected_correlation(state, single_site(np.eye(2)), op, 5)
    assert np.max(np.abs(c_id)) < 1e-12


def test_resummation_matches_direct_contraction():
    state = _state(3, 2, 30)
    op = _op(2, 31)
    spec = tm_spectrum(state, state, m=state.D ** 2)
    ff = form_factors(state, spec, op, op)
    c_sum = correlation_from_spectrum(spec, ff, range(1, 31))
    c_dir = connected_correlation(state, op, op, 30)
    assert np.max(np.abs(c_sum - c_dir)) < 1e-11


def test_structure_factor_sum_rule():
    state = _state(4, 2, 33)
    op = _op(2, 34)
    sf = structure_factor(state, op)
    assert sf.kgrid.shape == (512,)
    assert np.max(np.abs(sf.values.imag)) < 1e-9
    # mean over the Brillouin zone recovers the on-site connected moment
    oz = zero_meaned(op, state)
    c0 = complex(expectation(state, SiteOperator(1, oz.matrix @ oz.matrix))).real
    assert np.isclose(np.mean(sf.values.real), c0, atol=1e-8)


def test_structure_factor_custom_grid():
    state = _state(3, 2, 35)
    op = _op(2, 36)
    k = np.linspace(0.1, 3.0, 7)
    sf = structure_factor(state, op, kgrid=k)
    assert np.array_equal(sf.kgrid, k)
    assert sf.values.shape == (7,)


def test_oscillator_strength_real_nonnegative_on_ground_state():
    from tmspectra.itebd import itebd_ground_state
    ham = build_hamiltonian("XY", (0.3, 0.2))
    state = itebd_ground_state(ham, 4, rng=5)
    k = default_kgrid(16)
    sx = single_site(spin_operators(1)[0])
    fk = oscillator_strength(state, ham, sx, kgrid=k)
    assert np.max(np.abs(np.imag(fk))) < 1e-9
    assert np.min(np.real(fk)) > -1e-9
    sf = structure_factor(state, sx, kgrid=k)
    e_sma = sma_dispersion(fk, sf)
    assert np.all(e_sma >= -1e-12)


def _synthetic_branch(delta=0.2, kappa=2.0, g=0.05, rho=-0.5, phi=0.7, n=8):
    j = np.arange(1, n + 1)
    eps = delta + g * (j - 1.0) ** kappa
    lam = np.concatenate([[1.0], np.exp(-eps + 1j * phi)])
    m = len(lam)
    spec = TmSpectrum(lam, -np.log(np.abs(lam)), np.angle(lam),
                      np.eye(m, dtype=complex), np.eye(m, dtype=complex),
                      "regular", 0.0)
    from tmspectra.correlations import FormFactorSet
    f = j.astype(float) ** rho
    ff = FormFactorSet(np.arange(1, m), f.astype(complex), spec)
    branch = Branch(phi, np.arange(1, m), delta, n)
    return spec, ff, branch


def test_oz_fit_recovers_synthetic_exponents():
    spec, ff, branch = _synthetic_branch()
    fit = oz_fit(spec, ff, branch)
    assert np.isclose(fit.delta, 0.2)
    assert np.isclose(fit.kappa, 2.0, atol=1e-6)
    assert np.isclose(fit.rho, -0.5, atol=1e-6)
    assert np.isclose(fit.eta, (1 - 0.5) / 2.0, atol=1e-6)
    assert np.isclose(fit.xi, 1 / 0.2)
    assert fit.eps_residual < 1e-8
    assert fit.f_residual < 1e-8
