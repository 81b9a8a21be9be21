import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmspectra.models import single_site, spin_operators
from tmspectra.momentum_filter import (FilteredCorrelation, bound_rate,
                                       decay_rate_fit, filtered_correlation,
                                       packet_normalization)
from tmspectra.mps import random_umps


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.5, 50.0))
def test_packet_normalization_inverts_the_sum(r):
    n_r = packet_normalization(r)
    nmax = int(np.ceil(9.0 * np.sqrt(r)))
    n = np.arange(-nmax, nmax + 1)
    total = np.sum(np.exp(-(n.astype(float) ** 2) / (2.0 * r)))
    assert abs(n_r * total - 1.0) < 1e-12


def test_packet_normalization_rejects_bad_width():
    with pytest.raises(ValueError):
        packet_normalization(0.0)


def test_filtered_correlation_shapes_and_floor():
    state = random_umps(4, 2, np.random.default_rng(40))
    op = single_site(spin_operators(1)[2])
    fc = filtered_correlation(state, op, op, k=0.3, ell_max=12, r=4.0)
    assert fc.ell.shape == (12,)
    assert fc.values.shape == (12,)
    assert fc.floor.shape == (12,)
    assert np.all(fc.floor >= 0)
    assert fc.k == 0.3 and fc.r == 4.0


def test_filtered_identity_vanishes():
    state = random_umps(3, 2, np.random.default_rng(41))
    op = single_site(np.eye(2))
    fc = filtered_correlation(state, op, op, k=0.0, ell_max=6, r=2.0)
    assert np.max(np.abs(fc.values)) < 1e-12


def test_decay_rate_fit_exact_exponential():
    ell = np.arange(1, 31)
    vals = 0.7 * np.exp(-0.3 * ell)
    fc = FilteredCorrelation(0.0, 4.0, ell, vals.astype(complex), 1.0,
                             np.zeros(30))
    fit = decay_rate_fit(fc)
    assert np.isclose(fit.rate, 0.3, atol=1e-12)
    assert fit.npoints == 30
    assert fit.residual < 1e-12


def test_decay_rate_fit_masks_floor_limited_points():
    ell = np.arange(1, 31)
    clean = 0.7 * np.exp(-0.3 * ell)
    noisy = clean.copy()
    noisy[15:] = 1e-6  # truncation-error plateau
    floor = np.zeros(30)
    floor[15:] = 1e-6  # the estimator knows those points are junk
    fc = FilteredCorrelation(0.0, 4.0, ell, noisy.astype(complex), 1.0, floor)
    fit = decay_rate_fit(fc)
    assert np.isclose(fit.rate, 0.3, atol=1e-12)
    assert fit.npoints == 15


def test_decay_rate_fit_needs_enough_points():
    ell = np.arange(1, 5)
    fc = FilteredCorrelation(0.0, 1.0, ell,
                             np.exp(-ell).astype(complex), 1.0, np.zeros(4))
    with pytest.raises(ValueError, match="usable points"):
        decay_rate_fit(fc)


def test_bound_rate_flat_dispersion():
    v_lr = 2.0
    gap = 0.5
    gb = bound_rate(lambda k: np.full_like(np.asarray(k, dtype=float), gap),
                    0.0, np.linspace(0.1, 1.2, 12), v_lr)
    # flat dispersion: bound 1/delta + v/gap minimized at the largest delta
    assert np.isclose(gb.delta, 1.2)
    assert np.isclose(gb.e_star, gap)
    assert np.isclose(gb.xi_bound, 1 / 1.2 + v_lr / gap)
    assert np.isclose(gb.rate_bound, 1.0 / gb.xi_bound)


def test_bound_rate_gapless_window_is_infinite():
    gb = bound_rate(lambda k: np.abs(np.asarray(k, dtype=float)), 0.0,
                    np.array([0.5]), 1.0)
    assert not np.isfinite(gb.xi_bound)
    assert gb.rate_bound == 0.0


def test_bound_rate_validates_input():
    with pytest.raises(ValueError):
        bound_rate(lambda k: k, 0.0, np.array([]), 1.0)
    with pytest.raises(ValueError):
        bound_rate(lambda k: k, 0.0, np.array([0.5]), 0.0)
