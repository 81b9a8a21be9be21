import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmspectra.models import SiteOperator, single_site, spin_operators
from tmspectra.mps import (UniformMps, apply_symmetry, apply_tm, canonicalize,
                           dense_tm, expectation, fixed_points,
                           gauge_residual, random_umps, zero_meaned)

RNG = np.random.default_rng(3)


def _random_state(D=5, d=2, seed=3):
    return random_umps(D, d, np.random.default_rng(seed))


def test_random_umps_is_mixed_canonical():
    state = _random_state()
    assert state.gauge == "mixed"
    assert gauge_residual(state) < 1e-10
    assert state.injective
    s = state.schmidt
    assert np.all(np.diff(s) <= 1e-14)
    assert np.isclose(np.linalg.norm(s), 1.0)


def test_apply_tm_matches_dense():
    bra = _random_state(4, 2, 1)
    ket = _random_state(3, 2, 2)
    T = dense_tm(bra, ket)
    v = RNG.standard_normal(12) + 1j * RNG.standard_normal(12)
    assert np.allclose(apply_tm(bra, ket, "right", v), T @ v)
    assert np.allclose(apply_tm(bra, ket, "left", v), v @ T)


def test_fixed_points_normalized_pairing():
    state = _random_state(6, 3, 5)
    l, r = fixed_points(state)
    assert np.allclose(l, l.conj().T)
    assert np.allclose(r, r.conj().T)
    assert np.isclose(np.sum(l * r), 1.0)
    # dominant eigenvalue of a canonical state is one
    v = apply_tm(state, state, "right", r.reshape(-1))
    assert np.allclose(v, r.reshape(-1), atol=1e-9)


@pytest.mark.parametrize("gauge", ["right", "mixed"])
def test_canonical_gauges_agree_on_observables(gauge):
    A = RNG.standard_normal((5, 2, 5)) + 1j * RNG.standard_normal((5, 2, 5))
    raw = UniformMps(A)
    sx, _, sz = spin_operators(1)
    op = single_site(sz + 0.3 * sx)
    reference = expectation(canonicalize(raw, "left"), op)
    out = canonicalize(raw, gauge)
    assert out.gauge == gauge
    assert gauge_residual(out) < 1e-9
    assert np.isclose(expectation(out, op), reference, atol=1e-9)


def test_expectation_identity_and_blocking():
    state = _random_state(4, 3, 9)
    assert np.isclose(expectation(state, SiteOperator(1, np.eye(3))), 1.0)
    assert np.isclose(expectation(state, SiteOperator(2, np.eye(9))), 1.0)
    blk = state.blocked(2)
    assert blk.shape == (4, 9, 4)
    with pytest.raises(ValueError, match="support"):
        expectation(state, SiteOperator(5, np.eye(3 ** 5)))


def test_apply_symmetry_covariance():
    state = _random_state(4, 2, 11)
    sx, sy, sz = spin_operators(1)
    u = np.diag([1.0, -1.0])
    rotated = apply_symmetry(state, u)
    # <psi U| O |U psi> = <psi| U^H O U |psi>
    val = expectation(rotated, single_site(sx))
    ref = expectation(state, single_site(u.conj().T @ sx @ u))
    assert np.isclose(val, ref, atol=1e-10)
    with pytest.raises(ValueError, match="unitary"):
        apply_symmetry(state, np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_zero_meaned():
    state = _random_state(4, 2, 13)
    _, _, sz = spin_operators(1)
    op = zero_meaned(single_site(sz), state)
    assert op.zero_mean
    assert abs(expectation(state, op)) < 1e-10
    # idempotent
    assert zero_meaned(op, state) is op


@settings(max_examples=10, deadline=None)
@given(D=st.integers(2, 6), d=st.integers(2, 3), seed=st.integers(0, 10 ** 6))
def test_canonical_gauge_residual_property(D, d, seed):
    state = random_umps(D, d, np.random.default_rng(seed))
    assert gauge_residual(state) < 1e-10
    l, r = fixed_points(state)
    assert np.isclose(np.sum(l * r), 1.0)
