import numpy as np
import pytest

from tmspectra.mps import apply_symmetry, dense_tm, random_umps
from tmspectra.spectra import (cluster_branches, estimate_velocity,
                               extrapolate_power, tm_spectrum)


def _state(D=5, d=2, seed=4):
    return random_umps(D, d, np.random.default_rng(seed))


def test_regular_spectrum_basics():
    state = _state()
    spec = tm_spectrum(state, state, m=6)
    assert spec.kind == "regular"
    assert np.isclose(spec.eigenvalues[0], 1.0, atol=1e-10)
    assert np.isclose(spec.eps[0], 0.0, atol=1e-10)
    assert np.all(np.diff(spec.eps) >= -1e-12)  # descending magnitude
    assert spec.biorth_residual < 1e-8


def test_eigenpairs_solve_the_dense_problem():
    state = _state(4, 2, 8)
    spec = tm_spectrum(state, state, m=6)
    T = dense_tm(state, state)
    for j in range(spec.m):
        lam = spec.eigenvalues[j]
        r = spec.right_vectors[:, j]
        assert np.linalg.norm(T @ r - lam * r) < 1e-8
        l = spec.left_vectors[:, j]
        assert np.linalg.norm(l @ T - lam * l) < 1e-8
    # biorthonormal pairing
    G = spec.left_vectors.T @ spec.right_vectors
    assert np.max(np.abs(G - np.eye(spec.m))) < 1e-8


def test_mixed_kind_label():
    state = _state(4, 2, 10)
    partner = apply_symmetry(state, np.diag([1.0, -1.0]))
    spec = tm_spectrum(partner, state, m=3)
    assert spec.kind == "mixed"


def test_dense_and_arnoldi_agree():
    state = _state(6, 2, 12)
    a = tm_spectrum(state, state, m=5, dense=True)
    b = tm_spectrum(state, state, m=5, dense=False)
    assert np.allclose(a.eigenvalues[:5], b.eigenvalues[:5], atol=1e-8)


def test_cluster_branches_partition():
    state = _state(6, 2, 14)
    spec = tm_spectrum(state, state, m=10)
    branches = cluster_branches(spec)
    members = np.concatenate([b.phi * 0 + b.members for b in branches])
    # every retained nonzero-eps eigenvalue lands in exactly one branch
    assert len(members) == len(set(members.tolist()))
    for b in branches:
        assert b.count == len(b.members)
        assert np.isclose(b.delta, float(np.min(spec.eps[b.members])))
        for j in b.members:
            d = abs((spec.phi[j] - b.phi + np.pi) % (2 * np.pi) - np.pi)
            assert d <= 0.03 * np.pi


def test_estimate_velocity():
    assert np.isclose(estimate_velocity(0.25, 0.5), 2.0)
    with pytest.raises(ValueError):
        estimate_velocity(0.0, 1.0)


def test_extrapolate_power_fixed_exponent_exact():
    D = np.array([8, 16, 32, 64], dtype=float)
    y = 0.31 + 0.4 / D
    vinf, a, b, resid = extrapolate_power(D, y, exponent=1.0)
    assert np.isclose(vinf, 0.31, atol=1e-12)
    assert np.isclose(a, 0.4, atol=1e-10)
    assert b == 1.0
    assert resid < 1e-12


def test_extrapolate_power_free_exponent():
    D = np.array([8, 16, 32, 64, 128], dtype=float)
    y = 1.2 + 0.7 * D ** -1.5
    vinf, a, b, resid = extrapolate_power(D, y)
    assert np.isclose(vinf, 1.2, atol=1e-8)
    assert np.isclose(b, 1.5, atol=1e-6)
