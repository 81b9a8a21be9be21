import numpy as np
import pytest

from tmspectra.mps import UniformMps, canonicalize, dense_tm
from tmspectra.peps import (aklt_chain_tensor, aklt_tensor, cylinder_tm,
                            dispersion_cut, doubled_site, max_spin_projector,
                            ring_tm_spectrum)


def test_max_spin_projector_is_isometry():
    for n in (2, 3, 4):
        P = max_spin_projector(n)
        assert P.shape == (n + 1, 2 ** n)
        assert np.allclose(P @ P.T, np.eye(n + 1))


def test_chain_reduction_gives_the_spin1_valence_bond_state():
    M = aklt_chain_tensor()
    assert M.shape == (3, 2, 2)
    state = canonicalize(UniformMps(M.transpose(1, 0, 2)), "left")
    w = np.sort(np.linalg.eigvals(dense_tm(state, state)).real)
    assert np.allclose(w, [-1 / 3, -1 / 3, -1 / 3, 1.0], atol=1e-12)


def test_tensor_shapes():
    sq = aklt_tensor("square")
    assert sq.tensor.shape == (5, 2, 2, 2, 2)
    assert sq.d == 5 and sq.D == 2
    hx = aklt_tensor("hexagonal")
    assert hx.tensor.shape == (16, 2, 2, 2, 2)
    with pytest.raises(ValueError):
        aklt_tensor("kagome")


def test_doubled_site_shape_and_hermiticity_pattern():
    sq = aklt_tensor("square")
    E = doubled_site(sq)
    assert E.shape == (4, 4, 4, 4)
    assert np.max(np.abs(E.imag)) < 1e-14


def test_ring_tm_translation_commutes():
    tm = cylinder_tm(aklt_tensor("square"), 3)
    rng = np.random.default_rng(50)
    v = rng.normal(size=tm.dim) + 1j * rng.normal(size=tm.dim)
    a = tm.translate(tm.apply(v))
    b = tm.apply(tm.translate(v))
    assert np.max(np.abs(a - b)) < 1e-10 * np.max(np.abs(a))


def test_virtual_sz_commutes_with_ring_tm():
    for lattice, n_y in (("square", 3), ("hexagonal", 4)):
        tm = cylinder_tm(aklt_tensor(lattice), n_y)
        rng = np.random.default_rng(51)
        v = rng.normal(size=tm.dim) + 1j * rng.normal(size=tm.dim)
        a = tm.virtual_sz(tm.apply(v))
        b = tm.apply(tm.virtual_sz(v))
        scale = max(np.max(np.abs(a)), 1.0)
        assert np.max(np.abs(a - b)) < 1e-10 * scale


def test_square_ring_spectrum_structure():
    sectors = ring_tm_spectrum(aklt_tensor("square"), 3, m=4)
    assert len(sectors) == 3
    for sec in sectors:
        assert np.max(np.abs(sec.eigenvalues.imag)) < 1e-10
        assert np.all(sec.eps >= -1e-12)
    cut = dispersion_cut(sectors)
    kx, ky, eps, deg, spin = cut.entries[0]
    assert (kx, ky, deg, spin) == (0.0, 0.0, 1, 0)
    assert eps < 1e-10
    nonzero = [r[2] for r in cut.entries if r[2] > 1e-10]
    assert np.isclose(cut.continuum, 2 * min(nonzero))


def test_krylov_matches_dense():
    dense = ring_tm_spectrum(aklt_tensor("square"), 3, m=3, method="dense")
    kry = ring_tm_spectrum(aklt_tensor("square"), 3, m=3, method="krylov")
    for ds, ks in zip(dense, kry):
        n = min(len(ds.eps), len(ks.eps))
        assert np.allclose(np.sort(ds.eps[:n]), np.sort(ks.eps[:n]), atol=1e-10)


def test_hexagonal_ring_spectrum_real_and_labeled():
    sectors = ring_tm_spectrum(aklt_tensor("hexagonal"), 4, m=4)
    assert len(sectors) == 2  # two-site cell: n_y // 2 momentum sectors
    cut = dispersion_cut(sectors)
    ground = cut.entries[0]
    assert ground[2] < 1e-10 and ground[3] == 1 and ground[4] == 0
    low = min((r for r in cut.entries if r[2] > 1e-10), key=lambda r: r[2])
    assert low[3] == 3 and low[4] == 1  # spin-1 triplet


def test_hexagonal_needs_even_rings():
    with pytest.raises(ValueError, match="even"):
        cylinder_tm(aklt_tensor("hexagonal"), 3)


def test_twisted_boundary_shifts_momentum_grid():
    twist = 0.4
    sectors = ring_tm_spectrum(aklt_tensor("square"), 3, boundary="twisted",
                               twist=twist, m=2)
    ks = sorted(sec.k_y for sec in sectors)
    expected = sorted((2 * np.pi * s + twist) / 3 for s in range(3))
    assert np.allclose(ks, expected)
    with pytest.raises(ValueError, match="twist"):
        cylinder_tm(aklt_tensor("square"), 3, "periodic", 0.3)
