"""AKLT tensors on square and hexagonal lattices and their cylinder spectra.

The tensors place spin-1/2 singlets on lattice edges and project each vertex
onto its maximal-spin sector.  Blocking the doubled-layer tensor around a
ring of the cylinder gives a quasi-1D transfer operator whose spectrum,
resolved by transverse momentum and virtual-spin multiplets, yields cuts
through the excitation dispersion.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

RING_DIM_CAP = 2 ** 24
DENSE_RING_CAP = 4096
DEGENERACY_TOL = 1e-8
PHASE_TOL = 1e-8

SINGLET = np.array([[0.0, 1.0], [-1.0, 0.0]])


def max_spin_projector(n_legs: int) -> np.ndarray:
    """Isometry from n spin-1/2 legs onto the maximal-spin irrep S = n/2.

    Rows are the |S, m> states (m descending), columns the 2^n leg basis;
    each maximal-spin state is the normalized symmetrization of the product
    states with a fixed number of up spins.
    """
    dim = n_legs + 1
    P = np.zeros((dim, 2 ** n_legs))
    for basis in range(2 ** n_legs):
        downs = bin(basis).count("1")  # bit 1 encodes spin down
        P[downs, basis] = 1.0 / np.sqrt(comb(n_legs, downs))
    return P


@dataclass(frozen=True)
class PepsTensor:
    """Rank-5 tensor A[s, u, d, l, r] with D=2 virtual legs."""

    tensor: np.ndarray
    lattice: str

    @property
    def d(self) -> int:
        return self.tensor.shape[0]

    @property
    def D(self) -> int:
        return self.tensor.shape[1]


def aklt_tensor(lattice: str = "square") -> PepsTensor:
    """AKLT tensor: singlets on edges, vertices projected to maximal spin.

    square: spin-2 site (d=5), legs (u, d, l, r), singlet gauge on d and r
    so every lattice bond carries exactly one singlet.
    hexagonal: two spin-3/2 sites blocked over one bond into a quasi-square
    tensor (d=16); gauged legs u and l come from one sublattice, plain legs
    d and r from the other, so bonds between blocks also carry one singlet.
    """
    if lattice == "square":
        P = max_spin_projector(4).reshape(5, 2, 2, 2, 2)  # legs u, d, l, r
        A = np.einsum("sudlr,dD,rR->suDlR", P, SINGLET, SINGLET)
        return PepsTensor(A, "square")
    if lattice == "hexagonal":
        P = max_spin_projector(3).reshape(4, 2, 2, 2)
        # sublattice A legs (u, l, c) all gauged; sublattice B legs (c, d, r)
        # plain; contracting c uses up the gauge of that bond
        ta = np.einsum("sulc,uU,lL,cC->sULC", P, SINGLET, SINGLET, SINGLET)
        tb = P
        blk = np.einsum("sulc,tcdr->studlr", ta, tb, optimize=True)
        return PepsTensor(blk.reshape(16, 2, 2, 2, 2), "hexagonal")
    raise ValueError(f"unknown lattice '{lattice}'")


def aklt_chain_tensor() -> np.ndarray:
    """1D reduction of the construction: two virtual legs, spin-1 site.

    Returns M[s, l, r] with the singlet gauge on the right leg; this is the
    spin-1 AKLT matrix product state.
    """
    P = max_spin_projector(2).reshape(3, 2, 2)
    return np.einsum("slr,rR->slR", P, SINGLET)


def doubled_site(t: PepsTensor) -> np.ndarray:
    """Bra-ket doubled tensor E[(u u'), (d d'), (l l'), (r r')], legs dim 4."""
    A = t.tensor
    E = np.einsum("sudlr,sUDLR->uUdDlLrR", A, A.conj(), optimize=True)
    D2 = t.D ** 2
    return E.reshape(D2, D2, D2, D2)


def symmetrized_site(t: PepsTensor) -> np.ndarray:
    """Doubled tensor whose ring TM has a real spectrum.

    With the singlet gauge placed on the d and r legs of the square-lattice
    tensor, the doubled tensor is symmetric under l <-> r and the ring TM is
    real symmetric as built.  The pair-blocked hexagonal tensor instead
    gives a ring TM whose adjoint is itself shifted by one ring site, which
    still forces a real spectrum; the eigensolver checks and exploits
    whichever structure is present.
    """
    return doubled_site(t)


@dataclass(frozen=True)
class CylinderTm:
    """Matrix-free ring transfer operator on a cylinder of circumference n_y.

    The ring repeats a unit cell of one site (square lattice) or two
    alternating sites (pair-blocked hexagonal lattice, where successive rows
    swap which sublattice carries the up leg).  Translation symmetry holds
    in steps of one unit cell.
    """

    sites: tuple  # doubled site tensors E[u, d, l, r] over one unit cell
    n_y: int
    boundary: str  # "periodic" or "twisted"
    twist: float  # total twist angle around the ring

    @property
    def cell(self) -> int:
        return len(self.sites)

    @property
    def n_cells(self) -> int:
        return self.n_y // self.cell

    @property
    def dim(self) -> int:
        return self.sites[0].shape[2] ** self.n_y

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply the ring TM: trace the site MPO around the ring."""
        n = self.n_y
        q = self.sites[0].shape[2]  # doubled leg dimension
        b = self.sites[0].shape[0]
        W = self.sites[0]
        X = np.tensordot(W, v.reshape(q, -1), axes=[[2], [0]])
        # X[b1, b2, r1, rest] -> [b1, done, b_cur, todo]
        X = X.transpose(0, 2, 1, 3).reshape(b, q, b, -1)
        for i in range(1, n):
            W = self.sites[i % self.cell]
            m = X.shape[1]
            rest = X.shape[3] // q
            X = X.reshape(b, m, b, q, rest)
            X = np.einsum("apbln,bqlr->aprqn", X, W,
                          optimize=True).reshape(b, m * q, b, rest)
        X = X.reshape(b, q ** n, b)
        return np.einsum("apa->p", X)

    def translate(self, v: np.ndarray, cells: int = 1) -> np.ndarray:
        """Cyclically shift the ring legs of a flat vector by unit cells."""
        q = self.sites[0].shape[2]
        shift = cells * self.cell
        axes = tuple((np.arange(self.n_y) + shift) % self.n_y)
        return np.ascontiguousarray(
            v.reshape((q,) * self.n_y).transpose(axes)
        ).reshape(-1)

    def sector_project(self, v: np.ndarray, m_y: int) -> np.ndarray:
        """Project onto the ring-momentum sector k_y = 2 pi m_y / n_cells."""
        n = self.n_cells
        out = np.zeros(v.shape, dtype=complex)
        for s in range(n):
            out += np.exp(-2j * np.pi * m_y * s / n) * self.translate(v, s)
        return out / n

    def virtual_sz(self, v: np.ndarray) -> np.ndarray:
        """Apply the total virtual S^z (adjoint action on the doubled legs).

        With a two-site cell the odd ring sites carry the conjugate virtual
        representation, so the conserved charge is the staggered sum.
        """
        D = int(round(np.sqrt(self.sites[0].shape[2])))
        sz = np.arange(D - 1, -D, -2, dtype=float) / 2.0
        zd = (sz[:, None] - sz[None, :]).reshape(-1)
        q = D * D
        out = np.zeros(v.shape, dtype=complex)
        x = v.reshape((q,) * self.n_y)
        for i in range(self.n_y):
            shape = [1] * self.n_y
            shape[i] = q
            sign = -1.0 if (self.cell == 2 and i % 2) else 1.0
            out += sign * (x * zd.reshape(shape)).reshape(-1)
        return out

    def site_shift_permutation(self) -> np.ndarray:
        """Index permutation of a one-site (not one-cell) ring shift."""
        q = self.sites[0].shape[2]
        idx = np.arange(self.dim).reshape((q,) * self.n_y)
        axes = tuple((np.arange(self.n_y) + 1) % self.n_y)
        return np.ascontiguousarray(idx.transpose(axes)).reshape(-1)

    def dense(self) -> np.ndarray:
        if self.dim > DENSE_RING_CAP:
            raise ValueError(f"dense ring TM capped at dimension {DENSE_RING_CAP}")
        eye = np.eye(self.dim, dtype=complex)
        return np.column_stack([self.apply(eye[:, i]) for i in range(self.dim)])


def cylinder_tm(t: PepsTensor, n_y: int, boundary: str = "periodic",
                twist: float = 0.0) -> CylinderTm:
    """Ring transfer operator of the symmetrized doubled tensor.

    A twisted boundary spreads the total twist angle uniformly over the ring
    bonds (gauge-equivalent to one twisted bond) so translation symmetry is
    kept exactly and momentum sectors stay well defined.
    """
    if boundary not in ("periodic", "twisted"):
        raise ValueError("boundary must be 'periodic' or 'twisted'")
    if boundary == "periodic" and twist != 0.0:
        raise ValueError("periodic boundary cannot carry a twist angle")
    site = symmetrized_site(t).astype(complex)
    if t.lattice == "hexagonal":
        if n_y % 2:
            raise ValueError("hexagonal rings need an even number of blocks")
        # successive rows swap which sublattice carries the up leg; by the
        # leg symmetry of the maximal-spin projector the second tensor is
        # the first with up and down exchanged
        sites = (site, np.ascontiguousarray(site.transpose(1, 0, 2, 3)))
    else:
        sites = (site,)
    if twist != 0.0:
        D = t.D
        sz = np.arange(D - 1, -D, -2, dtype=float) / 2.0
        u = np.exp(1j * (twist / n_y) * sz)
        bond = np.kron(np.diag(u), np.diag(u).conj())
        sites = tuple(np.einsum("udlr,dD->uDlr", s, bond) for s in sites)
    op = CylinderTm(sites, n_y, boundary, float(twist))
    if op.dim > RING_DIM_CAP:
        raise ValueError(f"ring dimension {op.dim} exceeds cap {RING_DIM_CAP}")
    return op


@dataclass(frozen=True)
class RingSector:
    """Leading ring-TM eigenvalues in one transverse-momentum sector."""

    m_y: int
    k_y: float
    eigenvalues: np.ndarray
    eps: np.ndarray  # -log(|lambda| / lambda0), lambda0 global
    vectors: np.ndarray  # columns
    spins: tuple  # inferred spin per eigenvalue, None where ambiguous


def _group_degenerate(vals: np.ndarray, tol: float = DEGENERACY_TOL):
    scale = max(1.0, float(np.max(np.abs(vals)))) if len(vals) else 1.0
    groups, cur = [], [0]
    for i in range(1, len(vals)):
        if abs(vals[i] - vals[cur[-1]]) <= tol * scale:
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i]
    groups.append(cur)
    return groups


def _spin_labels(tm: CylinderTm, vals: np.ndarray, vecs: np.ndarray) -> tuple:
    """Assign spins by the virtual total-S^z content of degenerate groups.

    A spin-S multiplet appears as 2S+1 degenerate eigenvectors whose span
    carries S^z eigenvalues {-S, ..., S}.
    """
    labels = [None] * len(vals)
    for grp in _group_degenerate(vals):
        V = vecs[:, grp]
        G = V.conj().T @ V
        Zm = V.conj().T @ np.column_stack(
            [tm.virtual_sz(V[:, i]) for i in range(V.shape[1])]
        )
        try:
            zvals = np.linalg.eigvals(np.linalg.solve(G, Zm))
        except np.linalg.LinAlgError:
            continue
        if np.max(np.abs(zvals.imag)) > 1e-6:
            continue
        z = np.sort(zvals.real)
        s = (len(grp) - 1) / 2.0
        expect = np.arange(-s, s + 1)
        if np.allclose(z, expect, atol=1e-6):
            label = int(s) if s == int(s) else s
            for i in grp:
                labels[i] = label
    return tuple(labels)


def _momentum_split(tm: CylinderTm, vals: np.ndarray, vecs: np.ndarray):
    """Rotate degenerate groups to translation eigenvectors; return m_y labels."""
    n = tm.n_cells
    m_y = np.empty(len(vals), dtype=int)
    vecs = vecs.astype(complex).copy()
    for grp in _group_degenerate(vals):
        V = vecs[:, grp]
        M = V.conj().T @ np.column_stack(
            [tm.translate(V[:, i]) for i in range(V.shape[1])]
        )
        w, u = np.linalg.eig(M)
        V = V @ u
        V /= np.linalg.norm(V, axis=0, keepdims=True)
        vecs[:, grp] = V
        for i, lam in zip(grp, w):
            if abs(abs(lam) - 1.0) > 1e-6:
                raise AssertionError(
                    f"translation eigenvalue magnitude {abs(lam):.6f} != 1"
                )
            frac = np.angle(lam) * n / (2 * np.pi)
            m = int(np.round(frac)) % n
            if abs(frac - np.round(frac)) > 1e-6:
                raise AssertionError(
                    f"translation phase {np.angle(lam):.6f} not on the momentum grid"
                )
            m_y[i] = m
    return m_y, vecs


def ring_tm_spectrum(t: PepsTensor, n_y: int, boundary: str = "periodic",
                     m: int = 6, twist: float = 0.0,
                     method: str = "auto") -> list:
    """Top-m ring-TM eigenpairs per transverse-momentum sector.

    Returns RingSector entries for the momentum grid of the ring's unit
    cell (one site on the square lattice, two alternating sites on the
    hexagonal one), each with eigenvalues sorted by descending magnitude,
    quasi-energies relative to the global dominant eigenvalue, and spin
    labels from virtual-S^z multiplets.  With a twisted boundary the
    reported k_y is shifted by twist / n_cells.
    """
    if method not in ("auto", "dense", "krylov"):
        raise ValueError("method must be 'auto', 'dense' or 'krylov'")
    tm = cylinder_tm(t, n_y, boundary, twist)
    dim = tm.dim
    n_sec = tm.n_cells
    per_sector = {s: [] for s in range(n_sec)}
    use_dense = dim <= DENSE_RING_CAP if method == "auto" else method == "dense"
    if use_dense:
        T = tm.dense()
        scale = float(np.max(np.abs(T)))
        herm = float(np.max(np.abs(T - T.conj().T)))
        if herm <= 1e-8 * scale:
            w, v = np.linalg.eigh((T + T.conj().T) / 2)
        else:
            # a two-site ring cell makes the adjoint equal the TM shifted by
            # one site: the spectrum is still real, but the eigensolve is
            # general and each degenerate eigenspace is re-orthonormalized
            perm = tm.site_shift_permutation()
            shift_res = float(np.max(np.abs(T.conj().T - T[perm][:, perm])))
            if shift_res > 1e-8 * scale:
                raise AssertionError(
                    f"ring TM is neither Hermitian ({herm:.2e}) nor "
                    f"shift-Hermitian ({shift_res:.2e})"
                )
            wc, v = sla.eig(T)
            if np.max(np.abs(wc.imag)) > 1e-8 * np.max(np.abs(wc)):
                raise AssertionError("shift-Hermitian ring TM spectrum not real")
            w = wc.real
            order = np.argsort(w, kind="stable")
            w, v = w[order], v[:, order]
            for grp in _group_degenerate(w):
                q, _ = np.linalg.qr(v[:, grp])
                resid = float(np.max(np.abs(T @ q - w[grp[0]] * q)))
                if resid > 1e-6 * max(float(np.max(np.abs(w))), 1.0):
                    raise AssertionError(
                        f"degenerate eigenspace residual {resid:.2e}"
                    )
                v[:, grp] = q
        lam0 = float(np.max(np.abs(w)))
        groups = _group_degenerate(w)  # ascending value
        groups.sort(key=lambda g: -np.max(np.abs(w[g])))
        for grp in groups:
            if all(len(g) >= m for g in per_sector.values()):
                break
            if np.max(np.abs(w[grp])) < 1e-12 * lam0:
                break
            m_y, vg = _momentum_split(tm, w[grp], v[:, grp])
            for i in range(len(grp)):
                if len(per_sector[m_y[i]]) < m:
                    per_sector[m_y[i]].append((w[grp[i]], vg[:, i]))
    else:
        for s in range(n_sec):
            def act(x, s=s):
                return tm.sector_project(tm.apply(x), s)

            op = spla.LinearOperator((dim, dim), matvec=act, dtype=complex)
            k = min(m + 2, dim - 2)
            lam, vec = spla.eigs(op, k=k, which="LM", tol=1e-10)
            if np.max(np.abs(lam.imag)) > 1e-8 * np.max(np.abs(lam)):
                raise AssertionError("ring TM spectrum is not real after gauge")
            order = np.argsort(-np.abs(lam.real), kind="stable")[:m]
            for i in order:
                per_sector[s].append((lam.real[i], vec[:, i]))
    lam0 = max(abs(entry[0][0]) for entry in per_sector.values() if entry)
    sectors = []
    for s in range(n_sec):
        entries = per_sector[s]
        if not entries:
            continue
        vals = np.array([e[0] for e in entries])
        vecs = np.column_stack([e[1] for e in entries])
        eps = -np.log(np.abs(vals) / lam0)
        spins = _spin_labels(tm, vals, vecs)
        k_y = (2 * np.pi * s + twist) / n_sec
        sectors.append(RingSector(s, k_y, vals.astype(complex), eps, vecs, spins))
    return sectors


@dataclass(frozen=True)
class DispersionCut:
    """Dispersion-cut table from ring-TM sector spectra."""

    entries: tuple  # rows (k_x, k_y, eps, degeneracy, spin)
    continuum: float  # two-particle marker: twice the lowest nonzero eps


def dispersion_cut(sectors: list) -> DispersionCut:
    """Tabulate (k_x, k_y, quasi-energy, degeneracy, spin) from sector data.

    k_x is 0 for positive eigenvalues and pi for negative ones; degenerate
    levels within a sector are merged into one row with their multiplicity.
    """
    if not sectors:
        raise ValueError("no sector spectra supplied")
    rows = []
    for sec in sectors:
        vals = sec.eigenvalues.real
        for grp in _group_degenerate(vals):
            lam = vals[grp[0]]
            kx = 0.0 if lam >= 0 else np.pi
            eps = float(np.mean(sec.eps[list(grp)]))
            spin = sec.spins[grp[0]]
            rows.append((kx, float(sec.k_y), eps, len(grp), spin))
    rows.sort(key=lambda r: r[2])
    if not any(r[2] < 1e-10 for r in rows):
        raise AssertionError("dispersion cut is missing the ground entry")
    nonzero = [r[2] for r in rows if r[2] > 1e-10]
    continuum = 2.0 * min(nonzero) if nonzero else np.inf
    return DispersionCut(tuple(rows), continuum)
