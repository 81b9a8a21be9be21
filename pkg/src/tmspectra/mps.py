"""Uniform matrix product states and matrix-free transfer-matrix application.

Conventions
-----------
The site tensor A has shape (D, d, D) = (left, physical, right).  The
transfer matrix between a bra tensor B and a ket tensor A is

    T_{(a b),(x y)} = sum_s conj(B[a, s, x]) A[b, s, y],

acting on vectors indexed by the composite (bra, ket) pair.  Left application
computes the plain row-vector product v.T, so left and right eigenvectors
pair up with an unconjugated dot product.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg as spla

from .models import SiteOperator

GAUGE_TOL = 1e-10
INJECTIVITY_MARGIN = 1e-8


class GaugeError(RuntimeError):
    """Canonicalization failed (non-injective or corrupted input)."""


@dataclass(frozen=True)
class UniformMps:
    """Uniform MPS defined by a single site tensor.

    gauge is one of {"none", "left", "right", "mixed"}; "mixed" means the
    tensor is left-canonical with a diagonal right fixed point whose
    square roots are stored (descending) in `schmidt`.
    """

    A: np.ndarray
    gauge: str = "none"
    schmidt: np.ndarray | None = None
    injective: bool | None = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        if A.ndim != 3 or A.shape[0] != A.shape[2]:
            raise ValueError(f"site tensor must have shape (D, d, D), got {A.shape}")
        object.__setattr__(self, "A", A)
        if self.schmidt is not None:
            object.__setattr__(self, "schmidt", np.asarray(self.schmidt, dtype=float))

    @property
    def D(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def blocked(self, n: int) -> np.ndarray:
        """Tensor for n merged sites, shape (D, d**n, D)."""
        D, d = self.D, self.d
        out = self.A
        for _ in range(n - 1):
            out = np.einsum("aib,bjc->aijc", out, self.A).reshape(D, -1, D)
        return out


def apply_tm(bra: UniformMps, ket: UniformMps, direction: str, v: np.ndarray) -> np.ndarray:
    """Apply the (mixed) transfer matrix to a flat vector, matrix-free.

    direction "right" computes T v, "left" computes v T (plain row product).
    """
    if bra.d != ket.d:
        raise ValueError("bra and ket physical dimensions differ")
    Db, Dk = bra.D, ket.D
    if v.size != Db * Dk:
        raise ValueError(f"vector length {v.size} != {Db * Dk}")
    M = np.asarray(v).reshape(Db, Dk)
    if direction == "right":
        out = np.einsum("asx,bsy,xy->ab", bra.A.conj(), ket.A, M, optimize=True)
    elif direction == "left":
        out = np.einsum("asx,bsy,ab->xy", bra.A.conj(), ket.A, M, optimize=True)
    else:
        raise ValueError("direction must be 'left' or 'right'")
    return out.reshape(-1)


def dense_tm(bra: UniformMps, ket: UniformMps) -> np.ndarray:
    """Materialize the transfer matrix (testing / small-D fallback only)."""
    Db, Dk = bra.D, ket.D
    T = np.einsum("asx,bsy->abxy", bra.A.conj(), ket.A)
    return T.reshape(Db * Dk, Db * Dk)


def tm_operator(bra: UniformMps, ket: UniformMps, direction: str = "right") -> spla.LinearOperator:
    n = bra.D * ket.D
    return spla.LinearOperator(
        (n, n), matvec=lambda v: apply_tm(bra, ket, direction, v), dtype=complex
    )


def _dominant(bra: UniformMps, ket: UniformMps, direction: str):
    """Dominant eigenpair of the TM in the given direction."""
    n = bra.D * ket.D
    if n == 1:
        lam = apply_tm(bra, ket, direction, np.ones(1))[0]
        return lam, np.ones(1, dtype=complex)
    if n <= 64:
        T = dense_tm(bra, ket)
        if direction == "left":
            T = T.T
        w, vecs = np.linalg.eig(T)
        i = int(np.argmax(np.abs(w)))
        return w[i], vecs[:, i]
    w, vecs = spla.eigs(tm_operator(bra, ket, direction), k=1, which="LM", tol=1e-14)
    return w[0], vecs[:, 0]


def fixed_points(mps: UniformMps):
    """Left and right dominant eigenvectors (l, r) as (D, D) matrices.

    Hermitized and normalized such that the plain pairing sum(l * r) = 1.
    For a normalized state the dominant eigenvalue is 1.
    """
    D = mps.D
    _, lv = _dominant(mps, mps, "left")
    _, rv = _dominant(mps, mps, "right")
    l = lv.reshape(D, D)
    r = rv.reshape(D, D)
    # fix the arbitrary eigenvector phase so the matrices are Hermitian PSD
    l = l / np.trace(l)
    r = r / np.trace(r)
    l = (l + l.conj().T) / 2
    r = (r + r.conj().T) / 2
    norm = np.sum(l * r)
    r = r / norm
    return l, r


def _hermitian_sqrt_factor(m: np.ndarray, tol: float = 1e-12):
    """Return (F, Finv) with m = F^H F for Hermitian positive-definite m."""
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    if vals[0] < -tol * max(vals[-1], 1.0):
        raise GaugeError(
            f"dominant eigenvector not positive definite (min eigenvalue {vals[0]:.3e})"
        )
    vals = np.clip(vals, tol * vals[-1], None)
    s = np.sqrt(vals)
    F = s[:, None] * vecs.conj().T
    Finv = vecs * (1.0 / s)[None, :]
    return F, Finv


def gauge_residual(mps: UniformMps, gauge: str | None = None) -> float:
    """Frobenius deviation from the left/right orthonormality condition."""
    gauge = gauge or mps.gauge
    A = mps.A
    D = mps.D
    if gauge in ("left", "mixed"):
        m = np.einsum("asb,asc->bc", A.conj(), A)
        return float(np.linalg.norm(m - np.eye(D)))
    if gauge == "right":
        m = np.einsum("bsa,csa->bc", A, A.conj())
        return float(np.linalg.norm(m - np.eye(D)))
    raise ValueError(f"no orthonormality condition for gauge {gauge!r}")


def injectivity_ratio(mps: UniformMps) -> float:
    """|lambda_1| / |lambda_0| of the regular TM (strictly < 1 iff injective)."""
    n = mps.D ** 2
    if n == 1:
        return 0.0
    if n <= 4096:
        w = np.linalg.eigvals(dense_tm(mps, mps))
    else:
        w, _ = spla.eigs(tm_operator(mps, mps), k=2, which="LM", tol=1e-12)
    w = np.sort(np.abs(w))[::-1]
    return float(w[1] / w[0])


def canonicalize(mps: UniformMps, gauge: str = "mixed") -> UniformMps:
    """Bring a uniform MPS into the requested canonical gauge.

    The physical state is unchanged (all expectation values preserved).
    """
    if gauge not in ("left", "right", "mixed"):
        raise ValueError("gauge must be 'left', 'right' or 'mixed'")
    A = mps.A
    D = mps.D

    # normalize the dominant TM eigenvalue to one
    lam, _ = _dominant(mps, mps, "right")
    if abs(lam) <= 0:
        raise GaugeError("transfer matrix has vanishing dominant eigenvalue")
    A = A / np.sqrt(abs(lam))
    state = UniformMps(A)

    if gauge == "right":
        # derive from the left-canonical form to keep one code path
        if gauge_residual(state, "right") <= GAUGE_TOL:
            out = replace(state, gauge="right")
        else:
            left = canonicalize(state, "left")
            _, r = fixed_points(left)
            vals, vecs = np.linalg.eigh(r)
            order = np.argsort(vals)[::-1]
            vals, vecs = vals[order], vecs[:, order]
            if vals[0] <= 0:
                raise GaugeError("right fixed point not positive semidefinite")
            s = np.sqrt(np.clip(vals, 0, None))
            s = s / np.linalg.norm(s)
            # flattened fixed point is the conjugate of the density matrix,
            # so the diagonalizing gauge rotation is V^T rather than V^H
            Al = np.einsum("ab,bsc,cd->asd", vecs.T, left.A, vecs.conj())
            sinv = np.where(s > 1e-14, 1.0 / np.clip(s, 1e-14, None), 0.0)
            Ar = np.einsum("a,asb,b->asb", sinv, Al, s)
            out = UniformMps(Ar, gauge="right")
            res = gauge_residual(out, "right")
            if res > GAUGE_TOL:
                raise GaugeError(f"right gauge residual {res:.3e} above {GAUGE_TOL:.0e}")
        ratio = injectivity_ratio(out)
        return replace(out, injective=bool(ratio < 1 - INJECTIVITY_MARGIN))

    # fast path: already left-orthonormal (avoids the arbitrary basis
    # rotation a degenerate fixed point would introduce)
    if gauge_residual(state, "left") > GAUGE_TOL:
        l, _ = fixed_points(state)
        F, Finv = _hermitian_sqrt_factor(l)
        A = np.einsum("ab,bsc,cd->asd", F, A, Finv)
        state = UniformMps(A)
        res = gauge_residual(state, "left")
        if res > GAUGE_TOL:
            # one refinement pass mops up eigensolver residual
            l, _ = fixed_points(state)
            F, Finv = _hermitian_sqrt_factor(l)
            A = np.einsum("ab,bsc,cd->asd", F, A, Finv)
            state = UniformMps(A)
            res = gauge_residual(state, "left")
            if res > GAUGE_TOL:
                raise GaugeError(f"left gauge residual {res:.3e} above {GAUGE_TOL:.0e}")

    if gauge == "left":
        ratio = injectivity_ratio(state)
        return replace(state, gauge="left", injective=bool(ratio < 1 - INJECTIVITY_MARGIN))

    # mixed: rotate the left-canonical tensor so the right fixed point is
    # diagonal with descending entries; Schmidt values are its square roots
    _, r = fixed_points(state)
    diag = np.real(np.diag(r))
    if (
        np.linalg.norm(r - np.diag(diag)) <= GAUGE_TOL
        and np.all(np.diff(diag) <= 1e-14)
        and diag[-1] >= 0
    ):
        schmidt = np.sqrt(np.clip(diag, 0, None))
        schmidt = schmidt / np.linalg.norm(schmidt)
        out = UniformMps(state.A, gauge="mixed", schmidt=schmidt)
        ratio = injectivity_ratio(out)
        return replace(out, injective=bool(ratio < 1 - INJECTIVITY_MARGIN))
    vals, vecs = np.linalg.eigh(r)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    if vals[0] <= 0:
        raise GaugeError("right fixed point not positive semidefinite")
    A = np.einsum("ab,bsc,cd->asd", vecs.T, state.A, vecs.conj())
    schmidt = np.sqrt(np.clip(vals, 0, None))
    schmidt = schmidt / np.linalg.norm(schmidt)
    out = UniformMps(A, gauge="mixed", schmidt=schmidt)
    ratio = injectivity_ratio(out)
    return replace(out, injective=bool(ratio < 1 - INJECTIVITY_MARGIN))


def apply_symmetry(mps: UniformMps, u: np.ndarray) -> UniformMps:
    """Transform the state by a local unitary: A~^s = sum_k <s|u|k> A^k."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (mps.d, mps.d):
        raise ValueError("symmetry operation has wrong dimension")
    if np.max(np.abs(u @ u.conj().T - np.eye(mps.d))) > 1e-12:
        raise ValueError("symmetry operation is not unitary")
    A = np.einsum("sk,akb->asb", u, mps.A)
    return UniformMps(A, gauge=mps.gauge, schmidt=mps.schmidt, injective=mps.injective)


MAX_SUPPORT = 4


def expectation(mps: UniformMps, op: SiteOperator) -> complex:
    """Ground-state expectation value of an n-site operator (n <= 4)."""
    if op.sites > MAX_SUPPORT:
        raise ValueError(f"operator support {op.sites} exceeds cap {MAX_SUPPORT}")
    if op.local_dim() != mps.d:
        raise ValueError("operator local dimension does not match state")
    if mps.gauge in ("left", "mixed"):
        l = np.eye(mps.D, dtype=complex)
        _, r = fixed_points(mps)
    elif mps.gauge == "right":
        l, _ = fixed_points(mps)
        r = np.eye(mps.D, dtype=complex)
    else:
        l, r = fixed_points(mps)
    norm = np.sum(l * r)
    blk = mps.blocked(op.sites)
    val = np.einsum("ab,aIx,IJ,bJy,xy->", l, blk.conj(), op.matrix, blk, r, optimize=True)
    return complex(val / norm)


def zero_meaned(op: SiteOperator, mps: UniformMps) -> SiteOperator:
    """Subtract the ground-state expectation times identity."""
    if op.zero_mean:
        return op
    mean = expectation(mps, op)
    return SiteOperator(op.sites, op.matrix - mean * np.eye(op.matrix.shape[0]), True)


def random_umps(D: int, d: int, rng=None, real: bool = False) -> UniformMps:
    """Random injective uniform MPS in mixed canonical gauge."""
    rng = np.random.default_rng(rng)
    A = rng.standard_normal((D, d, D))
    if not real:
        A = A + 1j * rng.standard_normal((D, d, D))
    return canonicalize(UniformMps(A), "mixed")
