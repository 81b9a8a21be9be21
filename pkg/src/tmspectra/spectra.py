"""Leading eigenvalue spectra of regular and mixed transfer matrices.

Eigenvalues are reported in polar form eps = -log|lambda|, phi = arg lambda.
Left and right eigenvectors pair with the plain (unconjugated) dot product,
matching the transfer-matrix conventions of the mps module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.optimize as sopt
import scipy.sparse.linalg as spla

from .mps import UniformMps, dense_tm, tm_operator

DENSE_DIM_CAP = 4096
PHASE_TOL_DEFAULT = 0.02 * np.pi
KRYLOV_TOL = 1e-10


class KrylovError(RuntimeError):
    """Arnoldi iteration failed to converge to the requested accuracy."""


@dataclass(frozen=True)
class TmSpectrum:
    """Ordered eigenvalue data of a (possibly mixed) transfer matrix."""

    eigenvalues: np.ndarray
    eps: np.ndarray
    phi: np.ndarray
    right_vectors: np.ndarray  # columns, top m
    left_vectors: np.ndarray  # columns, top m; (i| j) = l_i . r_j = delta_ij
    kind: str  # "regular" or "mixed"
    biorth_residual: float

    @property
    def m(self) -> int:
        return self.right_vectors.shape[1]

    def __len__(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class Branch:
    """Cluster of eigenvalues sharing a common phase."""

    phi: float
    members: np.ndarray  # spectrum indices, ascending eps
    delta: float  # smallest member eps
    count: int


def _sort_key(vals: np.ndarray):
    """Descending magnitude, ties broken by ascending phase in [-pi, pi)."""
    mag = np.abs(vals)
    phase = np.angle(vals)
    phase[phase >= np.pi - 1e-15] -= 2 * np.pi
    return np.lexsort((phase, -mag))


def _eig_dense(T: np.ndarray, m: int):
    w, vr = sla.eig(T)
    wl, vl = sla.eig(T.T)
    order = _sort_key(w)
    w, vr = w[order], vr[:, order]
    # greedy-match left eigenvalues to the sorted right ones
    used = np.zeros(len(wl), dtype=bool)
    cols = []
    for lam in w[:m]:
        cand = np.where(~used)[0]
        i = cand[np.argmin(np.abs(wl[cand] - lam))]
        used[i] = True
        cols.append(i)
    return w, vr[:, :m], vl[:, cols]


def _eig_arnoldi(bra, ket, m: int):
    n = bra.D * ket.D
    ncv = min(n, max(4 * m, 40))
    try:
        w, vr = spla.eigs(
            tm_operator(bra, ket, "right"), k=m, which="LM", ncv=ncv, tol=KRYLOV_TOL
        )
        wl, vl = spla.eigs(
            tm_operator(bra, ket, "left"), k=m, which="LM", ncv=ncv, tol=KRYLOV_TOL
        )
    except spla.ArpackNoConvergence as exc:
        raise KrylovError(f"Arnoldi failed to converge: {exc}") from exc
    order = _sort_key(w)
    w, vr = w[order], vr[:, order]
    used = np.zeros(len(wl), dtype=bool)
    cols = []
    for lam in w:
        cand = np.where(~used)[0]
        i = cand[np.argmin(np.abs(wl[cand] - lam))]
        used[i] = True
        cols.append(i)
    return w, vr, vl[:, cols]


def _biorthogonalize(w, vr, vl):
    """Rescale/rotate left vectors so l_i . r_j = delta_ij.

    Near-degenerate eigenvalues are handled as blocks: the pairing matrix is
    inverted within each cluster instead of entry-by-entry.
    """
    m = vr.shape[1]
    vl = vl.copy()
    i = 0
    while i < m:
        j = i + 1
        while j < m and abs(w[j] - w[i]) <= 1e-8 * max(1.0, abs(w[i])):
            j += 1
        G = vl[:, i:j].T @ vr[:, i:j]
        try:
            vl[:, i:j] = vl[:, i:j] @ np.linalg.inv(G).T
        except np.linalg.LinAlgError as exc:
            raise KrylovError(f"defective eigenvalue cluster near {w[i]}") from exc
        i = j
    res = float(np.max(np.abs(vl.T @ vr - np.eye(m))))
    return vl, res


def tm_spectrum(bra: UniformMps, ket: UniformMps, m: int = 20, dense: bool | None = None) -> TmSpectrum:
    """Top-m eigenpairs of the transfer matrix between bra and ket.

    Regular spectra (bra is ket) are rescaled so the dominant eigenvalue is
    exactly one.  With the dense fallback (dimension <= 4096) all eigenvalues
    are returned but only the top m eigenvectors are kept.
    """
    n = bra.D * ket.D
    if m < 1 or m > n:
        raise ValueError(f"requested {m} eigenpairs of a dimension-{n} operator")
    kind = "regular" if bra is ket or bra.A is ket.A else "mixed"
    if dense is None:
        dense = n <= 1024 or m > n - 2
    if dense:
        if n > DENSE_DIM_CAP:
            raise ValueError(f"dense fallback capped at dimension {DENSE_DIM_CAP}")
        w, vr, vl = _eig_dense(dense_tm(bra, ket), m)
    else:
        w, vr, vl = _eig_arnoldi(bra, ket, m)
    if kind == "regular":
        lam0 = w[0]
        if abs(abs(lam0) - 1.0) > 1e-8:
            raise ValueError(
                f"regular transfer matrix has |lambda0| = {abs(lam0):.6f}; "
                "canonicalize the state first"
            )
        w = w / lam0
    vl, res = _biorthogonalize(w[: vr.shape[1]], vr, vl)
    mags = np.abs(w)
    eps = -np.log(np.clip(mags, 1e-300, None))
    phi = np.angle(w)
    return TmSpectrum(w, eps, phi, vr, vl, kind, res)


def cluster_branches(
    spec: TmSpectrum,
    phase_tol: float = PHASE_TOL_DEFAULT,
    eps_cut: float = np.inf,
) -> list[Branch]:
    """Group subleading eigenvalues into constant-phase branches.

    Single-linkage clustering on the circular phase distance with threshold
    phase_tol; the dominant eigenvalue of a regular spectrum is excluded.
    Branches come back sorted by their minimum eps.
    """
    start = 1 if spec.kind == "regular" else 0
    # cluster only the retained set (eigenvalues with eigenvectors); a dense
    # solve returns the complete spectrum, whose phases fill the circle
    idx = np.array(
        [j for j in range(start, spec.m) if spec.eps[j] <= eps_cut],
        dtype=int,
    )
    if idx.size < 1:
        raise ValueError("no eigenvalues below eps_cut to cluster")
    phases = spec.phi[idx]
    order = np.argsort(phases)
    idx, phases = idx[order], phases[order]
    n = idx.size
    # cut the sorted circle at gaps wider than the tolerance
    gaps = np.diff(phases)
    cut = list(np.where(gaps > phase_tol)[0] + 1)
    groups = [list(range(a, b)) for a, b in zip([0] + cut, cut + [n])]
    wrap_gap = (phases[0] + 2 * np.pi) - phases[-1]
    if len(groups) > 1 and wrap_gap <= phase_tol:
        groups[0] = groups.pop() + groups[0]
    branches = []
    for g in groups:
        members = idx[g]
        members = members[np.argsort(spec.eps[members], kind="stable")]
        delta = float(spec.eps[members[0]])
        branches.append(
            Branch(float(spec.phi[members[0]]), members, delta, len(members))
        )
    branches.sort(key=lambda b: b.delta)
    return branches


def estimate_velocity(eps1: float, e_min: float) -> float:
    """Characteristic velocity v = e_min / eps1."""
    if eps1 <= 0 or e_min <= 0:
        raise ValueError("eps1 and e_min must be positive")
    return float(e_min / eps1)


def extrapolate_power(D: np.ndarray, values: np.ndarray, exponent: float | None = None):
    """Fit values(D) = v_inf + a * D^(-b) and return (v_inf, a, b, residual).

    With exponent fixed the fit is linear in D^(-b); otherwise b is optimized
    too (requires >= 3 points).
    """
    D = np.asarray(D, dtype=float)
    y = np.asarray(values, dtype=float)
    if exponent is not None:
        X = np.column_stack([np.ones_like(D), D ** (-exponent)])
        coef, res, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = float(np.sqrt(res[0])) if res.size else 0.0
        return float(coef[0]), float(coef[1]), float(exponent), resid

    if D.size < 3:
        raise ValueError("free-exponent fit needs at least 3 points")

    def model(d, vinf, a, b):
        return vinf + a * d ** (-b)

    p0 = (y[np.argmax(D)], (y.min() - y.max()) * -1.0, 1.0)
    popt, _ = sopt.curve_fit(model, D, y, p0=p0, maxfev=20000)
    resid = float(np.linalg.norm(model(D, *popt) - y))
    return float(popt[0]), float(popt[1]), float(popt[2]), resid
