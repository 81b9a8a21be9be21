"""Correlation functions and derived spectral quantities for uniform MPS.

Connected correlators are evaluated matrix-free with operator transfer
matrices; the static structure factor uses a projected resolvent solve; the
single-mode dispersion estimate combines it with the oscillator strength.
Form factors decompose correlators over transfer-matrix eigenmodes and feed
the Ornstein-Zernike exponent fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize as sopt
import scipy.sparse.linalg as spla

from .models import SiteOperator
from .mps import MAX_SUPPORT, UniformMps, apply_tm, expectation, fixed_points, zero_meaned
from .spectra import Branch, TmSpectrum

SK_GRID_POINTS = 512
FORM_FACTOR_FLOOR = 1e-12
OZ_MAX_MEMBERS = 8


@dataclass(frozen=True)
class OperatorTm:
    """Matrix-free operator transfer matrix for an n-site operator."""

    state: UniformMps
    op: SiteOperator
    _blk: np.ndarray  # blocked site tensor over the operator support
    _oblk: np.ndarray  # operator contracted into the ket layer

    @property
    def support(self) -> int:
        return self.op.sites

    def apply(self, v: np.ndarray, direction: str = "right") -> np.ndarray:
        """Apply the operator TM to a flat (D*D,) vector."""
        D = self.state.D
        M = np.asarray(v).reshape(D, D)
        if direction == "right":
            out = np.einsum("aIx,bIy,xy->ab", self._blk.conj(), self._oblk, M,
                            optimize=True)
        elif direction == "left":
            out = np.einsum("aIx,bIy,ab->xy", self._blk.conj(), self._oblk, M,
                            optimize=True)
        else:
            raise ValueError("direction must be 'left' or 'right'")
        return out.reshape(-1)

    def dense(self) -> np.ndarray:
        """Materialized matrix (testing / small-D use)."""
        return np.einsum("aIx,bIy->abxy", self._blk.conj(), self._oblk).reshape(
            self.state.D ** 2, self.state.D ** 2
        )


def operator_tm(mps: UniformMps, op: SiteOperator) -> OperatorTm:
    """Operator transfer matrix of an n-site operator (n <= 4)."""
    if op.sites > MAX_SUPPORT:
        raise ValueError(f"operator support {op.sites} exceeds cap {MAX_SUPPORT}")
    if op.local_dim() != mps.d:
        raise ValueError("operator local dimension does not match state")
    blk = mps.blocked(op.sites)
    oblk = np.einsum("IJ,bJy->bIy", op.matrix, blk, optimize=True)
    return OperatorTm(mps, op, blk, oblk)


def _boundary_pair(mps: UniformMps):
    """Gauge-aware left/right fixed points and their pairing norm."""
    if mps.gauge in ("left", "mixed"):
        l = np.eye(mps.D, dtype=complex)
        _, r = fixed_points(mps)
    elif mps.gauge == "right":
        l, _ = fixed_points(mps)
        r = np.eye(mps.D, dtype=complex)
    else:
        l, r = fixed_points(mps)
    return l, r, complex(np.sum(l * r))


def _overlap_correlation(mps, a: SiteOperator, b: SiteOperator, n: int) -> complex:
    """C(n) for separations where the two supports overlap (direct window)."""
    window = n + b.sites
    if window > MAX_SUPPORT:
        raise ValueError(
            f"overlapping supports need a {window}-site window, cap is {MAX_SUPPORT}"
        )
    d = mps.d
    a_full = np.kron(a.matrix, np.eye(d ** (window - a.sites)))
    b_full = np.kron(np.eye(d ** n), b.matrix)
    return complex(expectation(mps, SiteOperator(window, a_full @ b_full)))


def connected_correlation(mps: UniformMps, a: SiteOperator, b: SiteOperator,
                          n_max: int) -> np.ndarray:
    """Connected correlator C(n) = <A_0 B_n> - <A_0><B_n> for n = 1..n_max.

    Separations beyond the support of A use repeated transfer-matrix
    application between the two operator TMs; smaller ones fall back to a
    direct multi-site window.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    a = zero_meaned(a, mps)
    b = zero_meaned(b, mps)
    l, r, norm = _boundary_pair(mps)
    ja = operator_tm(mps, a)
    jb = operator_tm(mps, b)
    u = jb.apply(r.reshape(-1), "right")
    out = np.empty(n_max, dtype=complex)
    for n in range(1, min(a.sites, n_max + 1)):
        out[n - 1] = _overlap_correlation(mps, a, b, n)
    w = ja.apply(l.reshape(-1), "left")
    for n in range(a.sites, n_max + 1):
        out[n - 1] = np.sum(w * u) / norm
        if n < n_max:
            w = apply_tm(mps, mps, "left", w)
    return out


@dataclass(frozen=True)
class FormFactorSet:
    """Form factors f_j = (0|J_A|j)(j|J_B|0) over a TM spectrum, j >= 1."""

    j: np.ndarray
    f: np.ndarray
    spectrum: TmSpectrum


def form_factors(mps: UniformMps, spec: TmSpectrum, a: SiteOperator,
                 b: SiteOperator) -> FormFactorSet:
    """Eigenmode weights of the correlator of (A, B) on a regular spectrum."""
    if spec.kind != "regular":
        raise ValueError("form factors are defined over the regular TM spectrum")
    m = spec.m
    if m < 2:
        return FormFactorSet(np.arange(1, 1), np.zeros(0, dtype=complex), spec)
    a = zero_meaned(a, mps)
    b = zero_meaned(b, mps)
    ja = operator_tm(mps, a)
    jb = operator_tm(mps, b)
    l0 = spec.left_vectors[:, 0]
    r0 = spec.right_vectors[:, 0]
    left_a = ja.apply(l0, "left")
    right_b = jb.apply(r0, "right")
    f = np.array([
        np.dot(left_a, spec.right_vectors[:, j]) * np.dot(spec.left_vectors[:, j], right_b)
        for j in range(1, m)
    ])
    return FormFactorSet(np.arange(1, m), f, spec)


def correlation_from_spectrum(spec: TmSpectrum, ff: FormFactorSet,
                              n_range) -> np.ndarray:
    """Resummed correlator C(n) = sum_j f_j lambda_j^(n-1) over a range of n."""
    n = np.asarray(list(n_range), dtype=float)
    if np.any(n < 1):
        raise ValueError("separations must be >= 1")
    if ff.f.size == 0:
        return np.zeros(n.size, dtype=complex)
    lam = spec.eigenvalues[ff.j]
    return (ff.f[None, :] * lam[None, :] ** (n[:, None] - 1)).sum(axis=1)


@dataclass(frozen=True)
class StructureFactor:
    """Static structure factor on a momentum grid, split into the local
    (overlapping-placement) part and the resolvent tail."""

    kgrid: np.ndarray
    values: np.ndarray
    local: np.ndarray
    resolvent: np.ndarray


class ResolventError(RuntimeError):
    """The structure-factor linear solve stagnated near a TM resonance."""


def default_kgrid(n: int = SK_GRID_POINTS) -> np.ndarray:
    """Uniform grid on [0, 2 pi), offset by half a step so that grid points
    avoid exact coincidence with TM branch phases."""
    return (np.arange(n) + 0.5) * (2 * np.pi / n)


def structure_factor(mps: UniformMps, op: SiteOperator,
                     kgrid: np.ndarray | None = None) -> StructureFactor:
    """S(k) = sum_n e^{ikn} C(n) via a projected resolvent linear solve.

    The overlapping placements (|n| < support) are summed directly; the tail
    sum_{n >= support} e^{ikn} C(n) is evaluated as
    2 Re e^{ik s} (0| J_O (1 - e^{ik} QTQ)^{-1} J_O |0) with s the support.
    """
    if not mps.injective:
        raise ValueError("structure factor requires an injective state")
    if kgrid is None:
        kgrid = default_kgrid()
    kgrid = np.asarray(kgrid, dtype=float)
    op = zero_meaned(op, mps)
    s = op.sites
    l, r, norm = _boundary_pair(mps)
    l0 = (l / norm).reshape(-1)  # plain pairing l0 . r0 = 1
    r0 = r.reshape(-1)
    jo = operator_tm(mps, op)

    # local part: C(0) and the overlapping separations 1..s-1
    c_self = complex(expectation(mps, SiteOperator(s, op.matrix @ op.matrix)))
    c_short = np.array([_overlap_correlation(mps, op, op, n) for n in range(1, s)])

    rhs = jo.apply(r0, "right")
    left_o = jo.apply(l0, "left")
    n_dim = rhs.size

    def project(v):
        return v - r0 * np.dot(l0, v)

    rhs = project(rhs)
    local = np.empty(kgrid.size)
    tail = np.empty(kgrid.size)
    x_prev = None
    for i, k in enumerate(kgrid):
        phase = np.exp(1j * k)

        def mv(v):
            return v - phase * project(apply_tm(mps, mps, "right", project(v)))

        opk = spla.LinearOperator((n_dim, n_dim), matvec=mv, dtype=complex)
        x, info = spla.gmres(opk, rhs, x0=x_prev, rtol=1e-12, atol=0.0,
                             maxiter=2000, restart=50)
        if info != 0:
            raise ResolventError(
                f"resolvent solve stagnated at k = {k:.6f} "
                f"(gmres info={info}); a TM eigenvalue is close to e^{{-ik}}"
            )
        x_prev = x
        val = np.dot(left_o, x)
        tail[i] = 2.0 * np.real(np.exp(1j * k * s) * val)
        loc = c_self + 2.0 * np.sum(np.real(
            np.exp(1j * k * np.arange(1, s)) * c_short))
        local[i] = np.real(loc)
    values = local + tail
    return StructureFactor(kgrid, values, local, tail)


def _embed(window: int, d: int, site: int, m: np.ndarray) -> np.ndarray:
    """Embed an operator matrix at a site offset inside a window."""
    sites = int(round(np.log(m.shape[0]) / np.log(d)))
    left = np.eye(d ** site)
    right = np.eye(d ** (window - site - sites))
    return np.kron(np.kron(left, m), right)


def oscillator_strength(mps: UniformMps, ham, op: SiteOperator,
                        kgrid: np.ndarray | None = None) -> np.ndarray:
    """F(k) = sum_n e^{ikn} <[O_0, [H, O_n]]> for a single-site Hermitian O.

    Only placements where the supports overlap contribute, so the sum is a
    finite polynomial in e^{ik}: n in {-1, 0, 1} with bond terms j in {-1, 0}.
    """
    if op.sites != 1:
        raise ValueError("oscillator strength implemented for single-site operators")
    if not op.is_hermitian:
        raise ValueError("oscillator strength requires a Hermitian operator")
    if kgrid is None:
        kgrid = default_kgrid()
    kgrid = np.asarray(kgrid, dtype=float)
    d = mps.d
    vals = {}
    for n in (-1, 0, 1):
        total = 0.0 + 0.0j
        for j in (-1, 0):
            if n not in (j, j + 1):
                continue
            lo = min(0, n, j)
            hi = max(0, n, j + 1)
            window = hi - lo + 1
            o0 = _embed(window, d, 0 - lo, op.matrix)
            on = _embed(window, d, n - lo, op.matrix)
            hj = _embed(window, d, j - lo, ham.h)
            comm = hj @ on - on @ hj
            double = o0 @ comm - comm @ o0
            total += expectation(mps, SiteOperator(window, double))
        vals[n] = total
    fk = (vals[0] + vals[1] * np.exp(1j * kgrid) + vals[-1] * np.exp(-1j * kgrid))
    if np.max(np.abs(fk.imag)) > 1e-8:
        raise AssertionError("oscillator strength has a non-negligible imaginary part")
    return fk.real


def sma_dispersion(fk: np.ndarray, sf: StructureFactor) -> np.ndarray:
    """Single-mode dispersion estimate E(k) = F(k) / (2 S(k))."""
    s = sf.values if isinstance(sf, StructureFactor) else np.asarray(sf)
    fk = np.asarray(fk)
    if fk.shape != s.shape:
        raise ValueError("F and S grids differ")
    if np.any(s <= 0):
        raise ValueError("S(k) must be positive on the grid")
    return fk / (2.0 * s)


@dataclass(frozen=True)
class OzFit:
    """Ornstein-Zernike exponent fit over one constant-phase branch."""

    branch: Branch
    delta: float  # branch gap (minimum eps)
    kappa: float  # dispersion exponent: eps_j = delta + g j^kappa
    g: float
    rho: float  # form-factor exponent: |f_j| ~ j^rho
    eta: float  # correlation power-law exponent (1 + rho) / kappa
    xi: float  # correlation length 1 / delta
    eps_residual: float
    f_residual: float


def oz_fit(spec: TmSpectrum, ff: FormFactorSet, branch: Branch) -> OzFit:
    """Fit the branch dispersion and form-factor exponents.

    Members with |f| below the noise floor are dropped; the remaining ones
    are re-indexed j = 1, 2, ... ascending in eps and only the lowest
    min(8, count) members enter the fits (the exponent relations are
    leading-order statements for small j).  The gap member anchors the
    dispersion fit, eps_j = delta + g (j - 1)^kappa with delta = eps_1.
    """
    fmap = dict(zip(ff.j.tolist(), ff.f))
    present = [abs(fmap[int(m)]) for m in branch.members if int(m) in fmap]
    if not present:
        raise ValueError("branch has no members with form-factor data")
    members = [int(m) for m in branch.members
               if abs(fmap.get(int(m), 0.0)) > FORM_FACTOR_FLOOR]
    # Eigenvector error on near-degenerate eigenvalues leaks a small fraction
    # of weight into modes whose exact form factor vanishes by symmetry, so a
    # fixed floor is not enough.  The leaked magnitudes sit orders below the
    # genuine ones: cut at the widest gap in log|f| when that gap spans at
    # least one decade and at least four members survive above it.
    mags = sorted((abs(fmap[m]) for m in members), reverse=True)
    if len(mags) > 4:
        gaps = np.diff(-np.log10(mags))
        i = int(np.argmax(gaps))
        if gaps[i] >= 1.0 and i + 1 >= 4:
            cut = mags[i + 1]
            members = [m for m in members if abs(fmap[m]) > cut]
    if len(members) < 4:
        raise ValueError(
            f"branch has {len(members)} members with nonzero form factors, need >= 4"
        )
    eps = np.array([spec.eps[m] for m in members])
    order = np.argsort(eps, kind="stable")
    members = [members[i] for i in order]
    eps = eps[order][:OZ_MAX_MEMBERS]
    fmag = np.array([abs(fmap[m]) for m in members])[:OZ_MAX_MEMBERS]
    j = np.arange(eps.size, dtype=float)

    delta = float(eps[0])
    y = eps[1:] - delta
    if np.any(y <= 0):
        raise ValueError("degenerate branch: eps values do not increase above the gap")
    # log-log linearization seeds the nonlinear least-squares fit
    X = np.column_stack([np.ones(y.size), np.log(j[1:])])
    coef, *_ = np.linalg.lstsq(X, np.log(y), rcond=None)
    try:
        popt, _ = sopt.curve_fit(
            lambda x, a, k: a * x ** k,
            j[1:], y, p0=(np.exp(coef[0]), coef[1]), maxfev=10000,
        )
        g, kappa = float(popt[0]), float(popt[1])
    except RuntimeError as exc:
        raise ValueError(f"dispersion exponent fit failed to converge: {exc}") from exc
    eps_res = float(np.linalg.norm(g * j[1:] ** kappa - y))
    if kappa <= 0:
        raise ValueError(f"dispersion fit returned non-positive exponent {kappa:.3f}")

    # The exponents characterize C(n) for n at and beyond the correlation
    # length, where member j enters with relative weight exp(-(eps_j - delta) n).
    # Weighting the form-factor regression by that kernel at n = 1/delta keeps
    # the fit from being dominated by branch-edge members that contribute
    # nothing to the asymptotic decay.  Labels are one-based: the gap member
    # is j = 1 and |f_j| ~ j^rho.
    wts = np.exp(-(eps - delta) / delta)
    xf = np.log(j + 1.0)
    yf = np.log(fmag)
    wsum = float(np.sum(wts))
    xb = float(np.sum(wts * xf)) / wsum
    yb = float(np.sum(wts * yf)) / wsum
    rho = float(np.sum(wts * (xf - xb) * (yf - yb)) / np.sum(wts * (xf - xb) ** 2))
    f_res = float(np.linalg.norm(np.sqrt(wts) * (yb + rho * (xf - xb) - yf)))

    eta = (1.0 + rho) / kappa
    return OzFit(branch, delta, kappa, g, rho, eta, 1.0 / delta, eps_res, f_res)
