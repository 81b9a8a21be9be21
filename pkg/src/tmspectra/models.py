"""Spin operators, nearest-neighbour Hamiltonians and site operators.

All Hamiltonians are expressed as a single Hermitian two-site term h acting
on sites (j, j+1); single-site field terms are symmetrised into the bond as
-(g/2)(S^z x 1 + 1 x S^z) so that the whole Hamiltonian is strictly two-site.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-12

MODELS = ("XY", "XXZ", "BLBQ", "FIELD_ONLY")


def spin_operators(two_s: int):
    """Return (Sx, Sy, Sz) for spin two_s/2 as dense complex matrices."""
    d = two_s + 1
    m = np.arange(two_s / 2, -two_s / 2 - 1, -1.0)
    sz = np.diag(m).astype(complex)
    s = two_s / 2
    # ladder matrix elements <m+1|S+|m>
    sp = np.zeros((d, d), dtype=complex)
    for i in range(1, d):
        sp[i - 1, i] = np.sqrt(s * (s + 1) - m[i] * (m[i] + 1))
    sx = (sp + sp.conj().T) / 2
    sy = (sp - sp.conj().T) / (2j)
    return sx, sy, sz


@dataclass(frozen=True)
class TwoSiteHamiltonian:
    """Nearest-neighbour bond term h of shape (d*d, d*d), Hermitian."""

    d: int
    h: np.ndarray
    name: str
    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        if h.shape != (self.d ** 2, self.d ** 2):
            raise ValueError(f"h has shape {h.shape}, expected ({self.d**2}, {self.d**2})")
        if self.d < 2:
            raise ValueError("physical dimension must be >= 2")
        herm_err = np.max(np.abs(h - h.conj().T))
        if herm_err > HERMITICITY_TOL:
            raise ValueError(f"h not Hermitian: max deviation {herm_err:.3e}")
        object.__setattr__(self, "h", h)

    @property
    def norm(self) -> float:
        """Operator (spectral) norm of the bond term."""
        return float(np.max(np.abs(np.linalg.eigvalsh(self.h))))


@dataclass(frozen=True)
class SiteOperator:
    """Operator with support on `sites` consecutive sites, as a (d^n, d^n) matrix."""

    sites: int
    matrix: np.ndarray
    zero_mean: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator matrix must be square")
        object.__setattr__(self, "matrix", m)

    def local_dim(self) -> int:
        d = round(self.matrix.shape[0] ** (1.0 / self.sites))
        if d ** self.sites != self.matrix.shape[0]:
            raise ValueError("matrix dimension inconsistent with site count")
        return d

    @property
    def is_hermitian(self) -> bool:
        return np.max(np.abs(self.matrix - self.matrix.conj().T)) < 1e-12

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


def _sym_field(single: np.ndarray, g: float) -> np.ndarray:
    """Half of the field on each side of the bond: (g/2)(F x 1 + 1 x F)."""
    d = single.shape[0]
    eye = np.eye(d)
    return (g / 2.0) * (np.kron(single, eye) + np.kron(eye, single))


def build_hamiltonian(model: str, params) -> TwoSiteHamiltonian:
    """Construct the two-site bond Hamiltonian for a named model.

    XY:         params (gamma, g)  ->  h = -[(1+gamma) Sx.Sx + (1-gamma) Sy.Sy]
                                          - (g/2)(Sz x 1 + 1 x Sz),   d = 2
    XXZ:        params (Delta, hz) ->  h = -[Sx.Sx + Sy.Sy + Delta Sz.Sz]
                                          - (hz/2)(Sz x 1 + 1 x Sz),  d = 2
    BLBQ:       params (theta,)    ->  h = cos(theta) S.S + sin(theta) (S.S)^2,
                                       spin-1, d = 3
    FIELD_ONLY: params (g,)        ->  h = -(g/2)(Sz x 1 + 1 x Sz),   d = 2
    """
    tag = str(model).upper().replace("-", "_")
    params = tuple(float(p) for p in np.atleast_1d(params)) if params is not None else ()
    if tag == "XY":
        if len(params) != 2:
            raise ValueError("XY expects params (gamma, g)")
        gamma, g = params
        sx, sy, sz = spin_operators(1)
        h = -((1 + gamma) * np.kron(sx, sx) + (1 - gamma) * np.kron(sy, sy))
        h = h - _sym_field(sz, g)
        return TwoSiteHamiltonian(2, h, "XY", params)
    if tag == "XXZ":
        if len(params) != 2:
            raise ValueError("XXZ expects params (Delta, h)")
        delta, hz = params
        sx, sy, sz = spin_operators(1)
        h = -(np.kron(sx, sx) + np.kron(sy, sy) + delta * np.kron(sz, sz))
        h = h - _sym_field(sz, hz)
        return TwoSiteHamiltonian(2, h, "XXZ", params)
    if tag == "BLBQ":
        if len(params) != 1:
            raise ValueError("BLBQ expects params (theta,)")
        (theta,) = params
        sx, sy, sz = spin_operators(2)
        ss = np.kron(sx, sx) + np.kron(sy, sy) + np.kron(sz, sz)
        h = np.cos(theta) * ss + np.sin(theta) * (ss @ ss)
        return TwoSiteHamiltonian(3, h, "BLBQ", params)
    if tag == "FIELD_ONLY":
        if len(params) == 0:
            params = (1.0,)
        if len(params) != 1:
            raise ValueError("FIELD_ONLY expects params (g,)")
        (g,) = params
        _, _, sz = spin_operators(1)
        h = -_sym_field(sz, g)
        return TwoSiteHamiltonian(2, h, "FIELD_ONLY", params)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def single_site(matrix: np.ndarray, zero_mean: bool = False) -> SiteOperator:
    return SiteOperator(1, np.asarray(matrix, dtype=complex), zero_mean)


def identity_operator(d: int, sites: int = 1) -> SiteOperator:
    return SiteOperator(sites, np.eye(d ** sites, dtype=complex))
