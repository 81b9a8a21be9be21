"""Ground-state search for uniform MPS: imaginary-time TEBD plus a
tangent-space polish.

The two-sublattice iTEBD stage uses the inversion-free tensor update (the
Schmidt weights are never divided out) and takes the state close to the
optimum cheaply.  The converged two-site form is then folded into a one-site
uniform tensor and refined by a fixed-point (VUMPS-style) iteration.  The
polish matters: the two-sublattice manifold is strictly larger than the
one-site uniform one, and the energy-optimal two-site state differs from the
best one-site state by a small amount that subleading transfer-matrix
eigenvalues amplify, so folding alone leaves them biased.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .models import SiteOperator, TwoSiteHamiltonian
from .mps import GaugeError, UniformMps, canonicalize, expectation

# dt ladder for the iTEBD stage: each stage starts close to its own Trotter
# fixed point, so the drift criterion is reached without late-stage grinding;
# the tangent-space polish removes the residual Trotter error afterwards
DEFAULT_SCHEDULE = (
    (0.1, 4000, 1e-10),
    (0.05, 3000, 1e-10),
    (0.02, 3000, 1e-10),
    (0.01, 4000, 1e-10),
)
POLISH_TOL = 1e-10
POLISH_MAXITER = 800


class ConvergenceError(RuntimeError):
    """Energy density failed to settle within the sweep budget."""


def _gate(h: np.ndarray, dt: float) -> np.ndarray:
    return sla.expm(-dt * h)


def _bond_update(gate, lam_env, Ba, Bb, D):
    """Update one bond: state ... lam_env Ba Bb ... with Ba = Gamma lam.

    Returns (Ba', Bb', lam') without ever inverting Schmidt weights.
    """
    d = Ba.shape[1]
    Dl, Dr = Ba.shape[0], Bb.shape[2]
    C = np.einsum("stuv,auc,cvb->astb", gate.reshape(d, d, d, d), Ba, Bb, optimize=True)
    theta = lam_env[:, None, None, None] * C
    U, s, Vh = np.linalg.svd(theta.reshape(Dl * d, d * Dr), full_matrices=False)
    keep = min(D, np.count_nonzero(s > 1e-14 * s[0]))
    s = s[:keep]
    nrm = np.linalg.norm(s)
    lam_new = s / nrm
    Bb_new = Vh[:keep].reshape(keep, d, Dr)
    Ba_new = np.einsum("astb,ctb->asc", C, Bb_new.conj(), optimize=True) / nrm
    return Ba_new, Bb_new, lam_new


def _bond_energy(h, lam_env, Ba, Bb):
    """<h> on the bond from the two-site wavefunction (canonical-form estimate)."""
    d = Ba.shape[1]
    theta = np.einsum("a,auc,cvb->auvb", lam_env, Ba, Bb, optimize=True)
    t2 = theta.reshape(theta.shape[0], d * d, theta.shape[3])
    num = np.einsum("aib,ij,ajb->", t2.conj(), h, t2, optimize=True)
    den = np.einsum("aib,aib->", t2.conj(), t2, optimize=True)
    return float(np.real(num / den))


def _one_site_tensors(Ba, Bb, lam_a, lam_b):
    """Left-canonical one-site tensors for the two sublattice choices.

    With B_X = Gamma_X lam_X, the left-canonical tensor on an A site is
    diag(lam_b) Gamma_A lam_A = diag(lam_b) B_A / nothing on the right; the
    division by the incoming weight is done via the pseudo-inverse.
    """
    inv_a = np.where(lam_a > 1e-10, 1.0 / np.clip(lam_a, 1e-10, None), 0.0)
    inv_b = np.where(lam_b > 1e-10, 1.0 / np.clip(lam_b, 1e-10, None), 0.0)
    M1 = lam_b[:, None, None] * Ba * inv_a[None, None, :]
    M2 = lam_a[:, None, None] * Bb * inv_b[None, None, :]
    return M1, M2


def _uniformize(Ba, Bb, lam_a, lam_b, h) -> UniformMps:
    """Fold the two-sublattice form into one uniform site tensor.

    For a one-site invariant state the sublattice tensors are P = X G Y^H
    and Q = Y G X^H for a common canonical tensor G and bond-basis unitaries
    X, Y.  The weighted overlap sum_s Q^s diag(lam_b^2) P^{s H} equals
    Y rho X^H, whose polar-unitary part is the basis matcher W = Y X^H, and
    P W = X G X^H is the uniform tensor in a single bond basis.
    """
    M1t, M2t = _one_site_tensors(Ba, Bb, lam_a, lam_b)
    D = max(M1t.shape[0], M2t.shape[0])
    # pad to a common bond dimension if the two bonds truncated differently
    def pad(M):
        out = np.zeros((D, M.shape[1], D), dtype=complex)
        out[: M.shape[0], :, : M.shape[2]] = M
        return out

    M1, M2 = pad(M1t), pad(M2t)
    wb = np.zeros(D)
    wb[: lam_b.size] = lam_b ** 2
    G = np.einsum("csy,y,isy->ci", M2, wb, M1.conj(), optimize=True)
    U, _, Vh = np.linalg.svd(G)
    W = U @ Vh
    A_uni = np.einsum("isc,ck->isk", M1, W)
    target = _bond_energy(h, lam_b, Ba, Bb)

    best = None
    err_best = np.inf
    candidates = [A_uni, M1]
    for A in candidates:
        try:
            cand = canonicalize(UniformMps(A), "mixed")
        except Exception:
            continue
        e = np.real(expectation(cand, SiteOperator(2, h)))
        err = abs(e - target)
        if err < err_best:
            best, err_best = cand, err
    if best is None:
        raise ConvergenceError("could not canonicalize the converged tensors")
    return best


# ---------------------------------------------------------------------------
# tangent-space polish (single-site fixed-point iteration)

def _solve_geometric(b, transfer, pair, D, tol, x0=None):
    """Geometric sum of a transfer map with the divergent direction removed:
    solve (1 - T + |I><pair, .|) x = b - pair(b) I."""
    eye = np.eye(D, dtype=complex)
    b = b - pair(b) * eye

    def mv(v):
        x = v.reshape(D, D)
        return (x - transfer(x) + pair(x) * eye).ravel()

    op = spla.LinearOperator((D * D, D * D), matvec=mv, dtype=complex)
    x0 = None if x0 is None else x0.ravel()
    x, info = spla.gmres(op, b.ravel(), x0=x0, rtol=tol, atol=0.0,
                         maxiter=4000, restart=60)
    if info != 0:
        raise ConvergenceError(f"environment solve failed (gmres info={info})")
    x = x.reshape(D, D)
    return 0.5 * (x + x.conj().T)


def _polar(M):
    U, _, Vh = np.linalg.svd(M, full_matrices=False)
    return U @ Vh


def _lowest_eigenvector(matvec, n: int, v0, tol: float) -> np.ndarray:
    """Lowest eigenvector of a Hermitian matvec; dense below ARPACK's k < n-1."""
    if n <= 16:
        eye = np.eye(n, dtype=complex)
        M = np.column_stack([matvec(eye[:, i]) for i in range(n)])
        _, vecs = np.linalg.eigh((M + M.conj().T) / 2)
        return vecs[:, 0]
    op = spla.LinearOperator((n, n), matvec=matvec, dtype=complex)
    _, vec = spla.eigsh(op, k=1, which="SA", v0=v0, tol=tol)
    return vec[:, 0]


def _polish(A_L, C, h, maxiter=POLISH_MAXITER, tol=POLISH_TOL):
    """Refine a one-site uniform state to the variational optimum.

    Fixed-point iteration in mixed canonical form: build the left/right
    Hamiltonian environments by a projected linear solve, take the lowest
    eigenvectors of the effective Hamiltonians for the center tensor and the
    center matrix, and extract new canonical tensors from their polar parts.
    Returns (A_L, energy, gauge error).
    """
    D, d = A_L.shape[0], A_L.shape[1]
    h4 = h.reshape(d, d, d, d)
    C = C / np.linalg.norm(C)
    Cinv = np.linalg.pinv(C, rcond=1e-12)
    A_R = np.einsum("xa,asb,by->xsy", Cinv, A_L, C, optimize=True)
    v_ac = np.einsum("asb,by->asy", A_L, C, optimize=True).ravel()
    v_c = C.ravel()
    H_L = H_R = None
    err = 1.0
    e = np.inf
    for _ in range(maxiter):
        ALc, ARc = A_L.conj(), A_R.conj()
        l = C.conj().T @ C
        l = 0.5 * (l + l.conj().T) / np.trace(l).real
        r = C @ C.conj().T
        r = 0.5 * (r + r.conj().T) / np.trace(r).real
        hL1 = np.einsum("asc,ctx,stuv,auw,wvy->xy", ALc, ALc, h4, A_L, A_L,
                        optimize=True)
        hR1 = np.einsum("xsc,ctb,stuv,yuw,wvb->yx", ARc, ARc, h4, A_R, A_R,
                        optimize=True)
        e = np.trace(hL1 @ r).real
        tol_in = min(1e-5, max(err * 1e-2, 1e-13))

        # pure-BLAS transfer maps (the solver calls them thousands of times)
        ALm_c = ALc.reshape(D * d, D)
        ALm_r = A_L.reshape(D, d * D)
        ARm_k = A_R.reshape(D * d, D)
        ARm_c = ARc.reshape(D, d * D)

        def t_left(X):
            return ALm_c.T @ (X @ ALm_r).reshape(D * d, D)

        def t_right(Y):
            return (ARm_k @ Y).reshape(D, d * D) @ ARm_c.T

        H_L = _solve_geometric(hL1, t_left, lambda X: np.trace(X @ r), D,
                               tol_in, x0=H_L)
        H_R = _solve_geometric(hR1, t_right, lambda Y: np.trace(l @ Y), D,
                               tol_in, x0=H_R)

        # partial contractions reused by every effective-Hamiltonian matvec
        T1 = np.einsum("asw,stuv,auc->wtvc", ALc, h4, A_L, optimize=True)
        R2 = np.einsum("stuv,cvb,ytb->sucy", h4, A_R, ARc, optimize=True)
        KC = np.einsum("wtvc,yvb,ztb->wzcy", T1, A_R, ARc,
                       optimize=True).reshape(D * D, D * D)
        T1m = np.ascontiguousarray(T1.transpose(0, 1, 3, 2)).reshape(D * d, D * d)
        R2m = np.ascontiguousarray(R2.transpose(1, 2, 0, 3)).reshape(d * D, d * D)

        def mv_ac(v):
            X = v.reshape(D, d, D)
            out = (T1m @ X.reshape(D * d, D)).reshape(D, d, D)
            out += (X.reshape(D, d * D) @ R2m).reshape(D, d, D)
            out += (H_L @ X.reshape(D, d * D)).reshape(D, d, D)
            out += (X.reshape(D * d, D) @ H_R).reshape(D, d, D)
            return out.ravel()

        def mv_c(v):
            Y = v.reshape(D, D)
            out = (KC @ v).reshape(D, D)
            out += H_L @ Y
            out += Y @ H_R
            return out.ravel()

        n_ac, n_c = D * d * D, D * D
        v_ac = _lowest_eigenvector(mv_ac, n_ac, v_ac, tol_in)
        v_c = _lowest_eigenvector(mv_c, n_c, v_c, tol_in)
        A_C = v_ac.reshape(D, d, D)
        C = v_c.reshape(D, D)

        A_L = (_polar(A_C.reshape(D * d, D)) @ _polar(C).conj().T).reshape(D, d, D)
        A_R = (_polar(C).conj().T @ _polar(A_C.reshape(D, d * D))).reshape(D, d, D)
        err = np.linalg.norm(A_C - np.einsum("asb,by->asy", A_L, C, optimize=True))
        if err < tol:
            break
    return A_L, e, err


def itebd_ground_state(
    ham: TwoSiteHamiltonian,
    D: int,
    schedule=DEFAULT_SCHEDULE,
    rng=None,
    check_energy_every: int = 1,
    restarts: int = 4,
) -> UniformMps:
    """Ground state of a translation-invariant chain by imaginary-time TEBD.

    schedule is a list of (dt, max_sweeps, tol) with strictly decreasing dt;
    within each stage sweeps continue until the energy density drift per
    check falls below tol.  Runs that end non-injective (degenerate ground
    spaces can trap a cat-like superposition) are retried from fresh random
    starts; the last attempt is returned flagged if none succeeds.
    """
    if D < 1:
        raise ValueError("bond dimension must be >= 1")
    dts = [st[0] for st in schedule]
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("schedule must be strictly decreasing in dt")
    rng = np.random.default_rng(rng)
    state = None
    n_try = max(1, restarts)
    for attempt in range(n_try):
        try:
            state = _single_run(ham, D, schedule, rng, check_energy_every)
        except (ConvergenceError, GaugeError):
            if attempt == n_try - 1 and state is None:
                raise
            continue
        if state.injective:
            return state
    return state


def _single_run(ham, D, schedule, rng, check_energy_every) -> UniformMps:
    d = ham.d
    h = ham.h

    # random product start: real tensors keep real Hamiltonians real, and a
    # bond dimension of one avoids seeding an artificially doubled (cat-like)
    # Schmidt structure that the truncation would then preserve
    Ba = rng.standard_normal((1, d, 1)) + 0.0j
    Bb = rng.standard_normal((1, d, 1)) + 0.0j
    Ba /= np.linalg.norm(Ba)
    Bb /= np.linalg.norm(Bb)
    lam_a = np.ones(1)
    lam_b = np.ones(1)

    last_drift = np.inf
    for dt, max_sweeps, tol in schedule:
        # second-order Suzuki-Trotter sweep: half step on the A-B bonds,
        # full step on the B-A bonds, half step on the A-B bonds again
        gate_half = _gate(h, dt / 2)
        gate = _gate(h, dt)
        e_prev = None
        converged = False
        for sweep in range(1, max_sweeps + 1):
            Ba, Bb, lam_a = _bond_update(gate_half, lam_b, Ba, Bb, D)
            Bb, Ba, lam_b = _bond_update(gate, lam_a, Bb, Ba, D)
            Ba, Bb, lam_a = _bond_update(gate_half, lam_b, Ba, Bb, D)
            if sweep % check_energy_every == 0 or sweep == max_sweeps:
                e = _bond_energy(h, lam_b, Ba, Bb)
                if e_prev is not None:
                    last_drift = abs(e - e_prev)
                    if last_drift < tol:
                        converged = True
                        break
                e_prev = e
        if not converged and (dt, max_sweeps, tol) == tuple(schedule[-1]):
            raise ConvergenceError(
                f"energy drift {last_drift:.3e} above tol {tol:.0e} "
                f"after {max_sweeps} sweeps at dt={dt}"
            )

    state = _uniformize(Ba, Bb, lam_a, lam_b, h)
    if D >= 2 and state.injective:
        A_L, _, err = _polish(state.A, np.diag(state.schmidt.astype(complex)), h)
        if err < 1e-6:
            state = canonicalize(UniformMps(A_L), "mixed")
    return state


def energy_density(state: UniformMps, ham: TwoSiteHamiltonian) -> float:
    """Bond-term expectation per site of a uniform state."""
    return float(np.real(expectation(state, SiteOperator(2, ham.h))))
