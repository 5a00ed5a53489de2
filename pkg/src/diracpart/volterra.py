"""Particle equation with memory: qddot = -V q + (H * q)(t) + F(t).

Explicit predictor-corrector time stepping on the first-order system: the
linear oscillator part is advanced by its exact matrix exponential (so the
closed-form solution is reproduced to round-off), and the memory term plus
forcing enter through a trapezoidal Duhamel rule with one predictor pass,
second order overall.  The convolution uses the trapezoidal rule over the
stored history (O(J^2) total).  The solving kernel N(t) is assembled from the
d homogeneous column solves; Nddot comes from the equation's right-hand side,
not from differencing.
"""

import dataclasses

import numpy as np
from scipy.signal import fftconvolve

from .fitting import fit_loglog
from .kernel import MemoryKernel, resolvent


@dataclasses.dataclass
class TrajectorySolution:
    tgrid: np.ndarray
    q: np.ndarray      # (J+1, d)
    p: np.ndarray      # (J+1, d)


@dataclasses.dataclass
class SolvingKernel:
    tgrid: np.ndarray
    N: np.ndarray      # (J+1, d, d)
    Ndot: np.ndarray
    Nddot: np.ndarray


def _check_grid(tgrid):
    tgrid = np.asarray(tgrid, dtype=float)
    dt = tgrid[1] - tgrid[0]
    if not np.allclose(np.diff(tgrid), dt, rtol=0, atol=1e-9 * dt):
        raise ValueError("non-uniform time grid rejected")
    return tgrid, dt


def solve_particle(V, H, F, q0, p0, tgrid):
    """Integrate the memory equation; H: MemoryKernel or (J+1,d,d) samples on tgrid."""
    tgrid, dt = _check_grid(tgrid)
    J = len(tgrid) - 1
    V = np.atleast_2d(np.asarray(V, dtype=float))
    d = V.shape[0]
    if isinstance(H, MemoryKernel):
        if len(H.tgrid) != len(tgrid) or abs(H.tgrid[1] - H.tgrid[0] - dt) > 1e-12:
            raise ValueError("kernel grid mismatch")
        H = H.H
    H = np.zeros((J + 1, d, d)) if H is None else np.asarray(H, dtype=float)
    F = np.zeros((J + 1, d)) if F is None else np.asarray(F, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    if H.shape[0] != J + 1 or F.shape[0] != J + 1:
        raise ValueError("H and F must be sampled on tgrid")

    q = np.empty((J + 1, d))
    p = np.empty((J + 1, d))
    q[0] = np.asarray(q0, dtype=float).reshape(d)
    p[0] = np.asarray(p0, dtype=float).reshape(d)

    # exact one-step propagator of the undamped oscillator block
    lam, Q = np.linalg.eigh(V)
    w = np.sqrt(lam)
    cw, sw = np.cos(w * dt), np.sin(w * dt)
    E = np.block([[Q @ np.diag(cw) @ Q.T, Q @ np.diag(sw / w) @ Q.T],
                  [Q @ np.diag(-w * sw) @ Q.T, Q @ np.diag(cw) @ Q.T]])

    def conv_at(i, q_end):
        # trapezoid of H(t_i - s) q(s) over s = 0..t_i with endpoint q(t_i)=q_end
        if i == 0:
            return np.zeros(d)
        c = np.einsum("jkl,jl->k", H[1:i + 1], q[i - 1::-1])
        c += 0.5 * (H[0] @ q_end)
        c -= 0.5 * (H[i] @ q[0])
        return dt * c

    g_i = conv_at(0, q[0]) + F[0]
    for i in range(J):
        y = np.concatenate([q[i], p[i]])
        s_i = np.concatenate([np.zeros(d), g_i])
        y_pred = E @ (y + dt * s_i)
        g_pred = conv_at(i + 1, y_pred[:d]) + F[i + 1]
        y_new = E @ (y + 0.5 * dt * s_i) \
            + 0.5 * dt * np.concatenate([np.zeros(d), g_pred])
        q[i + 1] = y_new[:d]
        p[i + 1] = y_new[d:]
        g_i = conv_at(i + 1, q[i + 1]) + F[i + 1]
    return TrajectorySolution(tgrid=tgrid, q=q, p=p)


def memory_convolution(H, q, dt):
    """Trapezoid of int_0^t H(t-s) q(s) ds for all grid t at once (FFT-based)."""
    J1, d = q.shape
    out = np.zeros((J1, d))
    for k in range(d):
        for l in range(d):
            full = fftconvolve(H[:, k, l], q[:, l])[:J1]
            full -= 0.5 * H[0, k, l] * q[:, l]
            full -= 0.5 * H[:, k, l] * q[0, l]
            out[:, k] += full
    return dt * out


def solving_kernel(V, H, tgrid):
    """N(t) with N(0)=0, Ndot(0)=I from the d homogeneous solves; S(t) blocks."""
    tgrid, dt = _check_grid(tgrid)
    V = np.atleast_2d(np.asarray(V, dtype=float))
    d = V.shape[0]
    Harr = H.H if isinstance(H, MemoryKernel) else (
        np.zeros((len(tgrid), d, d)) if H is None else np.asarray(H, dtype=float))
    N = np.empty((len(tgrid), d, d))
    Ndot = np.empty_like(N)
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        sol = solve_particle(V, Harr, None, np.zeros(d), e, tgrid)
        N[:, :, i] = sol.q
        Ndot[:, :, i] = sol.p
    conv = np.stack(
        [memory_convolution(Harr, N[:, :, i], dt) for i in range(d)], axis=2)
    Nddot = -np.einsum("kl,tli->tki", V, N) + conv
    return SolvingKernel(tgrid=tgrid, N=N, Ndot=Ndot, Nddot=Nddot)


def fit_kernel_decay(sk, window=(10.0, 100.0), envelope=True):
    """Log-log decay slopes of ||N||_F, ||Ndot||_F, ||Nddot||_F on the window."""
    t0, t1 = window
    if np.log(t1 / t0) < np.log(10.0) * 0.99:
        raise ValueError("window shorter than one decade rejected")
    sel = (sk.tgrid >= t0) & (sk.tgrid <= t1)
    t = sk.tgrid[sel]
    out = {}
    for name, arr in (("N", sk.N), ("Ndot", sk.Ndot), ("Nddot", sk.Nddot)):
        norms = np.linalg.norm(arr[sel], axis=(1, 2))
        out[name] = fit_loglog(t, norms, envelope=envelope)
    return out


def laplace_transform(tgrid, arr, lam):
    """Trapezoid of int e^{-lam t} arr(t) dt over the sampled horizon."""
    w = np.exp(-lam * tgrid)
    return np.trapezoid(w.reshape((-1,) + (1,) * (arr.ndim - 1)) * arr, tgrid, axis=0)


def laplace_check(cfg, sk, lam_samples):
    """Residual of q~(lambda) = N(lambda)^{-1} (lambda q0 + p0) over basis data.

    Requires Re lambda large enough that the truncation tail of the Laplace
    transform is negligible against the 1e-4 contract.
    """
    d = sk.N.shape[1]
    worst = 0.0
    for lam in lam_samples:
        lam = complex(lam)
        T = sk.tgrid[-1]
        if np.exp(-lam.real * T) > 1e-8:
            raise ValueError("insufficient horizon for this lambda")
        rs = resolvent(cfg, lam)
        if rs.Ninv is None:
            raise ValueError(f"resolvent singular at {lam}")
        LN = laplace_transform(sk.tgrid, sk.N, lam)
        LNdot = laplace_transform(sk.tgrid, sk.Ndot, lam)
        for i in range(d):
            for j in range(d):
                q0 = np.zeros(d)
                p0 = np.zeros(d)
                q0[i] = 1.0
                p0[j] = 1.0
                lhs = LNdot @ q0 + LN @ p0
                rhs = rs.Ninv @ (lam * q0 + p0)
                worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst
