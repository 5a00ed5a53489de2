"""Coupled evolution U(t) through the exact Duhamel factorization.

The field equation is solved in closed form around the particle trajectory:
psi_n(t) = W_n(t) psi0_n + i int_0^t W_n(t-s) grad rho_n . q(s) ds,
and q(t) comes from the reduced memory equation.  The Duhamel integral is
evaluated mode-by-mode: for each Fourier mode only the two scalar integrals
int cos(w(t-s)) q_l(s) ds and int sin(w(t-s)) q_l(s) ds are needed, which are
shared across all modes with the same dispersion value.
"""

import numpy as np

from .fitting import fit_loglog
from .harmonic import delayed_conv, trig_sum
from .kernel import kernel_time
from .model import SystemState, local_seminorm, real_pairing_k
from .propagator import apply_symbol, propagate_hat
from .volterra import solve_particle


def forcing(cfg, psi0, tgrid, delta=1e-4):
    """F_k(t) = sum_n <d_k rho_n, W_n(t) psi0_n> on the time grid, shape (nt, d)."""
    tgrid = np.asarray(tgrid, dtype=float)
    omegas, acos, bsin = [], [], []
    for n in range(cfg.N):
        psih = cfg.grid.fft(psi0[n])
        Dpsih = apply_symbol(cfg, n, psih)
        w = cfg.omega[n]
        rh = cfg.rho_hat[n]
        cols_a, cols_b = [], []
        for k in range(cfg.d):
            drho = (-1j * cfg.grid.k[k]) * rh
            a = np.sum(np.conj(drho) * psih, axis=0).real / cfg.grid.volume
            b = np.sum(np.conj(drho) * (1j * Dpsih / w), axis=0).real / cfg.grid.volume
            cols_a.append(a.ravel())
            cols_b.append(b.ravel())
        omegas.append(w.ravel())
        acos.append(np.stack(cols_a, axis=1))
        bsin.append(np.stack(cols_b, axis=1))
    out = trig_sum(np.concatenate(omegas), np.concatenate(acos),
                   np.concatenate(bsin), tgrid, delta=delta)
    return np.atleast_2d(out)


def duhamel_field_hat(cfg, n, qtraj, dt, t, delta=1e-4):
    """i int_0^t W_n(t-s) grad rho_n . q(s) ds in Fourier space, one field."""
    w = cfg.omega[n]
    wflat = w.ravel()
    rh = cfg.rho_hat[n]
    out = np.zeros_like(rh)
    for l in range(cfg.d):
        c, s = delayed_conv(qtraj[:, l], dt, wflat, t, delta=delta)
        c = c.reshape(w.shape)
        s = s.reshape(w.shape)
        drho = (-1j * cfg.grid.k[l]) * rh
        out += c * drho + (1j * s / w) * apply_symbol(cfg, n, drho)
    return 1j * out


def evolve(cfg, Y0, T, output_times, dt=None, delta=1e-4, check_box=True):
    """Evolve the coupled system; returns (trajectory, [states at output_times]).

    With check_box=True a warning-level ValueError is raised when the box is
    too small for the requested horizon (wrap-around would spoil the claim of
    agreement with the whole-space dynamics).
    """
    dt = cfg.dt if dt is None else dt
    if check_box and cfg.L < 2.05 * (T + 2 * cfg.coupling.radius):
        raise ValueError(
            f"box L={cfg.L} too small for horizon T={T} (finite propagation speed)")
    if len(output_times) > 0 and max(output_times) > T + 1e-9:
        raise ValueError(f"output time {max(output_times)} beyond horizon T={T}")
    J = int(round(T / dt))
    tgrid = dt * np.arange(J + 1)
    F = forcing(cfg, Y0.psi, tgrid, delta=delta)
    H = kernel_time(cfg, tgrid, delta=delta)
    traj = solve_particle(cfg.V, H, F, Y0.q, Y0.p, tgrid)
    psi0_hat = cfg.grid.fft(Y0.psi)
    states = []
    for t in output_times:
        it = int(round(t / dt))
        psi_t = np.empty_like(Y0.psi)
        for n in range(cfg.N):
            ph = propagate_hat(cfg, n, psi0_hat[n], t)
            ph = ph + duhamel_field_hat(cfg, n, traj.q, dt, it * dt, delta=delta)
            psi_t[n] = cfg.grid.ifft(ph)
        states.append(SystemState(psi=psi_t, q=traj.q[it].copy(), p=traj.p[it].copy()))
    return traj, states


def energy(cfg, Y):
    """Conserved energy of the coupled system.

    Field part per field n: (1/2)(Re<psi, A2n psi> + Im<psi, A1 psi>) with
    A1 the mass-free part of the real-form generator and A2n its partner
    (3D: A1 = a1 d1 + a3 d3, A2n = -i a2 d2 + beta m_n; 1D: A1 = a d,
    A2n = beta m_n); particle part (q.Vq + |p|^2)/2; coupling -q.<psi, grad rho>.
    """
    alg = cfg.algebra
    total = 0.5 * (Y.q @ cfg.V @ Y.q + Y.p @ Y.p)
    for n in range(cfg.N):
        psih = cfg.grid.fft(Y.psi[n])
        if cfg.d == 3:
            A1 = (-1j * cfg.grid.k[0]) * np.tensordot(alg.alpha[0], psih, axes=(1, 0)) \
               + (-1j * cfg.grid.k[2]) * np.tensordot(alg.alpha[2], psih, axes=(1, 0))
            R2 = (-1j * alg.alpha[1]).real
            A2 = (-1j * cfg.grid.k[1]) * np.tensordot(R2, psih, axes=(1, 0)) \
               + cfg.masses[n] * np.tensordot(alg.beta, psih, axes=(1, 0))
        else:
            A1 = (-1j * cfg.grid.k[0]) * np.tensordot(alg.alpha[0], psih, axes=(1, 0))
            A2 = cfg.masses[n] * np.tensordot(alg.beta, psih, axes=(1, 0))
        ip2 = np.sum(np.conj(psih) * A2) / cfg.grid.volume
        ip1 = np.sum(np.conj(psih) * A1) / cfg.grid.volume
        total += 0.5 * (ip2.real + ip1.imag)
        rh = cfg.rho_hat[n]
        for k in range(cfg.d):
            drho = (-1j * cfg.grid.k[k]) * rh
            total -= Y.q[k] * real_pairing_k(cfg.grid, psih, drho)
    return float(total)


def local_energy_decay(cfg, Y0, R, times, dt=None, delta=1e-4):
    """Slope of the local seminorm of the evolved state vs (1+t), log-log."""
    T = max(times)
    traj, states = evolve(cfg, Y0, T, times, dt=dt, delta=delta)
    vals = np.array([local_seminorm(cfg.grid, st, R) for st in states])
    slope = fit_loglog(np.asarray(times, float), vals)
    return {"times": np.asarray(times, float), "values": vals, "slope": slope,
            "trajectory": traj}
