"""Equilibrium prediction: Lambda multipliers, limit spectral density, Q-forms.

The limit density acts on the real-representation components (Re psi, Im psi)
of the fields; everything is assembled per Fourier mode, where the map
  qinf = (q0 + P_n(k) Lambda_n(-ik) q0 Lambda_{n'}(ik)^T) / 2
is algebraic, with P_n(k) = 1/(k^2 + m_n^2) and blocks with m_n != m_{n'}
set to zero.
"""

import dataclasses

import numpy as np

from .asymptotics import build_chiZ


def lambda_multiplier(cfg, n, k):
    """Lambda_n(-ik) as a (2s, 2s) matrix for one wave vector."""
    alg = cfg.algebra
    s = cfg.s
    k = np.atleast_1d(np.asarray(k, dtype=float))
    m = cfg.masses[n]
    if cfg.d == 3:
        A1 = alg.alpha[0] * (-1j * k[0]) + alg.alpha[2] * (-1j * k[2])
        A2 = (-1j * alg.alpha[1]) * (-1j * k[1]) + alg.beta * m
    else:
        A1 = alg.alpha[0] * (-1j * k[0])
        A2 = alg.beta * m
    out = np.zeros((2 * s, 2 * s), dtype=complex)
    out[:s, :s] = A1
    out[:s, s:] = -A2
    out[s:, :s] = A2
    out[s:, s:] = A1
    return out


def _lambda_grid(cfg, n):
    """Lambda_n(-ik) at every grid k, shape grid + (2s, 2s)."""
    alg = cfg.algebra
    s = cfg.s
    m = cfg.masses[n]
    shape = cfg.grid.shape
    A1 = np.zeros(shape + (s, s), dtype=complex)
    if cfg.d == 3:
        A1 += (-1j * cfg.grid.k[0])[..., None, None] * alg.alpha[0]
        A1 += (-1j * cfg.grid.k[2])[..., None, None] * alg.alpha[2]
        A2 = (-1j * cfg.grid.k[1])[..., None, None] * (-1j * alg.alpha[1]) \
            + np.broadcast_to(alg.beta * m, shape + (s, s))
    else:
        A1 += (-1j * cfg.grid.k[0])[..., None, None] * alg.alpha[0]
        A2 = np.broadcast_to(alg.beta * m, shape + (s, s)).astype(complex)
    out = np.zeros(shape + (2 * s, 2 * s), dtype=complex)
    out[..., :s, :s] = A1
    out[..., :s, s:] = -A2
    out[..., s:, :s] = A2
    out[..., s:, s:] = A1
    return out


@dataclasses.dataclass
class LimitDensity:
    qhat: np.ndarray   # (D, D) + grid, D = N * 2s


def equilibrium_map(cfg, qhat):
    """One application of the invariance map to a (D, D) + grid density."""
    N, s = cfg.N, cfg.s
    D2 = 2 * s
    blocks = qhat.reshape(N, D2, N, D2, -1)
    out = np.zeros_like(blocks)
    lams = [_lambda_grid(cfg, n).reshape(-1, D2, D2) for n in range(N)]
    for n in range(N):
        Pn = 1.0 / (cfg.grid.k2.ravel() + cfg.masses[n] ** 2)
        for np_ in range(N):
            if cfg.masses[n] != cfg.masses[np_]:
                continue
            q0 = np.moveaxis(blocks[n, :, np_, :, :], -1, 0)   # (nk, D2, D2)
            # Lambda_{n'}(ik)^T = -Lambda_{n'}(-ik)
            rot = lams[n] @ q0 @ (-lams[np_])
            qn = 0.5 * (q0 + Pn[:, None, None] * rot)
            out[n, :, np_, :, :] = np.moveaxis(qn, 0, -1)
    return out.reshape(qhat.shape)


def limit_density(cfg, cov):
    """qinf from the initial spectral density; off-mass blocks zeroed."""
    return LimitDensity(qhat=equilibrium_map(cfg, cov.qhat))


def quad_form(cfg, density, chi):
    """(1/L^d) sum_k  conj(R chi)^ . qhat . (R chi)^  over all fields.

    density: LimitDensity, CovarianceModel-style object with .qhat, or a bare
    (D, D) + grid array.  chi: (N, s) + grid complex spinor set.
    """
    qhat = getattr(density, "qhat", density)
    D = qhat.shape[0]
    R = np.concatenate([np.concatenate([chi[n].real, chi[n].imag], axis=0)
                        for n in range(cfg.N)], axis=0)
    Rhat = cfg.grid.fft(R).reshape(D, -1)
    qflat = qhat.reshape(D, D, -1)
    val = np.einsum("ik,ijk,jk->", np.conj(Rhat), qflat, Rhat) / cfg.grid.volume
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ValueError(f"imaginary residue {val.imag} in quadratic form")
    return float(val.real)


def predict_QZ(cfg, cov, Z, xi0, xi1, T_theta=100.0, dt=None, delta=1e-4):
    """Q_inf(Z,Z) = Q^nu_inf(chi^Z, chi^Z), plus the characteristic-functional
    prediction exp(-Q/2)."""
    chiZ = build_chiZ(cfg, Z, xi0, xi1, T_theta=T_theta, dt=dt, delta=delta)
    ld = limit_density(cfg, cov)
    Q = quad_form(cfg, ld, chiZ)
    return {"Q": Q, "charfunc": float(np.exp(-0.5 * Q)), "chiZ": chiZ}
