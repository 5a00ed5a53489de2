"""Memory kernel H(t), its Fourier-Laplace transform, and the resolvent matrix.

Grid-side objects (kernel_time, kernel_direct, htilde, check_A2) are Riemann
sums over the DFT grid, so cross-checks between them are consistent by
construction.  Boundary values on the imaginary axis (imag_limit) and the
epsilon -> 0 oracle use a dedicated dense radial quadrature of the continuum
integrals, with the coupling transform evaluated off-grid.
"""

import dataclasses

import numpy as np

from .harmonic import trig_sum
from .model import real_pairing_k
from .propagator import apply_symbol


@dataclasses.dataclass
class MemoryKernel:
    tgrid: np.ndarray
    H: np.ndarray            # (nt, d, d)


@dataclasses.dataclass
class ResolventSample:
    lam: complex
    Htilde: np.ndarray       # (d, d) complex
    Nmat: np.ndarray         # (d, d) complex
    min_singular_value: float
    Ninv: np.ndarray | None


@dataclasses.dataclass
class ConditionReport:
    K: np.ndarray
    min_eig_A2: float
    A3_min: float
    A2_pass: bool
    A3_pass: bool

    @property
    def passed(self):
        return self.A2_pass and self.A3_pass


def spectral_weight(cfg):
    """B_n(k) = rhohat_n(k) . beta rhohat_n(k) on the grid, shape (N,)+grid."""
    signs = np.diag(cfg.algebra.beta).real
    rh = cfg.rho_hat
    shape = (1, cfg.s) + (1,) * cfg.d
    return np.sum(signs.reshape(shape) * np.abs(rh) ** 2, axis=1)


def rho_hat_points(cfg, n, kpts):
    """rhohat_n at arbitrary wave vectors, shape (s, P).

    Analytic for the gaussian profile; direct sum over the (compact) support
    otherwise.  kpts: (P, d).
    """
    kpts = np.atleast_2d(np.asarray(kpts, dtype=float))
    prof = cfg.coupling
    if prof.kind == "gaussian-decay":
        k2 = np.sum(kpts**2, axis=1)
        g = prof.shape_hat(cfg.d, k2)
        return prof.amplitudes[n][:, None] * g[None, :]
    rho = cfg.rho[n]
    mask = np.abs(rho).sum(axis=0) > 0
    xs = np.stack([x[mask] for x in cfg.grid.x], axis=1)     # (P0, d)
    vals = rho[:, mask]                                       # (s, P0)
    phase = np.exp(1j * kpts @ xs.T)                          # (P, P0)
    return cfg.grid.cell * (vals @ phase.T)


def B_points(cfg, n, kpts):
    signs = np.diag(cfg.algebra.beta).real
    rh = rho_hat_points(cfg, n, kpts)
    return np.sum(signs[:, None] * np.abs(rh) ** 2, axis=0)


def _kk_coefficients(cfg):
    """Flattened per-mode (omega, m_n k_i k_j B_n / omega / L^d) over all fields."""
    B = spectral_weight(cfg)
    d = cfg.d
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    omegas = []
    coefs = []
    for n in range(cfg.N):
        w = cfg.omega[n].ravel()
        base = (cfg.masses[n] / cfg.grid.volume) * B[n].ravel() / w
        cols = [base * (cfg.grid.k[i].ravel() * cfg.grid.k[j].ravel()) for i, j in pairs]
        omegas.append(w)
        coefs.append(np.stack(cols, axis=1))
    return np.concatenate(omegas), np.concatenate(coefs), pairs


def _unpack_sym(flat, pairs, d):
    out = np.zeros(flat.shape[:-1] + (d, d))
    for c, (i, j) in enumerate(pairs):
        out[..., i, j] = flat[..., c]
        out[..., j, i] = flat[..., c]
    return out


def kernel_time(cfg, tgrid, delta=1e-4):
    """H(t) = (2 pi)^{-d} sum_n m_n int k k^T B_n sin(w t)/w dk as a grid sum."""
    omega, coefs, pairs = _kk_coefficients(cfg)
    flat = trig_sum(omega, np.zeros_like(coefs), coefs, np.asarray(tgrid, float),
                    delta=delta)
    return MemoryKernel(tgrid=np.asarray(tgrid, float),
                        H=_unpack_sym(np.atleast_2d(flat), pairs, cfg.d))


def kernel_direct(cfg, t):
    """H_{kl}(t) = sum_n <d_k rho_n, W_n(t) i d_l rho_n> (spectral derivative)."""
    d = cfg.d
    H = np.zeros((d, d))
    for n in range(cfg.N):
        rh = cfg.rho_hat[n]
        drho = [(-1j * cfg.grid.k[l]) * rh for l in range(d)]
        w = cfg.omega[n]
        for l in range(d):
            src = 1j * drho[l]
            prop = np.cos(w * t) * src + (1j * np.sin(w * t) / w) * apply_symbol(cfg, n, src)
            for k in range(l, d):
                H[k, l] += real_pairing_k(cfg.grid, drho[k], prop)
    for k in range(d):
        for l in range(k + 1, d):
            H[k, l] = H[l, k]
    return H


def htilde(cfg, lam):
    """H~(lambda) = (2 pi)^{-d} sum_n m_n int k k^T B_n/(k^2+lambda^2+m_n^2) dk (grid sum)."""
    lam = complex(lam)
    if lam.real <= 0:
        raise ValueError("htilde requires Re lambda > 0; use imag_limit on the axis")
    B = spectral_weight(cfg)
    d = cfg.d
    out = np.zeros((d, d), dtype=complex)
    for n in range(cfg.N):
        den = cfg.grid.k2 + lam**2 + cfg.masses[n] ** 2
        base = (cfg.masses[n] / cfg.grid.volume) * B[n] / den
        for i in range(d):
            for j in range(i, d):
                v = np.sum(base * cfg.grid.k[i] * cfg.grid.k[j])
                out[i, j] += v
                out[j, i] += v * (i != j)
    return out


# -- dense continuum quadrature (oracles and imaginary-axis limits) ---------


def fibonacci_sphere(nnodes):
    """Near-uniform unit-sphere nodes (golden-angle spiral)."""
    i = np.arange(nnodes) + 0.5
    phi = np.pi * (1 + 5**0.5) * i
    z = 1 - 2 * i / nnodes
    r = np.sqrt(1 - z**2)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _radial_moment(cfg, n, rgrid, nnodes=500):
    """G_ij(r) such that int k_i k_j B_n dk = int_0^inf G_ij(r)/(...) dr.

    3D: G_ij(r) = r^4 * int_{S^2} th_i th_j B_n(r th) dS(th);
    1D: G(r) = 2 r^2 B_n(r)  (B even).
    """
    d = cfg.d
    if d == 1:
        B = B_points(cfg, n, rgrid[:, None])
        return (2.0 * rgrid**2 * B)[:, None, None] * np.ones((1, 1, 1))
    nodes = fibonacci_sphere(nnodes)
    kpts = (rgrid[:, None, None] * nodes[None, :, :]).reshape(-1, 3)
    B = B_points(cfg, n, kpts).reshape(len(rgrid), nnodes)
    thth = nodes[:, :, None] * nodes[:, None, :]              # (nn, 3, 3)
    ang = np.tensordot(B, thth, axes=(1, 0)) * (4 * np.pi / nnodes)
    return rgrid[:, None, None] ** 4 * ang


def _rmax(cfg):
    if cfg.coupling.kind == "gaussian-decay":
        return 9.0 / cfg.coupling.radius
    return max(60.0 / cfg.coupling.radius, 4 * np.pi / cfg.grid.h)


def _radial_grid(rmax, nr, refine_at=(), width=0.6, nref=3000):
    r = np.linspace(0.0, rmax, nr) + 0.5 * rmax / nr / 7.0   # offset off r=0 and shells
    parts = [r]
    for r0 in refine_at:
        lo, hi = max(r0 - width, 1e-9), min(r0 + width, rmax)
        parts.append(np.linspace(lo, hi, nref) + (hi - lo) / nref / 3.0)
    r = np.unique(np.concatenate(parts))
    return r


def htilde_dense(cfg, lam, nr=4000, nnodes=500, nref=3000):
    """Continuum quadrature of H~(lambda); valid for any lambda off the branch cuts.

    Used as the epsilon -> 0 volume-integral oracle: near open-channel shells
    the radial grid is refined so the Lorentzian at small Re lambda is resolved.
    """
    lam = complex(lam)
    d = cfg.d
    out = np.zeros((d, d), dtype=complex)
    rmax = _rmax(cfg)
    for n in range(cfg.N):
        m = cfg.masses[n]
        c = -(lam**2) - m**2                 # integrand pole at r^2 = c
        refine = []
        if c.real > 0 and abs(c.imag) < 1.0:
            refine = [np.sqrt(c.real)]
        r = _radial_grid(rmax, nr, refine_at=refine, nref=nref)
        G = _radial_moment(cfg, n, r, nnodes=nnodes)
        den = r**2 + lam**2 + m**2
        out += m / (2 * np.pi) ** d * np.trapezoid(G / den[:, None, None], r, axis=0)
    return out


def imag_limit(cfg, omega, nr=4000, nnodes=500, branch_tol=1e-6):
    """Boundary value H~(i omega + 0).

    Real part: principal-value radial quadrature with the pole subtracted per
    open channel; imaginary part: the resonant-shell surface integral
    -sign(omega) * pi * m_n (2 pi)^{-d} int_{|k|=k0} k_i k_j B_n / (2 k0) dS.
    """
    omega = float(omega)
    for m in cfg.masses:
        if abs(abs(omega) - m) < branch_tol:
            raise ValueError(f"omega within {branch_tol} of branch point {m}")
    d = cfg.d
    re = np.zeros((d, d))
    im = np.zeros((d, d))
    rmax = _rmax(cfg)
    for n in range(cfg.N):
        m = cfg.masses[n]
        c = omega**2 - m**2
        if c <= 0:
            r = _radial_grid(rmax, nr)
            G = _radial_moment(cfg, n, r, nnodes=nnodes)
            re += m / (2 * np.pi) ** d * np.trapezoid(
                G / (r**2 - c)[:, None, None], r, axis=0)
            continue
        k0 = np.sqrt(c)
        r = _radial_grid(rmax, nr, refine_at=[k0])
        G = _radial_moment(cfg, n, r, nnodes=nnodes)
        G0 = _radial_moment(cfg, n, np.array([k0]), nnodes=nnodes)[0]
        sub = (G - G0[None]) / (r**2 - k0**2)[:, None, None]
        pv_tail = np.log((rmax - k0) / (rmax + k0)) / (2 * k0)
        re += m / (2 * np.pi) ** d * (np.trapezoid(sub, r, axis=0) + G0 * pv_tail)
        # resonant shell contribution to the imaginary part
        if d == 3:
            nodes = fibonacci_sphere(nnodes)
            kpts = k0 * nodes
            B = B_points(cfg, n, kpts)
            surf = (4 * np.pi * k0**2 / nnodes) * np.tensordot(
                B, kpts[:, :, None] * kpts[:, None, :], axes=(0, 0))
        else:
            B = B_points(cfg, n, np.array([[k0], [-k0]]))
            surf = np.array([[k0**2 * (B[0] + B[1])]])
        im += -np.sign(omega) * np.pi * m / (2 * np.pi) ** d * surf / (2 * k0)
    return re + 1j * im


def resolvent(cfg, lam, **kw):
    """N(lambda) = lambda^2 I + V - H~(lambda) with its minimal singular value."""
    lam = complex(lam)
    if abs(lam.real) < 1e-12:
        Ht = imag_limit(cfg, lam.imag, **kw)
    else:
        Ht = htilde(cfg, lam)
    Nmat = lam**2 * np.eye(cfg.d) + cfg.V - Ht
    sv = np.linalg.svd(Nmat, compute_uv=False)
    smin = float(sv.min())
    Ninv = np.linalg.inv(Nmat) if smin > 1e-12 * max(1.0, sv.max()) else None
    return ResolventSample(lam=lam, Htilde=Ht, Nmat=Nmat,
                           min_singular_value=smin, Ninv=Ninv)


def condition_K(cfg):
    """K_ij = sum_n m_n (2 pi)^{-d} int k_i k_j B_n/(k^2+m_n^2-m_*^2) dk (grid sum)."""
    B = spectral_weight(cfg)
    mstar2 = cfg.masses.min() ** 2
    d = cfg.d
    K = np.zeros((d, d))
    for n in range(cfg.N):
        den = cfg.grid.k2 + cfg.masses[n] ** 2 - mstar2
        with np.errstate(divide="ignore", invalid="ignore"):
            base = (cfg.masses[n] / cfg.grid.volume) * B[n] / den
        base = np.where(den > 0, base, 0.0)   # removable k=0 point of the m_* channel
        for i in range(d):
            for j in range(i, d):
                v = float(np.sum(base * cfg.grid.k[i] * cfg.grid.k[j]))
                K[i, j] += v
                if i != j:
                    K[j, i] += v
    return K


def check_A2(cfg):
    K = condition_K(cfg)
    mstar2 = cfg.masses.min() ** 2
    eigs = np.linalg.eigvalsh(cfg.V - mstar2 * np.eye(cfg.d) - K)
    B = spectral_weight(cfg)
    mask = cfg.grid.k2 > 0
    a3 = float(min(B[n][mask].min() for n in range(cfg.N)))
    # positivity up to the round-off floor: |shape_hat|^2 underflows at large
    # grid k, leaving residues at the 1e-30 level that are not sign violations
    floor = 1e-12 * max(float(B[n].max()) for n in range(cfg.N))
    return ConditionReport(K=K, min_eig_A2=float(eigs.min()), A3_min=a3,
                           A2_pass=bool(eigs.min() > 0), A3_pass=bool(a3 > -floor))


def suggest_V(cfg, margin):
    """V = m_*^2 I + K + margin * I, making the A2 check pass by construction."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    K = condition_K(cfg)
    return cfg.masses.min() ** 2 * np.eye(cfg.d) + K + margin * np.eye(cfg.d)


def invertibility_scan(cfg, omega_grid, branch_tol=1e-3, **kw):
    """Min singular value of N(i omega + 0) over a scan; branch points skipped."""
    omegas, smins = [], []
    for w in np.asarray(omega_grid, dtype=float):
        if any(abs(abs(w) - m) < branch_tol for m in cfg.masses):
            continue
        rs = resolvent(cfg, 1j * w, **kw)
        omegas.append(w)
        smins.append(rs.min_singular_value)
    return np.array(omegas), np.array(smins)
