"""Random initial data and ensemble estimators.

The initial field measure is translation invariant with matrix spectral
density qhat0(k) over the real-representation components (Re psi, Im psi) of
all fields, plus an independent Gaussian for the particle.  The default
construction has finite range: the position-space correlation is the discrete
box-filter triangle, which vanishes identically beyond the declared range, so
distant regions are exactly independent (mixing holds by construction).

Samples are fully determined by (master_seed, sample_index) through a
counter-based generator, independent of execution order.
"""

import dataclasses
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import fftconvolve

from .harmonic import trig_sum
from .model import SystemState, observable_pairing
from .propagator import apply_symbol, propagate_hat
from .volterra import solve_particle, solving_kernel


def _rng(master_seed, sample_index):
    return np.random.Generator(np.random.Philox(key=[master_seed, sample_index]))


@dataclasses.dataclass
class CovarianceModel:
    kind: str                 # "finite-range" | "spectral-gaussian"
    qhat: np.ndarray          # (D, D) + grid, D = N * 2s
    particle_cov: np.ndarray  # (2d, 2d)
    range_a: float = 0.0      # finite-range kinds only
    sigma: np.ndarray = None  # per-component std used by the filter sampler
    _sqrt: np.ndarray = None  # lazy Hermitian square root, (D, D) + grid

    def sqrt_density(self):
        if self._sqrt is None:
            A = np.moveaxis(self.qhat, (0, 1), (-2, -1))
            lam, U = np.linalg.eigh(A)
            lam = np.clip(lam, 0.0, None)
            S = U * np.sqrt(lam)[..., None, :] @ np.conj(np.swapaxes(U, -2, -1))
            self._sqrt = np.moveaxis(S, (-2, -1), (0, 1))
        return self._sqrt


def finite_range_covariance(cfg, range_a=2.0, sigma=1.0, particle_cov=None):
    """Box-filter field covariance: q0(x) = sigma^2 * triangle, zero beyond range_a.

    The spectral density is the squared Dirichlet kernel of the length-(2b+1)
    box filter (b = floor(range_a / (2h))), nonnegative by construction, and is
    exactly the covariance of the filter samplers below.
    """
    if cfg.d != 1:
        raise ValueError("finite-range construction implemented for d=1")
    h = cfg.grid.h
    b = int(range_a / (2 * h))
    if b < 1:
        raise ValueError("range below grid resolution")
    D = cfg.N * 2 * cfg.s
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (D,)).copy()
    k = cfg.grid.k[0]
    # |sum_{|j|<=b} e^{i k j h}|^2 * h / (2b+1)
    num = np.sin(k * (2 * b + 1) * h / 2.0)
    den = np.sin(k * h / 2.0)
    dir2 = np.where(np.abs(den) < 1e-14, float(2 * b + 1) ** 2,
                    (num / np.where(np.abs(den) < 1e-14, 1.0, den)) ** 2)
    g = h * dir2 / (2 * b + 1)
    qhat = np.zeros((D, D) + cfg.grid.shape)
    for i in range(D):
        qhat[i, i] = sigma[i] ** 2 * g
    pc = np.zeros((2 * cfg.d, 2 * cfg.d)) if particle_cov is None \
        else np.asarray(particle_cov, dtype=float)
    return CovarianceModel(kind="finite-range", qhat=qhat.astype(complex),
                           particle_cov=pc, range_a=2 * b * h, sigma=sigma)


def spectral_gaussian_covariance(cfg, width=1.0, sigma=1.0, particle_cov=None):
    """Diagonal Gaussian spectral density sigma^2 exp(-width^2 k^2) (not finite range)."""
    D = cfg.N * 2 * cfg.s
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (D,)).copy()
    g = np.exp(-width ** 2 * cfg.grid.k2)
    qhat = np.zeros((D, D) + cfg.grid.shape)
    for i in range(D):
        qhat[i, i] = sigma[i] ** 2 * g
    pc = np.zeros((2 * cfg.d, 2 * cfg.d)) if particle_cov is None \
        else np.asarray(particle_cov, dtype=float)
    return CovarianceModel(kind="spectral-gaussian", qhat=qhat.astype(complex),
                           particle_cov=pc)


def validate_covariance(cfg, cov, tol=1e-12):
    """Bochner positivity, conjugate symmetry, and (if declared) finite range."""
    A = np.moveaxis(cov.qhat, (0, 1), (-2, -1))
    eigs = np.linalg.eigvalsh(A)
    min_eig = float(eigs.min())
    if min_eig < -tol:
        bad = np.unravel_index(np.argmin(eigs.min(axis=-1)), cfg.grid.shape)
        k_bad = [cfg.grid.k[j].ravel()[bad[j]] if cfg.d > 1 else cfg.grid.k[0][bad[0]]
                 for j in range(cfg.d)]
        raise ValueError(f"indefinite spectral density at k={k_bad}: {min_eig}")
    sym = float(np.abs(cov.qhat - np.conj(cfg.grid.neg_k(cov.qhat))).max())
    report = {"min_eigenvalue": min_eig, "conjugate_symmetry": sym, "passed": True}
    if sym > 1e-10 * max(1.0, float(np.abs(cov.qhat).max())):
        raise ValueError(f"conjugate symmetry violated: {sym}")
    if cov.kind == "finite-range":
        q0 = cfg.grid.ifft(cov.qhat)
        far = cfg.grid.r2 > (cov.range_a + cfg.grid.h) ** 2
        leak = float(np.abs(q0[..., far]).max())
        report["range_leakage"] = leak
        if leak > 1e-10 * max(1.0, float(np.abs(q0).max())):
            raise ValueError(f"finite-range violated: leakage {leak}")
    pe = np.linalg.eigvalsh(cov.particle_cov)
    if pe.min() < -tol:
        raise ValueError("particle covariance not positive semidefinite")
    report["particle_min_eigenvalue"] = float(pe.min())
    return report


def _components_to_state(cfg, R, q, p):
    s = cfg.s
    psi = np.empty((cfg.N, s) + cfg.grid.shape, dtype=complex)
    for n in range(cfg.N):
        blk = R[2 * s * n:2 * s * (n + 1)]
        psi[n] = blk[:s] + 1j * blk[s:]
    return SystemState(psi=psi, q=q, p=p)


def _sample_particle(cov, cfg, rng):
    if np.abs(cov.particle_cov).max() == 0:
        return np.zeros(cfg.d), np.zeros(cfg.d)
    C = np.linalg.cholesky(cov.particle_cov + 1e-300 * np.eye(2 * cfg.d))
    z = C @ rng.standard_normal(2 * cfg.d)
    return z[:cfg.d], z[cfg.d:]


def sample_initial(cov, cfg, master_seed, sample_index, non_gaussian=False,
                   sparse_p=0.02):
    """One initial state: Gaussian field by spectral factorization (or the
    non-Gaussian sparse-noise variant with identical covariance), independent
    Gaussian particle."""
    rng = _rng(master_seed, sample_index)
    D = cov.qhat.shape[0]
    if non_gaussian:
        if cov.kind != "finite-range":
            raise ValueError("non-Gaussian option requires the finite-range kind")
        b = int(round(cov.range_a / (2 * cfg.grid.h)))
        M = cfg.grid.shape[0]
        R = np.empty((D, M))
        for i in range(D):
            g = rng.standard_normal(M)
            mask = rng.random(M) < sparse_p
            w = np.where(mask, g / np.sqrt(sparse_p), 0.0)
            R[i] = cov.sigma[i] * uniform_filter1d(w, size=2 * b + 1,
                                                   mode="wrap") * np.sqrt(2 * b + 1)
        q, p = _sample_particle(cov, cfg, rng)
        return _components_to_state(cfg, R, q, p)
    shape = (D,) + cfg.grid.shape
    g1 = rng.standard_normal(shape)
    g2 = rng.standard_normal(shape)
    zeta = (g1 + 1j * g2) / np.sqrt(2.0)
    zeta = (zeta + np.conj(cfg.grid.neg_k(zeta))) / np.sqrt(2.0)
    A = cov.sqrt_density()
    Zhat = np.sqrt(cfg.grid.volume) * np.einsum("ij...,j...->i...", A, zeta)
    R = cfg.grid.ifft(Zhat).real
    q, p = _sample_particle(cov, cfg, rng)
    return _components_to_state(cfg, R, q, p)


@dataclasses.dataclass
class CorrelationEstimate:
    value: float
    stderr: float
    samples: int


def observable_values(grid, samples, Z):
    """<Y, Z> per sample; accepts SystemState iterables or a ready scalar array."""
    if isinstance(samples, np.ndarray) and samples.ndim == 1:
        return samples
    return np.array([observable_pairing(grid, Y, Z) for Y in samples])


def estimate_correlation(grid, samples1, Z1, samples2=None, Z2=None):
    """Sample mean/stderr of <Y,Z1><Y,Z2> over the ensemble."""
    v1 = observable_values(grid, samples1, Z1)
    v2 = v1 if samples2 is None else observable_values(grid, samples2, Z2)
    if len(v1) < 2:
        raise ValueError("need at least 2 samples")
    prod = v1 * v2
    M = len(prod)
    return CorrelationEstimate(value=float(prod.mean()),
                               stderr=float(prod.std(ddof=1) / np.sqrt(M)),
                               samples=M)


def estimate_charfunc(grid, samples, Z):
    """Mean of exp(i <Y,Z>) with componentwise standard errors."""
    v = observable_values(grid, samples, Z)
    if len(v) < 2:
        raise ValueError("need at least 2 samples")
    e = np.exp(1j * v)
    M = len(v)
    val = complex(e.mean())
    se_re = float(e.real.std(ddof=1) / np.sqrt(M))
    se_im = float(e.imag.std(ddof=1) / np.sqrt(M))
    return val, se_re, se_im


def gaussianity_stats(grid, samples, Z):
    """Excess kurtosis of <Y,Z> with the asymptotic stderr sqrt(24/M)."""
    v = observable_values(grid, samples, Z)
    M = len(v)
    if M < 100:
        raise ValueError("need at least 100 samples for kurtosis")
    c = v - v.mean()
    m2 = np.mean(c ** 2)
    kurt = float(np.mean(c ** 4) / m2 ** 2 - 3.0)
    return kurt, float(np.sqrt(24.0 / M))

def _sample_psi_hat(cov, cfg, master_seed, idx, non_gaussian):
    Y = sample_initial(cov, cfg, master_seed, idx, non_gaussian=non_gaussian)
    return cfg.grid.fft(Y.psi), Y.q, Y.p


def evolve_ensemble(cfg, cov, observables, M, master_seed, t_obs, H, sk,
                    non_gaussian=False, threads=1, chunk=25, delta=1e-4):
    """Scalar observable values <Y(t), Z> for every sample, observable, time.

    The per-sample work reduces to inner products against precomputed mode
    tables: the forcing enters the memory equation through two fixed fields
    (grad rho and its free-rotated partner), the particle trajectory is the
    solving-kernel convolution of the forcing, and the radiated field part of
    each observable is a single delayed convolution against a precomputed
    scalar kernel.  Chunking over samples is fixed (independent of `threads`),
    so results are bit-identical for any worker count.

    Returns an array of shape (len(t_obs), len(observables), M).
    """
    if cfg.d != 1:
        raise ValueError("batched ensemble evolution implemented for d=1")
    dt = cfg.dt
    tgrid = sk.tgrid
    nt = len(tgrid)
    if abs(tgrid[1] - tgrid[0] - dt) > 1e-12 or tgrid[-1] < max(t_obs) - 1e-9:
        raise ValueError("solving-kernel grid must cover the observation horizon")
    it_obs = [int(round(t / dt)) for t in t_obs]

    # fixed mode tables: G1 = grad rho, G2 = -i D grad rho / omega (per field)
    G1 = np.empty((cfg.N, cfg.s, cfg.M), dtype=complex)
    G2 = np.empty_like(G1)
    for n in range(cfg.N):
        g = (-1j * cfg.grid.k[0]) * cfg.rho_hat[n]
        G1[n] = g
        G2[n] = -1j * apply_symbol(cfg, n, g) / cfg.omega[n]
    wflat = np.concatenate([cfg.omega[n].ravel() for n in range(cfg.N)])

    # homogeneous solution matrices for nonzero particle initial data
    need_part = np.abs(cov.particle_cov).max() > 0
    if need_part:
        Harr = H.H
        solM = solve_particle(cfg.V, Harr, None, [1.0], [0.0], tgrid)
        Mh, Mhdot = solM.q[:, 0], solM.p[:, 0]

    # per-observable precomputations
    obs_free_hat = []   # W(-t) chi in Fourier space, per (time, obs)
    obs_gkernel = []    # g(tau) = sum_n <i W(tau) d rho_n, chi_n>, per obs
    for Z in observables:
        if Z.chi is not None and np.abs(Z.chi).max() > 0:
            chih = cfg.grid.fft(Z.chi)
            per_t = [np.stack([propagate_hat(cfg, n, chih[n], -t)
                               for n in range(cfg.N)]) for t in t_obs]
            a = np.concatenate([np.sum(np.conj(1j * G1[n]) * cfg.grid.fft(Z.chi[n]),
                                       axis=0).real.ravel()
                                for n in range(cfg.N)]) / cfg.grid.volume
            # <i W(tau) d rho, chi> = sum a cos(w tau) + b sin(w tau) with
            # a = Re<i g1, chi>, b = Re<-D g1 / w, chi> = Re<-i g2, chi>
            b = np.concatenate([np.sum(np.conj(-1j * G2[n]) * chih[n],
                                       axis=0).real.ravel()
                                for n in range(cfg.N)]) / cfg.grid.volume
            g = trig_sum(wflat, a[:, None], b[:, None], tgrid, delta=delta)[:, 0]
        else:
            per_t = None
            g = None
        obs_free_hat.append(per_t)
        obs_gkernel.append(g)

    starts = list(range(0, M, chunk))

    def run_chunk(s0):
        idxs = range(s0, min(s0 + chunk, M))
        S = len(idxs)
        psih = np.empty((S, cfg.N, cfg.s, cfg.M), dtype=complex)
        q0 = np.empty((S, 1))
        p0 = np.empty((S, 1))
        for j, m in enumerate(idxs):
            ph, q_, p_ = _sample_psi_hat(cov, cfg, master_seed, m, non_gaussian)
            psih[j] = ph
            q0[j] = q_
            p0[j] = p_
        # forcing coefficients per mode: a = Re<g1, psi0>, b = Re<g2, psi0>
        A = np.concatenate([np.einsum("cm,jcm->jm", np.conj(G1[n]), psih[:, n]).real
                            for n in range(cfg.N)], axis=1).T / cfg.grid.volume
        B = np.concatenate([np.einsum("cm,jcm->jm", np.conj(G2[n]), psih[:, n]).real
                            for n in range(cfg.N)], axis=1).T / cfg.grid.volume
        F = np.empty((nt, S))
        tb = 256
        for i0 in range(0, nt, tb):
            ts = tgrid[i0:i0 + tb]
            ph_c = np.cos(np.outer(ts, wflat))
            ph_s = np.sin(np.outer(ts, wflat))
            F[i0:i0 + tb] = ph_c @ A + ph_s @ B
        # q(t) = N * F (+ homogeneous part), p(t) = Ndot * F (+ hom.)
        Nk = sk.N[:, 0, 0]
        Ndk = sk.Ndot[:, 0, 0]
        conv = fftconvolve(Nk[:, None], F, axes=0)[:nt]
        conv -= 0.5 * Nk[0] * F + 0.5 * np.outer(Nk, F[0])
        qt = dt * conv
        convd = fftconvolve(Ndk[:, None], F, axes=0)[:nt]
        convd -= 0.5 * Ndk[0] * F + 0.5 * np.outer(Ndk, F[0])
        pt = dt * convd       # d/dt (N*F) = Ndot*F since N(0)=0
        if need_part:
            qt += np.outer(Mh, q0[:, 0]) + np.outer(sk.N[:, 0, 0], p0[:, 0])
            pt += np.outer(Mhdot, q0[:, 0]) + np.outer(sk.Ndot[:, 0, 0], p0[:, 0])
        out = np.empty((len(t_obs), len(observables), S))
        for ti, (t, it) in enumerate(zip(t_obs, it_obs)):
            for zi, Z in enumerate(observables):
                val = np.zeros(S)
                if obs_free_hat[zi] is not None:
                    chit = obs_free_hat[zi][ti]       # (N, s, M)
                    val = np.einsum("jncm,ncm->j", np.conj(psih), chit).real \
                        / cfg.grid.volume
                    if it > 0:
                        g = obs_gkernel[zi]
                        grev = g[it::-1].copy()
                        wts = np.full(it + 1, dt)
                        wts[0] = wts[-1] = 0.5 * dt
                        val += (wts * grev) @ qt[:it + 1]
                if Z.u is not None and np.abs(Z.u).max() > 0:
                    val = val + Z.u[0] * qt[it]
                if Z.v is not None and np.abs(Z.v).max() > 0:
                    val = val + Z.v[0] * pt[it]
                out[ti, zi] = val
        return out

    if threads <= 1:
        parts = [run_chunk(s0) for s0 in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run_chunk, starts))
    return np.concatenate(parts, axis=2)
