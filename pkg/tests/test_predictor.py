import numpy as np
import pytest

from diracpart.ensemble import (estimate_correlation, finite_range_covariance,
                                sample_initial)
from diracpart.model import Observable
from diracpart.predictor import (equilibrium_map, lambda_multiplier,
                                 limit_density, quad_form)


@pytest.fixture(scope="module")
def cov1d(cfg1d):
    return finite_range_covariance(cfg1d, range_a=2.0, sigma=1.0)


def test_lambda_algebra(cfg1d, cfg3d):
    for cfg in (cfg1d, cfg3d):
        k = np.array([0.7, -0.4, 1.1])[:cfg.d]
        L = lambda_multiplier(cfg, 0, k)
        m = cfg.masses[0]
        # Lambda(-ik)^2 = -(k^2 + m^2) I and Lambda(ik)^T = -Lambda(-ik)
        sq = L @ L
        target = -(k @ k + m ** 2) * np.eye(2 * cfg.s)
        assert np.abs(sq - target).max() < 1e-12
        Lpos = lambda_multiplier(cfg, 0, -k)
        assert np.abs(Lpos.T + L).max() < 1e-12


def test_lambda_consistent_with_free_propagator(cfg1d):
    # the real-representation flow cos(wt) I - sin(wt)/w Lambda(-ik) must act
    # on (Re psi, Im psi) exactly as W(t) acts on psi; the real form mixes
    # the +k and -k modes, so compare on a pair of conjugate modes
    from diracpart.propagator import propagate_hat
    rng = np.random.default_rng(0)
    psih = rng.standard_normal((2, cfg1d.M)) + 1j * rng.standard_normal((2, cfg1d.M))
    t = 1.3
    out = propagate_hat(cfg1d, 0, psih, t)
    i = 41
    ineg = (-i) % cfg1d.M
    k = cfg1d.grid.k[0][i]
    w = np.sqrt(k ** 2 + cfg1d.masses[0] ** 2)
    L = lambda_multiplier(cfg1d, 0, np.array([k]))
    G = np.cos(w * t) * np.eye(2 * cfg1d.s) - np.sin(w * t) / w * L
    # real components at mode k: Re psi^(k) = (psih(k) + conj(psih(-k)))/2 etc.
    rvec = np.concatenate([(psih[:, i] + np.conj(psih[:, ineg])) / 2,
                           (psih[:, i] - np.conj(psih[:, ineg])) / (2j)])
    rout = G @ rvec
    expect = np.concatenate([(out[:, i] + np.conj(out[:, ineg])) / 2,
                             (out[:, i] - np.conj(out[:, ineg])) / (2j)])
    assert np.abs(rout - expect).max() < 1e-12


def test_limit_density_fixed_point_and_psd(cfg1d, cov1d):
    ld = limit_density(cfg1d, cov1d)
    again = equilibrium_map(cfg1d, ld.qhat)
    assert np.abs(again - ld.qhat).max() < 1e-12 * np.abs(ld.qhat).max()
    A = np.moveaxis(ld.qhat, (0, 1), (-2, -1))
    assert np.abs(A - np.conj(np.swapaxes(A, -2, -1))).max() < 1e-12
    assert np.linalg.eigvalsh(A).min() > -1e-12


def test_limit_density_identity_invariant(cfg1d):
    # a white density c I is invariant: Lambda q Lambda(ik)^T = -Lambda^2 c
    # = c (k^2 + m^2), cancelling the propagator factor
    D = cfg1d.N * 2 * cfg1d.s
    qhat = np.zeros((D, D) + cfg1d.grid.shape, dtype=complex)
    for i in range(D):
        qhat[i, i] = 0.7
    out = equilibrium_map(cfg1d, qhat)
    assert np.abs(out - qhat).max() < 1e-12


def test_limit_density_cross_mass_blocks_zero(cfg1d2f):
    cov = finite_range_covariance(cfg1d2f, range_a=2.0, sigma=1.0)
    qhat = cov.qhat.copy()
    D2 = 2 * cfg1d2f.s
    qhat[0, D2] = qhat[D2, 0] = 0.3 * qhat[0, 0]     # seed a cross-field block
    out = equilibrium_map(cfg1d2f, qhat)
    assert np.abs(out[:D2, D2:]).max() == 0.0
    assert np.abs(out[D2:, :D2]).max() == 0.0


def test_quad_form_parseval(cfg1d, cov1d):
    # against a white density the quadratic form is, by Parseval, the squared
    # grid norm of the real components of chi
    rng = np.random.default_rng(1)
    chi = (rng.standard_normal((1, 2, cfg1d.M))
           + 1j * rng.standard_normal((1, 2, cfg1d.M))) * np.exp(-cfg1d.grid.r2 / 8)
    D = 2 * cfg1d.s
    qhat = np.zeros((D, D) + cfg1d.grid.shape, dtype=complex)
    for i in range(D):
        qhat[i, i] = 1.0
    val = quad_form(cfg1d, qhat, chi)
    ref = cfg1d.grid.cell * float(np.sum(chi.real ** 2 + chi.imag ** 2))
    assert abs(val - ref) < 1e-8 * max(1.0, abs(ref))


def test_quad_form_matches_initial_ensemble(cfg1d, cov1d):
    # at t = 0 the predicted Q against the *initial* density must match the
    # Monte Carlo second moment of <Y0, Z>
    rng = np.random.default_rng(2)
    chi = (rng.standard_normal((1, 2, cfg1d.M))
           + 1j * rng.standard_normal((1, 2, cfg1d.M))) * np.exp(-cfg1d.grid.r2 / 8)
    Z = Observable.field_only(cfg1d, chi)
    Mn = 400
    samples = [sample_initial(cov1d, cfg1d, 31, i) for i in range(Mn)]
    est = estimate_correlation(cfg1d.grid, samples, Z)
    pred = quad_form(cfg1d, cov1d, chi)
    assert abs(est.value - pred) < 4 * est.stderr


def test_quad_form_imag_guard(cfg1d):
    D = 2 * cfg1d.s
    qhat = np.zeros((D, D) + cfg1d.grid.shape, dtype=complex)
    qhat[0, 1] = 1.0j         # anti-Hermitian block: imaginary residue
    rng = np.random.default_rng(3)
    chi = (rng.standard_normal((1, 2, cfg1d.M))
           + 1j * rng.standard_normal((1, 2, cfg1d.M))) * np.exp(-cfg1d.grid.r2 / 8)
    with pytest.raises(ValueError):
        quad_form(cfg1d, qhat, chi)
