import numpy as np
import pytest

from diracpart.kernel import (B_points, check_A2, condition_K, htilde,
                              htilde_dense, imag_limit, invertibility_scan,
                              kernel_direct, kernel_time, resolvent,
                              rho_hat_points, spectral_weight, suggest_V)
from diracpart.model import CouplingProfile, ModelConfig


def test_rho_hat_points_match_grid(cfg1d):
    kflat = cfg1d.grid.k[0][:, None]
    pts = rho_hat_points(cfg1d, 0, kflat)
    assert np.abs(pts - cfg1d.rho_hat[0]).max() < 1e-10


def test_spectral_weight_nonnegative(cfg1d, cfg3d):
    for cfg in (cfg1d, cfg3d):
        B = spectral_weight(cfg)
        floor = 1e-12 * B.max()
        assert B.min() > -floor
        # analytic transform vs the finite-box value: truncation-tail level
        pts = B_points(cfg, 0, np.zeros((1, cfg.d)))
        assert abs(pts[0] - B[0].ravel()[0]) < 1e-5 * max(1.0, abs(pts[0]))


@pytest.mark.parametrize("fix", ["cfg1d", "cfg3d"])
def test_kernel_time_matches_direct(fix, request):
    cfg = request.getfixturevalue(fix)
    ts = np.array([0.0, 0.7, 2.3, 6.1])
    mk = kernel_time(cfg, ts)
    # the two formulas differ by odd-in-k terms that cancel pairwise; on an
    # even grid the unpaired Nyquist mode leaves a residue set by the coupling
    # transform there, ~5e-4 on the coarse 32^3 test box
    tol = 1e-8 if cfg.d == 1 else 5e-4
    for i, t in enumerate(ts):
        ref = kernel_direct(cfg, t)
        scale = max(1.0, np.abs(ref).max())
        assert np.abs(mk.H[i] - ref).max() < tol * scale
    assert np.abs(mk.H[0]).max() < 1e-12           # sin(0) = 0 mode by mode


def test_htilde_rejects_left_half_plane(cfg1d):
    with pytest.raises(ValueError):
        htilde(cfg1d, -0.5)


def test_htilde_dense_matches_grid_sum(cfg1d):
    lam = 0.8 + 0.3j
    a = htilde(cfg1d, lam)
    b = htilde_dense(cfg1d, lam, nr=3000)
    assert np.abs(a - b).max() < 1e-4 * max(1.0, np.abs(a).max())


def test_imag_limit_symmetries(cfg1d):
    # below the lightest mass the boundary value is real; above, the
    # imaginary part is odd in omega and negative for omega > 0
    low = imag_limit(cfg1d, 0.5)
    assert np.abs(low.imag).max() < 1e-12
    hi = imag_limit(cfg1d, 1.8)
    lo = imag_limit(cfg1d, -1.8)
    assert hi[0, 0].imag < 0
    assert abs(hi[0, 0].imag + lo[0, 0].imag) < 1e-10
    assert np.abs(hi.real - lo.real).max() < 1e-10


def test_imag_limit_branch_point_rejected(cfg1d):
    with pytest.raises(ValueError):
        imag_limit(cfg1d, 1.0 + 1e-9)


def test_imag_limit_is_epsilon_limit(cfg1d):
    # H~(eps + i omega) -> imag_limit as eps -> 0 (polynomial extrapolation)
    w = 1.6
    eps = np.array([8e-3, 4e-3, 2e-3, 1e-3])
    vals = np.array([htilde_dense(cfg1d, e + 1j * w, nr=4000, nref=20000)[0, 0]
                     for e in eps])
    fit_r = np.polynomial.polynomial.polyfit(eps, vals.real, 3)
    fit_i = np.polynomial.polynomial.polyfit(eps, vals.imag, 3)
    ref = imag_limit(cfg1d, w)[0, 0]
    assert abs(fit_r[0] - ref.real) < 2e-4 * max(1.0, abs(ref))
    assert abs(fit_i[0] - ref.imag) < 2e-4 * max(1.0, abs(ref))


def test_resolvent_and_scan(cfg1d):
    rs = resolvent(cfg1d, 0.6 + 1.1j)
    assert rs.Ninv is not None
    assert np.abs(rs.Ninv @ rs.Nmat - np.eye(cfg1d.d)).max() < 1e-10
    ws, smins = invertibility_scan(cfg1d, np.linspace(0.0, 4.0, 41))
    assert len(ws) < 41                   # branch point omega = 1 skipped
    assert smins.min() > 0


def test_check_A2_and_suggest_V():
    cp = CouplingProfile(kind="gaussian-decay", radius=1.0, amplitudes=[[0.6, 0.3]])
    weak = ModelConfig(d=1, masses=[1.0], V=[[1.02]], coupling=cp,
                       L=60.0, M=512, dt=0.01)
    rep = check_A2(weak)
    margin = 0.5
    V = suggest_V(weak, margin)
    strong = ModelConfig(d=1, masses=[1.0], V=V, coupling=cp,
                         L=60.0, M=512, dt=0.01)
    rep2 = check_A2(strong)
    assert rep2.passed
    assert abs(rep2.min_eig_A2 - margin) < 1e-10
    assert rep2.min_eig_A2 > rep.min_eig_A2
    with pytest.raises(ValueError):
        suggest_V(weak, 0.0)


def test_condition_K_symmetric_3d(cfg3d):
    K = condition_K(cfg3d)
    assert np.abs(K - K.T).max() < 1e-12
    assert np.linalg.eigvalsh(K).min() > 0
