import json

import numpy as np
import pytest

from diracpart.model import (CouplingProfile, ModelConfig, Observable,
                             SystemState, build_algebra, field_norm,
                             local_seminorm, real_pairing, real_pairing_k,
                             weighted_norm)


def anticomm(A, B):
    return A @ B + B @ A


@pytest.mark.parametrize("d", [1, 3])
def test_algebra_anticommutation_exact(d):
    alg = build_algebra(d)
    s = alg.beta.shape[0]
    mats = list(alg.alpha) + [alg.beta]
    for i, A in enumerate(mats):
        for j, B in enumerate(mats):
            target = 2.0 * np.eye(s) if i == j else np.zeros((s, s))
            assert np.array_equal(anticomm(A, B), target)
    for A in mats:
        assert np.array_equal(A, np.conj(A.T))


def test_grid_axes(cfg1d):
    g = cfg1d.grid
    assert g.x[0][0] == 0.0
    assert abs(g.k[0][1] - 2 * np.pi / g.L) < 1e-14
    assert abs(g.cell * g.shape[0] - g.volume) < 1e-12


def test_fft_roundtrip_and_parseval(cfg1d):
    rng = np.random.default_rng(0)
    f = rng.standard_normal((2, cfg1d.M)) + 1j * rng.standard_normal((2, cfg1d.M))
    fh = cfg1d.grid.fft(f)
    assert np.abs(cfg1d.grid.ifft(fh) - f).max() < 1e-12
    n_x = field_norm(cfg1d.grid, f) ** 2
    n_k = float(np.sum(np.abs(fh) ** 2)) / cfg1d.grid.volume
    assert abs(n_x - n_k) < 1e-9 * n_x


def test_real_pairing_matches_k_space(cfg1d):
    rng = np.random.default_rng(1)
    f = rng.standard_normal((2, cfg1d.M)) + 1j * rng.standard_normal((2, cfg1d.M))
    g = rng.standard_normal((2, cfg1d.M)) + 1j * rng.standard_normal((2, cfg1d.M))
    a = real_pairing(cfg1d.grid, f, g)
    b = real_pairing_k(cfg1d.grid, cfg1d.grid.fft(f), cfg1d.grid.fft(g))
    assert abs(a - b) < 1e-10 * max(1.0, abs(a))


def test_coupling_profile_hat_matches_grid_transform(cfg1d):
    rho = cfg1d.rho[0]
    rho_hat = cfg1d.rho_hat[0]
    assert np.abs(cfg1d.grid.fft(rho) - rho_hat).max() < 1e-8


def test_compact_support_profile():
    cp = CouplingProfile(kind="compact-support", radius=2.0, amplitudes=[[1.0, 0.0]])
    cfg = ModelConfig(d=1, masses=[1.0], V=[[1.0]], coupling=cp,
                      L=40.0, M=256, dt=0.01)
    r = np.sqrt(cfg.grid.r2)
    assert np.abs(cfg.rho[0][..., r > 2.0]).max() == 0.0


def test_config_validation():
    cp = CouplingProfile(kind="gaussian-decay", radius=1.0, amplitudes=[[1.0, 0.0]])
    with pytest.raises(ValueError):
        ModelConfig(d=1, masses=[-1.0], V=[[1.0]], coupling=cp, L=10, M=64, dt=0.01)
    with pytest.raises(ValueError):
        ModelConfig(d=1, masses=[1.0], V=[[-1.0]], coupling=cp, L=10, M=64, dt=0.01)
    with pytest.raises(ValueError):
        ModelConfig(d=1, masses=[1.0], V=[[1.0]], coupling=cp, L=10, M=63, dt=0.01)
    with pytest.raises(ValueError):
        ModelConfig(d=2, masses=[1.0], V=np.eye(2), coupling=cp, L=10, M=64, dt=0.01)


def test_config_roundtrip_and_hash(cfg1d2f):
    doc = json.loads(json.dumps(cfg1d2f.to_dict()))
    back = ModelConfig.from_dict(doc)
    assert back.config_hash() == cfg1d2f.config_hash()
    assert np.array_equal(back.masses, cfg1d2f.masses)
    assert np.array_equal(back.coupling.amplitudes, cfg1d2f.coupling.amplitudes)


def test_norms(cfg1d):
    rng = np.random.default_rng(2)
    psi = rng.standard_normal((1, 2, cfg1d.M)) * (0.0 + 1.0)
    Y = SystemState(psi=psi.astype(complex), q=np.array([3.0]), p=np.array([4.0]))
    zero = SystemState(psi=0 * Y.psi, q=np.array([3.0]), p=np.array([4.0]))
    assert abs(local_seminorm(cfg1d.grid, zero, 5.0) - 5.0) < 1e-14
    with pytest.raises(ValueError):
        local_seminorm(cfg1d.grid, Y, cfg1d.L)
    flat = np.ones((2, cfg1d.M), dtype=complex)
    assert weighted_norm(cfg1d.grid, flat, -2.0) < weighted_norm(cfg1d.grid, flat, 0.0)
