import numpy as np
import pytest

from diracpart.model import field_norm
from diracpart.propagator import (adjoint_check, apply_symbol,
                                  measure_local_decay, propagate_free,
                                  propagate_hat)


def rand_field(cfg, seed=0):
    rng = np.random.default_rng(seed)
    shape = (cfg.s,) + cfg.grid.shape
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        * np.exp(-cfg.grid.r2 / 8.0)


def test_norm_conservation(cfg1d):
    psi = rand_field(cfg1d)
    n0 = field_norm(cfg1d.grid, psi)
    for t in (0.5, 7.0, 100.0):
        nt = field_norm(cfg1d.grid, propagate_free(cfg1d, 0, psi, t))
        assert abs(nt - n0) < 1e-12 * n0


def test_group_property(cfg3d):
    psi = rand_field(cfg3d)
    a = propagate_free(cfg3d, 0, propagate_free(cfg3d, 0, psi, 1.3), 2.1)
    b = propagate_free(cfg3d, 0, psi, 3.4)
    assert np.abs(a - b).max() < 1e-11


def test_inverse(cfg1d):
    psi = rand_field(cfg1d)
    back = propagate_free(cfg1d, 0, propagate_free(cfg1d, 0, psi, 5.0), -5.0)
    assert np.abs(back - psi).max() < 1e-11


def test_adjoint(cfg3d):
    psi = rand_field(cfg3d, seed=3)
    chi = rand_field(cfg3d, seed=4)
    assert adjoint_check(cfg3d, 0, psi, chi, 2.7) < 1e-11


def test_symbol_squares_to_dispersion(cfg3d):
    psi = rand_field(cfg3d)
    ph = cfg3d.grid.fft(psi)
    twice = apply_symbol(cfg3d, 0, apply_symbol(cfg3d, 0, ph))
    target = (cfg3d.grid.k2 + cfg3d.masses[0] ** 2) * ph
    assert np.abs(twice - target).max() < 1e-10 * np.abs(target).max()


def test_propagate_hat_matches_matrix_exponential(cfg1d):
    import scipy.linalg
    psi = rand_field(cfg1d)
    ph = cfg1d.grid.fft(psi)
    t = 1.7
    out = propagate_hat(cfg1d, 0, ph, t)
    alg = cfg1d.algebra
    i = 37
    k = cfg1d.grid.k[0][i]
    W = scipy.linalg.expm(1j * (alg.alpha[0] * k - alg.beta * cfg1d.masses[0]) * t)
    assert np.abs(out[:, i] - W @ ph[:, i]).max() < 1e-12 * np.abs(ph[:, i]).max()


def test_local_decay_slope(cfg1d):
    psi = rand_field(cfg1d, seed=5)
    res = measure_local_decay(cfg1d, 0, psi, R=5.0, times=np.arange(4.0, 20.0, 2.0))
    assert res["slope"] < -0.3


def test_local_decay_rejects_zero_field(cfg1d):
    with pytest.raises(ValueError):
        measure_local_decay(cfg1d, 0, np.zeros((2, cfg1d.M), dtype=complex),
                            R=5.0, times=[1.0, 2.0])
