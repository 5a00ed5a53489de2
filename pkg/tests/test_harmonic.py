import numpy as np

from diracpart.harmonic import cos_sin_transform, delayed_conv, trig_sum


def test_trig_sum_direct_small():
    rng = np.random.default_rng(0)
    w = rng.uniform(0.5, 3.0, size=40)
    a = rng.standard_normal((40, 2))
    b = rng.standard_normal((40, 2))
    t = np.linspace(0.0, 10.0, 101)
    out = trig_sum(w, a, b, t)
    ref = np.cos(np.outer(t, w)) @ a + np.sin(np.outer(t, w)) @ b
    assert np.abs(out - ref).max() < 1e-10


def test_trig_sum_fft_path_matches_direct():
    rng = np.random.default_rng(1)
    nm = 3000
    w = rng.uniform(0.2, 8.0, size=nm)
    a = rng.standard_normal((nm, 1)) / nm
    b = rng.standard_normal((nm, 1)) / nm
    t = np.arange(0.0, 60.0, 0.05)
    fft_out = trig_sum(w, a, b, t, delta=1e-4, force_fft=True)
    ref = np.cos(np.outer(t, w)) @ a + np.sin(np.outer(t, w)) @ b
    # binned-frequency error bound: sum|coef| * (t dw)^2 / 8
    assert np.abs(fft_out - ref).max() < 1e-5


def test_cos_sin_transform_vs_trapezoid():
    dt = 0.01
    t = dt * np.arange(2001)
    f = np.exp(-0.3 * t) * np.cos(1.7 * t)
    omegas = np.array([0.0, 0.8, 2.5])
    C, S = cos_sin_transform(f, dt, omegas)
    for i, w in enumerate(omegas):
        Cref = np.trapezoid(f * np.cos(w * t), dx=dt)
        Sref = np.trapezoid(f * np.sin(w * t), dx=dt)
        assert abs(C[i] - Cref) < 1e-6
        assert abs(S[i] - Sref) < 1e-6


def test_delayed_conv_matches_quadrature():
    dt = 0.01
    t = dt * np.arange(1001)
    q = np.sin(0.9 * t) * np.exp(-0.1 * t)
    omegas = np.array([0.6, 1.9])
    T = 8.0
    c, s = delayed_conv(q, dt, omegas, T)
    it = int(round(T / dt))
    for i, w in enumerate(omegas):
        sgrid = t[:it + 1]
        cref = np.trapezoid(np.cos(w * (T - sgrid)) * q[:it + 1], dx=dt)
        sref = np.trapezoid(np.sin(w * (T - sgrid)) * q[:it + 1], dx=dt)
        assert abs(c[i] - cref) < 1e-6
        assert abs(s[i] - sref) < 1e-6
