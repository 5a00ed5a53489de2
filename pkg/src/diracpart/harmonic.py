"""Fast evaluation of harmonic sums and oscillatory time integrals.

Two recurring patterns:

* synthesis: F(t) = sum_m a_m cos(w_m t) + b_m sin(w_m t) over many Fourier
  modes, needed on a long uniform time grid;
* analysis: C(w) = int f(s) cos(w s) ds and S(w) = int f(s) sin(w s) ds for a
  sampled f, needed at the dispersion frequencies of every grid mode.

Both are done exactly by dense matrix products when small, and by a padded-FFT
route (linear binning / linear interpolation on a frequency grid of spacing
delta) when large.  The binning error per mode is bounded by
|coef| * (t_max * delta)^2 / 8, so delta = 1e-4 keeps relative errors near
1e-5 for horizons of order 100.
"""

import numpy as np

_DIRECT_COST_LIMIT = 3.0e8


def _next_pow2(n):
    p = 1
    while p < n:
        p *= 2
    return p


def trig_sum(omega, a, b, tgrid, delta=1e-4, force_fft=False):
    """Evaluate sum_m a[m] cos(omega[m] t) + b[m] sin(omega[m] t) on tgrid.

    omega: (nm,) nonnegative frequencies; a, b: (nm,) or (nm, C) real
    coefficients; returns (nt,) or (nt, C).
    """
    omega = np.asarray(omega, dtype=float).ravel()
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    tgrid = np.asarray(tgrid, dtype=float)
    squeeze = a.ndim == 1
    if squeeze:
        a = a[:, None]
        b = b[:, None]
    nm, C = a.shape
    nt = len(tgrid)
    if not force_fft and (nm * nt * C <= _DIRECT_COST_LIMIT or nt < 4):
        out = np.empty((nt, C))
        chunk = max(1, int(_DIRECT_COST_LIMIT // max(nm, 1)))
        for i0 in range(0, nt, chunk):
            ts = tgrid[i0:i0 + chunk]
            ph = np.outer(ts, omega)
            out[i0:i0 + chunk] = np.cos(ph) @ a + np.sin(ph) @ b
        return out[:, 0] if squeeze else out

    # padded-FFT route; requires a uniform time grid
    dt = tgrid[1] - tgrid[0]
    if not np.allclose(np.diff(tgrid), dt, rtol=0, atol=1e-9 * abs(dt)):
        raise ValueError("large trig_sum requires a uniform time grid")
    t0 = tgrid[0]
    wmax = omega.max() if nm else 0.0
    nfft = _next_pow2(int(np.ceil(2 * np.pi / (dt * delta))))
    dw = 2 * np.pi / (nfft * dt)
    if wmax >= dw * (nfft - 2):
        raise ValueError("frequency content exceeds the synthesis bandwidth")
    pos = omega / dw
    j = pos.astype(np.int64)
    w = pos - j
    out = np.empty((nt, C))
    for c in range(C):
        zre = a[:, c]
        zim = -b[:, c]          # a cos + b sin = Re[(a - i b) e^{i w t}]
        acc = np.zeros(nfft, dtype=complex)
        acc.real = (np.bincount(j, zre * (1 - w), minlength=nfft)[:nfft]
                    + np.bincount(j + 1, zre * w, minlength=nfft + 1)[:nfft])
        acc.imag = (np.bincount(j, zim * (1 - w), minlength=nfft)[:nfft]
                    + np.bincount(j + 1, zim * w, minlength=nfft + 1)[:nfft])
        if t0 != 0.0:
            acc *= np.exp(1j * dw * np.arange(nfft) * t0)
        series = nfft * np.fft.ifft(acc)
        idx = np.rint((tgrid - t0) / dt).astype(np.int64)
        out[:, c] = series.real[idx]
    return out[:, 0] if squeeze else out


def cos_sin_transform(f, ds, omega_eval, delta=1e-4):
    """C(w) = int_0^T f(s) cos(ws) ds, S(w) = int f(s) sin(ws) ds (trapezoid).

    f: (J+1,) samples on s = 0, ds, ..., J*ds.  Returns (C, S) evaluated at
    omega_eval (any shape) via a zero-padded FFT and linear interpolation.
    """
    f = np.asarray(f, dtype=float)
    omega_eval = np.asarray(omega_eval, dtype=float)
    if len(f) < 2:          # zero-length integration interval
        z = np.zeros(omega_eval.shape)
        return z, z.copy()
    g = f * ds
    g = g.copy()
    g[0] *= 0.5
    g[-1] *= 0.5
    wmax = float(omega_eval.max()) if omega_eval.size else 0.0
    if len(f) * omega_eval.size <= _DIRECT_COST_LIMIT // 4:
        ph = np.outer(omega_eval.ravel(), ds * np.arange(len(f)))
        C = (np.cos(ph) @ g).reshape(omega_eval.shape)
        S = (np.sin(ph) @ g).reshape(omega_eval.shape)
        return C, S
    if wmax >= 0.95 * np.pi / ds:
        raise ValueError("omega_eval beyond the Nyquist rate of the s grid")
    npad = _next_pow2(int(np.ceil(2 * np.pi / (delta * ds))))
    G = npad * np.fft.ifft(g, n=npad)          # sum g_j e^{+i w_m s_j}
    dw = 2 * np.pi / (npad * ds)
    ncut = int(wmax / dw) + 3
    wgrid = dw * np.arange(ncut)
    C = np.interp(omega_eval, wgrid, G.real[:ncut])
    S = np.interp(omega_eval, wgrid, G.imag[:ncut])
    return C, S


def delayed_conv(q, ds, omega_eval, t, delta=1e-4):
    """c(w) = int_0^t cos(w(t-s)) q(s) ds and s(w) = int_0^t sin(w(t-s)) q(s) ds.

    q sampled on s = 0, ds, ...; t must lie on the grid.  Used to evaluate
    Duhamel source integrals mode-by-mode.
    """
    it = int(round(t / ds))
    if abs(it * ds - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError("t must lie on the sampling grid")
    Cq, Sq = cos_sin_transform(q[: it + 1], ds, omega_eval, delta=delta)
    cwt = np.cos(omega_eval * t)
    swt = np.sin(omega_eval * t)
    return cwt * Cq + swt * Sq, swt * Cq - cwt * Sq
