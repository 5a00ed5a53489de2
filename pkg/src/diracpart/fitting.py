"""Log-log decay fits shared by the diagnostics."""

import numpy as np


def fit_loglog(times, values, envelope=False):
    """Least-squares slope of log(values) vs log(1+t).

    With envelope=True the samples are first reduced to per-bin maxima over
    log-spaced bins, which removes the dips of oscillatory decays (log of a
    near-zero sample would otherwise dominate the fit).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    if keep.sum() < 2:
        raise ValueError("degenerate input: fewer than two positive samples")
    t = times[keep]
    v = values[keep]
    x = np.log1p(t)
    y = np.log(v)
    if envelope:
        nbins = max(6, int((x.max() - x.min()) / 0.25))
        edges = np.linspace(x.min(), x.max() + 1e-12, nbins + 1)
        idx = np.digitize(x, edges) - 1
        xb, yb = [], []
        for b in range(nbins):
            sel = idx == b
            if sel.any():
                i = np.argmax(y[sel])
                xb.append(x[sel][i])
                yb.append(y[sel][i])
        x = np.array(xb)
        y = np.array(yb)
    return float(np.polyfit(x, y, 1)[0])
