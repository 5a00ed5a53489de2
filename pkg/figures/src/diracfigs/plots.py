"""Decay, convergence, and QQ figures from result CSV files."""

import os

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def load_csv(path):
    """Parse the result dialect: (comments, footers, colnames, rows).

    Raises ValueError on missing, empty, or non-rectangular files so that
    callers fail with a clear message instead of producing broken figures.
    """
    if not os.path.exists(path):
        raise ValueError(f"{path}: file not found")
    comments, footers, colnames, rows = [], {}, None, []
    with open(path, "r", encoding="utf-8") as f:
        for ln, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("footer:"):
                    key, _, val = body[len("footer:"):].strip().partition("=")
                    try:
                        footers[key.strip()] = float(val)
                    except ValueError:
                        footers[key.strip()] = val
                else:
                    comments.append(body)
                continue
            parts = line.split(",")
            if colnames is None:
                colnames = parts
                continue
            if len(parts) != len(colnames):
                raise ValueError(f"{path}:{ln}: expected {len(colnames)} "
                                 f"fields, got {len(parts)}")
            row = []
            for p in parts:
                try:
                    row.append(float(p))
                except ValueError:
                    row.append(p)
            rows.append(row)
    if colnames is None:
        raise ValueError(f"{path}: no header row")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return comments, footers, colnames, rows


def _col(colnames, rows, name, path="csv"):
    if name not in colnames:
        raise ValueError(f"{path}: missing column {name!r}")
    i = colnames.index(name)
    return np.array([r[i] for r in rows])


def _save(fig, out_prefix):
    files = []
    for ext in ("svg", "png"):
        p = f"{out_prefix}.{ext}"
        fig.savefig(p, dpi=150, bbox_inches="tight")
        files.append(p)
    plt.close(fig)
    return files


def plot_decay(decay_csv, out_prefix):
    """Log-log kernel-norm decay with a t^{-3/2} guide.

    The slope annotations are taken verbatim from the CSV footers, so the
    figure text always matches the fitted values stored with the data.
    """
    _, footers, cols, rows = load_csv(decay_csv)
    t = _col(cols, rows, "t", decay_csv)
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    for name, key in (("norm_N", "slope_N"), ("norm_Ndot", "slope_Ndot"),
                      ("norm_Nddot", "slope_Nddot")):
        if key not in footers:
            raise ValueError(f"{decay_csv}: missing footer {key!r}")
        v = _col(cols, rows, name, decay_csv)
        sel = (t > 0) & (v > 0)
        label = f"{name}  (slope {footers[key]:.2f})"
        ax.loglog(1.0 + t[sel], v[sel], lw=1.0, label=label)
    tg = 1.0 + t[(t >= 5.0)]
    if len(tg):
        ref = tg ** -1.5
        vmax = max(_col(cols, rows, "norm_N", decay_csv).max(), 1e-300)
        ax.loglog(tg, ref * vmax / ref[0], "k--", lw=0.8, label=r"slope $-3/2$")
    ax.set_xlabel(r"$1+t$")
    ax.set_ylabel("kernel norm")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_prefix)


def plot_convergence(ensemble_csv, predict_csv, out_prefix):
    """Correlation estimates vs time with the predicted limits as lines."""
    _, _, ecols, erows = load_csv(ensemble_csv)
    _, _, pcols, prows = load_csv(predict_csv)
    pred = {r[pcols.index("observable")]: r[pcols.index("Q_inf_predicted")]
            for r in prows}
    kind = _col(ecols, erows, "kind", ensemble_csv)
    keep = [i for i, k in enumerate(kind) if k == "correlation"]
    if not keep:
        raise ValueError(f"{ensemble_csv}: no correlation rows")
    t = _col(ecols, erows, "t", ensemble_csv)[keep]
    zid = _col(ecols, erows, "observable", ensemble_csv)[keep]
    val = _col(ecols, erows, "value", ensemble_csv)[keep]
    se = _col(ecols, erows, "stderr", ensemble_csv)[keep]
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    for j, z in enumerate(sorted(set(zid))):
        sel = zid == z
        color = f"C{j}"
        ax.errorbar(t[sel], val[sel], yerr=2 * se[sel], fmt="o-", ms=3,
                    lw=0.8, color=color, label=str(z))
        if z in pred:
            ax.axhline(pred[z], color=color, ls="--", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("second moment (dashed: predicted limit)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_prefix)


def plot_qq(samples_csv, out_prefix):
    """Normal QQ plot of the raw observable samples, one panel per column."""
    _, _, cols, rows = load_csv(samples_csv)
    names = [c for c in cols if c != "sample"]
    if not names:
        raise ValueError(f"{samples_csv}: no observable columns")
    fig, axes = plt.subplots(1, len(names), figsize=(2.6 * len(names), 2.8),
                             squeeze=False)
    for ax, name in zip(axes[0], names):
        v = np.sort(_col(cols, rows, name, samples_csv))
        if v.std() == 0:
            raise ValueError(f"{samples_csv}: degenerate column {name!r}")
        v = (v - v.mean()) / v.std()
        n = len(v)
        # normal quantiles by the inverse error function
        from scipy.special import erfinv
        q = np.sqrt(2.0) * erfinv(2.0 * (np.arange(1, n + 1) - 0.5) / n - 1.0)
        ax.plot(q, v, ".", ms=2)
        lim = max(abs(q[0]), abs(q[-1]))
        ax.plot([-lim, lim], [-lim, lim], "k--", lw=0.8)
        ax.set_title(name, fontsize=8)
        ax.set_xlabel("normal quantile", fontsize=7)
    axes[0][0].set_ylabel("sample quantile", fontsize=7)
    fig.tight_layout()
    return _save(fig, out_prefix)


def render_report(prefix):
    """Produce every figure for which the input CSVs exist under prefix."""
    written = []
    if os.path.exists(prefix + "decay.csv"):
        written += plot_decay(prefix + "decay.csv", prefix + "fig_decay")
    if os.path.exists(prefix + "ensemble.csv") \
            and os.path.exists(prefix + "predict.csv"):
        written += plot_convergence(prefix + "ensemble.csv",
                                    prefix + "predict.csv",
                                    prefix + "fig_convergence")
    if os.path.exists(prefix + "samples.csv"):
        written += plot_qq(prefix + "samples.csv", prefix + "fig_qq")
    if not written:
        raise ValueError(f"no result CSVs found under prefix {prefix!r}")
    return written
