"""Configuration-driven command line entry point.

Subcommands: check-conditions, kernel, decay, simulate, dictionary, ensemble,
predict, compare, report-data.  Exit codes: 0 success, 2 condition-check
failure, 1 error.  All outputs are CSV (see csvio) under the --out prefix;
field snapshots use a flat binary layout documented in `write_snapshots`.
"""

import argparse
import json
import struct
import sys

import numpy as np

from .asymptotics import compute_xi, residual_q
from .coupled import evolve
from .csvio import column, read_csv, write_csv
from .ensemble import (estimate_charfunc, estimate_correlation, evolve_ensemble,
                       finite_range_covariance, gaussianity_stats,
                       spectral_gaussian_covariance, validate_covariance)
from .kernel import check_A2, kernel_time, suggest_V
from .model import ModelConfig, Observable, SystemState
from .predictor import predict_QZ
from .volterra import fit_kernel_decay, solving_kernel


def load_config(path):
    """Parse and validate a JSON experiment config; returns (cfg, experiment)."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if "model" not in doc:
        raise ValueError("config missing 'model' section")
    cfg = ModelConfig.from_dict(doc["model"])
    if "suggest_margin" in doc:
        V = suggest_V(cfg, float(doc["suggest_margin"]))
        cfg = ModelConfig(cfg.d, cfg.masses, V, cfg.coupling, cfg.L, cfg.M, cfg.dt)
    return cfg, doc


def _header(cfg, seed=None):
    out = [f"config_hash={cfg.config_hash()}"]
    if seed is not None:
        out.append(f"seed={seed}")
    return out


def build_initial(cfg, spec):
    """Deterministic compact initial state from the config's 'initial' section."""
    rng = np.random.default_rng(int(spec.get("seed", 0)))
    width = float(spec.get("width", 2.0))
    amp = float(spec.get("amplitude", 1.0))
    prof = np.exp(-cfg.grid.r2 / (2.0 * width ** 2))
    shape = (cfg.N, cfg.s) + cfg.grid.shape
    psi = amp * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * prof
    q = np.asarray(spec.get("q0", np.zeros(cfg.d)), dtype=float)
    p = np.asarray(spec.get("p0", np.zeros(cfg.d)), dtype=float)
    return SystemState(psi=psi.astype(complex), q=q, p=p)


def build_covariance(cfg, spec):
    kind = spec.get("kind", "finite-range")
    pc = spec.get("particle_cov")
    pc = None if pc is None else np.asarray(pc, dtype=float)
    if kind == "finite-range":
        return finite_range_covariance(cfg, range_a=float(spec.get("range", 2.0)),
                                       sigma=spec.get("sigma", 1.0),
                                       particle_cov=pc)
    if kind == "spectral-gaussian":
        return spectral_gaussian_covariance(cfg, width=float(spec.get("width", 1.0)),
                                            sigma=spec.get("sigma", 1.0),
                                            particle_cov=pc)
    raise ValueError(f"unknown covariance kind {kind!r}")


def build_observables(cfg, specs):
    out = []
    xg = [cfg.grid.x[j] for j in range(cfg.d)]
    for sp in specs:
        chi = None
        if "field" in sp:
            chi = np.zeros((cfg.N, cfg.s) + cfg.grid.shape, dtype=complex)
            c = np.asarray(sp.get("center", np.zeros(cfg.d)), dtype=float).reshape(cfg.d)
            r2 = sum((xg[j] - c[j]) ** 2 for j in range(cfg.d)) if cfg.d == 1 else None
            if cfg.d != 1:
                r2 = sum(np.expand_dims(xg[j] - c[j],
                                        tuple(a for a in range(cfg.d) if a != j)) ** 2
                         for j in range(cfg.d))
            w = float(sp.get("width", 1.5))
            chi[int(sp["field"]), int(sp.get("component", 0))] = \
                float(sp.get("amp", 1.0)) * np.exp(-r2 / (2.0 * w ** 2))
        u = np.asarray(sp.get("u", np.zeros(cfg.d)), dtype=float)
        v = np.asarray(sp.get("v", np.zeros(cfg.d)), dtype=float)
        out.append((sp.get("id", f"Z{len(out)}"), Observable(chi=chi, u=u, v=v)))
    return out


def write_snapshots(path, cfg, times, states):
    """Flat binary: header 'DRSN', int64 d, N, s, M, n_times; float64 times;
    body per time: fields as little-endian float64, Re/Im interleaved."""
    with open(path, "wb") as f:
        f.write(b"DRSN")
        f.write(struct.pack("<5q", cfg.d, cfg.N, cfg.s, cfg.M, len(times)))
        np.asarray(times, dtype="<f8").tofile(f)
        for st in states:
            inter = np.empty(st.psi.shape + (2,))
            inter[..., 0] = st.psi.real
            inter[..., 1] = st.psi.imag
            inter.astype("<f8").tofile(f)


def _solving_kernel(cfg, T, dt):
    tg = dt * np.arange(int(round(T / dt)) + 1)
    H = kernel_time(cfg, tg)
    return tg, H, solving_kernel(cfg.V, H, tg)


def cmd_check_conditions(args, cfg, doc):
    rep = check_A2(cfg)
    rows = [["min_eig_A2", rep.min_eig_A2], ["A3_min", rep.A3_min],
            ["A2_pass", int(rep.A2_pass)], ["A3_pass", int(rep.A3_pass)]]
    for i in range(cfg.d):
        for j in range(cfg.d):
            rows.append([f"K_{i}{j}", rep.K[i, j]])
    write_csv(args.out + "conditions.csv", ["quantity", "value"], rows,
              comments=_header(cfg))
    return 0 if rep.passed else 2


def cmd_kernel(args, cfg, doc):
    T = args.T or float(doc.get("horizon", {}).get("T", 60.0))
    dt = args.dt or cfg.dt
    tg = dt * np.arange(int(round(T / dt)) + 1)
    H = kernel_time(cfg, tg)
    cols = ["t"] + [f"H_{i}{j}" for i in range(cfg.d) for j in range(cfg.d)]
    rows = [[t] + [H.H[it, i, j] for i in range(cfg.d) for j in range(cfg.d)]
            for it, t in enumerate(tg)]
    write_csv(args.out + "kernel.csv", cols, rows, comments=_header(cfg))
    return 0


def cmd_decay(args, cfg, doc):
    T = args.T or float(doc.get("horizon", {}).get("T", 110.0))
    dt = args.dt or cfg.dt
    tg, H, sk = _solving_kernel(cfg, T, dt)
    slopes = fit_kernel_decay(sk, window=tuple(doc.get("decay_window", (10.0, 100.0))))
    rows = [[t, np.linalg.norm(sk.N[i]), np.linalg.norm(sk.Ndot[i]),
             np.linalg.norm(sk.Nddot[i])] for i, t in enumerate(tg)]
    write_csv(args.out + "decay.csv", ["t", "norm_N", "norm_Ndot", "norm_Nddot"],
              rows, comments=_header(cfg),
              footers=[("slope_N", slopes["N"]), ("slope_Ndot", slopes["Ndot"]),
                       ("slope_Nddot", slopes["Nddot"])])
    return 0


def cmd_simulate(args, cfg, doc):
    T = args.T or float(doc.get("horizon", {}).get("T", 20.0))
    dt = args.dt or cfg.dt
    out_times = [t for t in doc.get("times", [T]) if t <= T + 1e-9]
    Y0 = build_initial(cfg, doc.get("initial", {}))
    traj, states = evolve(cfg, Y0, T, out_times, dt=dt)
    cols = ["t"] + [f"q_{k}" for k in range(cfg.d)] + [f"p_{k}" for k in range(cfg.d)]
    rows = [[t] + list(traj.q[i]) + list(traj.p[i]) for i, t in enumerate(traj.tgrid)]
    write_csv(args.out + "trajectory.csv", cols, rows,
              comments=_header(cfg, doc.get("initial", {}).get("seed", 0)))
    if args.snapshots:
        write_snapshots(args.out + "snapshots.bin", cfg, out_times, states)
    return 0


def cmd_dictionary(args, cfg, doc):
    T = args.T or float(doc.get("horizon", {}).get("T", 110.0))
    dt = args.dt or cfg.dt
    T_xi = float(doc.get("horizon", {}).get("T_xi", 100.0))
    tg, H, sk = _solving_kernel(cfg, T, dt)
    xi0 = compute_xi(cfg, sk, 0, T_xi=T_xi)
    xi1 = compute_xi(cfg, sk, 1, T_xi=T_xi)
    Y0 = build_initial(cfg, doc.get("initial", {}))
    times = np.asarray(doc.get("residual_times",
                               np.arange(10.0, 60.0 + 1e-9, 2.0)), dtype=float)
    rq = residual_q(cfg, Y0, xi0, xi1, times, dt=dt)
    rows = [[t, rq["residual_0"][i], rq["residual_1"][i]]
            for i, t in enumerate(times)]
    write_csv(args.out + "dictionary.csv", ["t", "residual_q", "residual_p"], rows,
              comments=_header(cfg),
              footers=[("slope_q", rq["slope_0"]), ("slope_p", rq["slope_1"])])
    return 0


def _ensemble_values(args, cfg, doc):
    T = args.T or float(doc.get("horizon", {}).get("T", 70.0))
    dt = args.dt or cfg.dt
    tg, H, sk = _solving_kernel(cfg, T, dt)
    cov = build_covariance(cfg, doc.get("covariance", {}))
    validate_covariance(cfg, cov)
    obs = build_observables(cfg, doc.get("observables", []))
    M = args.samples or int(doc.get("samples", 100))
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    t_obs = [float(t) for t in doc.get("times", [0.0])]
    ng = bool(doc.get("covariance", {}).get("non_gaussian", False))
    vals = evolve_ensemble(cfg, cov, [Z for _, Z in obs], M, seed, t_obs, H, sk,
                           non_gaussian=ng, threads=max(1, args.threads))
    return cov, obs, M, seed, t_obs, vals, (tg, H, sk)


def cmd_ensemble(args, cfg, doc):
    cov, obs, M, seed, t_obs, vals, _ = _ensemble_values(args, cfg, doc)
    rows = []
    for ti, t in enumerate(t_obs):
        for zi, (zid, Z) in enumerate(obs):
            v = vals[ti, zi]
            est = estimate_correlation(cfg.grid, v, Z)
            cf, se_re, se_im = estimate_charfunc(cfg.grid, v, Z)
            kurt, kse = gaussianity_stats(cfg.grid, v, Z) if M >= 100 else (0.0, 0.0)
            rows.append([t, zid, "correlation", est.value, est.stderr, M])
            rows.append([t, zid, "charfunc_re", cf.real, se_re, M])
            rows.append([t, zid, "charfunc_im", cf.imag, se_im, M])
            if M >= 100:
                rows.append([t, zid, "kurtosis", kurt, kse, M])
    write_csv(args.out + "ensemble.csv",
              ["t", "observable", "kind", "value", "stderr", "samples"], rows,
              comments=_header(cfg, seed))
    # raw values at the last observation time, for QQ diagnostics
    last = vals[-1]
    write_csv(args.out + "samples.csv",
              ["sample"] + [zid for zid, _ in obs],
              [[m] + [last[zi, m] for zi in range(len(obs))] for m in range(M)],
              comments=_header(cfg, seed) + [f"t={t_obs[-1]}"])
    return 0


def cmd_predict(args, cfg, doc):
    T = args.T or float(doc.get("horizon", {}).get("T", 110.0))
    dt = args.dt or cfg.dt
    T_xi = float(doc.get("horizon", {}).get("T_xi", 100.0))
    tg, H, sk = _solving_kernel(cfg, T, dt)
    xi0 = compute_xi(cfg, sk, 0, T_xi=T_xi)
    xi1 = compute_xi(cfg, sk, 1, T_xi=T_xi)
    cov = build_covariance(cfg, doc.get("covariance", {}))
    validate_covariance(cfg, cov)
    rows = []
    for zid, Z in build_observables(cfg, doc.get("observables", [])):
        pr = predict_QZ(cfg, cov, Z, xi0, xi1)
        rows.append([zid, pr["Q"], pr["charfunc"]])
    write_csv(args.out + "predict.csv",
              ["observable", "Q_inf_predicted", "charfunc_predicted_re"], rows,
              comments=_header(cfg))
    return 0


def cmd_compare(args, cfg, doc):
    _, _, ecols, erows = read_csv(args.out + "ensemble.csv")
    _, _, pcols, prows = read_csv(args.out + "predict.csv")
    pred = {r[pcols.index("observable")]: r for r in prows}
    t_last = max(r[ecols.index("t")] for r in erows)
    rows = []
    for r in erows:
        if r[ecols.index("t")] != t_last:
            continue
        zid = r[ecols.index("observable")]
        kind = r[ecols.index("kind")]
        if zid not in pred or kind not in ("correlation", "charfunc_re"):
            continue
        target = pred[zid][pcols.index(
            "Q_inf_predicted" if kind == "correlation" else "charfunc_predicted_re")]
        val, se = r[ecols.index("value")], r[ecols.index("stderr")]
        rows.append([zid, kind, val, target, se, (val - target) / se])
    if not rows:
        raise ValueError("no matching observable ids between ensemble and predict")
    write_csv(args.out + "compare.csv",
              ["observable", "kind", "estimate", "predicted", "stderr", "z"], rows,
              comments=_header(cfg))
    return 0


def cmd_report_data(args, cfg, doc):
    rc = cmd_decay(args, cfg, doc)
    rc |= cmd_ensemble(args, cfg, doc)
    rc |= cmd_predict(args, cfg, doc)
    rc |= cmd_compare(args, cfg, doc)
    try:
        from diracfigs import render_report
    except ImportError:
        return rc
    render_report(args.out)
    return rc


_COMMANDS = {
    "check-conditions": cmd_check_conditions,
    "kernel": cmd_kernel,
    "decay": cmd_decay,
    "simulate": cmd_simulate,
    "dictionary": cmd_dictionary,
    "ensemble": cmd_ensemble,
    "predict": cmd_predict,
    "compare": cmd_compare,
    "report-data": cmd_report_data,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="diracpart")
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default="./")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--samples", type=int, default=None)
    ap.add_argument("--T", type=float, default=None)
    ap.add_argument("--dt", type=float, default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--strict", action="store_true")
    ap.add_argument("--snapshots", action="store_true")
    return ap


def run_subcommand(argv):
    args = build_parser().parse_args(argv)
    try:
        cfg, doc = load_config(args.config)
        if args.strict:
            rep = check_A2(cfg)
            if not rep.passed:
                print(f"condition check failed: min_eig_A2={rep.min_eig_A2}, "
                      f"A3_min={rep.A3_min}", file=sys.stderr)
                return 2
        return _COMMANDS[args.command](args, cfg, doc)
    except Exception as exc:   # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_subcommand(sys.argv[1:]))


if __name__ == "__main__":
    main()
