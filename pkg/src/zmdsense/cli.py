"""Command-line front end: ``zmd <subcommand> ...``.

Subcommands: sweep, figure, calibrate, analyze, validate-operator.  The
global flags (--seed, --trials, --out, --config, --jobs) are accepted before
or after the subcommand.  A config file is JSON with keys mirroring
ExperimentConfig (plus optional ``snr_db``); flags override it.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis
from .detect import calibrate_threshold, calibrate_threshold_irregular
from .errors import UnreachableTarget, ZMDError
from .experiments import (
    PRESETS,
    ExperimentConfig,
    argmax_by_alpha,
    fixed_graph_for,
    reproduce_figure,
    run_sweep,
    write_csv,
)
from .graphs import DegreeDistribution, SensingGraph, build_regular_graph
from .operator import (
    build_sensing_matrix,
    dump_operator,
    noise_free,
    synth_time_domain_rows,
    time_domain_rows_complex,
    verify_block_support,
)
from .spectrum import sample_occupancy, sample_spectrum, time_signal


def _common() -> argparse.ArgumentParser:
    # SUPPRESS so that a flag given before the subcommand is not clobbered by the subparser default
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--trials", type=int, default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS, help="output path (default: stdout)")
    p.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker processes")
    return p


def _dist_json(s):
    return {int(k): float(v) for k, v in json.loads(s).items()}


def _model_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("model")
    g.add_argument("--L", type=int)
    g.add_argument("--M", type=int)
    g.add_argument("--B", type=int)
    g.add_argument("--graph", choices=("regular", "irregular", "one_to_one"))
    g.add_argument("--d-M", dest="d_M", type=int)
    g.add_argument("--lam", type=_dist_json, help='VN degree distribution, e.g. \'{"1": 0.5, "2": 0.5}\'')
    g.add_argument("--rho", type=_dist_json, help="MN degree distribution")
    g.add_argument("--alpha", type=float)
    g.add_argument("--sigma-s", dest="sigma_s", type=float)
    g.add_argument("--sigma-n", dest="sigma_n", type=float)
    g.add_argument("--snr-db", dest="snr_db", type=float, help="sets sigma_n = sigma_s * 10^(-snr/20)")
    g.add_argument("--detector", help="noiseless | lrt:<c> | threshold:<c'> | calibrated:<target>")
    g.add_argument("--fixed-graph", dest="fixed_graph", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="zmd", parents=[common],
                                 description="Zero measurement detection of vacant sub-channels.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("sweep", parents=[common], help="Monte Carlo sweep of one parameter")
    _model_flags(sp)
    sp.add_argument("--axis", required=True,
                    help="config field, or c_prime | lrt_c | target_pwzd | snr_db")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--graph-in", type=Path, help="use this graph for every trial")
    sp.add_argument("--graph-out", type=Path, help="write the fixed graph used by the sweep")

    fp = sub.add_parser("figure", parents=[common], help="reproduce a figure preset as CSV")
    fp.add_argument("name", choices=PRESETS)

    cp = sub.add_parser("calibrate", parents=[common], help="threshold c' for a target P_WZD")
    _model_flags(cp)
    cp.add_argument("--d-V", dest="d_V", type=int)
    cp.add_argument("--target", type=float, required=True)

    an = sub.add_parser("analyze", parents=[common], help="evaluate the closed-form predictions")
    _model_flags(an)
    an.add_argument("--d-V", dest="d_V", type=int)
    an.add_argument("--c-prime", dest="c_prime", type=float)

    vp = sub.add_parser("validate-operator", parents=[common], help="time-domain operator checks")
    _model_flags(vp)
    vp.add_argument("--dump-operator", type=Path, metavar="DIR",
                    help="write phi.csv and theta.csv for the first realization")
    return ap


_MODEL_KEYS = ("L", "M", "B", "graph", "d_M", "lam", "rho", "alpha", "sigma_s", "sigma_n",
               "detector", "fixed_graph")


def _config(args, **defaults) -> ExperimentConfig:
    d = dict(defaults)
    if getattr(args, "config", None):
        d.update(json.loads(Path(args.config).read_text()))
    for k in _MODEL_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            d[k] = v
    if getattr(args, "sigma_n", None) is not None:
        d.pop("snr_db", None)
    if getattr(args, "snr_db", None) is not None:
        d["snr_db"] = args.snr_db
    if d.get("graph", "regular") != "regular" and "d_M" not in d:
        d["d_M"] = None
    for k in ("seed", "trials"):
        if hasattr(args, k):
            d[k] = getattr(args, k)
    return ExperimentConfig.from_dict(d)


def _emit(text: str, args):
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_values(s: str):
    out = []
    for tok in s.split(","):
        tok = tok.strip()
        try:
            v = int(tok)
        except ValueError:
            v = float(tok)
        out.append(v)
    return out


def cmd_sweep(args) -> int:
    cfg = _config(args)
    graph = SensingGraph.load(args.graph_in) if args.graph_in else None
    if graph is not None and (graph.L, graph.M) != (cfg.L, cfg.M):
        raise ZMDError(f"graph is {graph.L}x{graph.M}, config wants {cfg.L}x{cfg.M}")
    if args.graph_out:
        if graph is None:
            cfg = replace(cfg, fixed_graph=True)
            graph = fixed_graph_for(cfg)
        graph.save(args.graph_out)
    rows = [r for r, _ in run_sweep(cfg, args.axis, _parse_values(args.values),
                                    jobs=getattr(args, "jobs", 1), graph=graph)]
    _emit(write_csv(rows), args)
    return 0


def cmd_figure(args) -> int:
    results = reproduce_figure(args.name, trials=getattr(args, "trials", None),
                               seed=getattr(args, "seed", 0), jobs=getattr(args, "jobs", 1))
    rows = [r for r, _ in results]
    _emit(write_csv(rows), args)
    if args.name == "fig2":
        for col in ("p_zd_analytic", "p_zd_mc"):
            for a, d in argmax_by_alpha(rows, col).items():
                print(f"argmax {col} alpha={a}: d_M={d}", file=sys.stderr)
    return 0


def _dist_from(args, cfg: ExperimentConfig) -> DegreeDistribution:
    if cfg.graph == "regular" and getattr(args, "d_V", None) is not None:
        return DegreeDistribution.regular(args.d_V, cfg.d_M)
    return cfg.distribution


def _degree_defaults(args) -> dict:
    # a bare (d_V, d_M) pair needs some consistent (L, M) to validate against
    if getattr(args, "d_V", None) and args.d_M:
        return {"L": args.d_M, "M": args.d_V}
    return {}


def cmd_calibrate(args) -> int:
    cfg = _config(args, **_degree_defaults(args))
    dist = _dist_from(args, cfg)
    p = cfg.params
    try:
        if len(dist.lam) == 1 and len(dist.rho) == 1:
            (d_V,), (d_M,) = dist.lam, dist.rho
            c = calibrate_threshold(d_M, d_V, p, args.target)
        else:
            c = calibrate_threshold_irregular(dist, p, args.target)
    except UnreachableTarget as e:
        print(f"unreachable: {e}", file=sys.stderr)
        return 2
    pred = analysis.predict(p.alpha, dist, p.sigma_s, p.sigma_n, c)
    _emit(json.dumps({"c_prime": c, "p_wzd": pred.p_wzd, "p_zd": pred.p_zd,
                      "p_d": pred.p_d, "p_fa": pred.p_fa}, indent=2) + "\n", args)
    return 0


def cmd_analyze(args) -> int:
    cfg = _config(args, **_degree_defaults(args))
    dist = _dist_from(args, cfg)
    c = args.c_prime
    if c is None and cfg.sigma_n > 0:
        mode, val = cfg.detector_mode
        if mode == "threshold":
            c = val
    pred = analysis.predict(cfg.alpha, dist, cfg.sigma_s, cfg.sigma_n, c)
    out = {"alpha": pred.alpha, "lam": dist.lam, "rho": dist.rho, "sigma_s": pred.sigma_s,
           "sigma_n": pred.sigma_n, "c_prime": pred.c_prime, "p_zd": pred.p_zd, "p_wzd": pred.p_wzd,
           "p_d": pred.p_d, "p_fa": pred.p_fa, "notes": pred.notes}
    _emit(json.dumps(out, indent=2, default=str) + "\n", args)
    return 0


def validate_operator(L: int, M: int, d_M: int, B: int, trials: int, seed: int, dump_dir=None) -> dict:
    """Build ``trials`` random operators and check realness, block support and time/frequency agreement."""
    ss = np.random.SeedSequence(seed)
    worst_imag = worst_leak = worst_rel = 0.0
    ok_support = True
    for k, child in enumerate(ss.spawn(trials)):
        rg, ra, rs, ro = (np.random.default_rng(s) for s in child.spawn(4))
        g = build_regular_graph(L, M, d_M, rg)
        A = build_sensing_matrix(g, B, ro)
        N = A.N
        phi_c = time_domain_rows_complex(A, N)
        worst_imag = max(worst_imag, float(np.max(np.abs(phi_c.imag))))
        phi = synth_time_domain_rows(A, N)
        ok, leak = verify_block_support(phi, g)
        ok_support &= ok
        worst_leak = max(worst_leak, leak)
        s = sample_spectrum(sample_occupancy(L, 0.5, ra), B, 1.0, rs)
        y_t = phi @ time_signal(s)
        y_f = noise_free(A, s)
        scale = max(float(np.max(np.abs(y_f))), 1e-300)
        worst_rel = max(worst_rel, float(np.max(np.abs(y_t - y_f))) / scale)
        if dump_dir is not None and k == 0:
            Path(dump_dir).mkdir(parents=True, exist_ok=True)
            dump_operator(A, Path(dump_dir) / "phi.csv", Path(dump_dir) / "theta.csv")
    passed = worst_imag < 1e-10 and ok_support and worst_leak < 1e-10 and worst_rel < 1e-8
    return {"trials": trials, "max_imag_residue": worst_imag, "max_leakage": worst_leak,
            "max_rel_mismatch": worst_rel, "passed": passed}


def cmd_validate_operator(args) -> int:
    L = args.L or 32
    M = args.M or L // 2
    d_M = args.d_M or 4
    B = args.B or 4
    rep = validate_operator(L, M, d_M, B, getattr(args, "trials", 100), getattr(args, "seed", 0),
                            args.dump_operator)
    _emit(json.dumps(rep, indent=2) + "\n", args)
    return 0 if rep["passed"] else 1


COMMANDS = {
    "sweep": cmd_sweep,
    "figure": cmd_figure,
    "calibrate": cmd_calibrate,
    "analyze": cmd_analyze,
    "validate-operator": cmd_validate_operator,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except (ZMDError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
