"""``spinwire`` command line: one subcommand per toolkit stage."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from spinwire import analytics, chains, dynamics, synthesis
from spinwire.disorder import DisorderModel, averaged_fidelity, default_threads
from spinwire.errors import SpinwireError
from spinwire.io import RunConfig, read_csv, render_csv, write_text
from spinwire.spectral import diagonalize
from spinwire.sweep import (
    FIDELITY_LEVELS,
    MIN_R2,
    SweepConfig,
    SweepGrid,
    find_crossing,
    fit_scaling,
    extract_contour,
    log_grid,
    run_sweep,
)

FAMILIES = [f.value for f in chains.Family]


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_chain_args(p, need_family=True):
    if need_family:
        p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--n", type=int, required=True, help="number of sites N")
    p.add_argument("--alpha", type=float, help="boundary coupling ratio (ost-weak)")
    p.add_argument("--j", type=float, default=1.0, help="bulk coupling (homogeneous / OST)")


def _add_common(p):
    p.add_argument("--out", default="-", help="output file (default stdout)")
    p.add_argument("--manifest", help="also write the run manifest here")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinwire", description="State transfer through disordered XX spin chains.")
    parser.add_argument("--threads", type=_positive_int, default=None, help="worker threads (env SPINWIRE_THREADS wins)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-chain", help="coupling profile as CSV (i, J_i)")
    _add_chain_args(p)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_common(p)

    p = sub.add_parser("synthesize", help="PST couplings from the inverse eigenvalue problem")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--exponent", type=int, choices=[1, 2], required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--report", help="write the verification report (JSON) here")
    _add_common(p)

    p = sub.add_parser("spectrum", help="CSV (k, E_k, P_k1)")
    _add_chain_args(p)
    _add_common(p)

    p = sub.add_parser("evolve", help="CSV (t, |f|^2, F) of the clean chain")
    _add_chain_args(p)
    p.add_argument("--tmax", default="auto", help="'auto' (twice the transfer-time estimate) or a number")
    p.add_argument("--points", type=_positive_int, default=2001)
    _add_common(p)

    p = sub.add_parser("transfer-time", help="one-line report tau, f_at_tau, window_width")
    _add_chain_args(p)
    p.add_argument("--window", type=float, default=0.5)
    p.add_argument("--resolution", type=_positive_int, default=2000)
    p.add_argument("--scan-from-zero", action="store_true", help="scan [0, tmax] instead of around the estimate")
    p.add_argument("--tmax", type=float, help="scan length for --scan-from-zero")
    _add_common(p)

    p = sub.add_parser("ensemble", help="disorder-averaged fidelity at the clean transfer time")
    _add_chain_args(p)
    p.add_argument("--disorder", choices=["rel", "abs", "relative", "absolute"], default="rel")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--nav", type=_positive_int, default=1000)
    p.add_argument("--full-range", action="store_true", help="perturb J_1..J_{N-1} (default leaves both end couplings clean)")
    _add_common(p)

    p = sub.add_parser("sweep", help="F-bar over an (N, eps) grid, checkpointed")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--alpha", type=float)
    p.add_argument("--disorder", choices=["rel", "abs", "relative", "absolute"], default="rel")
    p.add_argument("--n-grid", type=_ints)
    p.add_argument("--eps-grid", type=_floats, help="explicit eps values")
    p.add_argument("--eps-min", type=float, default=0.01)
    p.add_argument("--eps-max", type=float, default=0.5)
    p.add_argument("--per-decade", type=int, default=12)
    p.add_argument("--nav", type=_positive_int, default=1000)
    p.add_argument("--checkpoint", help="append-only cell log; rerun to resume")
    p.add_argument("--from-manifest", help="rerun the sweep recorded in a manifest")
    _add_common(p)

    p = sub.add_parser("contours", help="iso-fidelity contours of a grid CSV")
    p.add_argument("--grid", required=True)
    p.add_argument("--levels", type=_floats, default=list(FIDELITY_LEVELS))
    p.add_argument("--parity", choices=["even", "odd"])
    _add_common(p)

    p = sub.add_parser("fit-scaling", help="fit (c, beta) to contour lines")
    p.add_argument("--contours", required=True)
    p.add_argument("--levels", type=_floats, help="restrict to these levels")
    p.add_argument("--min-r2", type=float, default=MIN_R2)
    p.add_argument("--json", action="store_true")
    _add_common(p)

    p = sub.add_parser("crossing", help="where two F-bar grids cross, with N eps^b = a fit")
    p.add_argument("--grid-a", required=True)
    p.add_argument("--grid-b", required=True)
    p.add_argument("--significance", type=float, default=2.0)
    p.add_argument("--report", help="write the power-law fit (JSON) here")
    _add_common(p)

    p = sub.add_parser("appendix-check", help="binomial vs Gaussian boundary amplitudes")
    p.add_argument("--n", type=int, required=True, help="number of couplings (chain has n+1 sites)")
    _add_common(p)
    return parser


def _validate(parser, args) -> None:
    n = getattr(args, "n", None)
    if n is not None:
        minimum = 0 if args.command == "appendix-check" else (3 if getattr(args, "family", "").startswith("ost") else 2)
        if n < minimum:
            parser.error(f"--n must be >= {minimum}")
    fam = getattr(args, "family", None)
    if fam == "ost-weak" and args.command != "sweep" and (args.alpha is None or args.alpha <= 0):
        parser.error("--family ost-weak needs --alpha > 0")
    if getattr(args, "eps", None) is not None and args.eps < 0:
        parser.error("--eps must be >= 0")
    if args.seed < 0:
        parser.error("--seed must be >= 0")
    if args.command == "sweep" and not args.from_manifest:
        if not args.family or not args.n_grid:
            parser.error("sweep needs --family and --n-grid (or --from-manifest)")
        if args.family == "ost-weak" and not args.alpha:
            parser.error("--family ost-weak needs --alpha")
    if args.command == "transfer-time" and args.scan_from_zero and not args.tmax:
        parser.error("--scan-from-zero needs --tmax")
    if args.command == "evolve" and args.tmax != "auto":
        try:
            if float(args.tmax) <= 0:
                raise ValueError
        except ValueError:
            parser.error("--tmax must be 'auto' or a positive number")


def _run_config(args) -> RunConfig:
    skip = {"command", "out", "manifest", "seed", "threads", "from_manifest", "checkpoint", "report"}
    params = {k: v for k, v in vars(args).items() if k not in skip}
    return RunConfig(args.command, args.seed, json.loads(json.dumps(params)))


def _chain(args) -> chains.ChainSpec:
    return chains.build_chain(args.family, args.n, alpha=args.alpha, j=args.j)


def _emit_csv(args, cfg, header, rows):
    write_text(args.out, render_csv(header, rows, cfg.digest()))


def _summary(text: str) -> None:
    print(text, file=sys.stderr)


def cmd_build_chain(args, cfg):
    spec = _chain(args)
    if args.format == "json":
        doc = spec.to_dict()
        doc["manifest_sha256"] = cfg.digest()
        write_text(args.out, json.dumps(doc, indent=2) + "\n")
    else:
        _emit_csv(args, cfg, ["i", "J_i"], [(i + 1, j) for i, j in enumerate(spec.couplings)])
    _summary(f"{spec.family.value} N={spec.n_sites} J_max/J_min={chains.coupling_ratio(spec):.6g}")


def cmd_synthesize(args, cfg):
    target = synthesis.pst_spectrum(args.n, args.exponent)
    couplings = synthesis.reconstruct_jacobi(target, tol=args.tol)
    report = synthesis.synthesis_report(couplings, target)
    _emit_csv(args, cfg, ["i", "J_i"], [(i + 1, j) for i, j in enumerate(couplings)])
    if args.report:
        report["manifest_sha256"] = cfg.digest()
        write_text(args.report, json.dumps(report, indent=2) + "\n")
    _summary(f"spectral_residual={report['spectral_residual']:.3e} symmetry_residual={report['symmetry_residual']:.3e}")


def cmd_spectrum(args, cfg):
    es = diagonalize(_chain(args))
    rows = [(k + 1, e, p) for k, (e, p) in enumerate(zip(es.energies, es.occ_first))]
    _emit_csv(args, cfg, ["k", "E_k", "P_k1"], rows)
    _summary(f"N={es.n} E_min={es.energies[0]:.6g} E_max={es.energies[-1]:.6g}")


def cmd_evolve(args, cfg):
    spec = _chain(args)
    es = diagonalize(spec)
    if args.tmax == "auto":
        times = dynamics.auto_time_grid(spec, min_points=args.points)
    else:
        times = np.linspace(0.0, float(args.tmax), args.points)
    trace = dynamics.evolve(es, times)
    _emit_csv(args, cfg, ["t", "abs_f_sq", "F"], zip(trace.times, trace.amplitude_sq, trace.fidelity))
    i = int(np.argmax(trace.fidelity))
    _summary(f"{len(times)} samples, max F={trace.fidelity[i]:.6g} at t={times[i]:.6g}")


def cmd_transfer_time(args, cfg):
    spec = _chain(args)
    es = diagonalize(spec)
    if args.scan_from_zero:
        tt = dynamics.first_useful_maximum(es, args.tmax, resolution=max(args.resolution, 20000))
    else:
        tt = dynamics.measure_transfer_time(spec, es, window=args.window, resolution=args.resolution)
    line = (
        f"tau={tt.tau:.17g},f_at_tau={tt.f_at_tau:.17g},window_width={tt.window_width:.17g},"
        f"manifest_sha256={cfg.digest()}\n"
    )
    write_text(args.out, line)
    _summary(f"F(tau)={tt.fidelity:.6g}")


def cmd_ensemble(args, cfg, threads):
    spec = _chain(args)
    tau = dynamics.measure_transfer_time(spec).tau
    rng = (1, spec.n_sites - 1) if args.full_range else None
    model = DisorderModel(args.disorder, args.eps, args.seed, rng)
    res = averaged_fidelity(spec, model, tau, args.nav, threads=threads)
    rec = {
        "Fbar": res.mean, "SE": res.std_error, "tau": tau, "failures": res.failures,
        "nav": res.n_realizations, "manifest_sha256": cfg.digest(),
    }
    write_text(args.out, json.dumps(rec) + "\n")
    _summary(f"Fbar={res.mean:.6f} +- {res.std_error:.6f} (tau={tau:.6g}, failures={res.failures})")


def _sweep_config(args) -> SweepConfig:
    eps = args.eps_grid or list(log_grid(args.eps_min, args.eps_max, args.per_decade))
    return SweepConfig(args.family, args.n_grid, eps, args.disorder, args.alpha, args.nav, args.seed)


def cmd_sweep(args, cfg, threads):
    if args.from_manifest:
        cfg = RunConfig.load(args.from_manifest)
        if cfg.command != "sweep":
            raise SpinwireError(f"manifest is for '{cfg.command}', not 'sweep'")
        config = SweepConfig.from_dict(cfg.params["sweep"])
    else:
        config = _sweep_config(args)
        cfg = RunConfig("sweep", config.seed, {"sweep": json.loads(json.dumps(config.to_dict()))})
    if args.manifest:
        cfg.save(args.manifest)
    grid = run_sweep(config, checkpoint=args.checkpoint, threads=threads)
    _emit_csv(args, cfg, ["N", "eps", "Fbar", "SE", "nav"], grid.rows())
    _summary(f"{grid.mean.size} cells, {int(grid.failed.sum())} failed")
    return cfg


def _load_grid(path) -> SweepGrid:
    header, rows, _ = read_csv(path)
    expected = ["N", "eps", "Fbar", "SE", "nav"]
    if header != expected:
        raise SpinwireError(f"{path}: expected columns {expected}, got {header}")
    return SweepGrid.from_rows(rows, label=str(path))


def cmd_contours(args, cfg):
    grid = _load_grid(args.grid).select(args.parity)
    rows = [(lv, n, eps) for lv in args.levels for n, eps in extract_contour(grid, lv)]
    _emit_csv(args, cfg, ["level", "N", "eps"], rows)
    _summary(f"{len(rows)} contour points over {len(args.levels)} levels")


def cmd_fit_scaling(args, cfg):
    header, rows, _ = read_csv(args.contours)
    if header != ["level", "N", "eps"]:
        raise SpinwireError(f"{args.contours}: expected columns level,N,eps")
    contours: dict = {}
    for lv, n, eps in rows:
        contours.setdefault(float(lv), []).append((int(n), float(eps)))
    if args.levels:
        contours = {lv: pts for lv, pts in contours.items() if any(math.isclose(lv, x) for x in args.levels)}
    fit = fit_scaling(contours, min_r2=args.min_r2)
    if args.json:
        doc = fit.to_dict()
        doc["manifest_sha256"] = cfg.digest()
        write_text(args.out, json.dumps(doc, indent=2) + "\n")
    else:
        lines = [
            f"# manifest-sha256: {cfg.digest()}",
            f"c={fit.c:.17g}",
            f"beta={fit.beta:.17g}",
            "level,beta,c,r2,n_points,included",
        ]
        lines += [f"{lf.level:.17g},{lf.beta:.17g},{lf.c:.17g},{lf.r2:.17g},{lf.n_points},{int(lf.included)}" for lf in fit.levels]
        write_text(args.out, "\n".join(lines) + "\n")
    _summary(f"c={fit.c:.4f} beta={fit.beta:.4f} from levels {fit.used_levels}")


def cmd_crossing(args, cfg):
    res = find_crossing(_load_grid(args.grid_a), _load_grid(args.grid_b), significance=args.significance)
    _emit_csv(args, cfg, ["N", "eps", "F"], [(p.n, p.eps, p.fidelity) for p in res.points])
    if args.report:
        doc = res.to_dict()
        doc["manifest_sha256"] = cfg.digest()
        write_text(args.report, json.dumps(doc, indent=2) + "\n")
    state = "degenerate (no significant difference)" if res.degenerate else f"a={res.a:.4g} b={res.b:.4g}"
    _summary(f"{len(res.points)} crossing points, {state}")


def cmd_appendix_check(args, cfg):
    rows = analytics.binomial_reference_table(args.n)
    header = ["l", "exact", "gaussian", "fig9_transform_exact", "fig9_transform_gauss"]
    _emit_csv(args, cfg, header, rows)
    mid = rows[args.n // 2]
    _summary(f"centre l={mid[0]}: exact={mid[1]:.6g} gaussian={mid[2]:.6g} rel.err={abs(mid[2] / mid[1] - 1):.3%}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    # SPINWIRE_THREADS overrides --threads
    threads = default_threads() if args.threads is None or os.environ.get("SPINWIRE_THREADS") else args.threads
    cfg = _run_config(args)
    try:
        if args.command == "sweep":
            cmd_sweep(args, cfg, threads)
            return 0
        if args.manifest:
            cfg.save(args.manifest)
        handler = {
            "build-chain": cmd_build_chain,
            "synthesize": cmd_synthesize,
            "spectrum": cmd_spectrum,
            "evolve": cmd_evolve,
            "transfer-time": cmd_transfer_time,
            "contours": cmd_contours,
            "fit-scaling": cmd_fit_scaling,
            "crossing": cmd_crossing,
            "appendix-check": cmd_appendix_check,
        }
        if args.command == "ensemble":
            cmd_ensemble(args, cfg, threads)
        else:
            handler[args.command](args, cfg)
    except BrokenPipeError:
        # downstream reader closed early (e.g. `| head`); not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (SpinwireError, ValueError, OSError) as exc:
        print(f"spinwire: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
