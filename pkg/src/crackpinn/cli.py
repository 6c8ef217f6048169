"""Command-line entry point: ``crackpinn solve|benchmark|export-fields|extrapolate``.

Exit codes: 0 success, 2 configuration or usage error, 3 training
divergence, 4 unreadable or corrupt checkpoint.  The thread count of the
numerical libraries is taken from ``CRACKPINN_THREADS``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import benchmarks as bm
from .io import (
    ConfigError,
    CorruptCheckpointError,
    atomic_write_text,
    csv_text,
    evaluate_fields,
    field_grid,
    load_checkpoint,
    parse_config,
    read_kstar_curve,
    save_checkpoint,
    write_csv,
    write_fields,
    write_kstar_curve,
    write_log,
)
from .sif import DEFAULT_SAMPLES, DEFAULT_WINDOW, InsufficientSamplesError, dem_sif, extrapolate_sif, ktilde_to_k
from .training import DivergenceError, train

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_CHECKPOINT = 0, 2, 3, 4
SIF_HEADER = ("seed", "tip", "K_I", "K_II", "K_I_enrichment", "K_II_enrichment", "window_lo", "window_hi")


def _err(msg):
    print(f"crackpinn: error: {msg}", file=sys.stderr)


def _window(args, default):
    return tuple(args.window) if args.window else tuple(default)


def sif_rows(model, seed, tip, crack_length, window, n, face_length):
    k1, k2, samples = dem_sif(model, tip, crack_length, window, n, face_length)
    kt = model.ktilde()[tip]
    mu = model.material.mu
    row = (seed, tip, k1, k2, float(ktilde_to_k(kt[0], mu)), float(ktilde_to_k(kt[1], mu)), window[0], window[1])
    return [row], samples


def cmd_solve(args):
    try:
        cfg = parse_config(args.config)
    except ConfigError as e:
        _err(str(e))
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    out = args.out or cfg.output
    window = _window(args, cfg.window)
    tcfg = replace(cfg.training, seed=seed)
    records = []
    try:
        result = train(cfg.problem, cfg.arch, tcfg, enriched=cfg.enriched, callback=records.append)
    except DivergenceError as e:
        write_log(os.path.join(out, "train.log"), records)
        _err(f"training diverged: {e}")
        return EXIT_DIVERGED
    model = result.model
    try:
        rows, samples = sif_rows(model, seed, cfg.tip, cfg.crack_length, window, cfg.n_samples, cfg.face_length)
    except InsufficientSamplesError as e:
        _err(str(e))
        return EXIT_CONFIG
    save_checkpoint(os.path.join(out, "model.ckpt"), model, cfg.problem.geometry)
    write_log(os.path.join(out, "train.log"), result.log)
    write_csv(os.path.join(out, "sif.csv"), SIF_HEADER, rows)
    write_kstar_curve(os.path.join(out, "kstar_curve.csv"), samples)
    r = rows[0]
    print(f"seed {seed} tip {cfg.tip}: K_I = {r[2]:.6f}, K_II = {r[3]:.6f} (best loss {result.best_loss:.3e})")
    return EXIT_OK


def cmd_benchmark(args):
    ids = bm.BENCHMARK_IDS if args.id == "all" else (args.id,)
    for case_id in ids:
        if case_id not in bm.BENCHMARK_IDS:
            _err(str(bm.UnknownBenchmarkError(case_id)))
            return EXIT_CONFIG
    seeds = tuple(args.seed) if args.seed else (0, 1, 2)
    out = args.out or "benchmark-out"
    window = _window(args, DEFAULT_WINDOW)
    summary = []
    texts = []
    for case_id in ids:
        case = bm.benchmark_case(case_id)
        if args.iterations is not None:
            case = replace(case, iterations=args.iterations)
        try:
            report = bm.run_benchmark(
                case, seeds, window=window,
                progress=lambda r, c=case_id: print(f"{c} seed {r.seed}: {r.values}", file=sys.stderr),
            )
        except DivergenceError as e:
            _err(f"{case_id}: training diverged: {e}")
            return EXIT_DIVERGED
        text = bm.format_report(report)
        print(text)
        texts.append(text)
        summary.extend(report.summary_rows())
        atomic_write_text(os.path.join(out, f"{case_id}.json"), json.dumps(report.to_dict(), indent=1))
        for run in report.runs:
            write_kstar_curve(os.path.join(out, f"kstar_{case_id}_seed{run.seed}.csv"), run.kstar)
    atomic_write_text(os.path.join(out, "report.txt"), "\n\n".join(texts) + "\n")
    header = ("case", "quantity", "median", "reference", "relative_error", "tolerance", "pass")
    atomic_write_text(os.path.join(out, "summary.csv"), csv_text(header, [[r[h] for h in header] for r in summary]))
    return EXIT_OK


def cmd_export_fields(args):
    try:
        model, geometry = load_checkpoint(args.checkpoint)
    except CorruptCheckpointError as e:
        _err(str(e))
        return EXIT_CHECKPOINT
    if args.grid:
        x0, x1, nx, y0, y1, ny = args.grid
    else:
        import numpy as np

        if not model.subdomains:
            _err("checkpoint has no subdomains; pass --grid")
            return EXIT_CONFIG
        allv = np.vstack([s.polygon for s in model.subdomains])
        (x0, y0), (x1, y1) = allv.min(axis=0), allv.max(axis=0)
        nx = ny = 50
    if int(nx) < 1 or int(ny) < 1:
        _err("--grid needs positive point counts")
        return EXIT_CONFIG
    pts = field_grid((x0, x1, nx), (y0, y1, ny))
    out = args.out or "fields.csv"
    write_fields(out, pts, evaluate_fields(model, pts))
    print(f"wrote {len(pts)} points to {out}")
    return EXIT_OK


def cmd_extrapolate(args):
    window = _window(args, DEFAULT_WINDOW)
    try:
        if args.input.endswith(".csv"):
            samples = read_kstar_curve(args.input)
            k1, k2 = extrapolate_sif(samples, window, args.crack_length or 1.0)
            rows = [("", args.tip, k1, k2, "", "", window[0], window[1])]
        else:
            model, geometry = load_checkpoint(args.input)
            a = args.crack_length or (geometry.crack_length if geometry else None)
            if a is None:
                _err("--crack-length is required for checkpoints without geometry")
                return EXIT_CONFIG
            face = args.face_length
            if face is None and geometry is not None:
                face = geometry.extra.get("face_length")
            rows, samples = sif_rows(model, "", args.tip, a, window, args.samples, face)
    except CorruptCheckpointError as e:
        _err(str(e))
        return EXIT_CHECKPOINT
    except (OSError, ValueError) as e:
        _err(str(e))
        return EXIT_CONFIG
    text = csv_text(SIF_HEADER, rows)
    if args.out:
        atomic_write_text(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="crackpinn", description="Enriched physics-informed networks for 2D cracks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="train on a configured problem and extract SIFs")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("benchmark", help="run a reference problem over several seeds")
    b.add_argument("id", help=f"one of {', '.join(bm.BENCHMARK_IDS)} or 'all'")
    b.add_argument("--seed", type=int, nargs="+")
    b.add_argument("--out")
    b.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    b.add_argument("--iterations", type=int)
    b.set_defaults(func=cmd_benchmark)

    e = sub.add_parser("export-fields", help="evaluate displacement, stress and residual fields on a grid")
    e.add_argument("checkpoint")
    e.add_argument("--grid", type=float, nargs=6, metavar=("X0", "X1", "NX", "Y0", "Y1", "NY"))
    e.add_argument("--out")
    e.set_defaults(func=cmd_export_fields)

    x = sub.add_parser("extrapolate", help="SIFs by displacement extrapolation from a checkpoint or K* table")
    x.add_argument("input", help="model checkpoint, or a CSV with columns r,k1_star,k2_star")
    x.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    x.add_argument("--crack-length", type=float)
    x.add_argument("--face-length", type=float)
    x.add_argument("--tip", type=int, default=0)
    x.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    x.add_argument("--out")
    x.set_defaults(func=cmd_extrapolate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    if getattr(args, "window", None) and not 0 < args.window[0] < args.window[1]:
        _err("--window needs 0 < LO < HI")
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
