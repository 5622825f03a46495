"""Command-line entry point: ``hocl simulate | train | bounds | bench``.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bench import BENCH_COLUMNS, BenchSettings, run_bench
from .config import ConfigError, load_json, resolve_scenario, resolve_train
from .io import columns_to_rows, json_text, write_csv, write_json
from .model import TRAIN_COLUMNS, build_toy_problem, train
from .plasticity import PlasticityParams, weight_bound
from .scenarios import (PROJECTION_COLUMNS, TRACE_COLUMNS, BasinResult, RUNNERS, run_scenario,
                        scenario_summary)
from .stability import kernel_lipschitz, separation_bound

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _threads() -> int:
    raw = os.environ.get("HOCL_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"HOCL_THREADS must be an integer, got {raw!r}", "HOCL_THREADS") from None
    if value < 0:
        raise ConfigError("HOCL_THREADS must be non-negative", "HOCL_THREADS")
    return value


def _environment() -> dict:
    return {"numpy": np.__version__, "hocl_threads": _threads(), "threads_used": 1}


def _prepare_out(out) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path} is not writable")
    return path


def _manifest(command: str, config: dict, seed: int, outputs: list[str], seconds: float, summary: dict) -> dict:
    return {
        "artifact_version": __version__,
        "command": command,
        "config": config,
        "seed": seed,
        "outputs": outputs,
        "timing": {"wall_clock_seconds": seconds},
        "summary": summary,
        "environment": _environment(),
    }


def cmd_simulate(args) -> int:
    doc = load_json(args.config) if args.config else None
    cfg = resolve_scenario(args.scenario, doc, seed=args.seed, steps=args.steps)
    out = _prepare_out(args.out or Path("runs") / cfg.scenario)
    _environment()

    start = time.perf_counter()
    result = run_scenario(cfg)
    seconds = time.perf_counter() - start

    outputs = ["trace.csv", "final_state.json", "manifest.json"]
    if isinstance(result, BasinResult):
        trace_rows = []
        proj_rows = []
        for k, tr in enumerate(result.trajectories):
            trace_rows += columns_to_rows(tr.columns, TRACE_COLUMNS)
            proj = tr.extras["projection"]
            proj_rows += [(k, int(t), w, p, v) for t, w, p, v in
                          zip(tr["t"], proj["w"], proj["phi_bar"], proj["v_projected"])]
        write_csv(out / "trace.csv", TRACE_COLUMNS, trace_rows)
        write_csv(out / "projection.csv", PROJECTION_COLUMNS, proj_rows)
        surface = [(w, p, result.surface_v[i, j]) for i, w in enumerate(result.surface_w)
                   for j, p in enumerate(result.surface_phi)]
        write_csv(out / "surface.csv", ("w", "phi_bar", "v_projected"), surface)
        outputs[1:1] = ["projection.csv", "surface.csv"]
        final = {
            "frequencies": result.trajectories[0].frequencies,
            "trajectories": [{"phases": tr.final_phases, "weights": tr.final_weights}
                             for tr in result.trajectories],
        }
    else:
        write_csv(out / "trace.csv", TRACE_COLUMNS, columns_to_rows(result.columns, TRACE_COLUMNS))
        final = {
            "phases": result.final_phases,
            "frequencies": result.frequencies,
            "weights": result.final_weights,
            "cluster_labels": result.cluster_labels(),
        }
        if cfg.scenario == "fig2":
            running = {"t": result["t"], "running_dtheta": result.extras["running_dtheta"],
                       "running_dw": result.extras["running_dw"]}
            write_csv(out / "running_avg.csv", tuple(running), columns_to_rows(running, tuple(running)))
            outputs.insert(1, "running_avg.csv")
    write_json(out / "final_state.json", final)
    summary = scenario_summary(cfg, result)
    write_json(out / "manifest.json", _manifest("simulate", cfg.to_dict(), cfg.seed, outputs, seconds, summary))
    print(json_text({"out": str(out), "summary": summary}), end="")
    return EXIT_OK


def cmd_train(args) -> int:
    doc = load_json(args.config) if args.config else None
    cfg = resolve_train(doc, seed=args.seed, max_iters=args.max_iters)
    out = _prepare_out(args.out)
    _environment()

    start = time.perf_counter()
    problem = build_toy_problem(cfg)
    result = train(problem.model, problem.inputs, problem.targets, cfg.max_iters, cfg.eps_conv,
                   h_fd=cfg.h_fd, grad_clip=cfg.grad_clip, schedule=problem.schedule)
    seconds = time.perf_counter() - start

    write_csv(out / "trace.csv", TRAIN_COLUMNS, result.rows)
    model = result.model
    write_json(out / "final_state.json", {
        "embeddings": model.embeddings,
        "projection": model.projection,
        "readout": model.readout,
        "bias": model.bias,
        "phases": model.oscillator.phases,
        "frequencies": model.oscillator.frequencies,
        "weights": model.weights,
        "delta": model.delta,
    })
    first, last = result.metrics[0], result.metrics[-1]
    summary = {
        "iterations": len(result.metrics),
        "converged": result.converged,
        "initial_loss": first.loss,
        "final_loss": last.loss,
        "loss_reduction": 1.0 - last.loss / first.loss if first.loss > 0 else 0.0,
        "final_r": last.r,
        "final_v": last.lyapunov,
        "initial_v": result.initial_v,
        "max_embedding_norm": float(np.linalg.norm(model.embeddings, axis=1).max()),
        "step_order": list(last.order),
    }
    outputs = ["trace.csv", "final_state.json", "manifest.json"]
    write_json(out / "manifest.json", _manifest("train", cfg.to_dict(), cfg.seed, outputs, seconds, summary))
    print(json_text({"out": str(out), "summary": summary}), end="")
    return EXIT_OK


def cmd_bounds(args) -> int:
    try:
        params = PlasticityParams(eta=args.eta, gamma=args.gamma)
        l_c = kernel_lipschitz(args.sigma_c)
        report = {
            "kernel_lipschitz": l_c,
            "separation_bound": separation_bound(args.eps, l_c, args.k, args.n, args.eta, args.m),
            "weight_bound": weight_bound(params, args.m, args.n),
        }
    except ValueError as exc:
        field = str(exc).split()[0]
        raise ConfigError(str(exc), field) from exc
    print(json_text(report), end="")
    return EXIT_OK


def _size_list(text: str) -> list[int]:
    try:
        ns = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not ns:
        raise argparse.ArgumentTypeError("need at least one size")
    return ns


def cmd_bench(args) -> int:
    _environment()
    try:
        settings = BenchSettings(k=args.k, reps=args.reps)
        if args.out:
            out = _prepare_out(args.out)
        report = run_bench(args.n, settings)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [(r.n, r.k, r.step_ns, r.graph_ns) for r in report.rows]
    doc = {"exponent": report.exponent, "doubling_ratios": report.doubling_ratios,
           "rows": [dict(zip(BENCH_COLUMNS, row)) for row in rows], "environment": _environment()}
    if args.out:
        write_csv(out / "bench.csv", BENCH_COLUMNS, rows)
        write_json(out / "bench.json", doc)
    print(json_text(doc), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hocl", description="Coupled oscillator and gated Hebbian simulations.")
    parser.add_argument("--version", action="version", version=f"hocl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a named scenario")
    sim.add_argument("scenario", help=f"one of {', '.join(sorted(RUNNERS))}")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--steps", type=int)
    sim.add_argument("--out")
    sim.add_argument("--config", help="JSON config or a previous manifest.json")
    sim.set_defaults(func=cmd_simulate)

    tr = sub.add_parser("train", help="run the toy training loop")
    tr.add_argument("--config", help="JSON config or a previous manifest.json")
    tr.add_argument("--out", required=True)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--max-iters", type=int)
    tr.set_defaults(func=cmd_train)

    bd = sub.add_parser("bounds", help="print the analytic bounds as JSON")
    for flag, kind in (("--eps", float), ("--sigma-c", float), ("--k", float), ("--n", int),
                       ("--eta", float), ("--m", float), ("--gamma", float)):
        bd.add_argument(flag, type=kind, required=True)
    bd.set_defaults(func=cmd_bounds)

    be = sub.add_parser("bench", help="time the per-step work against n")
    be.add_argument("--n", type=_size_list, default=[256, 512, 1024, 2048])
    be.add_argument("--k", type=int, default=16)
    be.add_argument("--reps", type=int, default=5)
    be.add_argument("--out")
    be.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate" and args.scenario not in RUNNERS:
            parser.print_usage(sys.stderr)
            raise ConfigError(f"unknown scenario {args.scenario!r}; choose from {sorted(RUNNERS)}", "scenario")
        return args.func(args)
    except UsageError as exc:
        print(f"hocl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        field = f" [field: {exc.field}]" if exc.field else ""
        print(f"hocl: config error{field}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"hocl: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
