"""Command-line entry point.

Subcommands: align, train, merge, verify, bench, sweep.  Exit codes:
0 success, 1 verification failure, 2 usage/config error, 3 numeric
divergence.  GOFT_SEED overrides any config seed; --json switches the
report output to line-delimited records.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .align import align_parallel
from .bench import format_table, run_bench
from .errors import ConfigError, DegenerateInputError, DivergenceError, GoftError
from .serialization import (adapter_from_checkpoint, load_checkpoint,
                            load_weights, save_checkpoint, save_weights)
from .trainer import (TaskSpec, TrainConfig, ablation_sweep, evaluate_mse,
                      final_penalty, make_adapter, make_task, train)
from .verify import run_verification

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3


def _env_seed():
    raw = os.environ.get("GOFT_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"GOFT_SEED must be an integer, got {raw!r}")


def _parse_vector(text: str) -> np.ndarray:
    path = Path(text)
    if path.exists():
        text = path.read_text()
    return np.array([float(t) for t in text.replace(",", " ").split()])


def cmd_align(args) -> int:
    if args.input is not None:
        x = _parse_vector(args.input)
        if args.dim is not None and x.shape[0] != args.dim:
            print(f"error: input has length {x.shape[0]}, --dim says {args.dim}",
                  file=sys.stderr)
            return EXIT_USAGE
    else:
        if args.dim is None:
            print("error: need --input or --dim with --seed", file=sys.stderr)
            return EXIT_USAGE
        seed = _env_seed()
        if seed is None:
            seed = args.seed
        x = np.random.default_rng(seed).standard_normal(args.dim)
    try:
        result = align_parallel(x)
    except DegenerateInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps({
            "angles": result.angles.tolist(),
            "residual": result.residual,
            "stages": [v.tolist() for v in result.stage_history],
        }))
    else:
        print(f"input      : {np.array2string(x, precision=6)}")
        print(f"angles     : {np.array2string(result.angles, precision=6)}")
        for r, v in enumerate(result.stage_history, start=1):
            print(f"after P_{r}  : {np.array2string(v, precision=6)}")
        print(f"residual   : {result.residual:.3e}")
    return EXIT_OK if result.residual <= 1e-9 else EXIT_VERIFY_FAIL


def _load_config(path):
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")

    missing = []
    task = doc.get("task")
    tr = doc.get("train")
    if not isinstance(task, dict):
        missing.append("task")
        task = {}
    if not isinstance(tr, dict):
        missing.append("train")
        tr = {}
    for key in ("kind", "d", "n", "samples"):
        if task and key not in task and task.get("kind") != "regression-csv":
            missing.append(f"task.{key}")
    if tr and "method" not in tr:
        missing.append("train.method")
    if missing:
        raise ConfigError("missing config keys: " + ", ".join(missing))

    spec = TaskSpec(
        kind=task["kind"], d=int(task["d"]), n=int(task["n"]),
        samples=int(task["samples"]), noise=float(task.get("noise", 0.0)),
        seed=int(task.get("seed", 0)), csv_path=task.get("csv_path"),
    )
    cfg = TrainConfig(
        method=tr["method"], lam=float(tr.get("lambda", 0.0)),
        lr=float(tr.get("lr", 0.02)), steps=int(tr.get("steps", 1000)),
        batch_size=int(tr.get("batch_size", 256)), seed=int(tr.get("seed", 0)),
        beta1=float(tr.get("beta1", 0.9)), beta2=float(tr.get("beta2", 0.999)),
        eps=float(tr.get("eps", 1e-8)),
        lr_schedule=str(tr.get("lr_schedule", "cosine")),
    )
    seed = _env_seed()
    if seed is not None:
        spec.seed = seed
        cfg.seed = seed
    spec.validate()
    cfg.validate()
    return doc, spec, cfg


def cmd_train(args) -> int:
    doc, spec, cfg = _load_config(args.config)
    out_dir = Path(args.out or doc.get("output_dir") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    task = make_task(spec)
    start_step = 0
    opt = None
    if args.resume:
        ckpt = load_checkpoint(args.resume)
        if ckpt["method"] != cfg.method:
            raise ConfigError(
                f"checkpoint method {ckpt['method']!r} does not match config {cfg.method!r}"
            )
        adapter = adapter_from_checkpoint(ckpt, task.weight)
        start_step = int(ckpt["next_step"])
        opt = ckpt["optimizer_state"]
    else:
        adapter = make_adapter(cfg.method, task.weight)

    stop_step = None
    if args.max_steps is not None:
        stop_step = min(args.max_steps, cfg.steps)
    try:
        report = train(adapter, task, cfg, start_step=start_step, opt=opt,
                       stop_step=stop_step)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    end_step = cfg.steps if stop_step is None else stop_step

    report_path = out_dir / "report.jsonl"
    with open(report_path, "w") as fh:
        for k, (loss, pen) in enumerate(zip(report.losses, report.penalties)):
            fh.write(json.dumps({"step": start_step + k, "loss": loss,
                                 "penalty": pen}) + "\n")
    summary = {
        "method": cfg.method,
        "final_mse": report.final_mse,
        "final_penalty": final_penalty(adapter),
        "final_max_inner": report.final_max_inner,
        "param_count": report.param_count,
        "steps_run": report.steps_run,
        "wall_clock_seconds": report.wall_clock,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    save_checkpoint(out_dir / "checkpoint.json", adapter, cfg,
                    next_step=end_step, opt=report.optimizer_state,
                    task_spec=spec.__dict__)
    save_weights(out_dir / "weights.goftw", task.weight)
    if args.json:
        print(json.dumps(summary))
    else:
        print(f"final MSE      : {report.final_mse:.3e}")
        print(f"param count    : {report.param_count}")
        print(f"wall clock     : {report.wall_clock:.2f}s")
        print(f"checkpoint     : {out_dir / 'checkpoint.json'}")
    return EXIT_OK


def cmd_merge(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    weight = load_weights(args.weights)
    try:
        adapter = adapter_from_checkpoint(ckpt, weight)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    merged_W = adapter.transformed_weight()

    seed = _env_seed()
    rng = np.random.default_rng(0 if seed is None else seed)
    probe = rng.standard_normal((16, weight.d))
    from .adapter import FrozenWeight
    merged = FrozenWeight(W=merged_W)
    adapter_out = probe @ adapter.transformed_weight()
    deviation = float(np.max(np.abs(merged.linear(probe) - adapter_out)))
    save_weights(args.out, merged)
    if args.json:
        print(json.dumps({"max_probe_deviation": deviation, "out": str(args.out)}))
    else:
        print(f"max probe deviation: {deviation:.3e}")
        print(f"merged weights     : {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    dims = tuple(int(v) for v in args.dims.split(",")) if args.dims else (2, 3, 5, 8, 16, 33, 64)
    results = run_verification(seed=args.seed, dims=dims, corrupt=args.corrupt)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        if args.json:
            print(json.dumps({"property": r.name, "passed": r.passed, "detail": r.detail}))
        else:
            print(f"[{status}] {r.name}: {r.detail}")
    if failed:
        print(f"{len(failed)} propert{'y' if len(failed) == 1 else 'ies'} failed: "
              + ", ".join(r.name for r in failed), file=sys.stderr)
        return EXIT_VERIFY_FAIL
    return EXIT_OK


def cmd_bench(args) -> int:
    dims = [int(v) for v in args.dims.split(",")]
    if any(d < 2 for d in dims):
        print("error: dims must be >= 2", file=sys.stderr)
        return EXIT_USAGE
    rows = run_bench(dims, cols=args.cols, reps=args.reps)
    if args.json:
        for row in rows:
            print(json.dumps(row))
    else:
        print(f"kernel backend in use: {kernels.BACKEND}")
        print(format_table(rows))
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc, spec, cfg = _load_config(args.config)
    sweep = doc.get("sweep", {})
    methods = sweep.get("methods", ["goft", "goft-star", "qgoft"])
    lam_grid = sweep.get("lambda_grid", [0.001, 0.01, 0.05, 0.1, 0.5])
    seeds = sweep.get("seeds", [cfg.seed])
    rows = ablation_sweep(spec, methods, lam_grid, cfg, seeds=seeds)
    out_dir = Path(args.out or doc.get("output_dir") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "sweep.jsonl", "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    if args.json:
        for row in rows:
            print(json.dumps(row))
    else:
        print(format_table(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goft",
        description="Staged Givens-rotation orthogonal fine-tuning toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="rotate a vector onto the first axis")
    p.add_argument("--dim", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", help="whitespace/comma separated vector, or a file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_align)

    p = sub.add_parser("train", help="run a training experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory")
    p.add_argument("--resume", help="checkpoint to resume from")
    p.add_argument("--max-steps", type=int,
                   help="stop early at this absolute step (for later resume)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("merge", help="fold a trained transform into a weight file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_merge)

    p = sub.add_parser("verify", help="run the full invariant suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", help="comma-separated dimension list")
    p.add_argument("--corrupt", action="store_true",
                   help="test mode: inject an off-manifold block (must fail)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="staged vs dense flop and timing report")
    p.add_argument("--dims", default="64,256,1024")
    p.add_argument("--cols", type=int, default=1)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("sweep", help="method / lambda ablation sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except GoftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
