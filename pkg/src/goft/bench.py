"""Benchmark: staged kernel (both backends) versus dense multiply.

Flop accounting is exact: the staged path costs 4*n*(d-1) multiply-adds,
a dense d x d multiply costs 2*n*d^2.  Wall-clock numbers are medians
over the requested repetitions.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import kernels
from .chains import GivensChain
from .plan import build_plan


def staged_flops(d: int, n: int) -> int:
    return 4 * n * (d - 1)


def dense_flops(d: int, n: int) -> int:
    return 2 * n * d * d


def _time(fn, reps: int) -> float:
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def run_bench(dims, cols: int = 1, reps: int = 5, seed: int = 0) -> list[dict]:
    """One row per dimension with flop counts and measured timings."""
    rng = np.random.default_rng(seed)
    backends = kernels.available_backends()
    rows = []
    for d in dims:
        plan = build_plan(d)
        chain = GivensChain(plan, rng.uniform(-np.pi, np.pi, d - 1))
        blocks = chain.blocks()
        V = rng.standard_normal((d, cols))
        R = np.ascontiguousarray(rng.standard_normal((d, d)))

        row = {
            "d": d,
            "cols": cols,
            "stages": plan.num_stages,
            "log2_ceil": math.ceil(math.log2(d)),
            "staged_flops": staged_flops(d, cols),
            "dense_flops": dense_flops(d, cols),
        }
        for name, impl in backends.items():
            buf = np.ascontiguousarray(V).copy()

            def staged(impl=impl, buf=buf):
                impl.apply_blocks(blocks, plan.pair_i, plan.pair_j,
                                  plan.stage_starts, buf)

            row[f"staged_seconds_{name}"] = _time(staged, reps)
        row["dense_seconds"] = _time(lambda: R @ V, reps)
        rows.append(row)
    return rows


def format_table(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0].keys())
    widths = {c: max(len(c), *(len(_fmt(r[c])) for r in rows)) for c in cols}
    lines = ["  ".join(c.ljust(widths[c]) for c in cols)]
    for r in rows:
        lines.append("  ".join(_fmt(r[c]).ljust(widths[c]) for c in cols))
    return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)
