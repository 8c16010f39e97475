"""Self-contained invariant suite backing the `verify` CLI command.

Runs every module's core properties over a fixed seed set and dimension
range.  A corrupt mode perturbs a rotation block off the orthogonal
manifold to prove the orthogonality check can fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adapter import Adapter, FrozenWeight, forward, merge
from .align import align_parallel, align_sequential, apply_sequential, transport
from .autodiff import grad_check
from .cayley import SkewParam, cayley
from .chains import (GivensChain, QuasiChain, apply_chain, dense_matrix,
                     transpose_apply)
from .plan import build_plan

VERIFY_DIMS = (2, 3, 5, 8, 16, 33, 64)


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _quad_loss(target):
    def loss(out):
        r = out - target
        return float(np.sum(r * r)), 2.0 * r
    return loss


def run_verification(seed: int = 0, dims=VERIFY_DIMS, corrupt: bool = False):
    """Run every property; returns a list of PropertyResult."""
    rng = np.random.default_rng(seed)
    results = []

    def check(name, passed, detail=""):
        results.append(PropertyResult(name=name, passed=bool(passed), detail=detail))

    # plan structure
    ok = True
    for d in range(2, 513):
        plan = build_plan(d)
        if plan.total_pairs != d - 1 or plan.num_stages != math.ceil(math.log2(d)):
            ok = False
            break
        seen = [0] * d
        for p in plan.pairs():
            seen[p.j] += 1
        if seen[0] != 0 or any(c != 1 for c in seen[1:]):
            ok = False
            break
    check("plan-counts-and-tree", ok, "d in 2..512")

    # orthogonality / determinant
    worst_orth, worst_det = 0.0, 0.0
    for d in dims:
        plan = build_plan(d)
        angles = rng.uniform(-np.pi, np.pi, d - 1)
        if corrupt and d == dims[-1]:
            chain = QuasiChain(plan)
            chain.block_params[0, 0, 0] = 1.7  # off-manifold block
            R = dense_matrix(chain)
        else:
            R = dense_matrix(GivensChain(plan, angles))
        worst_orth = max(worst_orth, np.linalg.norm(R.T @ R - np.eye(d)))
        worst_det = max(worst_det, abs(np.linalg.det(R) - 1.0))
    check("chain-orthogonality", worst_orth < 1e-10, f"max ||R^T R - I||_F = {worst_orth:.3e}")
    check("chain-determinant", worst_det < 1e-10, f"max |det R - 1| = {worst_det:.3e}")

    # staged application vs dense oracle, transpose round-trip
    worst = 0.0
    worst_rt = 0.0
    for d in dims:
        chain = GivensChain(build_plan(d), rng.uniform(-np.pi, np.pi, d - 1))
        v = rng.standard_normal(d)
        R = dense_matrix(chain)
        worst = max(worst, np.max(np.abs(apply_chain(chain, v) - R @ v)))
        worst_rt = max(worst_rt, np.max(np.abs(
            transpose_apply(chain, apply_chain(chain, v)) - v)))
    check("staged-equals-dense", worst < 1e-12, f"max abs diff = {worst:.3e}")
    check("transpose-round-trip", worst_rt < 1e-12, f"max abs diff = {worst_rt:.3e}")

    # alignment
    worst_seq, worst_par, worst_tr = 0.0, 0.0, 0.0
    for d in dims:
        x = rng.standard_normal(d)
        worst_seq = max(worst_seq, align_sequential(x).residual)
        worst_par = max(worst_par, align_parallel(x).residual)
        y = rng.standard_normal(d)
        y *= np.linalg.norm(x) / np.linalg.norm(y)
        worst_tr = max(worst_tr, transport(x, y).residual)
    check("align-sequential", worst_seq < 1e-9, f"max residual = {worst_seq:.3e}")
    check("align-parallel", worst_par < 1e-9, f"max residual = {worst_par:.3e}")
    check("transport", worst_tr < 1e-9, f"max residual = {worst_tr:.3e}")

    # gradients
    worst_g, worst_q = 0.0, 0.0
    for d in dims:
        plan = build_plan(d)
        V = rng.standard_normal((d, 3))
        target = rng.standard_normal((d, 3))
        gchain = GivensChain(plan, rng.uniform(-1, 1, d - 1))
        rep = grad_check(gchain, V, _quad_loss(target))
        worst_g = max(worst_g, rep.max_rel_error)
        qchain = QuasiChain(plan, np.eye(2) + 0.3 * rng.standard_normal((d - 1, 2, 2)))
        rep = grad_check(qchain, V, _quad_loss(target))
        worst_q = max(worst_q, rep.max_rel_error)
    check("grad-check-goft", worst_g < 1e-5, f"max rel err = {worst_g:.3e}")
    check("grad-check-qgoft", worst_q < 1e-5, f"max rel err = {worst_q:.3e}")

    # merge equivalence
    worst = 0.0
    for d in dims:
        plan = build_plan(d)
        W = FrozenWeight(W=rng.standard_normal((d, 4)))
        adapter = Adapter(weight=W, chain=GivensChain(plan, rng.uniform(-np.pi, np.pi, d - 1)))
        X = rng.standard_normal((8, d))
        worst = max(worst, np.max(np.abs(merge(adapter).linear(X) - forward(adapter, X))))
    check("merge-equivalence", worst < 1e-10, f"max abs deviation = {worst:.3e}")

    # Cayley baseline oracle
    worst_orth, worst_det = 0.0, 0.0
    for d in dims:
        q = SkewParam(d, rng.standard_normal(d * (d - 1) // 2))
        R = cayley(q)
        worst_orth = max(worst_orth, np.linalg.norm(R.T @ R - np.eye(d)))
        worst_det = max(worst_det, abs(np.linalg.det(R) - 1.0))
    check("cayley-orthogonality", worst_orth < 1e-11, f"max ||R^T R - I||_F = {worst_orth:.3e}")
    check("cayley-determinant", worst_det < 1e-10, f"max |det R - 1| = {worst_det:.3e}")

    # sequential alignment really ends at norm * e0 through the public kernel
    d = dims[-1]
    x = rng.standard_normal(d)
    res = align_sequential(x)
    v = apply_sequential(res.angles, x)
    target = np.zeros(d)
    target[0] = np.linalg.norm(x)
    check("sequential-replay", np.max(np.abs(v - target)) < 1e-9,
          f"replay residual = {np.max(np.abs(v - target)):.3e}")

    return results
