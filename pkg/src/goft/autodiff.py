"""Analytic reverse-mode gradients through staged chains, plus a
finite-difference checker.

The tape stores only the pre-rotation (v_i, v_j) pair rows consumed by
each 2x2 block, which is all the backward pass needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .chains import GivensChain, QuasiChain, _apply_columns, _as_columns
from .errors import ModeError, TapeError


@dataclass(eq=False)
class ChainTape:
    pairs: np.ndarray  # (m, 2, n) pre-rotation pair rows, stage-major
    d: int
    cols: int


@dataclass(eq=False)
class ChainGradient:
    d_angles: np.ndarray | None = None   # (m,) for GivensChain
    d_blocks: np.ndarray | None = None   # (m, 2, 2) for QuasiChain


def forward_with_tape(chain, V):
    """apply_chain_matrix plus the tape needed for an exact backward."""
    if not isinstance(chain, (GivensChain, QuasiChain)):
        raise ModeError(f"forward_with_tape expects a rotation chain, got {type(chain).__name__}")
    V, squeeze = _as_columns(chain, V)
    m = chain.plan.total_pairs
    tape = np.empty((m, 2, V.shape[1]))
    out = _apply_columns(chain, V, tape)
    if squeeze:
        out = out[:, 0]
    return out, ChainTape(pairs=tape, d=chain.plan.d, cols=V.shape[1])


def backward(chain, tape: ChainTape, dL_dOutput):
    """Pull a loss gradient back through the chain.

    Returns (ChainGradient, dL_dInput).  Gradients accumulate over
    columns in a fixed order, so results are deterministic.
    """
    if not isinstance(chain, (GivensChain, QuasiChain)):
        raise ModeError(f"backward expects a rotation chain, got {type(chain).__name__}")
    G = np.ascontiguousarray(dL_dOutput, dtype=np.float64)
    squeeze = G.ndim == 1
    if squeeze:
        G = G.reshape(-1, 1)
    plan = chain.plan
    if tape.d != plan.d or tape.pairs.shape[0] != plan.total_pairs:
        raise TapeError("tape does not match this chain's plan")
    if G.shape != (plan.d, tape.cols):
        raise TapeError(f"gradient shape {G.shape} does not match tape ({plan.d}, {tape.cols})")
    G = G.copy()
    dblocks = kernels.backward_blocks(
        chain.blocks(), plan.pair_i, plan.pair_j, plan.stage_starts, tape.pairs, G
    )
    if isinstance(chain, GivensChain):
        c = np.cos(chain.angles)
        s = np.sin(chain.angles)
        # dB/dtheta = [[-s, -c], [c, -s]], contracted against dL/dB
        d_angles = (-s * dblocks[:, 0, 0] - c * dblocks[:, 0, 1]
                    + c * dblocks[:, 1, 0] - s * dblocks[:, 1, 1])
        grad = ChainGradient(d_angles=d_angles)
    else:
        grad = ChainGradient(d_blocks=dblocks)
    return grad, (G[:, 0] if squeeze else G)


def get_params(chain) -> np.ndarray:
    """Flat view-copy of the chain's learnable parameters, plan order."""
    if isinstance(chain, GivensChain):
        return chain.angles.copy()
    if isinstance(chain, QuasiChain):
        return chain.block_params.ravel().copy()
    raise ModeError(f"unsupported chain type {type(chain).__name__}")


def set_params(chain, flat: np.ndarray) -> None:
    if isinstance(chain, GivensChain):
        chain.angles[:] = flat
    elif isinstance(chain, QuasiChain):
        chain.block_params[:] = np.asarray(flat).reshape(chain.block_params.shape)
    else:
        raise ModeError(f"unsupported chain type {type(chain).__name__}")


def flat_gradient(chain, grad: ChainGradient) -> np.ndarray:
    if isinstance(chain, GivensChain):
        return grad.d_angles
    return grad.d_blocks.ravel()


@dataclass(eq=False)
class GradCheckReport:
    rel_errors: np.ndarray
    max_rel_error: float
    tolerance: float
    passed: bool


def grad_check(chain, V, loss: Callable, tolerance: float = 1e-5,
               h: float = 1e-6) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    loss maps the chain output (d x n) to (scalar, dL/dOutput).  Every
    parameter is perturbed by +-h; relative errors are reported per
    parameter.  The error denominator is floored at a fraction of the
    loss magnitude so that exactly-zero gradients are not compared
    against bare finite-difference cancellation noise.
    """
    V, _ = _as_columns(chain, V)
    out, tape = forward_with_tape(chain, V)
    loss0, dout = loss(out)
    grad, _ = backward(chain, tape, dout)
    analytic = flat_gradient(chain, grad)

    base = get_params(chain)
    fd = np.empty_like(analytic)
    for k in range(base.shape[0]):
        for sign, slot in ((+1.0, 0), (-1.0, 1)):
            p = base.copy()
            p[k] += sign * h
            set_params(chain, p)
            val, _ = loss(_apply_columns(chain, V))
            if slot == 0:
                hi = val
            else:
                lo = val
        fd[k] = (hi - lo) / (2.0 * h)
    set_params(chain, base)

    floor = 1e-2 * max(1.0, abs(loss0))
    denom = np.maximum(np.maximum(np.abs(fd), np.abs(analytic)), floor)
    rel = np.abs(analytic - fd) / denom
    max_rel = float(rel.max()) if rel.size else 0.0
    return GradCheckReport(rel_errors=rel, max_rel_error=max_rel,
                           tolerance=tolerance, passed=max_rel <= tolerance)
