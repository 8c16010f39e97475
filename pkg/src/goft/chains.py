"""Learnable staged rotation chains and their forward application.

A chain binds one parameter set to a pairing plan: d-1 angles for a
GivensChain, d-1 free 2x2 blocks for a QuasiChain, and a GivensChain
plus a per-axis diagonal scale for a NormOnlyChain.  Both angle and
block chains are applied through the same block kernel, so a QuasiChain
holding exact rotation blocks reproduces the GivensChain bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ModeError, ShapeError
from .plan import RotationPlan, build_plan


@dataclass(eq=False)
class GivensChain:
    """d-1 rotation angles in plan order; all zero at construction."""

    plan: RotationPlan
    angles: np.ndarray = None

    def __post_init__(self):
        if self.angles is None:
            self.angles = np.zeros(self.plan.total_pairs)
        self.angles = np.asarray(self.angles, dtype=np.float64)
        if self.angles.shape != (self.plan.total_pairs,):
            raise ShapeError(
                f"expected {self.plan.total_pairs} angles, got shape {self.angles.shape}"
            )

    @property
    def d(self) -> int:
        return self.plan.d

    def blocks(self) -> np.ndarray:
        """Materialize the (m, 2, 2) rotation blocks from the angles."""
        c = np.cos(self.angles)
        s = np.sin(self.angles)
        out = np.empty((self.angles.shape[0], 2, 2))
        out[:, 0, 0] = c
        out[:, 0, 1] = -s
        out[:, 1, 0] = s
        out[:, 1, 1] = c
        return out


@dataclass(eq=False)
class QuasiChain:
    """d-1 free 2x2 blocks; each block stores the column pair (alpha, beta).

    blocks[k] = [[alpha1, beta1], [alpha2, beta2]].  Identity blocks at
    construction.
    """

    plan: RotationPlan
    block_params: np.ndarray = None

    def __post_init__(self):
        m = self.plan.total_pairs
        if self.block_params is None:
            self.block_params = np.broadcast_to(np.eye(2), (m, 2, 2)).copy()
        self.block_params = np.ascontiguousarray(self.block_params, dtype=np.float64)
        if self.block_params.shape != (m, 2, 2):
            raise ShapeError(
                f"expected block shape ({m}, 2, 2), got {self.block_params.shape}"
            )

    @property
    def d(self) -> int:
        return self.plan.d

    def blocks(self) -> np.ndarray:
        return self.block_params

    @property
    def alphas(self) -> np.ndarray:
        """First columns, shape (m, 2)."""
        return self.block_params[:, :, 0]

    @property
    def betas(self) -> np.ndarray:
        """Second columns, shape (m, 2)."""
        return self.block_params[:, :, 1]

    @classmethod
    def from_givens(cls, chain: GivensChain) -> "QuasiChain":
        return cls(plan=chain.plan, block_params=chain.blocks())


@dataclass(eq=False)
class NormOnlyChain:
    """Givens rotation followed by a learnable per-axis scale (ones at init)."""

    base: GivensChain
    scale: np.ndarray = None

    def __post_init__(self):
        if self.scale is None:
            self.scale = np.ones(self.base.d)
        self.scale = np.asarray(self.scale, dtype=np.float64)
        if self.scale.shape != (self.base.d,):
            raise ShapeError(f"expected scale of length {self.base.d}, got {self.scale.shape}")

    @property
    def plan(self) -> RotationPlan:
        return self.base.plan

    @property
    def d(self) -> int:
        return self.base.d


Chain = GivensChain | QuasiChain | NormOnlyChain


def _as_columns(chain, v):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 1:
        if v.shape[0] != chain.plan.d:
            raise ShapeError(f"expected vector of length {chain.plan.d}, got {v.shape[0]}")
        return v.reshape(-1, 1), True
    if v.ndim == 2:
        if v.shape[0] != chain.plan.d:
            raise ShapeError(f"expected {chain.plan.d} rows, got {v.shape[0]}")
        return v, False
    raise ShapeError(f"expected 1-D or 2-D input, got ndim={v.ndim}")


def apply_chain(chain: Chain, v: np.ndarray) -> np.ndarray:
    """Apply the staged transform to a vector of length d."""
    V, squeeze = _as_columns(chain, v)
    out = _apply_columns(chain, V)
    return out[:, 0] if squeeze else out


def apply_chain_matrix(chain: Chain, W: np.ndarray) -> np.ndarray:
    """Apply the staged transform to every column of a d x n matrix."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != chain.plan.d:
        raise ShapeError(f"expected a matrix with {chain.plan.d} rows, got shape {W.shape}")
    return _apply_columns(chain, W)


def _apply_columns(chain: Chain, V: np.ndarray, tape: np.ndarray | None = None) -> np.ndarray:
    plan = chain.plan
    if isinstance(chain, NormOnlyChain):
        out = _apply_columns(chain.base, V, tape)
        out *= chain.scale[:, None]
        return out
    out = np.ascontiguousarray(V, dtype=np.float64).copy()
    kernels.apply_blocks(
        chain.blocks(), plan.pair_i, plan.pair_j, plan.stage_starts, out, tape
    )
    return out


def dense_matrix(chain: Chain) -> np.ndarray:
    """Materialize the full d x d transform (oracle and merge support only)."""
    return _apply_columns(chain, np.eye(chain.plan.d))


def transpose_apply(chain: GivensChain, v: np.ndarray) -> np.ndarray:
    """Apply the transpose (= inverse) of a GivensChain's transform.

    Stages run in reverse order with each 2x2 block transposed.
    """
    if not isinstance(chain, (GivensChain, QuasiChain)):
        raise ModeError(f"transpose_apply expects a rotation chain, got {type(chain).__name__}")
    V, squeeze = _as_columns(chain, v)
    out = np.ascontiguousarray(V).copy()
    plan = chain.plan
    blocks = chain.blocks()
    # reverse pair order; within-stage disjointness makes per-stage order moot
    rev = slice(None, None, -1)
    rev_blocks = np.ascontiguousarray(blocks[rev].transpose(0, 2, 1))
    rev_i = np.ascontiguousarray(plan.pair_i[rev])
    rev_j = np.ascontiguousarray(plan.pair_j[rev])
    m = plan.total_pairs
    rev_starts = np.ascontiguousarray(m - plan.stage_starts[rev])
    kernels.apply_blocks(rev_blocks, rev_i, rev_j, rev_starts, out)
    return out[:, 0] if squeeze else out


def identity_chain(d: int, kind: str = "givens") -> Chain:
    """Convenience constructor: identity-initialized chain on build_plan(d)."""
    plan = build_plan(d)
    if kind == "givens":
        return GivensChain(plan)
    if kind == "quasi":
        return QuasiChain(plan)
    if kind == "norm-only":
        return NormOnlyChain(GivensChain(plan))
    raise ValueError(f"unknown chain kind {kind!r}")
