"""Constructive alignment: rotate a vector onto norm * e0, and transport
between any two same-norm vectors by composing two alignments.

Angles use atan2(-x_j, x_i) so that the rotated pair lands on
(+sqrt(x_i^2 + x_j^2), 0); when both coordinates vanish the angle is 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import GivensChain, apply_chain, transpose_apply
from .errors import DegenerateInputError, NormMismatchError
from .plan import RotationPlan, build_plan

SEQUENTIAL = "sequential-adjacent"


@dataclass(eq=False)
class AlignmentResult:
    angles: np.ndarray
    pairing: RotationPlan | str
    residual: float
    stage_history: list[np.ndarray]

    @property
    def d(self) -> int:
        return self.angles.shape[0] + 1


def _check_nonzero(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise DegenerateInputError(f"need a 1-D vector of length >= 2, got shape {x.shape}")
    if not np.linalg.norm(x) > 0:
        raise DegenerateInputError("cannot align the zero vector")
    return x


def _pair_angle(xi: float, xj: float) -> float:
    if xi == 0.0 and xj == 0.0:
        return 0.0
    return float(np.arctan2(-xj, xi))


def sequential_pairs(d: int) -> list[tuple[int, int]]:
    """Adjacent pairs in application order: (d-2,d-1), (d-3,d-2), ..., (0,1)."""
    return [(k, k + 1) for k in range(d - 2, -1, -1)]


def apply_sequential(angles: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply adjacent-pair rotations in sequence order to a copy of v."""
    v = np.array(v, dtype=np.float64)
    for (i, j), theta in zip(sequential_pairs(v.shape[0]), angles):
        c, s = np.cos(theta), np.sin(theta)
        vi, vj = v[i], v[j]
        v[i] = c * vi - s * vj
        v[j] = s * vi + c * vj
    return v


def align_sequential(x: np.ndarray) -> AlignmentResult:
    """Angles for the adjacent-pair sequence mapping x to (||x||, 0, ..., 0).

    Rotation k acts on the (d-k-2, d-k-1) plane and zeroes the trailing
    live coordinate by folding its mass upward.
    """
    x = _check_nonzero(x)
    d = x.shape[0]
    v = x.copy()
    angles = np.empty(d - 1)
    history = []
    for k, (i, j) in enumerate(sequential_pairs(d)):
        theta = _pair_angle(v[i], v[j])
        c, s = np.cos(theta), np.sin(theta)
        vi, vj = v[i], v[j]
        v[i] = c * vi - s * vj
        v[j] = s * vi + c * vj
        angles[k] = theta
        history.append(v.copy())
    target = np.zeros(d)
    target[0] = np.linalg.norm(x)
    residual = float(np.max(np.abs(v - target)))
    return AlignmentResult(angles=angles, pairing=SEQUENTIAL, residual=residual,
                           stage_history=history)


def align_parallel(x: np.ndarray, plan: RotationPlan | None = None) -> AlignmentResult:
    """Angles in plan order mapping x to (||x||, 0, ..., 0) via the staged tree.

    In each stage every pair (i, j) zeroes coordinate j by folding its
    mass into coordinate i.
    """
    x = _check_nonzero(x)
    d = x.shape[0]
    if plan is None:
        plan = build_plan(d)
    if plan.d != d:
        raise DegenerateInputError(f"plan is for d={plan.d}, vector has length {d}")
    v = x.copy()
    angles = np.empty(plan.total_pairs)
    history = []
    k = 0
    for stage in plan.stages:
        for p in stage:
            theta = _pair_angle(v[p.i], v[p.j])
            c, s = np.cos(theta), np.sin(theta)
            vi, vj = v[p.i], v[p.j]
            v[p.i] = c * vi - s * vj
            v[p.j] = s * vi + c * vj
            angles[k] = theta
            k += 1
        history.append(v.copy())
    target = np.zeros(d)
    target[0] = np.linalg.norm(x)
    residual = float(np.max(np.abs(v - target)))
    return AlignmentResult(angles=angles, pairing=plan, residual=residual,
                           stage_history=history)


@dataclass(eq=False)
class TransportMap:
    """Composition align(y)^-1 after align(x): maps x onto y.

    Both halves share the staged plan, so applying the map costs two
    chain applications (2(d-1) angles total).
    """

    chain_x: GivensChain
    chain_y: GivensChain
    residual: float

    def apply(self, v: np.ndarray) -> np.ndarray:
        return transpose_apply(self.chain_y, apply_chain(self.chain_x, v))


def transport(x: np.ndarray, y: np.ndarray, rel_tol: float = 1e-9) -> TransportMap:
    """Build the rotation carrying x to y; requires equal norms."""
    x = _check_nonzero(x)
    y = _check_nonzero(y)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if abs(nx - ny) > rel_tol * nx:
        raise NormMismatchError(f"norm mismatch: ||x||={nx!r}, ||y||={ny!r}")
    plan = build_plan(x.shape[0])
    ax = align_parallel(x, plan)
    ay = align_parallel(y, plan)
    tmap = TransportMap(
        chain_x=GivensChain(plan, ax.angles),
        chain_y=GivensChain(plan, ay.angles),
        residual=0.0,
    )
    tmap.residual = float(np.max(np.abs(tmap.apply(x) - y)))
    return tmap
