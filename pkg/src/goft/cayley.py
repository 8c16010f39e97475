"""Small-scale Cayley-parameterized orthogonal baseline.

R = (I + Q)(I - Q)^-1 with Q skew-symmetric is always orthogonal with
determinant +1; it serves as an independent orthogonality oracle and as
the `oft-cayley` trainer method.  Sized for small d only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError


@dataclass(eq=False)
class SkewParam:
    """Strictly-upper-triangular entries of a d x d skew-symmetric matrix."""

    d: int
    values: np.ndarray = None  # length d*(d-1)//2, row-major upper triangle

    def __post_init__(self):
        n = self.d * (self.d - 1) // 2
        if self.values is None:
            self.values = np.zeros(n)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (n,):
            raise ShapeError(f"expected {n} upper-triangular entries, got {self.values.shape}")

    @property
    def num_params(self) -> int:
        return self.values.shape[0]

    def materialize(self) -> np.ndarray:
        """The full skew-symmetric matrix; Q + Q^T = 0 holds exactly."""
        Q = np.zeros((self.d, self.d))
        iu = np.triu_indices(self.d, k=1)
        Q[iu] = self.values
        return Q - Q.T


def cayley(q: SkewParam) -> np.ndarray:
    """R = (I + Q)(I - Q)^-1 via a partial-pivoted LU solve."""
    Q = q.materialize()
    I = np.eye(q.d)
    try:
        # R (I - Q) = I + Q  =>  (I - Q)^T R^T = (I + Q)^T
        R = np.linalg.solve((I - Q).T, (I + Q).T).T
    except np.linalg.LinAlgError as exc:  # unreachable for real skew Q
        cond = np.linalg.cond(I - Q)
        raise ArithmeticError(f"Cayley solve failed (cond={cond:.3e})") from exc
    return R


def block_diag_oft(blocks: list[SkewParam], b: int) -> np.ndarray:
    """Block-diagonal orthogonal matrix with d/b independent Cayley blocks."""
    for k, blk in enumerate(blocks):
        if blk.d != b:
            raise ConfigError(f"block {k} has size {blk.d}, expected {b}")
    d = b * len(blocks)
    if d % b != 0:
        raise ConfigError(f"dimension {d} not divisible by block size {b}")
    R = np.zeros((d, d))
    for k, blk in enumerate(blocks):
        R[k * b:(k + 1) * b, k * b:(k + 1) * b] = cayley(blk)
    return R


def block_diag_param_count(d: int, b: int) -> int:
    if d % b != 0:
        raise ConfigError(f"dimension {d} not divisible by block size {b}")
    return (d // b) * (b * (b - 1) // 2)
