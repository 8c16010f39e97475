"""Adapters: a frozen weight matrix wrapped by a learnable rotation chain.

The chain acts on the input dimension of the stored d x n weight, so the
forward pass is x -> ((chain W))^T x + bias, realized by transforming W
with the staged kernel and then multiplying; the full d x d transform is
never materialized.  Merging folds the learned transform into a new
weight matrix so inference runs as a plain linear layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import (Chain, GivensChain, NormOnlyChain, QuasiChain,
                     apply_chain_matrix)
from .errors import ModeError, ShapeError

MODE_GOFT = "goft"
MODE_QGOFT = "qgoft"
MODE_GOFT_STAR = "goft-star"


@dataclass(eq=False)
class FrozenWeight:
    W: np.ndarray               # d x n, input dim first
    bias: np.ndarray | None = None

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        if self.W.ndim != 2:
            raise ShapeError(f"weight must be 2-D, got shape {self.W.shape}")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64)
            if self.bias.shape != (self.W.shape[1],):
                raise ShapeError(
                    f"bias length {self.bias.shape} does not match output dim {self.W.shape[1]}"
                )

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def n(self) -> int:
        return self.W.shape[1]

    def linear(self, X: np.ndarray) -> np.ndarray:
        """Plain forward: X (batch x d) -> batch x n."""
        out = np.asarray(X, dtype=np.float64) @ self.W
        if self.bias is not None:
            out = out + self.bias
        return out


@dataclass(eq=False)
class Adapter:
    weight: FrozenWeight
    chain: Chain

    def __post_init__(self):
        if self.chain.plan.d != self.weight.d:
            raise ShapeError(
                f"chain dimension {self.chain.plan.d} does not match weight rows {self.weight.d}"
            )

    @property
    def mode(self) -> str:
        if isinstance(self.chain, GivensChain):
            return MODE_GOFT
        if isinstance(self.chain, QuasiChain):
            return MODE_QGOFT
        return MODE_GOFT_STAR

    def transformed_weight(self) -> np.ndarray:
        """chain applied to W via the staged kernel (no dense transform)."""
        return apply_chain_matrix(self.chain, self.weight.W)


def forward(adapter: Adapter, X: np.ndarray) -> np.ndarray:
    """Adapter forward for a batch of input vectors (batch x d) -> batch x n."""
    X = np.asarray(X, dtype=np.float64)
    squeeze = X.ndim == 1
    if squeeze:
        X = X.reshape(1, -1)
    if X.shape[1] != adapter.weight.d:
        raise ShapeError(
            f"input dim {X.shape[1]} does not match adapter dim {adapter.weight.d}"
        )
    out = X @ adapter.transformed_weight()
    if adapter.weight.bias is not None:
        out = out + adapter.weight.bias
    return out[0] if squeeze else out


def ortho_penalty(chain: QuasiChain) -> float:
    """Sum over blocks of <alpha, beta>^2; zero iff all columns orthogonal."""
    if not isinstance(chain, QuasiChain):
        raise ModeError("ortho_penalty is defined for QuasiChain only")
    inner = np.einsum("kc,kc->k", chain.alphas, chain.betas)
    return float(np.sum(inner ** 2))


def column_inners(chain: QuasiChain) -> np.ndarray:
    """Per-block <alpha, beta> values (diagnostics and the regularizer grad)."""
    if not isinstance(chain, QuasiChain):
        raise ModeError("column_inners is defined for QuasiChain only")
    return np.einsum("kc,kc->k", chain.alphas, chain.betas)


def block_gram(block: np.ndarray) -> np.ndarray:
    """Gram matrix [[|a|^2, <a,b>], [<a,b>, |b|^2]] of a 2x2 block's columns."""
    block = np.asarray(block, dtype=np.float64)
    return block.T @ block


def merge(adapter: Adapter) -> FrozenWeight:
    """Fold the learned transform into a new weight matrix.

    The adapter itself is unchanged; plain forward with the returned
    weight matches the adapter forward.
    """
    return FrozenWeight(W=adapter.transformed_weight(),
                        bias=None if adapter.weight.bias is None
                        else adapter.weight.bias.copy())


def param_count(adapter: Adapter) -> int:
    d = adapter.weight.d
    mode = adapter.mode
    if mode == MODE_GOFT:
        return d - 1
    if mode == MODE_QGOFT:
        return 4 * (d - 1)
    return (d - 1) + d
