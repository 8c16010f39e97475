"""Staged Givens-rotation orthogonal fine-tuning toolkit.

Parameterizes an orthogonal transform on a frozen linear layer as d-1
pairwise rotations arranged in ceil(log2 d) parallel stages, with a
quasi-orthogonal relaxation, analytic gradients, alignment oracles, a
Cayley baseline, and a desk-scale training harness.
"""

from .adapter import (Adapter, FrozenWeight, block_gram, forward, merge,
                      ortho_penalty, param_count)
from .align import (AlignmentResult, TransportMap, align_parallel,
                    align_sequential, transport)
from .autodiff import (ChainGradient, ChainTape, backward, forward_with_tape,
                       grad_check)
from .cayley import SkewParam, block_diag_oft, cayley
from .chains import (GivensChain, NormOnlyChain, QuasiChain, apply_chain,
                     apply_chain_matrix, dense_matrix, identity_chain,
                     transpose_apply)
from .kernels import BACKEND as KERNEL_BACKEND
from .plan import RotationPair, RotationPlan, build_plan
from .trainer import (TaskSpec, TrainConfig, TrainReport, ablation_sweep,
                      make_adapter, make_task, train)

__version__ = "0.1.0"

__all__ = [
    "Adapter", "FrozenWeight", "block_gram", "forward", "merge",
    "ortho_penalty", "param_count",
    "AlignmentResult", "TransportMap", "align_parallel", "align_sequential",
    "transport",
    "ChainGradient", "ChainTape", "backward", "forward_with_tape", "grad_check",
    "SkewParam", "block_diag_oft", "cayley",
    "GivensChain", "NormOnlyChain", "QuasiChain", "apply_chain",
    "apply_chain_matrix", "dense_matrix", "identity_chain", "transpose_apply",
    "KERNEL_BACKEND",
    "RotationPair", "RotationPlan", "build_plan",
    "TaskSpec", "TrainConfig", "TrainReport", "ablation_sweep",
    "make_adapter", "make_task", "train",
]
