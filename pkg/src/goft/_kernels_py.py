"""Pure-numpy staged pair-rotation kernels.

Fallback used when the compiled extension is unavailable.  Each stage
gathers the (i, j) rows of all its pairs at once; pairs within a stage
are disjoint by construction, so the vectorized update is equivalent to
applying the 2x2 blocks one at a time.
"""

from __future__ import annotations

import numpy as np

COMPILED = False


def apply_blocks(blocks, pair_i, pair_j, stage_starts, V, tape=None):
    """Apply the staged 2x2 blocks to V (d x n) in place.

    blocks has shape (m, 2, 2) in stage-major pair order.  If tape is
    given (shape (m, 2, n)) the pre-rotation pair rows are recorded.
    """
    for s in range(len(stage_starts) - 1):
        a, b = int(stage_starts[s]), int(stage_starts[s + 1])
        I = pair_i[a:b]
        J = pair_j[a:b]
        vi = V[I]
        vj = V[J]
        if tape is not None:
            tape[a:b, 0] = vi
            tape[a:b, 1] = vj
        b00 = blocks[a:b, 0, 0, None]
        b01 = blocks[a:b, 0, 1, None]
        b10 = blocks[a:b, 1, 0, None]
        b11 = blocks[a:b, 1, 1, None]
        V[I] = b00 * vi + b01 * vj
        V[J] = b10 * vi + b11 * vj


def backward_blocks(blocks, pair_i, pair_j, stage_starts, tape, G):
    """Reverse-mode pullback through the staged blocks.

    G (d x n) holds dL/dOutput on entry and is overwritten with
    dL/dInput.  Returns dL/dBlocks with shape (m, 2, 2); entries for
    pair k are the column-summed outer products of the output gradient
    rows with the taped input rows.
    """
    dblocks = np.empty_like(blocks)
    for s in range(len(stage_starts) - 2, -1, -1):
        a, b = int(stage_starts[s]), int(stage_starts[s + 1])
        I = pair_i[a:b]
        J = pair_j[a:b]
        gi = G[I]
        gj = G[J]
        vi = tape[a:b, 0]
        vj = tape[a:b, 1]
        dblocks[a:b, 0, 0] = (gi * vi).sum(axis=1)
        dblocks[a:b, 0, 1] = (gi * vj).sum(axis=1)
        dblocks[a:b, 1, 0] = (gj * vi).sum(axis=1)
        dblocks[a:b, 1, 1] = (gj * vj).sum(axis=1)
        b00 = blocks[a:b, 0, 0, None]
        b01 = blocks[a:b, 0, 1, None]
        b10 = blocks[a:b, 1, 0, None]
        b11 = blocks[a:b, 1, 1, None]
        G[I] = b00 * gi + b10 * gj
        G[J] = b01 * gi + b11 * gj
    return dblocks
