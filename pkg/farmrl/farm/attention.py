"""The two attention mechanisms of a FARM module.

Feature attention rescales the projected observation features with one coefficient vector derived from the module's
context, identical for every spatial row. Information sharing lets a module query the previous hidden states of all
modules plus a zero row, so it can retrieve nothing.
"""

import math
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from farmrl.tensor import ShapeError, Tensor
from farmrl.tensor import ops

MASKED_LOGIT = -1e9


def build_context(
    task: Tensor,
    h_prev: Tensor,
    prev_action: int | None,
    prev_reward: float,
    num_actions: int,
) -> Tensor:
    """c = [task embedding, previous module hidden, one-hot previous action, previous reward].

    At episode start prev_action is None (zero action vector) and prev_reward is 0.
    """
    if prev_action is not None and not 0 <= prev_action < num_actions:
        raise ValueError(f"Previous action {prev_action} is outside 0..{num_actions - 1}.")
    return ops.concat(
        [task, h_prev, ops.one_hot(prev_action, num_actions), Tensor([prev_reward])]
    )


class FeatureAttentionOutput(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    features: Tensor
    coefficients: Tensor


def feature_attention(
    z: Tensor,
    context: Tensor,
    w_att: Tensor | None,
    w1: Tensor,
    w2: Tensor,
) -> FeatureAttentionOutput:
    """(Z·W_1 ⊙ σ(c·W_att))·W_2 with the coefficient vector broadcast over all m rows.

    Parameters
    ----------
    z : Tensor
        m×d_z observation features.
    context : Tensor
        The module context c.
    w_att : Tensor | None
        The module's context-to-coefficient projection. None disables attention (coefficients fixed at 1).
    w1 : Tensor
        Shared d_z×p projection applied before attention.
    w2 : Tensor
        Shared p×p projection applied after attention.

    Returns
    -------
    FeatureAttentionOutput
        The m×p attended features and the p coefficients.
    """
    if z.ndim != 2 or z.shape[1] != w1.shape[0]:
        raise ShapeError(f"Features {z.shape} do not match W_1 {w1.shape}: d_z must equal {w1.shape[0]}.")
    projected = ops.matmul(z, w1)
    if w_att is None:
        coefficients = Tensor.ones(w1.shape[1])
        attended = projected
    else:
        coefficients = ops.sigmoid(ops.matmul(context, w_att))
        attended = projected * coefficients
    return FeatureAttentionOutput(
        features=ops.matmul(attended, w2), coefficients=coefficients
    )


class ShareOutput(BaseModel):
    """
    Result of one module's information-sharing read.

    Attributes
    ----------
    output : Tensor
        The merged d_h read, W_o applied to the concatenated head outputs.
    head_outputs : list[Tensor]
        Per-head weighted sums of value rows, each of length d_h.
    weights : np.ndarray
        heads × (n+1) attention weights. The last column is the null row.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    output: Tensor
    head_outputs: list[Tensor]
    weights: np.ndarray


def share_information(
    context: Tensor,
    h_prev: Sequence[Tensor],
    w_q: Tensor,
    w_k: Tensor,
    w_v: Tensor,
    w_o: Tensor,
    heads: int,
    key_mask: Sequence[bool] | None = None,
) -> ShareOutput:
    """Multihead attention of a module's context over the previous hidden states of all modules and a zero row.

    Queries and keys are split into `heads` slices of width d_h/heads. Each head reads a full d_h-wide value slice
    of H·W_v, and the heads are merged by W_o. Logits are scaled by 1/√d_h. No projection has a bias, so the zero row
    contributes a zero value.

    Parameters
    ----------
    context : Tensor
        The querying module's context c.
    h_prev : Sequence[Tensor]
        Previous hidden state of every module, in module order.
    w_q, w_k, w_v, w_o : Tensor
        Query (|c|×d_h), key (d_h×d_h), value (d_h×heads·d_h) and output (heads·d_h×d_h) projections.
    heads : int
        Number of attention heads.
    key_mask : Sequence[bool] | None
        n+1 flags, False hides that row from every head. The null row is last.
    """
    n = len(h_prev)
    if n < 1:
        raise ValueError("Information sharing needs at least one module state.")
    d_h = h_prev[0].shape[0]
    if d_h % heads != 0:
        raise ShapeError(f"{heads} heads do not divide d_h={d_h}.")
    head_dim = d_h // heads
    rows = [ops.reshape(h, (1, d_h)) for h in h_prev] + [Tensor.zeros(1, d_h)]
    memory = ops.concat(rows, axis=0)
    query = ops.matmul(context, w_q)
    keys = ops.matmul(memory, w_k)
    values = ops.matmul(memory, w_v)
    mask_bias: Tensor | None = None
    if key_mask is not None:
        if len(key_mask) != n + 1:
            raise ShapeError(f"key_mask has {len(key_mask)} entries, expected {n + 1}.")
        mask_bias = Tensor([0.0 if keep else MASKED_LOGIT for keep in key_mask])

    scale = 1.0 / math.sqrt(d_h)
    head_outputs: list[Tensor] = []
    weights: list[np.ndarray] = []
    for k in range(heads):
        q_k = ops.slice_(query, k * head_dim, (k + 1) * head_dim)
        keys_k = ops.slice_(keys, k * head_dim, (k + 1) * head_dim, axis=1)
        logits = ops.matmul(keys_k, q_k) * scale
        if mask_bias is not None:
            logits = logits + mask_bias
        w = ops.softmax(logits)
        values_k = ops.slice_(values, k * d_h, (k + 1) * d_h, axis=1)
        head_outputs.append(ops.matmul(w, values_k))
        weights.append(w.numpy())
    merged = ops.matmul(ops.concat(head_outputs), w_o)
    return ShareOutput(output=merged, head_outputs=head_outputs, weights=np.stack(weights))
