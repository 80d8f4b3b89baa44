"""Neural building blocks shared by the tagging and sentiment models.

All parameter containers are plain dataclasses of leaf tensors registered
in a :class:`~absalab.optim.ParamStore`; the ops below are pure functions
of (parameters, inputs) and are safe to call concurrently once parameters
are frozen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .optim import ParamStore


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype=np.float32) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


@dataclass
class GruCellParams:
    """Gate weights for one directional GRU: update, reset, candidate."""

    input_dim: int
    hidden_dim: int
    w_update: Tensor
    u_update: Tensor
    b_update: Tensor
    w_reset: Tensor
    u_reset: Tensor
    b_reset: Tensor
    w_cand: Tensor
    u_cand: Tensor
    b_cand: Tensor

    @classmethod
    def create(cls, store: ParamStore, name: str, input_dim: int, hidden_dim: int,
               rng: np.random.Generator, dtype=np.float32) -> "GruCellParams":
        def w(gate):
            return store.param(f"{name}/w_{gate}", glorot_uniform(rng, (input_dim, hidden_dim), input_dim, hidden_dim, dtype))

        def u(gate):
            return store.param(f"{name}/u_{gate}", glorot_uniform(rng, (hidden_dim, hidden_dim), hidden_dim, hidden_dim, dtype))

        def b(gate):
            return store.param(f"{name}/b_{gate}", np.zeros(hidden_dim, dtype=dtype))

        return cls(input_dim, hidden_dim,
                   w("update"), u("update"), b("update"),
                   w("reset"), u("reset"), b("reset"),
                   w("cand"), u("cand"), b("cand"))


@dataclass
class LstmCellParams:
    """Gate weights for one directional LSTM; forget bias starts at 1.0."""

    input_dim: int
    hidden_dim: int
    w_in: Tensor
    u_in: Tensor
    b_in: Tensor
    w_forget: Tensor
    u_forget: Tensor
    b_forget: Tensor
    w_out: Tensor
    u_out: Tensor
    b_out: Tensor
    w_cell: Tensor
    u_cell: Tensor
    b_cell: Tensor

    @classmethod
    def create(cls, store: ParamStore, name: str, input_dim: int, hidden_dim: int,
               rng: np.random.Generator, dtype=np.float32) -> "LstmCellParams":
        def w(gate):
            return store.param(f"{name}/w_{gate}", glorot_uniform(rng, (input_dim, hidden_dim), input_dim, hidden_dim, dtype))

        def u(gate):
            return store.param(f"{name}/u_{gate}", glorot_uniform(rng, (hidden_dim, hidden_dim), hidden_dim, hidden_dim, dtype))

        def b(gate, value=0.0):
            return store.param(f"{name}/b_{gate}", np.full(hidden_dim, value, dtype=dtype))

        return cls(input_dim, hidden_dim,
                   w("in"), u("in"), b("in"),
                   w("forget"), u("forget"), b("forget", 1.0),
                   w("out"), u("out"), b("out"),
                   w("cell"), u("cell"), b("cell"))


@dataclass
class AttentionParams:
    """Additive attention: project concat(key, query), score with a vector."""

    query_dim: int
    key_dim: int
    attn_dim: int
    proj: Tensor
    bias: Tensor
    score: Tensor

    @classmethod
    def create(cls, store: ParamStore, name: str, key_dim: int, query_dim: int,
               rng: np.random.Generator, attn_dim: int | None = None, dtype=np.float32) -> "AttentionParams":
        attn_dim = key_dim if attn_dim is None else attn_dim
        in_dim = key_dim + query_dim
        proj = store.param(f"{name}/proj", glorot_uniform(rng, (in_dim, attn_dim), in_dim, attn_dim, dtype))
        bias = store.param(f"{name}/bias", np.zeros(attn_dim, dtype=dtype))
        score = store.param(f"{name}/score", glorot_uniform(rng, (attn_dim,), attn_dim, 1, dtype))
        return cls(query_dim, key_dim, attn_dim, proj, bias, score)


@dataclass
class HeadParams:
    """Affine classifier head producing one logit per sentiment class."""

    input_dim: int
    weight: Tensor
    bias: Tensor

    @classmethod
    def create(cls, store: ParamStore, name: str, input_dim: int, num_classes: int,
               rng: np.random.Generator, dtype=np.float32) -> "HeadParams":
        weight = store.param(f"{name}/weight", glorot_uniform(rng, (input_dim, num_classes), input_dim, num_classes, dtype))
        bias = store.param(f"{name}/bias", np.zeros(num_classes, dtype=dtype))
        return cls(input_dim, weight, bias)


# -- ops ------------------------------------------------------------------------


def embed(token_ids, embedding_matrix) -> Tensor:
    """Look up one embedding row per token id.

    Accepts a plain array (frozen embeddings) or a parameter tensor, in
    which case gradients scatter back into the rows that were used.
    """
    ids = np.asarray(token_ids, dtype=np.intp)
    if isinstance(embedding_matrix, Tensor):
        vocab = embedding_matrix.data.shape[0]
        if ids.size and (ids.min() < 0 or ids.max() >= vocab):
            raise IndexError(f"token id out of range [0, {vocab})")
        if embedding_matrix.requires_grad:
            return ag.rows(embedding_matrix, ids)
        return Tensor(embedding_matrix.data[ids])
    matrix = np.asarray(embedding_matrix)
    if ids.size and (ids.min() < 0 or ids.max() >= matrix.shape[0]):
        raise IndexError(f"token id out of range [0, {matrix.shape[0]})")
    return Tensor(matrix[ids])


def gru_step(cell: GruCellParams, x: Tensor, h: Tensor) -> Tensor:
    z = ag.sigmoid(x @ cell.w_update + h @ cell.u_update + cell.b_update)
    r = ag.sigmoid(x @ cell.w_reset + h @ cell.u_reset + cell.b_reset)
    cand = ag.tanh(x @ cell.w_cand + (r * h) @ cell.u_cand + cell.b_cand)
    return (1.0 - z) * h + z * cand


def lstm_step(cell: LstmCellParams, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
    i = ag.sigmoid(x @ cell.w_in + h @ cell.u_in + cell.b_in)
    f = ag.sigmoid(x @ cell.w_forget + h @ cell.u_forget + cell.b_forget)
    o = ag.sigmoid(x @ cell.w_out + h @ cell.u_out + cell.b_out)
    g = ag.tanh(x @ cell.w_cell + h @ cell.u_cell + cell.b_cell)
    c_next = f * c + i * g
    h_next = o * ag.tanh(c_next)
    return h_next, c_next


def run_bigru(inputs: Tensor, fwd: GruCellParams, bwd: GruCellParams) -> Tensor:
    """Bidirectional GRU over `inputs` (n x d), zero initial states.

    Row i of the output concatenates the forward state after consuming
    rows 0..i with the backward state after consuming rows n-1..i, so the
    output width is exactly 2 * hidden_dim.
    """
    n = inputs.data.shape[0]
    if n == 0:
        raise ValueError("run_bigru requires at least one input row")
    if inputs.data.shape[1] != fwd.input_dim or inputs.data.shape[1] != bwd.input_dim:
        raise ag.ShapeError("run_bigru", inputs.shape, (fwd.input_dim,), (bwd.input_dim,),
                            detail="input width must match both cells")
    dtype = inputs.data.dtype
    h = Tensor(np.zeros(fwd.hidden_dim, dtype=dtype))
    forward_states = []
    for i in range(n):
        h = gru_step(fwd, inputs[i], h)
        forward_states.append(h)
    h = Tensor(np.zeros(bwd.hidden_dim, dtype=dtype))
    backward_states: list[Tensor] = [None] * n  # type: ignore[list-item]
    for i in range(n - 1, -1, -1):
        h = gru_step(bwd, inputs[i], h)
        backward_states[i] = h
    return ag.stack_rows([ag.concat([forward_states[i], backward_states[i]]) for i in range(n)])


def run_lstm(inputs: Tensor, cell: LstmCellParams, direction: str = "forward") -> tuple[Tensor, Tensor]:
    """LSTM over `inputs` rows; returns (all_states, final_state).

    `direction="backward"` consumes rows right to left; all_states rows stay
    aligned with input positions. Empty input yields a 0 x hidden state
    matrix and a zero final state.
    """
    if direction not in ("forward", "backward"):
        raise ValueError(f"unknown direction {direction!r}")
    n = inputs.data.shape[0]
    dtype = inputs.data.dtype
    zero = Tensor(np.zeros(cell.hidden_dim, dtype=dtype))
    if n == 0:
        return Tensor(np.zeros((0, cell.hidden_dim), dtype=dtype)), zero
    if inputs.data.shape[1] != cell.input_dim:
        raise ag.ShapeError("run_lstm", inputs.shape, (cell.input_dim,))
    h, c = zero, zero
    states: list[Tensor] = [None] * n  # type: ignore[list-item]
    order = range(n) if direction == "forward" else range(n - 1, -1, -1)
    for i in order:
        h, c = lstm_step(cell, inputs[i], h, c)
        states[i] = h
    return ag.stack_rows(states), h


def additive_attention(keys: Tensor, query: Tensor, params: AttentionParams) -> tuple[Tensor, Tensor]:
    """Score each key against the query; return (alpha, alpha-weighted sum).

    score_i = v . tanh(W [key_i ; query] + b); alpha = softmax(scores).
    """
    n = keys.data.shape[0]
    if n == 0:
        raise ValueError("additive_attention requires at least one key")
    query_rows = ag.stack_rows([query] * n)
    scores = ag.tanh(ag.concat([keys, query_rows], axis=1) @ params.proj + params.bias) @ params.score
    alpha = ag.softmax(scores)
    pooled = alpha @ keys
    return alpha, pooled


def classify(features: Tensor, head: HeadParams) -> Tensor:
    """Affine map to class logits; softmax happens downstream."""
    if features.data.shape != (head.input_dim,):
        raise ag.ShapeError("classify", features.shape, (head.input_dim,))
    return features @ head.weight + head.bias


def max_pool_rows(states: Tensor) -> Tensor:
    """Coordinate-wise maximum over rows."""
    if states.data.shape[0] == 0:
        raise ValueError("max_pool_rows requires at least one row")
    return ag.tmax(states, axis=0)


def append_to_rows(matrix: Tensor, vec: Tensor) -> Tensor:
    """Concatenate `vec` onto every row of `matrix`."""
    n = matrix.data.shape[0]
    if n == 0:
        return Tensor(np.zeros((0, matrix.data.shape[1] + vec.data.shape[0]), dtype=matrix.data.dtype))
    return ag.concat([matrix, ag.stack_rows([vec] * n)], axis=1)
