"""Aspect extraction: embeddings -> BiGRU -> CRF, plus BIO span decoding.

The trained BiGRU's per-token output doubles as the transfer representation
handed to the sentiment models; :func:`export_transfer` returns it detached
so no gradient ever flows back into a frozen extractor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import crf
from .autograd import Tensor
from .layers import GruCellParams, embed, run_bigru
from .optim import ParamStore


@dataclass(frozen=True, order=True)
class AspectSpan:
    """Inclusive token-index span of one aspect term."""

    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid span ({self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass
class AeModel:
    """BiGRU-CRF tagger over a fixed embedding table."""

    embeddings: np.ndarray | Tensor
    gru_fwd: GruCellParams
    gru_bwd: GruCellParams
    crf: crf.CrfParams
    fine_tune_embeddings: bool = False

    @property
    def transfer_dim(self) -> int:
        return self.gru_fwd.hidden_dim + self.gru_bwd.hidden_dim

    @classmethod
    def create(cls, store: ParamStore, embedding_matrix, hidden_dim: int = 32,
               rng: np.random.Generator | None = None, dtype=np.float32,
               fine_tune_embeddings: bool = False, name: str = "ae") -> "AeModel":
        rng = rng if rng is not None else np.random.default_rng(0)
        matrix = np.asarray(embedding_matrix, dtype=dtype)
        if fine_tune_embeddings:
            embeddings: np.ndarray | Tensor = store.param(f"{name}/embeddings", matrix)
        else:
            embeddings = matrix
        d = matrix.shape[1]
        fwd = GruCellParams.create(store, f"{name}/gru_fwd", d, hidden_dim, rng, dtype)
        bwd = GruCellParams.create(store, f"{name}/gru_bwd", d, hidden_dim, rng, dtype)
        params = crf.CrfParams.create(store, f"{name}/crf", 2 * hidden_dim, rng, dtype)
        return cls(embeddings, fwd, bwd, params, fine_tune_embeddings)


def ae_forward(model: AeModel, token_ids: Sequence[int]) -> tuple[Tensor, Tensor]:
    """Per-token label scores and the transfer representation matrix.

    Returns (emissions n x 3, transfer n x transfer_dim).
    """
    if len(token_ids) == 0:
        raise ValueError("ae_forward requires a non-empty sentence")
    words = embed(token_ids, model.embeddings)
    transfer = run_bigru(words, model.gru_fwd, model.gru_bwd)
    emissions = transfer @ model.crf.emission_weight + model.crf.emission_bias
    return emissions, transfer


def ae_loss(model: AeModel, token_ids: Sequence[int], gold: Sequence[str]) -> Tensor:
    """CRF negative log-likelihood of the gold BIO labeling."""
    if len(gold) != len(token_ids):
        raise ValueError(f"gold length {len(gold)} does not match sentence length {len(token_ids)}")
    emissions, _ = ae_forward(model, token_ids)
    return crf.nll(emissions, gold, model.crf)


def export_transfer(model: AeModel, token_ids: Sequence[int]) -> np.ndarray:
    """Frozen transfer matrix for one sentence (n x transfer_dim), detached."""
    _, transfer = ae_forward(model, token_ids)
    return transfer.data.copy()


def decode_spans(labels: Sequence[str]) -> list[AspectSpan]:
    """Spans matching B I*; a stray I (no B/I before it) opens a span."""
    spans = []
    start = None
    for i, label in enumerate(labels):
        if label == "B":
            if start is not None:
                spans.append(AspectSpan(start, i - 1))
            start = i
        elif label == "I":
            if start is None:
                start = i  # stray I repaired to B
        elif label == "O":
            if start is not None:
                spans.append(AspectSpan(start, i - 1))
                start = None
        else:
            raise ValueError(f"unknown BIO label {label!r}")
    if start is not None:
        spans.append(AspectSpan(start, len(labels) - 1))
    return spans


def encode_spans(spans: Sequence[AspectSpan], length: int) -> list[str]:
    """Inverse of decode_spans for non-overlapping span sets."""
    labels = ["O"] * length
    for span in sorted(spans):
        if span.end >= length:
            raise ValueError(f"span {span} exceeds sentence length {length}")
        if any(labels[i] != "O" for i in range(span.start, span.end + 1)):
            raise ValueError(f"span {span} overlaps another span")
        labels[span.start] = "B"
        for i in range(span.start + 1, span.end + 1):
            labels[i] = "I"
    return labels


def ae_span_f1(predicted: Sequence[AspectSpan], gold: Sequence[AspectSpan]) -> tuple[float, float, float]:
    """Exact-match span precision/recall/F1 with the 0/0 -> 0 convention."""
    pred_set, gold_set = set(predicted), set(gold)
    hits = len(pred_set & gold_set)
    precision = hits / len(pred_set) if pred_set else 0.0
    recall = hits / len(gold_set) if gold_set else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1
