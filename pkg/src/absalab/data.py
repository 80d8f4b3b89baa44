"""SemEval-2014 Task 4 ingestion and text preprocessing.

Covers XML parsing, the whitespace+punctuation tokenizer, character-offset
to token BIO alignment, pretrained-embedding loading with a shared UNK row,
and the single/multi-aspect dataset slicing. All transforms are pure and
deterministic; offsets always refer to the original sentence text.
"""

from __future__ import annotations

import json
import string
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .ae import AspectSpan
from .alsa import POLARITY_TO_LABEL, AlsaSample

GLOVE_DIM = 300
UNK_TOKEN = "<unk>"
UNK_INIT_RANGE = 0.25
_PUNCTUATION = set(string.punctuation)

POLARITIES = ("positive", "negative", "neutral", "conflict")


class IngestError(ValueError):
    """Malformed input file or annotation."""


@dataclass(frozen=True)
class Token:
    text: str  # lowercased surface
    char_start: int
    char_end: int  # exclusive offset into the original sentence


@dataclass(frozen=True)
class RawAspect:
    term: str
    polarity: str
    char_from: int
    char_to: int


@dataclass(frozen=True)
class ParsedSentence:
    sentence_id: str
    text: str
    aspects: tuple[RawAspect, ...]


def parse_semeval(xml_text: str) -> list[ParsedSentence]:
    """Parse a Task-4 style XML document into sentence records.

    Sentences without aspect terms are kept (they make useful all-O
    tagging examples). Conflict-polarity aspects are kept here and
    filtered later when building classification samples.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as err:
        line, col = err.position
        raise IngestError(f"malformed XML at line {line}, column {col}: {err.msg}") from None
    sentences = []
    for i, node in enumerate(root.iter("sentence")):
        sid = node.get("id", str(i))
        text_node = node.find("text")
        if text_node is None or text_node.text is None:
            raise IngestError(f"sentence {sid!r} has no text element")
        aspects = []
        for term_node in node.iter("aspectTerm"):
            attrs = {}
            for attr in ("term", "polarity", "from", "to"):
                value = term_node.get(attr)
                if value is None:
                    raise IngestError(f"sentence {sid!r}: aspectTerm missing attribute {attr!r}")
                attrs[attr] = value
            if attrs["polarity"] not in POLARITIES:
                raise IngestError(f"sentence {sid!r}: unknown polarity {attrs['polarity']!r}")
            char_from, char_to = int(attrs["from"]), int(attrs["to"])
            if not 0 <= char_from < char_to <= len(text_node.text):
                raise IngestError(f"sentence {sid!r}: aspect offsets [{char_from}, {char_to}) out of range")
            aspects.append(RawAspect(attrs["term"], attrs["polarity"], char_from, char_to))
        sentences.append(ParsedSentence(sid, text_node.text, tuple(aspects)))
    return sentences


def tokenize(text: str) -> list[Token]:
    """Lowercased whitespace tokens with punctuation split off one char at
    a time; offsets index the original string."""
    if not text or not text.strip():
        raise IngestError("cannot tokenize empty or whitespace-only text")
    tokens = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        if text[i] in _PUNCTUATION:
            tokens.append(Token(text[i].lower(), i, i + 1))
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in _PUNCTUATION:
            j += 1
        tokens.append(Token(text[i:j].lower(), i, j))
        i = j
    return tokens


def _overlapping_token_range(tokens: Sequence[Token], char_from: int, char_to: int) -> tuple[int, int] | None:
    hits = [i for i, t in enumerate(tokens) if t.char_start < char_to and char_from < t.char_end]
    if not hits:
        return None
    return hits[0], hits[-1]


def aspect_token_span(tokens: Sequence[Token], aspect: RawAspect) -> AspectSpan:
    """Token span of one aspect by character overlap."""
    hit = _overlapping_token_range(tokens, aspect.char_from, aspect.char_to)
    if hit is None:
        raise IngestError(f"aspect {aspect.term!r} [{aspect.char_from}, {aspect.char_to}) matches no token")
    return AspectSpan(hit[0], hit[1])


def align_bio(tokens: Sequence[Token], aspects: Sequence[RawAspect]) -> list[str]:
    """BIO labels by character overlap; overlapping aspects are rejected."""
    labels = ["O"] * len(tokens)
    for aspect in aspects:
        span = aspect_token_span(tokens, aspect)
        for i in range(span.start, span.end + 1):
            if labels[i] != "O":
                raise IngestError(f"aspect {aspect.term!r} overlaps another aspect at token {i}")
        labels[span.start] = "B"
        for i in range(span.start + 1, span.end + 1):
            labels[i] = "I"
    return labels


@dataclass
class Vocabulary:
    """Dense token-id map over an embedding matrix with a shared UNK row."""

    token_to_id: dict[str, int]
    matrix: np.ndarray
    unk_id: int

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return int(self.matrix.shape[0])

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token.lower(), self.unk_id)

    def ids(self, tokens: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.id_of(t) for t in tokens)

    @classmethod
    def random(cls, tokens: Sequence[str], dim: int, seed: int = 0, scale: float = 0.5) -> "Vocabulary":
        """Seeded random vocabulary for synthetic corpora and fixtures."""
        rng = np.random.default_rng(seed)
        uniq = sorted(set(t.lower() for t in tokens))
        matrix = rng.uniform(-scale, scale, size=(len(uniq) + 1, dim)).astype(np.float32)
        mapping = {t: i for i, t in enumerate(uniq)}
        return cls(mapping, matrix, unk_id=len(uniq))


def load_embeddings(path, vocabulary_tokens: Iterable[str], expected_dim: int = GLOVE_DIM,
                    unk_seed: int = 13) -> Vocabulary:
    """Load whitespace-separated embedding vectors for the requested tokens.

    Tokens absent from the file share one UNK id whose row is drawn
    uniformly from [-0.25, 0.25] with a fixed seed. The vector width must
    equal `expected_dim` (300 for the pretrained vectors used here).
    """
    wanted = {t.lower() for t in vocabulary_tokens}
    found: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) - 1 != expected_dim:
                raise IngestError(
                    f"{path}: line {lineno}: vector has {len(parts) - 1} values, expected {expected_dim}"
                )
            token = parts[0]
            if token not in wanted or token in found:
                continue
            try:
                found[token] = np.asarray([float(x) for x in parts[1:]], dtype=np.float32)
            except ValueError:
                raise IngestError(f"{path}: line {lineno}: non-numeric vector component") from None
    ordered = sorted(found)
    rng = np.random.default_rng(unk_seed)
    unk_row = rng.uniform(-UNK_INIT_RANGE, UNK_INIT_RANGE, size=expected_dim).astype(np.float32)
    matrix = np.zeros((len(ordered) + 1, expected_dim), dtype=np.float32)
    mapping = {}
    for i, token in enumerate(ordered):
        mapping[token] = i
        matrix[i] = found[token]
    unk_id = len(ordered)
    matrix[unk_id] = unk_row
    for token in sorted(wanted - set(ordered)):
        mapping[token] = unk_id
    return Vocabulary(mapping, matrix, unk_id)


# -- dataset assembly ------------------------------------------------------------------


@dataclass
class SentenceData:
    """One preprocessed sentence: tokens, tagging gold, sample spans."""

    sentence_id: str
    text: str
    domain: str
    tokens: list[Token]
    bio: list[str] | None  # None when aspect alignment failed
    aspects: tuple[RawAspect, ...]


@dataclass
class Dataset:
    """Preprocessed corpus for one domain and split."""

    domain: str
    sentences: list[SentenceData] = field(default_factory=list)
    samples: list[AlsaSample] = field(default_factory=list)
    skipped_sentences: int = 0  # sentences whose BIO alignment failed


def collect_tokens(parsed: Iterable[ParsedSentence]) -> list[str]:
    out = []
    for record in parsed:
        out.extend(t.text for t in tokenize(record.text))
    return out


def build_dataset(parsed: Iterable[ParsedSentence], domain: str, vocab: Vocabulary) -> Dataset:
    """Tokenize, align and index a parsed corpus.

    Classification samples drop conflict-polarity aspects; tagging gold
    keeps them (they are real aspect terms). Sentences with overlapping
    aspects are excluded from tagging gold (bio=None, counted in
    `skipped_sentences`) but still yield classification samples. An aspect
    matching no token at all raises.
    """
    dataset = Dataset(domain)
    for record in parsed:
        tokens = tokenize(record.text)
        try:
            bio = align_bio(tokens, record.aspects)
        except IngestError:
            bio = None
            dataset.skipped_sentences += 1
        dataset.sentences.append(SentenceData(record.sentence_id, record.text, domain, tokens, bio, record.aspects))
        for aspect in record.aspects:
            if aspect.polarity == "conflict":
                continue
            span = aspect_token_span(tokens, aspect)
            dataset.samples.append(
                AlsaSample(
                    token_ids=vocab.ids(t.text for t in tokens),
                    span=span,
                    label=POLARITY_TO_LABEL[aspect.polarity],
                    sentence_id=record.sentence_id,
                    domain=domain,
                    tokens=tuple(t.text for t in tokens),
                )
            )
    return dataset


def polarity_counts(samples: Sequence[AlsaSample]) -> tuple[int, int, int]:
    counts = [0, 0, 0]
    for s in samples:
        counts[s.label] += 1
    return tuple(counts)  # type: ignore[return-value]


def split_sa_ma(samples: Sequence[AlsaSample]) -> tuple[list[AlsaSample], list[AlsaSample]]:
    """Partition samples into single-aspect and multi-aspect sentences.

    A sample is multi-aspect iff its sentence id is shared with at least
    one other sample in the list.
    """
    by_sentence: dict[str, int] = {}
    for s in samples:
        by_sentence[s.sentence_id] = by_sentence.get(s.sentence_id, 0) + 1
    sa = [s for s in samples if by_sentence[s.sentence_id] == 1]
    ma = [s for s in samples if by_sentence[s.sentence_id] > 1]
    return sa, ma


# -- processed-dataset cache --------------------------------------------------------


def write_dataset_cache(path, dataset: Dataset) -> None:
    """Line-delimited JSON cache of a preprocessed dataset.

    One record per sentence: sentence_id, domain, text, tokens (surface,
    char_start, char_end), bio (list or null), and samples (span start/end,
    label, polarity name). Field-by-field documentation lives in the README.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for sent in dataset.sentences:
            samples = [
                {"start": s.span.start, "end": s.span.end, "label": s.label,
                 "polarity": ("positive", "negative", "neutral")[s.label]}
                for s in dataset.samples
                if s.sentence_id == sent.sentence_id
            ]
            record = {
                "sentence_id": sent.sentence_id,
                "domain": sent.domain,
                "text": sent.text,
                "tokens": [[t.text, t.char_start, t.char_end] for t in sent.tokens],
                "bio": sent.bio,
                "samples": samples,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_dataset_cache(path, vocab: Vocabulary) -> Dataset:
    dataset = Dataset(domain="")
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            tokens = [Token(t[0], t[1], t[2]) for t in record["tokens"]]
            dataset.domain = record["domain"]
            dataset.sentences.append(
                SentenceData(record["sentence_id"], record["text"], record["domain"], tokens,
                             record["bio"], aspects=())
            )
            for s in record["samples"]:
                dataset.samples.append(
                    AlsaSample(
                        token_ids=vocab.ids(t.text for t in tokens),
                        span=AspectSpan(s["start"], s["end"]),
                        label=s["label"],
                        sentence_id=record["sentence_id"],
                        domain=record["domain"],
                        tokens=tuple(t.text for t in tokens),
                    )
                )
    return dataset
