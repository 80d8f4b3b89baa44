"""Experiment orchestration: configs, training loops, grid search, slices.

Everything here is deterministic given the config seed: initialization,
data shuffling and noise rows all derive from it, so repeating a run
produces bit-identical checkpoints and logs. One model trains per thread;
grid-search points may fan out across a thread pool because no state is
shared between runs.
"""

from __future__ import annotations

import dataclasses
import json
import typing
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import ae as ae_mod
from . import alsa as alsa_mod
from . import crf as crf_mod
from .alsa import AlsaSample, InputMode
from .checkpoint import load_checkpoint, save_checkpoint
from .data import Dataset, Vocabulary, build_dataset, collect_tokens, load_embeddings, parse_semeval, split_sa_ma
from .metrics import MetricsReport, macro_f1
from .optim import AdamConfig, ParamStore, adam_step, forward_backward

TASKS = ("ae", "alsa", "multitask")
INPUT_MODES = ("plain", "transfer", "noise")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    """One experiment: what to train, on which data, with which knobs."""

    task: str = "alsa"
    architecture: str = "atae"
    input_mode: str = "plain"
    domain: str = "laptop"
    ae_domain: str | None = None  # AE model domain for transfer runs
    lr: float = 0.001
    l2_lambda: float = 0.0
    transfer_dim: int = 64  # width of the auxiliary rows (transfer/noise)
    ae_hidden: int = 32
    alsa_hidden: int = 128
    embedding_dim: int = 300  # used when embeddings_path is unset
    epochs: int = 25
    seed: int = 0
    dev_fraction: float = 0.1
    run_name: str | None = None
    data_dir: str | None = None
    train_xml: str | None = None
    test_xml: str | None = None
    embeddings_path: str | None = None
    st_cache_path: str | None = None
    checkpoint_dir: str | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.input_mode not in INPUT_MODES:
            raise ConfigError(f"unknown input mode {self.input_mode!r}")
        if self.task == "alsa" and self.architecture not in alsa_mod.ARCHITECTURES:
            raise ConfigError(f"unknown architecture {self.architecture!r}")
        # lr = 0 is allowed as the degenerate "no update" run; negative is not.
        if self.lr < 0:
            raise ConfigError(f"lr must be non-negative, got {self.lr}")
        if self.l2_lambda < 0:
            raise ConfigError(f"l2_lambda must be non-negative, got {self.l2_lambda}")
        if not 0 <= self.dev_fraction < 1:
            raise ConfigError(f"dev_fraction must lie in [0, 1), got {self.dev_fraction}")
        if self.input_mode == "transfer" and self.task == "alsa" and self.ae_domain is None:
            self.ae_domain = self.domain  # in-domain transfer by default

    @property
    def name(self) -> str:
        if self.run_name:
            return self.run_name
        if self.task == "ae":
            return f"ae_{self.domain}"
        if self.task == "multitask":
            return f"multitask_{self.domain}"
        suffix = {"plain": "", "transfer": "-t", "noise": "-r"}[self.input_mode]
        return f"{self.architecture}{suffix}_{self.domain}"

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        return replace(cls(), **_coerce_fields(mapping))

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        mapping = parse_kv_file(path)
        if overrides:
            mapping.update(overrides)
        return cls.from_mapping(mapping)

    def to_mapping(self) -> dict:
        return dataclasses.asdict(self)


def parse_kv_file(path) -> dict:
    """Plain `key = value` config lines; '#' starts a comment."""
    mapping = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        mapping[key] = value
    return mapping


def _coerce_fields(mapping: dict) -> dict:
    hints = typing.get_type_hints(ExperimentConfig)
    out = {}
    for key, value in mapping.items():
        if key not in hints:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _coerce(value, hints[key], key)
    return out


def _coerce(value, hint, key: str):
    if value is None or (isinstance(value, str) and value.lower() in ("none", "null", "")):
        if hint in (str, int, float) and not _is_optional(hint):
            raise ConfigError(f"config key {key!r} must not be empty")
        return None
    base = _strip_optional(hint)
    try:
        if base is int:
            return int(value)
        if base is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r}: cannot parse {value!r} as {base.__name__}") from None


def _is_optional(hint) -> bool:
    return typing.get_origin(hint) is typing.Union and type(None) in typing.get_args(hint)


def _strip_optional(hint):
    if _is_optional(hint):
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        return args[0]
    return hint


# -- data resolution -------------------------------------------------------------------


def resolve_xml(config: ExperimentConfig, split: str, domain: str | None = None) -> Path:
    domain = domain or config.domain
    explicit = config.train_xml if split == "train" else config.test_xml
    if explicit and domain == config.domain:  # explicit paths name the config's own domain
        return Path(explicit)
    if config.data_dir is None:
        raise ConfigError(f"no {split} data: set data_dir or {split}_xml")
    return Path(config.data_dir) / f"{domain}_{split}.xml"


def resolvable_splits(config: ExperimentConfig, require: str, domain: str | None = None) -> tuple[str, ...]:
    """All splits whose files exist; errors if the required one is missing.

    Loading every available split keeps the vocabulary identical between
    training and later evaluation, which matters when no pretrained
    embedding file is configured and word rows are seeded by token set.
    """
    splits = []
    for split in ("train", "test"):
        try:
            if resolve_xml(config, split, domain).exists():
                splits.append(split)
        except ConfigError:
            pass
    if require not in splits:
        raise FileNotFoundError(f"missing dataset file {resolve_xml(config, require, domain)}")
    return tuple(splits)


def load_domain(config: ExperimentConfig, domain: str | None = None,
                splits: Sequence[str] = ("train", "test")) -> tuple[dict[str, Dataset], Vocabulary]:
    """Parse the requested splits and build one vocabulary over all of them."""
    parsed = {}
    for split in splits:
        path = resolve_xml(config, split, domain)
        if not path.exists():
            raise FileNotFoundError(f"missing dataset file {path}")
        parsed[split] = parse_semeval(path.read_text(encoding="utf-8"))
    tokens = []
    for records in parsed.values():
        tokens.extend(collect_tokens(records))
    if config.embeddings_path:
        vocab = load_embeddings(config.embeddings_path, tokens, expected_dim=config.embedding_dim)
    else:
        # No pretrained vectors available: seeded random rows (fixtures, demos).
        vocab = Vocabulary.random(tokens, dim=config.embedding_dim, seed=config.seed + 7919)
    datasets = {split: build_dataset(records, domain or config.domain, vocab) for split, records in parsed.items()}
    return datasets, vocab


def stratified_dev_split(samples: Sequence[AlsaSample], fraction: float, seed: int) -> tuple[list, list]:
    """Seeded per-class split; dev gets floor(fraction * count) per class.

    When the flooring empties dev entirely (tiny corpora), one sample from
    the largest class moves over so a dev metric always exists.
    """
    if fraction <= 0 or len(samples) < 2:
        return list(samples), []
    rng = np.random.default_rng(seed)
    dev_idx: set[int] = set()
    by_label = {label: [i for i, s in enumerate(samples) if s.label == label]
                for label in range(alsa_mod.NUM_CLASSES)}
    for label in range(alsa_mod.NUM_CLASSES):
        idx = by_label[label]
        k = int(len(idx) * fraction)
        if k >= 1:
            chosen = rng.permutation(len(idx))[:k]
            dev_idx.update(idx[i] for i in chosen)
    if not dev_idx:
        largest = max(by_label.values(), key=len)
        dev_idx.add(largest[int(rng.integers(len(largest)))])
    train = [s for i, s in enumerate(samples) if i not in dev_idx]
    dev = [s for i, s in enumerate(samples) if i in dev_idx]
    return train, dev


# -- in-memory training cores -----------------------------------------------------------


@dataclass
class TrainResult:
    """Everything a finished run produced, in memory plus written paths."""

    store: ParamStore
    model: object
    log: list[dict]
    best_state: dict[str, np.ndarray]
    final_state: dict[str, np.ndarray]
    best_dev: float | None
    meta: dict
    best_checkpoint: Path | None = None
    final_checkpoint: Path | None = None
    log_path: Path | None = None


def _epoch_order(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.permutation(n)


def train_alsa_core(model, store: ParamStore, samples: Sequence[AlsaSample], mode: InputMode,
                    embeddings: np.ndarray, adam: AdamConfig | None, epochs: int, seed: int,
                    dev_samples: Sequence[AlsaSample] | None = None) -> tuple[list[dict], dict, float | None]:
    """Sample-at-a-time training; returns (log, best_state, best_dev).

    `adam=None` runs the loop without updates (the lr = 0 degenerate case).
    """
    rng = np.random.default_rng(seed)
    log: list[dict] = []
    best_state = store.state_dict()
    best_dev: float | None = None
    for epoch in range(1, epochs + 1):
        total = 0.0
        for i in _epoch_order(rng, len(samples)):
            sample = samples[i]
            total += forward_backward(store, lambda: alsa_mod.alsa_loss(model, sample, mode, embeddings))
            if adam is not None:
                adam_step(store, adam)
        record: dict = {"epoch": epoch, "train_loss": total / max(len(samples), 1)}
        if dev_samples:
            preds = [alsa_mod.predict_label(model, s, mode, embeddings) for s in dev_samples]
            dev = macro_f1(preds, [s.label for s in dev_samples]).macro_f1
            record["dev_macro_f1"] = dev
            if best_dev is None or dev > best_dev:
                best_dev = dev
                best_state = store.state_dict()
                record["best"] = True
        log.append(record)
    if not dev_samples:
        best_state = store.state_dict()
    return log, best_state, best_dev


def train_ae_core(model: ae_mod.AeModel, store: ParamStore,
                  items: Sequence[tuple[Sequence[int], Sequence[str]]],
                  adam: AdamConfig | None, epochs: int, seed: int,
                  dev_items: Sequence[tuple[Sequence[int], Sequence[str]]] | None = None
                  ) -> tuple[list[dict], dict, float | None]:
    """Tagging training over (token_ids, gold BIO) pairs."""
    rng = np.random.default_rng(seed)
    log: list[dict] = []
    best_state = store.state_dict()
    best_dev: float | None = None
    for epoch in range(1, epochs + 1):
        total = 0.0
        for i in _epoch_order(rng, len(items)):
            ids, gold = items[i]
            total += forward_backward(store, lambda: ae_mod.ae_loss(model, ids, gold))
            if adam is not None:
                adam_step(store, adam)
        record: dict = {"epoch": epoch, "train_loss": total / max(len(items), 1)}
        if dev_items:
            dev = corpus_span_f1(model, dev_items)
            record["dev_span_f1"] = dev
            if best_dev is None or dev > best_dev:
                best_dev = dev
                best_state = store.state_dict()
                record["best"] = True
        log.append(record)
    if not dev_items:
        best_state = store.state_dict()
    return log, best_state, best_dev


def train_multitask_core(model: alsa_mod.MultitaskModel, store: ParamStore,
                         items: Sequence[tuple[AlsaSample, Sequence[str]]],
                         adam: AdamConfig | None, epochs: int, seed: int,
                         dev_items: Sequence[tuple[AlsaSample, Sequence[str]]] | None = None
                         ) -> tuple[list[dict], dict, float | None]:
    """Joint training over (sample, gold BIO of its sentence) pairs."""
    rng = np.random.default_rng(seed)
    log: list[dict] = []
    best_state = store.state_dict()
    best_dev: float | None = None
    for epoch in range(1, epochs + 1):
        total = 0.0
        for i in _epoch_order(rng, len(items)):
            sample, bio = items[i]
            total += forward_backward(
                store, lambda: alsa_mod.multitask_loss(model, sample.token_ids, bio, sample.span, sample.label)
            )
            if adam is not None:
                adam_step(store, adam)
        record: dict = {"epoch": epoch, "train_loss": total / max(len(items), 1)}
        if dev_items:
            preds = [int(np.argmax(alsa_mod.multitask_forward(model, s.token_ids, s.span)[1].data))
                     for s, _ in dev_items]
            dev = macro_f1(preds, [s.label for s, _ in dev_items]).macro_f1
            record["dev_macro_f1"] = dev
            if best_dev is None or dev > best_dev:
                best_dev = dev
                best_state = store.state_dict()
                record["best"] = True
        log.append(record)
    if not dev_items:
        best_state = store.state_dict()
    return log, best_state, best_dev


def corpus_span_f1(model: ae_mod.AeModel, items: Sequence[tuple[Sequence[int], Sequence[str]]]) -> float:
    """Exact-match span F1 aggregated over a tagging corpus (percent)."""
    hits = predicted = gold_total = 0
    for ids, gold in items:
        emissions, _ = ae_mod.ae_forward(model, ids)
        decoded = ae_mod.decode_spans(crf_mod.viterbi(emissions, model.crf))
        gold_spans = ae_mod.decode_spans(list(gold))
        hits += len(set(decoded) & set(gold_spans))
        predicted += len(decoded)
        gold_total += len(gold_spans)
    precision = hits / predicted if predicted else 0.0
    recall = hits / gold_total if gold_total else 0.0
    if precision + recall == 0:
        return 0.0
    return 100.0 * 2 * precision * recall / (precision + recall)


def training_accuracy(model, samples: Sequence[AlsaSample], mode: InputMode, embeddings: np.ndarray) -> float:
    correct = sum(alsa_mod.predict_label(model, s, mode, embeddings) == s.label for s in samples)
    return correct / len(samples)


# -- transfer caches ---------------------------------------------------------------------


def export_transfer_cache(model: ae_mod.AeModel,
                          sentences: Sequence[tuple[str, Sequence[int]]]) -> dict[str, np.ndarray]:
    """Frozen transfer rows for every (sentence_id, token_ids) pair."""
    return {sid: ae_mod.export_transfer(model, ids) for sid, ids in sentences if len(ids)}


def dataset_sentence_ids(dataset: Dataset, vocab: Vocabulary) -> list[tuple[str, tuple[int, ...]]]:
    return [(s.sentence_id, vocab.ids(t.text for t in s.tokens)) for s in dataset.sentences]


def make_input_mode(config: ExperimentConfig, st_source: dict[str, np.ndarray] | None = None) -> InputMode:
    if config.input_mode == "plain":
        return InputMode.plain()
    if config.input_mode == "noise":
        return InputMode.noise(config.transfer_dim, seed=config.seed)
    if st_source is None:
        raise ConfigError("transfer mode needs cached transfer rows (st_cache_path or an AE export)")
    return InputMode.transfer(st_source, config.transfer_dim)


# -- file-based orchestration ----------------------------------------------------------


def train(config: ExperimentConfig, st_source: dict[str, np.ndarray] | None = None) -> TrainResult:
    """Train per config, write best/final checkpoints and a JSONL log.

    Missing inputs fail before any training step. `st_source` short-circuits
    the on-disk transfer cache for in-process pipelines.
    """
    datasets, vocab = load_domain(config, splits=resolvable_splits(config, require="train"))
    train_set = datasets["train"]
    if config.input_mode == "transfer" and st_source is None:
        if not config.st_cache_path:
            raise ConfigError("transfer mode requires st_cache_path")
        from .checkpoint import load_archive

        st_source = load_archive(config.st_cache_path)
    adam = AdamConfig(lr=config.lr, l2_lambda=config.l2_lambda) if config.lr > 0 else None
    rng = np.random.default_rng(config.seed)
    store = ParamStore()
    embeddings = vocab.matrix

    if config.task == "ae":
        items = [(vocab.ids(t.text for t in s.tokens), s.bio) for s in train_set.sentences if s.bio and s.tokens]
        if not items:
            raise ConfigError("no sentences with tagging gold in the training data")
        model: object = ae_mod.AeModel.create(store, embeddings, hidden_dim=config.ae_hidden, rng=rng)
        if config.dev_fraction > 0 and len(items) > 1:
            split_at = max(1, int(len(items) * (1 - config.dev_fraction)))
        else:
            split_at = len(items)
        order = np.random.default_rng(config.seed + 1).permutation(len(items))
        train_items = [items[i] for i in order[:split_at]]
        dev_items = [items[i] for i in order[split_at:]]
        log, best_state, best_dev = train_ae_core(model, store, train_items, adam, config.epochs,
                                                  config.seed, dev_items or None)
        meta = {"task": "ae", "architecture": "bigru-crf", "domain": config.domain,
                "hidden": config.ae_hidden, "embedding_dim": vocab.dim,
                "transfer_dim": 2 * config.ae_hidden, "seed": config.seed}
    elif config.task == "multitask":
        pairs = _multitask_items(train_set, vocab)
        model = alsa_mod.MultitaskModel.create(store, embeddings, shared_hidden=config.ae_hidden,
                                               alsa_hidden=config.alsa_hidden, rng=rng)
        train_pairs, dev_pairs = _split_pairs(pairs, config.dev_fraction, config.seed + 1)
        log, best_state, best_dev = train_multitask_core(model, store, train_pairs, adam,
                                                         config.epochs, config.seed, dev_pairs or None)
        meta = {"task": "multitask", "architecture": "multitask", "domain": config.domain,
                "shared_hidden": config.ae_hidden, "alsa_hidden": config.alsa_hidden,
                "embedding_dim": vocab.dim, "seed": config.seed}
    else:
        mode = make_input_mode(config, st_source)
        d_in = vocab.dim + (config.transfer_dim if config.input_mode != "plain" else 0)
        model = alsa_mod.create_alsa_model(store, config.architecture, d_in=d_in,
                                           hidden=config.alsa_hidden, rng=rng)
        train_samples, dev_samples = stratified_dev_split(train_set.samples, config.dev_fraction,
                                                          config.seed + 1)
        log, best_state, best_dev = train_alsa_core(model, store, train_samples, mode, embeddings,
                                                    adam, config.epochs, config.seed, dev_samples or None)
        meta = {"task": "alsa", "architecture": config.architecture, "domain": config.domain,
                "input_mode": config.input_mode, "transfer_dim": config.transfer_dim if config.input_mode != "plain" else 0,
                "hidden": config.alsa_hidden, "embedding_dim": vocab.dim, "d_in": d_in,
                "seed": config.seed, "noise_seed": config.seed, "ae_domain": config.ae_domain}

    result = TrainResult(store, model, log, best_state, store.state_dict(), best_dev, meta)
    if config.checkpoint_dir:
        outdir = Path(config.checkpoint_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        result.best_checkpoint = outdir / f"{config.name}.best.ckpt"
        result.final_checkpoint = outdir / f"{config.name}.final.ckpt"
        save_checkpoint(result.best_checkpoint, result.best_state, meta)
        save_checkpoint(result.final_checkpoint, result.final_state, meta)
        result.log_path = outdir / f"{config.name}.log.jsonl"
        with open(result.log_path, "w", encoding="utf-8") as fh:
            for record in log:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    return result


def _multitask_items(dataset: Dataset, vocab: Vocabulary) -> list[tuple[AlsaSample, list[str]]]:
    bio_by_sentence = {s.sentence_id: s.bio for s in dataset.sentences if s.bio}
    return [(sample, bio_by_sentence[sample.sentence_id])
            for sample in dataset.samples if sample.sentence_id in bio_by_sentence]


def _split_pairs(pairs, fraction: float, seed: int):
    if fraction <= 0 or len(pairs) < 2:
        return list(pairs), []
    order = np.random.default_rng(seed).permutation(len(pairs))
    split_at = max(1, int(len(pairs) * (1 - fraction)))
    return [pairs[i] for i in order[:split_at]], [pairs[i] for i in order[split_at:]]


# -- evaluation --------------------------------------------------------------------------


def build_model_from_meta(store: ParamStore, meta: dict, embeddings: np.ndarray):
    rng = np.random.default_rng(meta.get("seed", 0))
    task = meta.get("task")
    if task == "ae":
        return ae_mod.AeModel.create(store, embeddings, hidden_dim=meta["hidden"], rng=rng)
    if task == "multitask":
        return alsa_mod.MultitaskModel.create(store, embeddings, shared_hidden=meta["shared_hidden"],
                                              alsa_hidden=meta["alsa_hidden"], rng=rng)
    if task == "alsa":
        return alsa_mod.create_alsa_model(store, meta["architecture"], d_in=meta["d_in"],
                                          hidden=meta["hidden"], rng=rng)
    raise ValueError(f"cannot rebuild model for task {task!r}")


def load_model(checkpoint_path, embeddings: np.ndarray,
               expected_architecture: str | None = None) -> tuple[object, ParamStore, dict]:
    values, meta = load_checkpoint(checkpoint_path)
    if expected_architecture and meta.get("architecture") != expected_architecture:
        raise ValueError(
            f"checkpoint architecture {meta.get('architecture')!r} does not match expected {expected_architecture!r}"
        )
    store = ParamStore()
    model = build_model_from_meta(store, meta, embeddings)
    store.load_values(values)
    return model, store, meta


def evaluate_samples(model, samples: Sequence[AlsaSample], mode: InputMode,
                     embeddings: np.ndarray, slices: bool = True) -> MetricsReport:
    """MetricsReport over samples, with class-wise and SA/MA slices."""
    if not samples:
        raise ValueError("evaluate_samples requires at least one sample")
    if isinstance(model, alsa_mod.MultitaskModel):
        preds = [int(np.argmax(alsa_mod.multitask_forward(model, s.token_ids, s.span)[1].data)) for s in samples]
    else:
        preds = [alsa_mod.predict_label(model, s, mode, embeddings) for s in samples]
    golds = [s.label for s in samples]
    report = macro_f1(preds, golds)
    if slices:
        sa, ma = split_sa_ma(list(samples))
        pred_by_id = {id(s): p for s, p in zip(samples, preds)}
        if sa:
            sa_report = macro_f1([pred_by_id[id(s)] for s in sa], [s.label for s in sa])
            report.sa_macro_f1, report.sa_count = sa_report.macro_f1, len(sa)
        if ma:
            ma_report = macro_f1([pred_by_id[id(s)] for s in ma], [s.label for s in ma])
            report.ma_macro_f1, report.ma_count = ma_report.macro_f1, len(ma)
    return report


def input_mode_from_meta(meta: dict, st_source: dict[str, np.ndarray] | None = None) -> InputMode:
    """Reconstruct the input mode a checkpoint was trained with."""
    variant = meta.get("input_mode", "plain")
    if variant == "transfer":
        if st_source is None:
            raise ConfigError("transfer checkpoint needs cached transfer rows")
        return InputMode.transfer(st_source, meta["transfer_dim"])
    if variant == "noise":
        return InputMode.noise(meta["transfer_dim"], seed=meta.get("noise_seed", 0))
    return InputMode.plain()


def evaluate(checkpoint_path, samples: Sequence[AlsaSample], embeddings: np.ndarray,
             st_source: dict[str, np.ndarray] | None = None,
             expected_architecture: str | None = None) -> MetricsReport:
    """Pure function of (checkpoint, dataset): rebuild the model and score."""
    model, _, meta = load_model(checkpoint_path, embeddings, expected_architecture)
    if meta.get("task") == "ae":
        raise ValueError("evaluate scores sentiment checkpoints; tagging models are scored by span F1")
    mode = InputMode.plain() if meta.get("task") == "multitask" else input_mode_from_meta(meta, st_source)
    report = evaluate_samples(model, samples, mode, embeddings)
    report.extras["architecture"] = meta.get("architecture")
    return report


# -- grid search --------------------------------------------------------------------------


def grid_search(config: ExperimentConfig, grid: dict[str, list], workers: int = 1,
                st_source: dict[str, np.ndarray] | None = None) -> list[dict]:
    """Train one run per Cartesian grid point; rank by dev macro F1.

    Ties break toward lower l2_lambda, then lower lr. A failed point is
    recorded with its error message instead of aborting the sweep.
    """
    if not grid:
        raise ConfigError("grid must name at least one hyper-parameter")
    keys = sorted(grid)
    points: list[dict] = [{}]
    for key in keys:
        points = [dict(p, **{key: v}) for p in points for v in grid[key]]

    def run(point: dict) -> dict:
        row: dict = {"params": point}
        try:
            coerced = _coerce_fields(point)
            row["params"] = coerced
            run_config = replace(config, **coerced)
            result = train(run_config, st_source=st_source)
            row["dev_macro_f1"] = result.best_dev
            row["name"] = run_config.name
            row["best_checkpoint"] = str(result.best_checkpoint) if result.best_checkpoint else None
        except Exception as err:  # recorded, not fatal to the sweep
            row["error"] = f"{type(err).__name__}: {err}"
        return row

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, points))
    else:
        rows = [run(p) for p in points]

    def sort_key(row: dict):
        dev = row.get("dev_macro_f1")
        failed = 1 if ("error" in row or dev is None) else 0
        params = row["params"]

        def as_float(key, default):
            try:
                return float(params.get(key, default))
            except (TypeError, ValueError):  # unparseable point recorded as error
                return float("inf")

        return (failed, -(dev or 0.0), as_float("l2_lambda", config.l2_lambda),
                as_float("lr", config.lr))

    rows.sort(key=sort_key)
    return rows


# -- cross-domain transfer ------------------------------------------------------------------


def ae_checkpoint_path(config: ExperimentConfig, domain: str) -> Path:
    if not config.checkpoint_dir:
        raise ConfigError("cross-domain runs need checkpoint_dir")
    return Path(config.checkpoint_dir) / f"ae_{domain}.best.ckpt"


def cross_domain_run(ae_domain: str, alsa_domain: str, architecture: str,
                     config: ExperimentConfig) -> MetricsReport:
    """Export transfer rows from the `ae_domain` extractor over `alsa_domain`
    sentences, train the widened classifier there, and score its test split."""
    ckpt = ae_checkpoint_path(config, ae_domain)
    if not ckpt.exists():
        raise FileNotFoundError(f"missing AE checkpoint {ckpt} for domain {ae_domain!r}")
    run_config = replace(config, task="alsa", architecture=architecture, input_mode="transfer",
                         domain=alsa_domain, ae_domain=ae_domain,
                         run_name=f"{architecture}-t_{alsa_domain}_from_{ae_domain}")
    datasets, vocab = load_domain(run_config)
    ae_model, _, _ = load_model(ckpt, vocab.matrix)
    st_source = {}
    for split_dataset in datasets.values():
        st_source.update(export_transfer_cache(ae_model, dataset_sentence_ids(split_dataset, vocab)))
    result = train(replace(run_config, transfer_dim=ae_model.transfer_dim), st_source=st_source)
    model, store = result.model, result.store
    store.load_values(result.best_state)
    mode = InputMode.transfer(st_source, ae_model.transfer_dim)
    report = evaluate_samples(model, datasets["test"].samples, mode, vocab.matrix)
    report.extras.update({"ae_domain": ae_domain, "alsa_domain": alsa_domain,
                          "architecture": architecture})
    return report


# -- attention dumps ---------------------------------------------------------------------------


def dump_attention(model, samples: Sequence[AlsaSample], mode: InputMode,
                   embeddings: np.ndarray, path=None) -> list[dict]:
    """One JSONL record per (sample, attention head), alphas aligned to the
    attended tokens. Refuses models without attention."""
    if isinstance(model, alsa_mod.TcLstmModel):
        raise ValueError("no attention to dump: tclstm has no attention head")
    if not isinstance(model, (alsa_mod.AtaeModel, alsa_mod.IanModel)):
        raise ValueError(f"no attention to dump for {type(model).__name__}")
    records = []
    for sample in samples:
        word_matrix, _ = alsa_mod.build_input(sample, mode, embeddings)
        logits, alphas = alsa_mod.alsa_forward(model, word_matrix, sample.span)
        predicted = int(np.argmax(logits.data))
        tokens = list(sample.tokens) if sample.tokens else [str(i) for i in sample.token_ids]
        aspect_tokens = tokens[sample.span.start : sample.span.end + 1]
        for head, alpha in alphas.items():
            records.append({
                "sentence_id": sample.sentence_id,
                "span": [sample.span.start, sample.span.end],
                "head": head,
                "tokens": aspect_tokens if head == "aspect" else tokens,
                "alpha": [float(a) for a in alpha.data],
                "predicted": alsa_mod.LABEL_NAMES[predicted],
                "gold": alsa_mod.LABEL_NAMES[sample.label],
            })
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return records


# -- majority baseline ---------------------------------------------------------------------------


def majority_report(train_samples: Sequence[AlsaSample], test_samples: Sequence[AlsaSample]) -> MetricsReport:
    preds = alsa_mod.majority_predict([s.label for s in train_samples], len(test_samples))
    report = macro_f1(preds, [s.label for s in test_samples])
    modal = preds[0] if preds else None
    report.extras["majority_label"] = alsa_mod.LABEL_NAMES[modal] if modal is not None else None
    return report
