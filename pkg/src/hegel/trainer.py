"""Training loop, early stopping, checkpoints, and summary selection.

One document is one optimization step: the whole corpus rarely fits a fixed
node count, and per-document graphs make batching across documents useless.
Validation after every epoch scores generated summaries with ROUGE-1 F, keeps
the best parameter snapshot, and stops after `patience` consecutive epochs
without improvement. Given the same config and seed, two runs produce
bit-identical checkpoints.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .corpus import Document, tokenize
from .embed import PositionalConfig, initial_node_reps
from .errors import ConfigError, FormatError, NumericError
from .hypergraph import Hypergraph
from .model import ModelConfig, ModelParams, bce_loss, forward, init_params
from .rouge import rouge_n
from . import tensor as T

BUDGET_WORDS_ARXIV = 203
BUDGET_WORDS_PUBMED = 220


@dataclass(frozen=True)
class TrainConfig:
    """Reference configuration; every knob has its production default."""

    lr: float = 1e-4
    dropout: float = 0.3
    epochs: int = 20
    patience: int = 3
    seed: int = 0
    layers: int = 2
    heads: int = 8
    head_dim: int = 128
    d_in: int = 768
    ffn_mult: int = 4
    pred_hidden: int = 4096
    gamma1: float = 0.001
    gamma2: float = 0.001
    min_deg: int = 5
    max_deg: int = 25
    topics_max: int = 100
    keywords: int = 20
    budget_words: int = BUDGET_WORDS_ARXIV
    max_sents: int = 10

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.patience < 0:
            raise ConfigError("patience must be >= 0")
        if self.patience > self.epochs:
            raise ConfigError("patience cannot exceed epochs")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if min(self.layers, self.heads, self.head_dim, self.d_in,
               self.topics_max, self.keywords, self.budget_words,
               self.max_sents) < 1:
            raise ConfigError("structural settings must be positive")
        if self.min_deg < 1 or self.max_deg < self.min_deg:
            raise ConfigError("degree band must satisfy 1 <= min <= max")

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            d_in=self.d_in,
            layers=self.layers,
            heads=self.heads,
            head_dim=self.head_dim,
            ffn_mult=self.ffn_mult,
            pred_hidden=self.pred_hidden,
            dropout=self.dropout,
        )

    def positional(self) -> PositionalConfig:
        return PositionalConfig(gamma1=self.gamma1, gamma2=self.gamma2)


@dataclass
class Checkpoint:
    params: ModelParams
    config: TrainConfig
    epoch: int
    val_rouge1_f: float

    def save(self, path, manifest_hash: str = "") -> None:
        header = {
            "hyperparameters": asdict(self.config),
            "epoch": self.epoch,
            "val_rouge1_f": self.val_rouge1_f,
            "manifest_hash": manifest_hash,
        }
        T.save_tensors(path, dict(self.params.copy_data().items()), header)

    @classmethod
    def load(cls, path) -> "Checkpoint":
        header, tensors = T.load_tensors(path)
        hp = header.get("hyperparameters")
        if not isinstance(hp, dict):
            raise FormatError(f"{path}: header missing hyperparameters")
        try:
            config = TrainConfig(**hp)
        except (TypeError, ConfigError) as exc:
            raise FormatError(f"{path}: bad hyperparameters: {exc}") from exc
        params = init_params(config.model_config(), seed=0)
        params.load_data(tensors)
        return cls(params=params, config=config,
                   epoch=int(header.get("epoch", 0)),
                   val_rouge1_f=float(header.get("val_rouge1_f", 0.0)))


def select_summary(scores, document: Document, budget_words: int,
                   max_sents: int) -> list[int]:
    """Pick sentences by descending score under word and count budgets.

    Walk the ranking (ties prefer the smaller index), stopping at the first
    sentence that would blow the word budget. If even the top sentence does,
    emit it alone: an empty summary is useless. Returned indices are in
    document order.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if s.shape[0] != document.n_sentences:
        raise ConfigError(f"scores cover {s.shape[0]} sentences, document has "
                          f"{document.n_sentences}")
    ranked = sorted(range(s.shape[0]), key=lambda i: (-s[i], i))
    return _fill_budget(ranked, document, budget_words, max_sents)


def lead_select(document: Document, budget_words: int, max_sents: int) -> list[int]:
    """LEAD baseline: first sentences under the same budgets."""
    return _fill_budget(range(document.n_sentences), document,
                        budget_words, max_sents)


def _fill_budget(order, document: Document, budget_words: int,
                 max_sents: int) -> list[int]:
    lengths = [len(tokenize(s)) for s in document.sentences]
    chosen: list[int] = []
    used = 0
    for i in order:
        if len(chosen) >= max_sents:
            break
        if used + lengths[i] > budget_words:
            break
        chosen.append(i)
        used += lengths[i]
    if not chosen:
        first = next(iter(order), None)
        if first is not None:
            chosen.append(first)
    return sorted(chosen)


def summary_rouge1(document: Document, indices: list[int]) -> float:
    candidate: list[str] = []
    for i in sorted(indices):
        candidate.extend(tokenize(document.sentences[i]))
    reference: list[str] = []
    for line in document.abstract:
        reference.extend(tokenize(line))
    return rouge_n(candidate, reference, 1).f1


def evaluate_params(params: ModelParams, docs: list[Document],
                    graphs: dict[str, Hypergraph],
                    node_reps: dict[str, np.ndarray],
                    config: TrainConfig) -> float:
    """Mean validation ROUGE-1 F of generated summaries."""
    if not docs:
        raise ConfigError("validation set is empty")
    total = 0.0
    for doc in docs:
        scores = forward(params, node_reps[doc.id], graphs[doc.id])
        picked = select_summary(scores.data.reshape(-1), doc,
                                config.budget_words, config.max_sents)
        total += summary_rouge1(doc, picked)
    return total / len(docs)


def prepare_node_reps(docs: list[Document], embeddings: dict[str, np.ndarray],
                      config: TrainConfig) -> dict[str, np.ndarray]:
    pos = config.positional()
    out = {}
    for doc in docs:
        out[doc.id] = initial_node_reps(
            np.asarray(embeddings[doc.id], dtype=np.float32), doc, pos)
    return out


def train(train_docs: list[Document], val_docs: list[Document],
          graphs: dict[str, Hypergraph], embeddings: dict[str, np.ndarray],
          labels: dict[str, list[int]], config: TrainConfig,
          log=None) -> Checkpoint:
    """Train from scratch and return the best-validation checkpoint.

    `embeddings` maps document id to raw sentence vectors; position offsets
    are added here. `labels` maps document id to per-sentence 0/1 oracle
    labels. A non-finite loss aborts with the epoch and document id. `log`,
    when given, receives one dict per epoch.
    """
    if not train_docs:
        raise ConfigError("training set is empty")
    for doc in train_docs + val_docs:
        if doc.id not in graphs:
            raise ConfigError(f"no graph for document {doc.id!r}")
        if doc.id not in embeddings:
            raise ConfigError(f"no embeddings for document {doc.id!r}")
    for doc in train_docs:
        if doc.id not in labels:
            raise ConfigError(f"no labels for document {doc.id!r}")
        if len(labels[doc.id]) != doc.n_sentences:
            raise ConfigError(f"labels for {doc.id!r} cover "
                              f"{len(labels[doc.id])} of {doc.n_sentences} sentences")

    seed_seq = np.random.SeedSequence(config.seed)
    init_seed, shuffle_seed, drop_seed = (int(s.generate_state(1)[0])
                                          for s in seed_seq.spawn(3))
    shuffle_rng = np.random.default_rng(shuffle_seed)
    dropout_rng = np.random.default_rng(drop_seed)

    params = init_params(config.model_config(), seed=init_seed)
    optimizer = T.Adam(params.tensors(), lr=config.lr)
    reps = prepare_node_reps(train_docs + val_docs, embeddings, config)

    best_data: dict[str, np.ndarray] | None = None
    best_epoch = 0
    best_val = -math.inf
    stale = 0
    order = list(range(len(train_docs)))

    for epoch in range(1, config.epochs + 1):
        shuffle_rng.shuffle(order)
        epoch_loss = 0.0
        for idx in order:
            doc = train_docs[idx]
            scores = forward(params, reps[doc.id], graphs[doc.id],
                             training=True, rng=dropout_rng)
            loss = bce_loss(scores, labels[doc.id])
            value = loss.item()
            if not math.isfinite(value):
                raise NumericError(f"non-finite loss at epoch {epoch}, "
                                   f"document {doc.id!r}")
            optimizer.zero_grad()
            T.backward(loss)
            optimizer.step()
            epoch_loss += value
        epoch_loss /= len(train_docs)

        val_score = evaluate_params(params, val_docs, graphs, reps, config)
        improved = val_score > best_val
        if improved:
            best_val = val_score
            best_epoch = epoch
            best_data = params.copy_data()
            stale = 0
        else:
            stale += 1
        if log is not None:
            log({"event": "epoch", "epoch": epoch,
                 "train_loss": round(epoch_loss, 6),
                 "val_rouge1_f": round(val_score, 6),
                 "improved": improved})
        if stale >= config.patience:
            break

    assert best_data is not None
    best_params = init_params(config.model_config(), seed=init_seed)
    best_params.load_data(best_data)
    return Checkpoint(params=best_params, config=config,
                      epoch=best_epoch, val_rouge1_f=best_val)


def with_overrides(config: TrainConfig, **kw) -> TrainConfig:
    """Functional update helper for CLI flag plumbing."""
    return replace(config, **kw)
