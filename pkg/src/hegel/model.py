"""Hypergraph attention network for sentence salience scoring.

Each layer runs two attention phases per head over the incidence structure:
nodes aggregate into their hyperedges (attention over edge members), then
edges aggregate back into nodes (attention over each node's incident edges).
Heads are concatenated, projected, and wrapped in the usual residual +
LayerNorm + feed-forward sandwich. A two-layer head maps final node states
to per-sentence salience in (0, 1).

The edge-to-node attention score splits into an edge part and a node part:
the activation acts coordinatewise, so scoring the concatenation [edge rep ||
node rep] with one vector equals scoring the two halves separately and adding.
That turns the score matrix into an outer sum, computed densely and masked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError
from .hypergraph import Hypergraph
from . import tensor as T
from .tensor import Tensor

PRED_HIDDEN = 4096


@dataclass(frozen=True)
class ModelConfig:
    """Architecture shape; training-loop settings live in trainer.TrainConfig."""

    d_in: int = 768
    layers: int = 2
    heads: int = 8
    head_dim: int = 128
    ffn_mult: int = 4
    pred_hidden: int = PRED_HIDDEN
    dropout: float = 0.3

    def __post_init__(self):
        if min(self.d_in, self.layers, self.heads, self.head_dim,
               self.ffn_mult, self.pred_hidden) < 1:
            raise ConfigError("model dimensions must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def d_model(self) -> int:
        return self.heads * self.head_dim


@dataclass
class HeadParams:
    node_proj: Tensor   # (d_model, head_dim), shared by both attention phases
    node_score: Tensor  # (head_dim, 1)
    edge_proj: Tensor   # (head_dim, head_dim)
    edge_score: Tensor  # (2 * head_dim, 1), [edge half ; node half]


@dataclass
class LayerParams:
    heads: list[HeadParams]
    out_proj: Tensor
    ln1_gain: Tensor
    ln1_bias: Tensor
    ffn_w1: Tensor
    ffn_b1: Tensor
    ffn_w2: Tensor
    ffn_b2: Tensor
    ln2_gain: Tensor
    ln2_bias: Tensor


@dataclass
class ModelParams:
    config: ModelConfig
    in_proj_w: Tensor
    in_proj_b: Tensor
    layers: list[LayerParams]
    score_hidden: Tensor
    score_out: Tensor

    def named(self) -> list[tuple[str, Tensor]]:
        out: list[tuple[str, Tensor]] = [
            ("in_proj.w", self.in_proj_w),
            ("in_proj.b", self.in_proj_b),
        ]
        for li, layer in enumerate(self.layers):
            for hi, head in enumerate(layer.heads):
                base = f"layers.{li}.heads.{hi}"
                out.append((f"{base}.node_proj", head.node_proj))
                out.append((f"{base}.node_score", head.node_score))
                out.append((f"{base}.edge_proj", head.edge_proj))
                out.append((f"{base}.edge_score", head.edge_score))
            base = f"layers.{li}"
            out.append((f"{base}.out_proj", layer.out_proj))
            out.append((f"{base}.ln1.gain", layer.ln1_gain))
            out.append((f"{base}.ln1.bias", layer.ln1_bias))
            out.append((f"{base}.ffn.w1", layer.ffn_w1))
            out.append((f"{base}.ffn.b1", layer.ffn_b1))
            out.append((f"{base}.ffn.w2", layer.ffn_w2))
            out.append((f"{base}.ffn.b2", layer.ffn_b2))
            out.append((f"{base}.ln2.gain", layer.ln2_gain))
            out.append((f"{base}.ln2.bias", layer.ln2_bias))
        out.append(("score.hidden", self.score_hidden))
        out.append(("score.out", self.score_out))
        return out

    def tensors(self) -> list[Tensor]:
        return [t for _, t in self.named()]

    def copy_data(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named()}

    def load_data(self, named: dict[str, np.ndarray]) -> None:
        for name, t in self.named():
            if name not in named:
                raise FormatError(f"checkpoint missing tensor {name!r}")
            arr = np.asarray(named[name], dtype=t.data.dtype)
            if arr.shape != t.shape:
                raise FormatError(f"tensor {name!r} has shape {arr.shape}, "
                                  f"expected {t.shape}")
            t.data = arr.copy()


def init_params(config: ModelConfig, seed: int = 0, dtype=np.float32) -> ModelParams:
    """Glorot-uniform weights, zero biases, unit LayerNorm gains."""
    rng = np.random.default_rng(seed)
    d = config.d_model
    hd = config.head_dim

    def w(rows, cols):
        return Tensor(T.glorot(rows, cols, rng, dtype), requires_grad=True)

    def zeros(rows, cols):
        return Tensor(np.zeros((rows, cols), dtype=dtype), requires_grad=True)

    def ones(rows, cols):
        return Tensor(np.ones((rows, cols), dtype=dtype), requires_grad=True)

    layers = []
    for _ in range(config.layers):
        heads = [
            HeadParams(
                node_proj=w(d, hd),
                node_score=w(hd, 1),
                edge_proj=w(hd, hd),
                edge_score=w(2 * hd, 1),
            )
            for _ in range(config.heads)
        ]
        layers.append(LayerParams(
            heads=heads,
            out_proj=w(d, d),
            ln1_gain=ones(1, d),
            ln1_bias=zeros(1, d),
            ffn_w1=w(d, config.ffn_mult * d),
            ffn_b1=zeros(1, config.ffn_mult * d),
            ffn_w2=w(config.ffn_mult * d, d),
            ffn_b2=zeros(1, d),
            ln2_gain=ones(1, d),
            ln2_bias=zeros(1, d),
        ))
    return ModelParams(
        config=config,
        in_proj_w=Tensor(T.glorot(config.d_in, d, rng, dtype), requires_grad=True),
        in_proj_b=zeros(1, d),
        layers=layers,
        score_hidden=w(d, config.pred_hidden),
        score_out=w(config.pred_hidden, 1),
    )


@dataclass
class ForwardTrace:
    """Per-layer, per-head attention snapshots captured during a forward pass."""

    node_to_edge: list[list[np.ndarray]] = field(default_factory=list)  # (m, n)
    edge_to_node: list[list[np.ndarray]] = field(default_factory=list)  # (n, m)
    edge_reps: list[list[np.ndarray]] = field(default_factory=list)     # (m, head_dim)
    scores: np.ndarray | None = None                                    # (n,)


def head_attention(head: HeadParams, h_in: Tensor, incidence: np.ndarray,
                   sink: tuple[list, list, list] | None = None) -> Tensor:
    """One head: nodes -> edge reps -> nodes, both phases masked softmax.

    `incidence` is the boolean (n, m) membership matrix. The node projection
    is shared between the member-scoring and edge-scoring phases.
    """
    member_mask = incidence.T          # (m, n): edge row attends over members
    incident_mask = incidence          # (n, m): node row attends over its edges
    hd = head.node_proj.cols

    projected = T.matmul(h_in, head.node_proj)          # (n, hd)
    activated = T.leaky_relu(projected)                 # (n, hd)
    member_score = T.matmul(activated, head.node_score)  # (n, 1)

    alpha = T.masked_softmax(T.transpose(member_score), member_mask)  # (m, n)
    edge_rep = T.leaky_relu(T.matmul(alpha, projected))               # (m, hd)

    edge_proj = T.matmul(edge_rep, head.edge_proj)      # (m, hd)
    edge_part = T.matmul(T.leaky_relu(edge_proj),
                         T.slice_rows(head.edge_score, 0, hd))        # (m, 1)
    node_part = T.matmul(activated,
                         T.slice_rows(head.edge_score, hd, 2 * hd))   # (n, 1)
    pair_score = T.add(node_part, T.transpose(edge_part))             # (n, m)

    beta = T.masked_softmax(pair_score, incident_mask)  # (n, m)
    h_out = T.leaky_relu(T.matmul(beta, edge_proj))     # (n, hd)

    if sink is not None:
        alphas, betas, reps = sink
        alphas.append(alpha.data.copy())
        betas.append(beta.data.copy())
        reps.append(edge_rep.data.copy())
    return h_out


def _multi_head(layer: LayerParams, h_in: Tensor, incidence: np.ndarray,
                sink=None) -> Tensor:
    parts = [head_attention(h, h_in, incidence, sink) for h in layer.heads]
    return T.leaky_relu(T.matmul(T.concat_cols(parts), layer.out_proj))


def transformer_layer(layer: LayerParams, h_in: Tensor, incidence: np.ndarray,
                      *, dropout_rate: float = 0.0,
                      rng: np.random.Generator | None = None,
                      sink=None) -> Tensor:
    """Attention and FFN sub-blocks, each dropout -> residual -> LayerNorm."""
    def drop(x: Tensor) -> Tensor:
        if dropout_rate > 0.0:
            if rng is None:
                raise ConfigError("dropout requires an rng")
            return T.dropout(x, dropout_rate, rng)
        return x

    attn = drop(_multi_head(layer, h_in, incidence, sink))
    mid = T.layer_norm(T.add(attn, h_in), layer.ln1_gain, layer.ln1_bias)
    ffn = T.matmul(T.leaky_relu(T.add(T.matmul(mid, layer.ffn_w1), layer.ffn_b1)),
                   layer.ffn_w2)
    ffn = drop(T.add(ffn, layer.ffn_b2))
    return T.layer_norm(T.add(ffn, mid), layer.ln2_gain, layer.ln2_bias)


def forward(params: ModelParams, node_reps: np.ndarray | Tensor, graph: Hypergraph,
            *, training: bool = False, rng: np.random.Generator | None = None,
            trace: ForwardTrace | None = None) -> Tensor:
    """Salience scores (n, 1) in (0, 1) for each sentence node.

    `node_reps` are position-adjusted sentence embeddings (d_in wide). With
    training=True, dropout draws from `rng`; inference never drops.
    """
    x = node_reps if isinstance(node_reps, Tensor) else Tensor(node_reps)
    if x.rows != graph.n_nodes:
        raise ConfigError(f"node_reps rows {x.rows} != graph nodes {graph.n_nodes}")
    if x.cols != params.config.d_in:
        raise ConfigError(f"node_reps width {x.cols} != d_in {params.config.d_in}")
    incidence = graph.incidence.astype(bool)
    rate = params.config.dropout if training else 0.0

    h = T.add(T.matmul(x, params.in_proj_w), params.in_proj_b)
    for layer in params.layers:
        sink = None
        if trace is not None:
            alphas: list[np.ndarray] = []
            betas: list[np.ndarray] = []
            reps: list[np.ndarray] = []
            trace.node_to_edge.append(alphas)
            trace.edge_to_node.append(betas)
            trace.edge_reps.append(reps)
            sink = (alphas, betas, reps)
        h = transformer_layer(layer, h, incidence, dropout_rate=rate,
                              rng=rng, sink=sink)
    scores = predict_scores(params, h)
    if trace is not None:
        trace.scores = scores.data.reshape(-1).copy()
    return scores


def predict_scores(params: ModelParams, h_final: Tensor) -> Tensor:
    z = T.leaky_relu(T.matmul(h_final, params.score_hidden))
    return T.sigmoid(T.matmul(z, params.score_out))


def bce_loss(scores: Tensor, labels) -> Tensor:
    """Mean binary cross-entropy; predictions clamped to [1e-7, 1 - 1e-7]."""
    y = np.asarray(labels, dtype=scores.data.dtype).reshape(-1, 1)
    if y.shape != scores.shape:
        raise ConfigError(f"labels shape {y.shape} != scores shape {scores.shape}")
    if ((y != 0) & (y != 1)).any():
        raise ConfigError("labels must be 0 or 1")
    yhat = T.clamp(scores, 1e-7, 1.0 - 1e-7)
    pos = T.mul(Tensor(y), T.log(yhat))
    neg = T.mul(Tensor(1.0 - y), T.log(T.add_const(T.neg(yhat), 1.0)))
    return T.neg(T.mean_all(T.add(pos, neg)))


def attention_stats(trace: ForwardTrace, graph: Hypergraph,
                    nodes: list[int] | None = None) -> dict[str, float]:
    """Share of edge-to-node attention mass per edge family.

    Averaged over the chosen nodes and all (layer, head) pairs. Default node
    set is predicted-positive sentences (score > 0.5), falling back to the
    single argmax node. Shares sum to 1 whenever every family key is present.
    """
    if not trace.edge_to_node:
        raise ValueError("trace has no attention snapshots")
    if nodes is None:
        if trace.scores is None:
            raise ValueError("trace has no scores; pass nodes explicitly")
        picked = np.flatnonzero(trace.scores > 0.5)
        if picked.size == 0:
            picked = np.asarray([int(np.argmax(trace.scores))])
        nodes = [int(i) for i in picked]
    if not nodes:
        raise ValueError("empty node set")

    types = np.asarray(graph.edge_types)
    families = ("section", "topic", "keyword")
    masks = {fam: types == fam for fam in families}
    totals = {fam: 0.0 for fam in families}
    count = 0
    for per_layer in trace.edge_to_node:
        for beta in per_layer:
            rows = beta[nodes]
            for fam in families:
                totals[fam] += float(rows[:, masks[fam]].sum())
            count += rows.shape[0]
    if count == 0:
        raise ValueError("no attention rows for the requested nodes")
    return {fam: totals[fam] / count for fam in families}
