"""Message passing architectures and the fingerprint baseline.

Four graph models (gcn, gat, nf, mpnn) share one contract: k rounds of
message passing over a batch, a permutation-invariant readout, then an MLP
head that emits one value per task (logits for classification). The
ecfp-mlp baseline feeds folded fingerprints straight to the same head.

Graph layers add self-loops internally where the architecture calls for
them; batches never store self-edges. GCN and GAT consume node features
only; MPNN additionally requires edge features for its edge-conditioned
messages. Dropout lives in the MLP head and is keyed, not stateful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    add,
    concat_cols,
    constant,
    dropout,
    gather_rows,
    gru_cell,
    edge_matvec,
    leaky_relu,
    matmul,
    mul,
    relu,
    segment_max,
    segment_mean,
    segment_softmax,
    segment_sum,
    sigmoid,
)
from .graphs import GraphBatch
from .rng import Rng, derive

MODEL_KINDS = ("gcn", "gat", "nf", "mpnn", "ecfp-mlp")
READOUT_KINDS = ("sum", "mean", "max", "weighted_sum")
TASK_TYPES = ("classification", "regression")

_LEAKY_SLOPE = 0.2


class ModelError(ValueError):
    pass


@dataclass
class ModelSpec:
    kind: str
    n_tasks: int
    task_type: str = "classification"
    node_feat_dim: int = 74
    edge_feat_dim: int = 12
    num_rounds: int = 2
    hidden_size: int = 64
    num_heads: int = 4
    readout: str | None = None  # default: weighted_sum for mpnn, mean otherwise
    predictor_hidden: tuple[int, ...] = (64,)
    dropout: float = 0.1
    fp_bits: int = 2048
    fp_radius: int = 2

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ModelError(f"unknown model kind '{self.kind}', expected one of {MODEL_KINDS}")
        if self.task_type not in TASK_TYPES:
            raise ModelError(f"unknown task type '{self.task_type}'")
        if self.n_tasks < 1:
            raise ModelError("n_tasks must be at least 1")
        if self.readout is None:
            self.readout = "weighted_sum" if self.kind == "mpnn" else "mean"
        if self.readout not in READOUT_KINDS:
            raise ModelError(f"unknown readout '{self.readout}', expected one of {READOUT_KINDS}")
        if self.kind != "ecfp-mlp" and self.num_rounds < 1:
            raise ModelError("graph models need at least one message passing round")
        if self.num_heads < 1:
            raise ModelError("num_heads must be at least 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ModelError("dropout must be in [0, 1)")
        if self.kind == "mpnn" and self.edge_feat_dim < 1:
            raise ModelError("mpnn requires edge features")
        self.predictor_hidden = tuple(int(w) for w in self.predictor_hidden)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_tasks": self.n_tasks,
            "task_type": self.task_type,
            "node_feat_dim": self.node_feat_dim,
            "edge_feat_dim": self.edge_feat_dim,
            "num_rounds": self.num_rounds,
            "hidden_size": self.hidden_size,
            "num_heads": self.num_heads,
            "readout": self.readout,
            "predictor_hidden": list(self.predictor_hidden),
            "dropout": self.dropout,
            "fp_bits": self.fp_bits,
            "fp_radius": self.fp_radius,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        data = dict(data)
        data["predictor_hidden"] = tuple(data.get("predictor_hidden", (64,)))
        return cls(**data)


def _graph_output_dim(spec: ModelSpec) -> int:
    if spec.kind == "gat":
        return spec.hidden_size * spec.num_heads
    return spec.hidden_size


def expected_param_shapes(spec: ModelSpec) -> dict[str, tuple[int, int]]:
    """Parameter name to shape map; the single source of truth for init."""
    shapes: dict[str, tuple[int, int]] = {}
    if spec.kind in ("gcn", "nf"):
        dim = spec.node_feat_dim
        for i in range(spec.num_rounds):
            shapes[f"layer{i}.weight"] = (dim, spec.hidden_size)
            shapes[f"layer{i}.bias"] = (1, spec.hidden_size)
            dim = spec.hidden_size
    elif spec.kind == "gat":
        dim = spec.node_feat_dim
        for i in range(spec.num_rounds):
            for h in range(spec.num_heads):
                shapes[f"layer{i}.head{h}.weight"] = (dim, spec.hidden_size)
                shapes[f"layer{i}.head{h}.attn_src"] = (spec.hidden_size, 1)
                shapes[f"layer{i}.head{h}.attn_dst"] = (spec.hidden_size, 1)
            dim = spec.hidden_size * spec.num_heads
    elif spec.kind == "mpnn":
        d = spec.hidden_size
        shapes["proj.weight"] = (spec.node_feat_dim, d)
        shapes["proj.bias"] = (1, d)
        shapes["edge.w1"] = (spec.edge_feat_dim, d)
        shapes["edge.b1"] = (1, d)
        shapes["edge.w2"] = (d, d * d)
        shapes["edge.b2"] = (1, d * d)
        for gate in ("z", "r", "c"):
            shapes[f"gru.w{gate}"] = (d, d)
            shapes[f"gru.u{gate}"] = (d, d)
            shapes[f"gru.b{gate}"] = (1, d)

    if spec.kind == "ecfp-mlp":
        dim = spec.fp_bits
    else:
        dim = _graph_output_dim(spec)
        if spec.readout == "weighted_sum":
            shapes["readout.gate_weight"] = (dim, 1)
            shapes["readout.gate_bias"] = (1, 1)
    for i, width in enumerate(spec.predictor_hidden):
        shapes[f"head{i}.weight"] = (dim, width)
        shapes[f"head{i}.bias"] = (1, width)
        dim = width
    shapes["out.weight"] = (dim, spec.n_tasks)
    shapes["out.bias"] = (1, spec.n_tasks)
    return shapes


def init_params(spec: ModelSpec, seed: int = 0) -> dict[str, Tensor]:
    """Glorot-uniform weights, zero biases, from the seeded generator."""
    rng = Rng(derive(seed, 0x1A17))
    params: dict[str, Tensor] = {}
    for name, (rows, cols) in expected_param_shapes(spec).items():
        last = name.split(".")[-1]
        is_bias = last in ("bias", "gate_bias") or (len(last) == 2 and last[0] == "b")
        if is_bias:
            values = np.zeros((rows, cols))
        else:
            limit = np.sqrt(6.0 / (rows + cols))
            values = np.array(
                [(2.0 * rng.uniform() - 1.0) * limit for _ in range(rows * cols)]
            ).reshape(rows, cols)
        params[name] = Tensor(values, requires_grad=True)
    return params


def check_params(spec: ModelSpec, params: dict[str, Tensor]) -> None:
    expected = expected_param_shapes(spec)
    missing = sorted(set(expected) - set(params))
    extra = sorted(set(params) - set(expected))
    if missing or extra:
        raise ModelError(f"parameters do not match spec (missing={missing}, extra={extra})")
    for name, shape in expected.items():
        if tuple(params[name].shape) != shape:
            raise ModelError(
                f"parameter '{name}' has shape {params[name].shape}, expected {shape}"
            )


# layer forwards

def gcn_layer_forward(batch: GraphBatch, h: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Symmetrically normalized graph convolution with implicit self-loops."""
    if h.shape[0] != batch.num_nodes:
        raise ModelError(f"node matrix rows {h.shape[0]} != batch nodes {batch.num_nodes}")
    hw = matmul(h, weight)
    deg = np.bincount(batch.dst, minlength=batch.num_nodes).astype(np.float64) + 1.0
    edge_coef = constant((1.0 / np.sqrt(deg[batch.src] * deg[batch.dst])).reshape(-1, 1))
    self_coef = constant((1.0 / deg).reshape(-1, 1))
    messages = mul(gather_rows(hw, batch.src), edge_coef)
    aggregated = segment_sum(messages, batch.dst, batch.num_nodes)
    return relu(add(add(aggregated, mul(hw, self_coef)), bias))


def gat_layer_forward(
    batch: GraphBatch,
    h: Tensor,
    head_weights: list[Tensor],
    head_attn_src: list[Tensor],
    head_attn_dst: list[Tensor],
) -> Tensor:
    """Multi-head attention layer; head outputs are concatenated."""
    if h.shape[0] != batch.num_nodes:
        raise ModelError(f"node matrix rows {h.shape[0]} != batch nodes {batch.num_nodes}")
    n = batch.num_nodes
    loop = np.arange(n, dtype=np.int64)
    src_all = np.concatenate([batch.src, loop])
    dst_all = np.concatenate([batch.dst, loop])
    outputs = []
    for weight, attn_src, attn_dst in zip(head_weights, head_attn_src, head_attn_dst):
        hw = matmul(h, weight)
        score_src = matmul(hw, attn_src)
        score_dst = matmul(hw, attn_dst)
        scores = leaky_relu(
            add(gather_rows(score_src, src_all), gather_rows(score_dst, dst_all)),
            _LEAKY_SLOPE,
        )
        att = segment_softmax(scores, dst_all, n)
        weighted = mul(gather_rows(hw, src_all), att)
        outputs.append(relu(segment_sum(weighted, dst_all, n)))
    return outputs[0] if len(outputs) == 1 else concat_cols(outputs)


def nf_layer_forward(batch: GraphBatch, h: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Neural-fingerprint convolution: sigmoid(W (h_i + sum of neighbors) + b)."""
    if h.shape[0] != batch.num_nodes:
        raise ModelError(f"node matrix rows {h.shape[0]} != batch nodes {batch.num_nodes}")
    neighbor_sum = segment_sum(gather_rows(h, batch.src), batch.dst, batch.num_nodes)
    return sigmoid(add(matmul(add(h, neighbor_sum), weight), bias))


def mpnn_forward(
    batch: GraphBatch,
    node_feats: Tensor,
    edge_feats: Tensor | None,
    params: dict[str, Tensor],
    num_rounds: int,
) -> Tensor:
    """Edge-network message passing with a shared GRU update.

    Each edge feature vector maps through a two-layer perceptron to a d x d
    matrix that transforms the sender state; messages sum per receiver and a
    GRU refreshes the node state. ``num_rounds`` of 0 returns the initial
    projection unchanged.
    """
    if edge_feats is None:
        raise ModelError("mpnn requires edge features")
    h = add(matmul(node_feats, params["proj.weight"]), params["proj.bias"])
    hidden = relu(add(matmul(edge_feats, params["edge.w1"]), params["edge.b1"]))
    edge_matrices = add(matmul(hidden, params["edge.w2"]), params["edge.b2"])
    for _ in range(num_rounds):
        sender = gather_rows(h, batch.src)
        messages = segment_sum(edge_matvec(edge_matrices, sender), batch.dst, batch.num_nodes)
        h = gru_cell(
            messages, h,
            params["gru.wz"], params["gru.uz"], params["gru.bz"],
            params["gru.wr"], params["gru.ur"], params["gru.br"],
            params["gru.wc"], params["gru.uc"], params["gru.bc"],
        )
    return h


def readout(
    batch: GraphBatch,
    h: Tensor,
    kind: str,
    gate_weight: Tensor | None = None,
    gate_bias: Tensor | None = None,
) -> Tensor:
    """Aggregate node states into one row per graph."""
    if h.shape[0] != batch.num_nodes:
        raise ModelError(f"node matrix rows {h.shape[0]} != batch nodes {batch.num_nodes}")
    if kind == "sum":
        return segment_sum(h, batch.graph_id, batch.num_graphs)
    if kind == "mean":
        return segment_mean(h, batch.graph_id, batch.num_graphs)
    if kind == "max":
        return segment_max(h, batch.graph_id, batch.num_graphs)
    if kind == "weighted_sum":
        if gate_weight is None or gate_bias is None:
            raise ModelError("weighted_sum readout needs gate parameters")
        gate = sigmoid(add(matmul(h, gate_weight), gate_bias))
        return segment_sum(mul(h, gate), batch.graph_id, batch.num_graphs)
    raise ModelError(f"unknown readout kind '{kind}', expected one of {READOUT_KINDS}")


def _mlp_head(
    x: Tensor,
    spec: ModelSpec,
    params: dict[str, Tensor],
    train: bool,
    dropout_key: int,
) -> Tensor:
    for i in range(len(spec.predictor_hidden)):
        x = relu(add(matmul(x, params[f"head{i}.weight"]), params[f"head{i}.bias"]))
        if train and spec.dropout > 0.0:
            x = dropout(x, spec.dropout, derive(dropout_key, i))
    return add(matmul(x, params["out.weight"]), params["out.bias"])


def model_forward(
    spec: ModelSpec,
    params: dict[str, Tensor],
    data,
    train: bool = False,
    dropout_key: int = 0,
) -> Tensor:
    """Predictions [n_graphs x n_tasks]; logits for classification tasks."""
    check_params(spec, params)

    if spec.kind == "ecfp-mlp":
        if isinstance(data, GraphBatch):
            raise ModelError("ecfp-mlp expects a fingerprint matrix, not a graph batch")
        x = data if isinstance(data, Tensor) else constant(np.asarray(data, dtype=np.float64))
        if x.shape[1] != spec.fp_bits:
            raise ModelError(f"fingerprint width {x.shape[1]} != spec fp_bits {spec.fp_bits}")
        return _mlp_head(x, spec, params, train, derive(dropout_key, 0xECF9))

    if not isinstance(data, GraphBatch):
        raise ModelError(f"{spec.kind} expects a GraphBatch")
    batch = data
    h = constant(batch.node_feats)

    if spec.kind == "gcn":
        for i in range(spec.num_rounds):
            h = gcn_layer_forward(batch, h, params[f"layer{i}.weight"], params[f"layer{i}.bias"])
    elif spec.kind == "nf":
        for i in range(spec.num_rounds):
            h = nf_layer_forward(batch, h, params[f"layer{i}.weight"], params[f"layer{i}.bias"])
    elif spec.kind == "gat":
        for i in range(spec.num_rounds):
            h = gat_layer_forward(
                batch,
                h,
                [params[f"layer{i}.head{j}.weight"] for j in range(spec.num_heads)],
                [params[f"layer{i}.head{j}.attn_src"] for j in range(spec.num_heads)],
                [params[f"layer{i}.head{j}.attn_dst"] for j in range(spec.num_heads)],
            )
    else:  # mpnn
        edge_feats = constant(batch.edge_feats) if batch.edge_feats is not None else None
        h = mpnn_forward(batch, h, edge_feats, params, spec.num_rounds)

    graph_repr = readout(
        batch,
        h,
        spec.readout,
        params.get("readout.gate_weight"),
        params.get("readout.gate_bias"),
    )
    return _mlp_head(graph_repr, spec, params, train, derive(dropout_key, 0x6EAD))
