"""MSGS and the comparator models (GCN, SGC, FAGCN, RFA-GNN).

All models consume a :class:`GraphContext` (the renormalised propagation
matrix plus both orientations of every edge) and record their forward pass on
an autodiff :class:`~msgs_lab.autodiff.Tape`.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .graph import Graph, PropagationKind, edge_norm, propagation_matrix
from .spectral import Msgs, ResponseCurve, SpectralDecomposition, lambda_grid, response_closed_form

MODEL_KINDS = ("msgs", "gcn", "sgc", "fagcn", "rfagnn")


class ModelError(ValueError):
    pass


class Ablation(enum.Enum):
    NO_MS = "no-ms"
    NO_SAM_NODE = "no-sam-node"
    NO_SAM_SCALE = "no-sam-scale"


@dataclass(frozen=True)
class GraphContext:
    num_nodes: int
    propagation: object  # scipy CSR, D~^-1/2 (A+I) D~^-1/2
    src: np.ndarray
    dst: np.ndarray
    edge_weight: np.ndarray  # 1/sqrt(d_src d_dst), shape (E, 1)

    @classmethod
    def from_graph(cls, g: Graph) -> "GraphContext":
        if g.num_nodes and np.any(g.degrees == 0):
            raise ModelError("graph has isolated nodes; edge normalisation is undefined")
        src, dst = g.directed_edges()
        return cls(
            num_nodes=g.num_nodes,
            propagation=propagation_matrix(g, PropagationKind.GCN).matrix,
            src=src,
            dst=dst,
            edge_weight=edge_norm(g, src, dst)[:, None],
        )


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    in_dim: int
    hidden: int
    classes: int
    layers: int
    eps: float = 0.3
    activation: str = "relu"

    def validate(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        if self.layers < 0 or (self.layers == 0 and self.kind not in ("sgc", "msgs")):
            raise ModelError(f"{self.kind} needs at least one layer, got {self.layers}")
        if not 0.0 <= self.eps <= 1.0:
            raise ModelError(f"eps must lie in [0, 1], got {self.eps}")
        if self.activation not in ("relu", "identity"):
            raise ModelError(f"unknown activation {self.activation!r}")


@dataclass
class ModelParams:
    spec: ModelSpec
    tensors: dict[str, np.ndarray]
    decay: frozenset = field(default_factory=frozenset)

    def copy(self) -> "ModelParams":
        return ModelParams(self.spec, {k: v.copy() for k, v in self.tensors.items()}, self.decay)

    def save(self, path) -> None:
        # JSON floats round-trip exactly and the file is byte-stable across runs
        payload = {
            "spec": asdict(self.spec),
            "decay": sorted(self.decay),
            "tensors": {k: v.tolist() for k, v in sorted(self.tensors.items())},
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path) -> "ModelParams":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        tensors = {
            k: np.array(v, dtype=np.float64).reshape(len(v), -1)
            for k, v in payload["tensors"].items()
        }
        return cls(ModelSpec(**payload["spec"]), tensors, frozenset(payload["decay"]))


def _glorot(rng, rows, cols):
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def init_params(spec: ModelSpec, seed: int = 0) -> ModelParams:
    """Glorot-uniform initialisation; biases start at zero."""
    spec.validate()
    rng = np.random.default_rng(seed)
    m, h, c, k = spec.in_dim, spec.hidden, spec.classes, spec.layers
    t: dict[str, np.ndarray] = {}
    if spec.kind == "gcn":
        dims = [m] + [h] * (k - 1) + [c]
        for l in range(1, k + 1):
            t[f"W{l}"] = _glorot(rng, dims[l - 1], dims[l])
    elif spec.kind == "sgc":
        t["W"] = _glorot(rng, m, c)
    elif spec.kind in ("fagcn", "rfagnn"):
        t["W_in"] = _glorot(rng, m, h)
        for l in range(1, k + 1):
            t[f"g{l}"] = _glorot(rng, 2 * h, 1)
            if spec.kind == "rfagnn":
                t[f"a{l}"] = _glorot(rng, 1, 1)
        t["W_out"] = _glorot(rng, h, c)
    else:
        t["W0"] = _glorot(rng, m, h)
        for l in range(1, k + 1):
            t[f"W{l}"] = _glorot(rng, h, h)
        for s in range(k + 1):
            t[f"g_alpha{s}"] = _glorot(rng, h, 1)
            t[f"g_beta{s}"] = _glorot(rng, 2 * h, 1)
            t[f"W_att{s}"] = _glorot(rng, h, h)
        t["q"] = _glorot(rng, h, 1)
        t["W_out"] = _glorot(rng, h, c)
    t["b"] = np.zeros((1, c))
    decay = frozenset(name for name in t if name.startswith("W"))
    return ModelParams(spec, t, decay)


@dataclass(frozen=True)
class Overrides:
    """Pin MSGS attention outputs to constants.

    ``alpha`` and ``beta`` replace every node / edge coefficient; ``gamma``
    holds one weight per scale, shared by all nodes.
    """

    alpha: float | None = None
    beta: float | None = None
    gamma: tuple | None = None


@dataclass
class ForwardArtifacts:
    logits: np.ndarray
    scale_embeddings: list = field(default_factory=list)
    node_coeffs: list = field(default_factory=list)
    edge_coeffs: list = field(default_factory=list)
    scale_attention: np.ndarray | None = None
    src: np.ndarray | None = None
    dst: np.ndarray | None = None

    @property
    def predictions(self) -> np.ndarray:
        return np.argmax(self.logits, axis=1)


def _act(spec: ModelSpec, x: ad.Var) -> ad.Var:
    return ad.relu(x) if spec.activation == "relu" else x


def _head(p, h: ad.Var, w: str, n: int) -> ad.Var:
    return ad.add(ad.matmul(h, p[w]), ad.expand_rows(p["b"], n))


def _edge_scores(ctx: GraphContext, h: ad.Var, g: ad.Var) -> ad.Var:
    """``tanh(g^T [h_src || h_dst])`` for every directed edge.

    The dot product splits into per-node halves, so it is evaluated on nodes
    and then gathered rather than materialising the E x 2h concatenation.
    """
    width = h.shape[1]
    left = ad.matmul(h, ad.row_slice(g, 0, width))
    right = ad.matmul(h, ad.row_slice(g, width, 2 * width))
    return ad.tanh(ad.add(ad.gather_rows(left, ctx.src), ad.gather_rows(right, ctx.dst)))


def _propagate_edges(tape, ctx: GraphContext, coeff: ad.Var, h: ad.Var) -> ad.Var:
    weights = ad.hadamard(coeff, tape.constant(ctx.edge_weight))
    return ad.edge_aggregate(weights, h, ctx.src, ctx.dst, ctx.num_nodes)


def _gcn(tape, p, spec, ctx, x, rate):
    h = x
    for l in range(1, spec.layers + 1):
        h = ad.sparse_matmul(ctx.propagation, ad.matmul(ad.dropout(h, rate), p[f"W{l}"]))
        if l < spec.layers:
            h = _act(spec, h)
    return ad.add(h, ad.expand_rows(p["b"], ctx.num_nodes)), None


def _sgc(tape, p, spec, ctx, x, rate):
    h = ad.dropout(x, rate)
    for _ in range(spec.layers):
        h = ad.sparse_matmul(ctx.propagation, h)
    return _head(p, h, "W", ctx.num_nodes), None


def _fagcn_like(tape, p, spec, ctx, x, rate, edge_override=None):
    n = ctx.num_nodes
    h = ad.relu(ad.matmul(ad.dropout(x, rate), p["W_in"]))
    hidden = spec.hidden
    coeffs = []
    for l in range(1, spec.layers + 1):
        h = ad.dropout(h, rate)
        if edge_override is None:
            beta = _edge_scores(ctx, h, p[f"g{l}"])
        else:
            beta = tape.constant(np.full((len(ctx.src), 1), float(edge_override)))
        coeffs.append(beta.value[:, 0].copy())
        if spec.kind == "fagcn":
            self_term = ad.scalar_mul(h, spec.eps)
        else:
            alpha = ad.sigmoid(p[f"a{l}"])
            self_term = ad.hadamard(ad.expand_rows(ad.expand_cols(alpha, hidden), n), h)
        h = ad.add(self_term, _propagate_edges(tape, ctx, beta, h))
    logits = _head(p, ad.dropout(h, rate), "W_out", n)
    return logits, ForwardArtifacts(logits.value.copy(), edge_coeffs=coeffs, src=ctx.src, dst=ctx.dst)


def _msgs(tape, p, spec, ctx, x, rate, ablation=None, overrides=None):
    ov = overrides or Overrides()
    if ablation is Ablation.NO_SAM_NODE:
        ov = Overrides(alpha=1.0, beta=0.0, gamma=ov.gamma)
    elif ablation is Ablation.NO_SAM_SCALE:
        ov = Overrides(ov.alpha, ov.beta, gamma=(1.0 / (spec.layers + 1),) * (spec.layers + 1))
    n, hid, k_max = ctx.num_nodes, spec.hidden, spec.layers
    if k_max < 1 and ablation is not Ablation.NO_MS:
        raise ModelError("MSGS needs K >= 1 propagation layers")
    if ov.gamma is not None and len(ov.gamma) != k_max + 1:
        raise ModelError(f"gamma override needs {k_max + 1} entries")

    hs = [ad.dropout(ad.matmul(ad.dropout(x, rate), p["W0"]), rate)]
    for l in range(1, k_max + 1):
        h = _act(spec, ad.sparse_matmul(ctx.propagation, ad.matmul(hs[-1], p[f"W{l}"])))
        hs.append(ad.dropout(h, rate))

    scales = [k_max] if ablation is Ablation.NO_MS else range(k_max + 1)
    zs, alphas, betas, gammas = [], [], [], []
    for k in scales:
        h = hs[k]
        if ov.alpha is None:
            smoothed = ad.sparse_matmul(ctx.propagation, h)
            alpha = ad.sigmoid(ad.matmul(ad.sub(smoothed, h), p[f"g_alpha{k}"]))
        else:
            alpha = tape.constant(np.full((n, 1), float(ov.alpha)))
        if ov.beta is None:
            beta = _edge_scores(ctx, h, p[f"g_beta{k}"])
        else:
            beta = tape.constant(np.full((len(ctx.src), 1), float(ov.beta)))
        z = ad.add(ad.hadamard(ad.expand_cols(alpha, hid), h), _propagate_edges(tape, ctx, beta, h))
        zs.append(z)
        alphas.append(alpha.value[:, 0].copy())
        betas.append(beta.value[:, 0].copy())

    if ablation is Ablation.NO_MS:
        combined = zs[0]
        gamma_matrix = np.ones((n, 1))
    else:
        combined = None
        for k, z in zip(scales, zs):
            if ov.gamma is None:
                gamma = ad.matmul(ad.tanh(ad.matmul(z, p[f"W_att{k}"])), p["q"])
            else:
                gamma = tape.constant(np.full((n, 1), float(ov.gamma[k])))
            gammas.append(gamma.value[:, 0].copy())
            term = ad.hadamard(ad.expand_cols(gamma, hid), z)
            combined = term if combined is None else ad.add(combined, term)
        gamma_matrix = np.stack(gammas, axis=1)

    logits = _head(p, combined, "W_out", n)
    art = ForwardArtifacts(
        logits=logits.value.copy(),
        scale_embeddings=[z.value.copy() for z in zs],
        node_coeffs=alphas,
        edge_coeffs=betas,
        scale_attention=gamma_matrix,
        src=ctx.src,
        dst=ctx.dst,
    )
    return logits, art


def record_forward(
    tape: ad.Tape,
    params: ModelParams,
    ctx: GraphContext,
    features,
    dropout_rate: float = 0.0,
    ablation: Ablation | str | None = None,
    overrides: Overrides | None = None,
):
    """Register ``params`` on ``tape`` and record one forward pass.

    Tensors already registered on the tape under the same name are reused.

    Returns ``(logits_var, artifacts)``; ``artifacts`` is None for GCN/SGC.
    """
    spec = params.spec
    spec.validate()
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (ctx.num_nodes, spec.in_dim):
        raise ModelError(f"features have shape {x.shape}, expected ({ctx.num_nodes}, {spec.in_dim})")
    if ablation is not None:
        ablation = Ablation(ablation)
        if spec.kind != "msgs":
            raise ModelError("ablations apply to MSGS only")
    # parameters already on the tape (e.g. from a gradient check) take precedence
    p = {
        name: tape.params[name] if name in tape.params else tape.param(name, val)
        for name, val in params.tensors.items()
    }
    xv = tape.constant(x)
    if spec.kind == "gcn":
        return _gcn(tape, p, spec, ctx, xv, dropout_rate)
    if spec.kind == "sgc":
        return _sgc(tape, p, spec, ctx, xv, dropout_rate)
    if spec.kind in ("fagcn", "rfagnn"):
        beta = overrides.beta if overrides is not None else None
        return _fagcn_like(tape, p, spec, ctx, xv, dropout_rate, beta)
    return _msgs(tape, p, spec, ctx, xv, dropout_rate, ablation, overrides)


def _context(graph) -> GraphContext:
    return graph if isinstance(graph, GraphContext) else GraphContext.from_graph(graph)


def _check_kind(params: ModelParams, kind: str):
    if params.spec.kind != kind:
        raise ModelError(f"expected {kind} parameters, got {params.spec.kind}")


def msgs_forward(params, graph, features, mode="eval", dropout_rate=0.0, overrides=None, ablation=None):
    """Full MSGS forward pass; returns every intermediate coefficient."""
    _check_kind(params, "msgs")
    tape = ad.Tape(training=(mode == "train"))
    _, art = record_forward(tape, params, _context(graph), features, dropout_rate, ablation, overrides)
    return art


def gcn_forward(params, graph, features):
    _check_kind(params, "gcn")
    logits, _ = record_forward(ad.Tape(), params, _context(graph), features)
    return logits.value.copy()


def sgc_forward(params, graph, features):
    _check_kind(params, "sgc")
    logits, _ = record_forward(ad.Tape(), params, _context(graph), features)
    return logits.value.copy()


def fagcn_forward(params, graph, features, overrides=None):
    _check_kind(params, "fagcn")
    _, art = record_forward(ad.Tape(), params, _context(graph), features, overrides=overrides)
    return art.logits


def rfagnn_forward(params, graph, features, overrides=None):
    _check_kind(params, "rfagnn")
    _, art = record_forward(ad.Tape(), params, _context(graph), features, overrides=overrides)
    return art.logits


def ablation_variant(kind, params, graph, features, overrides=None):
    """Logits of an MSGS ablation: ``no-ms``, ``no-sam-node`` or ``no-sam-scale``."""
    try:
        kind = Ablation(kind)
    except ValueError:
        raise ModelError(f"unknown ablation {kind!r}") from None
    return msgs_forward(params, graph, features, ablation=kind, overrides=overrides).logits


def equivalent_filter_spec(art: ForwardArtifacts) -> Msgs:
    """Average the learned per-node/per-edge coefficients into one MSGS filter."""
    k = len(art.node_coeffs)
    if art.scale_attention is None or art.scale_attention.shape[1] != k:
        raise ModelError("artifacts do not hold a full multi-scale forward pass")
    alphas = [float(np.mean(a)) for a in art.node_coeffs]
    betas = [float(np.mean(b)) if len(b) else 0.0 for b in art.edge_coeffs]
    gammas = [float(np.mean(art.scale_attention[:, s])) for s in range(k)]
    return Msgs(alphas, betas, gammas)


def extract_equivalent_filter(
    art: ForwardArtifacts, decomp: SpectralDecomposition | None = None, lambdas=None
) -> ResponseCurve:
    """Closed-form response of the averaged filter.

    Evaluated on ``lambdas`` if given, else on the distinct eigenvalues of
    ``decomp``, else on the default 256-point grid.
    """
    spec = equivalent_filter_spec(art)
    if lambdas is None and decomp is not None:
        lambdas = np.unique(np.clip(np.round(decomp.eigenvalues, 12), 0.0, 2.0))
    if lambdas is None:
        lambdas = lambda_grid()
    return response_closed_form(spec, lambdas)
