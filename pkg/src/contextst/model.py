"""Context-aware transformer: patch embedding, component-wise attention,
context-informed mixture-of-experts, aggregation, and projection.

All math runs through the autodiff Tensor graph so training gets exact
reverse-mode gradients. Expert selection (top-r) is a stopped-gradient
decision: gradients flow only through the softmax weights of the selected
experts.
"""

from __future__ import annotations

import dataclasses
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from contextst import autodiff as ad
from contextst.autodiff import Tensor
from contextst.errors import NonFiniteError, ShapeError

LN_EPS = 1e-8
CHECKPOINT_MAGIC = b"CTST1"


@dataclass(frozen=True)
class ModelConfig:
    n_bands: int          # K decomposed frequency components
    patch_len: int        # P
    lookback: int         # L
    horizon: int          # T
    d_model: int          # D
    n_heads: int          # H
    n_blocks: int         # J
    n_experts: int        # M routed experts (one shared expert on top)
    top_r: int            # r activated experts per token
    d_context: int        # D_C anchor embedding width
    kappa: int = 25       # moving-average half width
    d_ff: int = 0         # expert hidden width; 0 means 4 * d_model
    activation: str = "silu"
    no_context: bool = False

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ShapeError("d_model must be divisible by n_heads")
        if not 1 <= self.top_r <= self.n_experts:
            raise ShapeError("need 1 <= top_r <= n_experts")
        if self.n_bands < 0 or self.n_patches < 1:
            raise ShapeError("need n_bands >= 0 and at least one patch")
        if self.activation not in ad.ACTIVATIONS:
            raise ShapeError(f"unknown activation {self.activation!r}")

    @property
    def n_patches(self):
        return -(-self.lookback // self.patch_len)

    @property
    def ff_width(self):
        return self.d_ff if self.d_ff else 4 * self.d_model

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, payload):
        return cls(**payload)


def param_shapes(cfg: ModelConfig) -> dict:
    """Closed registry of parameter names to shapes."""
    d, dff = cfg.d_model, cfg.ff_width
    shapes = {
        "embed.w": (cfg.patch_len, d),
        "embed.b": (d,),
        "align.w1": (cfg.d_context, d),
        "align.b1": (d,),
        "align.w2": (d, d),
        "align.b2": (d,),
    }
    for j in range(cfg.n_blocks):
        pre = f"block{j}."
        for name in ("wq", "wk", "wv", "wo"):
            shapes[pre + "attn." + name] = (d, d)
        for name in ("bq", "bk", "bv", "bo"):
            shapes[pre + "attn." + name] = (d,)
        for ln in ("ln1", "ln2"):
            shapes[pre + ln + ".g"] = (d,)
            shapes[pre + ln + ".b"] = (d,)
        for e in range(cfg.n_experts + 1):  # last index is the shared expert
            epre = f"{pre}expert{e}."
            shapes[epre + "w1"] = (d, dff)
            shapes[epre + "b1"] = (dff,)
            shapes[epre + "w2"] = (dff, d)
            shapes[epre + "b2"] = (d,)
        shapes[pre + "gate.w"] = (d, cfg.n_experts)
    shapes["proj.w"] = ((cfg.n_patches + 1) * d, cfg.horizon)
    shapes["proj.b"] = (cfg.horizon,)
    return shapes


def init_params(cfg: ModelConfig, seed=0) -> dict:
    """Xavier-uniform matrices, zero biases, unit layer-norm gains, and a
    small-normal gate so early routing stays near uniform."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith("gate.w"):
            data = rng.normal(0.0, 0.02, size=shape)
        elif name.endswith(".g"):
            data = np.ones(shape)
        elif len(shape) == 1:
            data = np.zeros(shape)
        else:
            limit = math.sqrt(6.0 / (shape[0] + shape[1]))
            data = rng.uniform(-limit, limit, size=shape)
        params[name] = Tensor(data, requires_grad=True)
    return params


@dataclass
class ForwardTrace:
    prediction: Tensor                    # (B, T)
    load_loss: Tensor                     # scalar, differentiable through gates
    expert_fraction: np.ndarray           # F_e, averaged over blocks
    gate_probability: np.ndarray          # P_e, averaged over blocks
    routing: list = field(default_factory=list)       # per block: (B, K+1, S, r) indices
    gate_weights: list = field(default_factory=list)  # per block: dense (B, K+1, S, M)


def _layer_norm(x, gain, bias):
    mu = x.mean(axis=-1, keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    normed = centered * ad.power(var + Tensor(LN_EPS), -0.5)
    return normed * gain + bias


def _align(params, x, act):
    hidden = act(x @ params["align.w1"] + params["align.b1"])
    return hidden @ params["align.w2"] + params["align.b2"]


def embed_patches(params, grid):
    """Shared affine map P -> D over every patch of every component row."""
    return ad.as_tensor(grid) @ params["embed.w"] + params["embed.b"]


def inject_anchor_token(tokens, aligned_anchor):
    """Append the aligned variable anchor as one extra token per component."""
    b, k1 = tokens.shape[0], tokens.shape[1]
    d = tokens.shape[3]
    anchor = aligned_anchor.reshape(b, 1, 1, d) + Tensor(np.zeros((b, k1, 1, d)))
    return ad.concat([tokens, anchor], axis=2)


def _mhsa(params, pre, x, cfg):
    b, k1, s, d = x.shape
    heads, dh = cfg.n_heads, d // cfg.n_heads

    def project(w, bias):
        t = x @ params[pre + w] + params[pre + bias]
        return t.reshape(b, k1, s, heads, dh).transpose(0, 1, 3, 2, 4)

    q = project("attn.wq", "attn.bq")
    k = project("attn.wk", "attn.bk")
    v = project("attn.wv", "attn.bv")
    scores = (q @ k.transpose(0, 1, 2, 4, 3)) * (1.0 / math.sqrt(dh))
    attn = ad.softmax(scores, axis=-1)
    ctx = (attn @ v).transpose(0, 1, 3, 2, 4).reshape(b, k1, s, d)
    return ctx @ params[pre + "attn.wo"] + params[pre + "attn.bo"]


def _expert(params, pre, x, act):
    hidden = act(x @ params[pre + "w1"] + params[pre + "b1"])
    return hidden @ params[pre + "w2"] + params[pre + "b2"]


def top_r_gate(logits, r):
    """Select the r largest logits per token and softmax over them only.

    Ties resolve to the lowest expert index (stable sort on negated logits);
    the selection itself is a stopped-gradient decision. Returns (selected
    indices, softmax weights over the selection, dense gate vector with exact
    zeros for unselected experts).
    """
    logits = ad.as_tensor(logits)
    m = logits.shape[-1]
    idx = np.argsort(-logits.data, axis=-1, kind="stable")[..., :r]
    selected = ad.gather(logits, idx, axis=-1)
    weights = ad.softmax(selected, axis=-1)
    dense = ad.scatter(weights, idx, m, axis=-1)
    return idx, weights, dense


def _moe(params, pre, x, gate_signal, cfg):
    """Shared expert plus top-r routed experts, selected per token.

    gate_signal is Align(global anchor) broadcast over tokens, or all-ones in
    the no-context ablation. Returns (output, selected indices, dense gates).
    """
    b, k1, s, d = x.shape
    m, r = cfg.n_experts, cfg.top_r
    logits = (x * gate_signal) @ params[pre + "gate.w"]
    idx, weights, dense = top_r_gate(logits, r)

    act = ad.ACTIVATIONS[cfg.activation]
    outs = [_expert(params, f"{pre}expert{e}.", x, act) for e in range(m)]
    stacked = ad.concat([o.reshape(b, k1, s, 1, d) for o in outs], axis=3)
    idx5 = np.broadcast_to(idx[..., None], (b, k1, s, r, d))
    chosen = ad.gather(stacked, idx5, axis=3)            # (B, K+1, S, r, D)
    routed = (chosen * weights.reshape(b, k1, s, r, 1)).sum(axis=3)
    shared = _expert(params, f"{pre}expert{cfg.n_experts}.", x, act)
    return shared + routed, idx, dense


def forward(params, grids, var_anchors, global_anchor, cfg: ModelConfig) -> ForwardTrace:
    """Run a batch of patch grids through the transformer.

    grids: (B, K+1, N, P); var_anchors: (B, D_C); global_anchor: (D_C,).
    """
    grids = np.asarray(grids, dtype=np.float64)
    if grids.ndim != 4 or grids.shape[1] != cfg.n_bands + 1 \
            or grids.shape[2] != cfg.n_patches or grids.shape[3] != cfg.patch_len:
        raise ShapeError(
            f"grid shape {grids.shape} does not match config "
            f"(B, {cfg.n_bands + 1}, {cfg.n_patches}, {cfg.patch_len})"
        )
    b = grids.shape[0]
    act = ad.ACTIVATIONS[cfg.activation]

    tokens = embed_patches(params, grids)
    aligned_var = _align(params, ad.as_tensor(np.asarray(var_anchors)), act)
    h = inject_anchor_token(tokens, aligned_var)

    if cfg.no_context:
        gate_signal = Tensor(np.ones(cfg.d_model))
    else:
        aligned_global = _align(
            params, ad.as_tensor(np.asarray(global_anchor).reshape(1, -1)), act
        )
        gate_signal = aligned_global.reshape(cfg.d_model)

    m, r = cfg.n_experts, cfg.top_r
    routing, gate_dense = [], []
    fraction_sum = np.zeros(m)
    prob_terms = []
    for j in range(cfg.n_blocks):
        pre = f"block{j}."
        attended = _layer_norm(h + _mhsa(params, pre, h, cfg),
                               params[pre + "ln1.g"], params[pre + "ln1.b"])
        moe_out, idx, dense = _moe(params, pre, attended, gate_signal, cfg)
        h = _layer_norm(moe_out + attended,
                        params[pre + "ln2.g"], params[pre + "ln2.b"])
        routing.append(idx)
        gate_dense.append(dense)
        counts = np.zeros(m)
        np.add.at(counts, idx.ravel(), 1.0)
        fraction_sum += counts / idx.size
        prob_terms.append(dense.reshape(-1, m).mean(axis=0))

    mean_tokens = h.mean(axis=1)                       # (B, S, D)
    flat = mean_tokens.reshape(b, (cfg.n_patches + 1) * cfg.d_model)
    prediction = flat @ params["proj.w"] + params["proj.b"]

    fraction = fraction_sum / cfg.n_blocks
    prob = prob_terms[0] if cfg.n_blocks == 1 else (
        ad.concat([p.reshape(1, m) for p in prob_terms], axis=0).mean(axis=0)
    )
    load_loss = (Tensor(fraction) * prob).sum() * float(m)
    return ForwardTrace(
        prediction=prediction,
        load_loss=load_loss,
        expert_fraction=fraction,
        gate_probability=prob.data.copy(),
        routing=routing,
        gate_weights=[g.data.copy() for g in gate_dense],
    )


def gradient(params, loss: Tensor) -> dict:
    """Exact reverse-mode gradients of a scalar loss for every parameter."""
    if not np.isfinite(loss.data):
        raise NonFiniteError("loss is non-finite")
    for p in params.values():
        p.zero_grad()
    loss.backward()
    grads = {}
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient in {name!r}")
        grads[name] = g
    return grads


def save_checkpoint(path, params, cfg: ModelConfig):
    """Binary weight records (f32 little-endian) plus a JSON config sidecar."""
    names = sorted(params)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            raw = name.encode("utf-8")
            arr = np.ascontiguousarray(params[name].data, dtype="<f4")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(arr.tobytes())
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path):
    """Read a checkpoint and verify it against the closed shape registry."""
    with open(str(path) + ".json", "r", encoding="utf-8") as fh:
        cfg = ModelConfig.from_dict(json.load(fh))
    expected = param_shapes(cfg)
    params = {}
    with open(path, "rb") as fh:
        if fh.read(5) != CHECKPOINT_MAGIC:
            raise ShapeError(f"{path}: not a checkpoint file")
        (count,) = struct.unpack("<I", fh.read(4))
        for _ in range(count):
            (name_len,) = struct.unpack("<I", fh.read(4))
            name = fh.read(name_len).decode("utf-8")
            (rank,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack("<" + "I" * rank, fh.read(4 * rank))
            payload = fh.read(4 * int(np.prod(shape, dtype=np.int64)))
            arr = np.frombuffer(payload, dtype="<f4").reshape(shape).astype(np.float64)
            if name not in expected:
                raise ShapeError(f"{path}: unknown weight {name!r}")
            if tuple(shape) != tuple(expected[name]):
                raise ShapeError(
                    f"{path}: {name!r} has shape {shape}, expected {expected[name]}"
                )
            params[name] = Tensor(arr, requires_grad=True)
    missing = set(expected) - set(params)
    if missing:
        raise ShapeError(f"{path}: missing weights {sorted(missing)[:3]}...")
    return params, cfg
