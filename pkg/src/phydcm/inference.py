"""Deterministic forward-pass engine for the desk-scale hybrid classifier.

Fixed schedule (medvit-lite v1): strided conv stem, two residual conv
blocks, two more strided convs, tokenization of the 14x14 feature map
into 196 tokens, two pre-norm single-head transformer blocks, global
average pooling over tokens, and a dense softmax head over 4 classes.

Numerics are pinned for cross-implementation agreement: every primitive
accumulates in float64 and rounds to float32 on return, so activations
crossing layer boundaries carry 32-bit values.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SchemaMismatch, ShapeMismatch, WeightsMissing

INPUT_SHAPE = (1, 224, 224)
NUM_CLASSES = 4
TOKEN_DIM = 32
NUM_TOKENS = 196
LN_EPS = 1e-5


def _schedule() -> list[tuple[str, tuple[int, ...]]]:
    entries: list[tuple[str, tuple[int, ...]]] = [
        ("stem.w", (8, 1, 3, 3)),
        ("stem.b", (8,)),
        ("down1.w", (16, 8, 3, 3)),
        ("down1.b", (16,)),
    ]
    for res in ("res1", "res2"):
        for conv in ("c1", "c2"):
            entries.append((f"{res}.{conv}.w", (16, 16, 3, 3)))
            entries.append((f"{res}.{conv}.b", (16,)))
    entries += [
        ("down2.w", (32, 16, 3, 3)),
        ("down2.b", (32,)),
        ("down3.w", (32, 32, 3, 3)),
        ("down3.b", (32,)),
    ]
    d = TOKEN_DIM
    for tb in ("tb1", "tb2"):
        entries += [
            (f"{tb}.ln1.g", (d,)),
            (f"{tb}.ln1.b", (d,)),
            (f"{tb}.q.w", (d, d)),
            (f"{tb}.q.b", (d,)),
            (f"{tb}.k.w", (d, d)),
            (f"{tb}.k.b", (d,)),
            (f"{tb}.v.w", (d, d)),
            (f"{tb}.v.b", (d,)),
            (f"{tb}.o.w", (d, d)),
            (f"{tb}.o.b", (d,)),
            (f"{tb}.ln2.g", (d,)),
            (f"{tb}.ln2.b", (d,)),
            (f"{tb}.mlp.fc1.w", (d, 2 * d)),
            (f"{tb}.mlp.fc1.b", (2 * d,)),
            (f"{tb}.mlp.fc2.w", (2 * d, d)),
            (f"{tb}.mlp.fc2.b", (d,)),
        ]
    entries += [("head.w", (d, NUM_CLASSES)), ("head.b", (NUM_CLASSES,))]
    return entries


#: ordered (name, shape) table every weight file must match exactly
MODEL_SCHEDULE: list[tuple[str, tuple[int, ...]]] = _schedule()
MODEL_SHAPES: dict[str, tuple[int, ...]] = dict(MODEL_SCHEDULE)

#: declared activation shapes, checked by the shape-audit tests
ACTIVATION_SHAPES = {
    "stem": (8, 112, 112),
    "down1": (16, 56, 56),
    "res1": (16, 56, 56),
    "res2": (16, 56, 56),
    "down2": (32, 28, 28),
    "down3": (32, 14, 14),
    "tokens": (NUM_TOKENS, TOKEN_DIM),
    "tb1": (NUM_TOKENS, TOKEN_DIM),
    "tb2": (NUM_TOKENS, TOKEN_DIM),
    "gap": (TOKEN_DIM,),
    "logits": (NUM_CLASSES,),
    "probs": (NUM_CLASSES,),
}


def validate_weight_table(table: dict[str, np.ndarray]) -> None:
    """Reject any deviation from the schedule's names, order, or shapes."""
    names = list(table.keys())
    expected = [name for name, _ in MODEL_SCHEDULE]
    if len(names) != len(expected):
        raise SchemaMismatch(
            names[len(expected)] if len(names) > len(expected) else expected[len(names)],
            f"weight table has {len(names)} tensors, schedule has {len(expected)}",
        )
    for got, want in zip(names, expected):
        if got != want:
            raise SchemaMismatch(got, f"tensor {got!r} where {want!r} was expected")
    for name, shape in MODEL_SCHEDULE:
        arr = np.asarray(table[name])
        if arr.shape != shape:
            raise SchemaMismatch(name, f"tensor {name!r} has shape {arr.shape}, schedule wants {shape}")


# --- primitives ---------------------------------------------------------------


def conv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int, pad: int = 1) -> np.ndarray:
    """3x3 convolution with zero padding, im2col + matmul inside."""
    x = np.asarray(x)
    weight = np.asarray(weight)
    bias = np.asarray(bias)
    if x.ndim != 3 or weight.ndim != 4 or weight.shape[2:] != (3, 3):
        raise ShapeMismatch(f"conv2d input {x.shape} / weight {weight.shape}")
    c_in, h, w = x.shape
    c_out = weight.shape[0]
    if weight.shape[1] != c_in or bias.shape != (c_out,):
        raise ShapeMismatch(f"conv2d weight {weight.shape} / bias {bias.shape} vs input {x.shape}")
    if stride not in (1, 2):
        raise ShapeMismatch(f"stride {stride} not in (1, 2)")

    out_h = (h + 2 * pad - 3) // stride + 1
    out_w = (w + 2 * pad - 3) // stride + 1

    padded = np.zeros((c_in, h + 2 * pad, w + 2 * pad), dtype=np.float64)
    padded[:, pad : pad + h, pad : pad + w] = x

    # patches[c, dy, dx, i, j] = padded[c, i*stride + dy, j*stride + dx]
    s0, s1, s2 = padded.strides
    patches = np.lib.stride_tricks.as_strided(
        padded,
        shape=(c_in, 3, 3, out_h, out_w),
        strides=(s0, s1, s2, s1 * stride, s2 * stride),
        writeable=False,
    )
    cols = patches.reshape(c_in * 9, out_h * out_w)
    flat = weight.astype(np.float64).reshape(c_out, c_in * 9)
    out = flat @ cols + bias.astype(np.float64)[:, None]
    return out.reshape(c_out, out_h, out_w).astype(np.float32)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def gelu(x: np.ndarray) -> np.ndarray:
    """tanh-approximated GELU: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3)))."""
    z = np.asarray(x, dtype=np.float64)
    inner = math.sqrt(2.0 / math.pi) * (z + 0.044715 * z**3)
    return (0.5 * z * (1.0 + np.tanh(inner))).astype(np.float32)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted exponential normalization along the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return (e / e.sum(axis=-1, keepdims=True)).astype(np.float32)


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = LN_EPS) -> np.ndarray:
    x64 = np.asarray(x, dtype=np.float64)
    if x64.ndim != 2 or gamma.shape != (x64.shape[1],) or beta.shape != (x64.shape[1],):
        raise ShapeMismatch(f"layer_norm x {x64.shape} gamma {gamma.shape} beta {beta.shape}")
    mu = x64.mean(axis=1, keepdims=True)
    var = ((x64 - mu) ** 2).mean(axis=1, keepdims=True)
    normed = (x64 - mu) / np.sqrt(var + eps)
    return (gamma.astype(np.float64) * normed + beta.astype(np.float64)).astype(np.float32)


def dense(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    x64 = np.asarray(x, dtype=np.float64)
    if x64.shape[-1] != weight.shape[0] or bias.shape != (weight.shape[1],):
        raise ShapeMismatch(f"dense x {x64.shape} weight {weight.shape} bias {bias.shape}")
    return (x64 @ weight.astype(np.float64) + bias.astype(np.float64)).astype(np.float32)


def attention(
    tokens: np.ndarray,
    wq: np.ndarray,
    bq: np.ndarray,
    wk: np.ndarray,
    bk: np.ndarray,
    wv: np.ndarray,
    bv: np.ndarray,
    wo: np.ndarray,
    bo: np.ndarray,
    scale: float | None = None,
    return_matrix: bool = False,
):
    """Single-head self-attention with output projection.

    A = row_softmax((XWq+bq)(XWk+bk)^T * scale); out = (A(XWv+bv))Wo + bo.
    """
    x = np.asarray(tokens, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ShapeMismatch(f"attention tokens {x.shape}")
    n, d = x.shape
    for m, b in ((wq, bq), (wk, bk), (wv, bv), (wo, bo)):
        if m.shape != (d, d) or b.shape != (d,):
            raise ShapeMismatch(f"attention projection {m.shape}/{b.shape} for dim {d}")
    if scale is None:
        scale = 1.0 / math.sqrt(d)

    q = x @ wq.astype(np.float64) + bq.astype(np.float64)
    k = x @ wk.astype(np.float64) + bk.astype(np.float64)
    v = x @ wv.astype(np.float64) + bv.astype(np.float64)
    scores = (q @ k.T) * scale
    scores -= scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    a = e / e.sum(axis=1, keepdims=True)
    out = ((a @ v) @ wo.astype(np.float64) + bo.astype(np.float64)).astype(np.float32)
    if return_matrix:
        return out, a.astype(np.float32)
    return out


# --- full schedule -------------------------------------------------------------


def _transformer_block(x: np.ndarray, w: dict[str, np.ndarray], tb: str, trace: dict | None):
    normed = layer_norm(x, w[f"{tb}.ln1.g"], w[f"{tb}.ln1.b"])
    attn_out, attn_matrix = attention(
        normed,
        w[f"{tb}.q.w"], w[f"{tb}.q.b"],
        w[f"{tb}.k.w"], w[f"{tb}.k.b"],
        w[f"{tb}.v.w"], w[f"{tb}.v.b"],
        w[f"{tb}.o.w"], w[f"{tb}.o.b"],
        return_matrix=True,
    )
    if trace is not None:
        trace[f"{tb}.attn"] = attn_matrix
    h = x + attn_out
    normed2 = layer_norm(h, w[f"{tb}.ln2.g"], w[f"{tb}.ln2.b"])
    m = dense(normed2, w[f"{tb}.mlp.fc1.w"], w[f"{tb}.mlp.fc1.b"])
    m = gelu(m)
    m = dense(m, w[f"{tb}.mlp.fc2.w"], w[f"{tb}.mlp.fc2.b"])
    return h + m


def forward(weights: dict[str, np.ndarray], image: np.ndarray, trace: dict | None = None) -> np.ndarray:
    """Run the full schedule on a [1,224,224] tensor; returns 4 probabilities.

    Pass a dict as `trace` to capture named intermediate activations and
    the attention matrices (used by the shape-audit and row-sum tests).
    """
    if weights is None:
        raise WeightsMissing("forward called without a weight table")
    validate_weight_table(weights)

    x = np.asarray(image)
    if x.shape != INPUT_SHAPE:
        raise ShapeMismatch(f"input {x.shape}, model wants {INPUT_SHAPE}")
    x = x.astype(np.float32)

    def note(name, value):
        if trace is not None:
            trace[name] = value

    x = relu(conv2d(x, weights["stem.w"], weights["stem.b"], stride=2))
    note("stem", x)
    x = relu(conv2d(x, weights["down1.w"], weights["down1.b"], stride=2))
    note("down1", x)
    for res in ("res1", "res2"):
        y = relu(conv2d(x, weights[f"{res}.c1.w"], weights[f"{res}.c1.b"], stride=1))
        y = conv2d(y, weights[f"{res}.c2.w"], weights[f"{res}.c2.b"], stride=1)
        x = relu(x + y)
        note(res, x)
    x = relu(conv2d(x, weights["down2.w"], weights["down2.b"], stride=2))
    note("down2", x)
    x = relu(conv2d(x, weights["down3.w"], weights["down3.b"], stride=2))
    note("down3", x)

    # 32x14x14 -> 196 tokens x 32, row-major over (row, col)
    tokens = x.reshape(TOKEN_DIM, NUM_TOKENS).T.copy()
    note("tokens", tokens)

    tokens = _transformer_block(tokens, weights, "tb1", trace)
    note("tb1", tokens)
    tokens = _transformer_block(tokens, weights, "tb2", trace)
    note("tb2", tokens)

    pooled = tokens.astype(np.float64).mean(axis=0).astype(np.float32)
    note("gap", pooled)
    logits = dense(pooled, weights["head.w"], weights["head.b"])
    note("logits", logits)
    probs = softmax(logits)
    note("probs", probs)
    return probs
