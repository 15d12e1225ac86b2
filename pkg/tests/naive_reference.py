"""Independent reference implementations used as test oracles.

Deliberately written along different computational routes than the
engine: direct-summation loops for convolution, a three-loop attention,
and a straight-line float64 forward built on shifted-slice convolutions.
Nothing here imports the engine's math.
"""

import math

import numpy as np


def conv2d_loops(x, w, b, stride, pad=1):
    """Direct-summation convolution, six explicit loops, float64."""
    c_in, h, wd = x.shape
    c_out = w.shape[0]
    out_h = (h + 2 * pad - 3) // stride + 1
    out_w = (wd + 2 * pad - 3) // stride + 1
    out = np.zeros((c_out, out_h, out_w), dtype=np.float64)
    for o in range(c_out):
        for i in range(out_h):
            for j in range(out_w):
                acc = float(b[o])
                for c in range(c_in):
                    for dy in range(3):
                        for dx in range(3):
                            yy = i * stride + dy - pad
                            xx = j * stride + dx - pad
                            if 0 <= yy < h and 0 <= xx < wd:
                                acc += float(x[c, yy, xx]) * float(w[o, c, dy, dx])
                out[o, i, j] = acc
    return out


def attention_loops(x, wq, bq, wk, bk, wv, bv, wo, bo, scale=None):
    """Brute-force attention with per-row softmax, explicit loops."""
    n, d = x.shape
    if scale is None:
        scale = 1.0 / math.sqrt(d)

    def project(m, bias):
        out = np.zeros((n, d), dtype=np.float64)
        for i in range(n):
            for j in range(d):
                acc = float(bias[j])
                for a in range(d):
                    acc += float(x[i, a]) * float(m[a, j])
                out[i, j] = acc
        return out

    q = project(wq, bq)
    k = project(wk, bk)
    v = project(wv, bv)

    attn = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        scores = [scale * sum(q[i, a] * k[j, a] for a in range(d)) for j in range(n)]
        m = max(scores)
        exps = [math.exp(s - m) for s in scores]
        z = sum(exps)
        for j in range(n):
            attn[i, j] = exps[j] / z

    ctx = np.zeros((n, d), dtype=np.float64)
    for i in range(n):
        for j in range(d):
            ctx[i, j] = sum(attn[i, a] * v[a, j] for a in range(n))

    out = np.zeros((n, d), dtype=np.float64)
    for i in range(n):
        for j in range(d):
            out[i, j] = float(bo[j]) + sum(ctx[i, a] * float(wo[a, j]) for a in range(d))
    return out, attn


def gelu_scalar(x: float) -> float:
    return 0.5 * x * (1.0 + math.tanh(math.sqrt(2.0 / math.pi) * (x + 0.044715 * x**3)))


def bilinear_scalar(img, out_h, out_w):
    """Scalar half-pixel-center bilinear resize with clamped edges."""
    ih = len(img)
    iw = len(img[0])
    out = [[0.0] * out_w for _ in range(out_h)]
    for r in range(out_h):
        for c in range(out_w):
            sy = min(max((r + 0.5) * ih / out_h - 0.5, 0.0), ih - 1.0)
            sx = min(max((c + 0.5) * iw / out_w - 0.5, 0.0), iw - 1.0)
            y0 = int(math.floor(sy))
            x0 = int(math.floor(sx))
            y1 = min(y0 + 1, ih - 1)
            x1 = min(x0 + 1, iw - 1)
            fy = sy - y0
            fx = sx - x0
            out[r][c] = (
                (1 - fy) * (1 - fx) * img[y0][x0]
                + (1 - fy) * fx * img[y0][x1]
                + fy * (1 - fx) * img[y1][x0]
                + fy * fx * img[y1][x1]
            )
    return out


# --- straight-line float64 forward -------------------------------------------


def _conv_shifted(x, w, b, stride):
    """Convolution as a sum of nine shifted slices (not im2col)."""
    c_in, h, wd = x.shape
    c_out = w.shape[0]
    out_h = (h + 2 - 3) // stride + 1
    out_w = (wd + 2 - 3) // stride + 1
    xp = np.pad(np.asarray(x, dtype=np.float64), ((0, 0), (1, 1), (1, 1)))
    out = np.zeros((c_out, out_h, out_w), dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            patch = xp[
                :,
                dy : dy + (out_h - 1) * stride + 1 : stride,
                dx : dx + (out_w - 1) * stride + 1 : stride,
            ]
            out += np.einsum("oc,chw->ohw", w[:, :, dy, dx].astype(np.float64), patch)
    return out + np.asarray(b, dtype=np.float64)[:, None, None]


def _ln(x, g, b, eps=1e-5):
    mu = x.mean(axis=1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=1, keepdims=True)
    return g * (x - mu) / np.sqrt(var + eps) + b


def _attn(x, w, tb):
    q = x @ w[f"{tb}.q.w"] + w[f"{tb}.q.b"]
    k = x @ w[f"{tb}.k.w"] + w[f"{tb}.k.b"]
    v = x @ w[f"{tb}.v.w"] + w[f"{tb}.v.b"]
    scores = (q @ k.T) / math.sqrt(x.shape[1])
    scores -= scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    a = e / e.sum(axis=1, keepdims=True)
    return (a @ v) @ w[f"{tb}.o.w"] + w[f"{tb}.o.b"]


def forward_straightline(weights, image):
    """The whole schedule, float64 end to end, no layer-boundary rounding."""
    w = {k: np.asarray(v, dtype=np.float64) for k, v in weights.items()}
    x = np.asarray(image, dtype=np.float64)

    x = np.maximum(_conv_shifted(x, w["stem.w"], w["stem.b"], 2), 0.0)
    x = np.maximum(_conv_shifted(x, w["down1.w"], w["down1.b"], 2), 0.0)
    for res in ("res1", "res2"):
        y = np.maximum(_conv_shifted(x, w[f"{res}.c1.w"], w[f"{res}.c1.b"], 1), 0.0)
        y = _conv_shifted(y, w[f"{res}.c2.w"], w[f"{res}.c2.b"], 1)
        x = np.maximum(x + y, 0.0)
    x = np.maximum(_conv_shifted(x, w["down2.w"], w["down2.b"], 2), 0.0)
    x = np.maximum(_conv_shifted(x, w["down3.w"], w["down3.b"], 2), 0.0)

    tokens = x.reshape(32, 196).T

    for tb in ("tb1", "tb2"):
        h = tokens + _attn(_ln(tokens, w[f"{tb}.ln1.g"], w[f"{tb}.ln1.b"]), w, tb)
        z = _ln(h, w[f"{tb}.ln2.g"], w[f"{tb}.ln2.b"])
        m = z @ w[f"{tb}.mlp.fc1.w"] + w[f"{tb}.mlp.fc1.b"]
        m = np.array([[gelu_scalar(v) for v in row] for row in m])
        m = m @ w[f"{tb}.mlp.fc2.w"] + w[f"{tb}.mlp.fc2.b"]
        tokens = h + m

    pooled = tokens.mean(axis=0)
    logits = pooled @ w["head.w"] + w["head.b"]
    logits -= logits.max()
    e = np.exp(logits)
    return e / e.sum()
