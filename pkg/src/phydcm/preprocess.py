"""Image normalization, bilinear resize, and seeded test augmentations.

Every input route (DICOM slice, PGM file, raw slice array) funnels through
`to_model_input`, which produces the fixed single-channel 224x224 tensor
the classifier consumes.  Min-max normalization to [0,1] absorbs the DICOM
rescale affine map, so DICOM and PGM paths of the same pixels agree
bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadSize
from .rng import SplitMix64


@dataclass(frozen=True)
class AugmentSpec:
    """Training-style augmentation draws; test/demo use only.

    Three values are always consumed from the seeded stream, in order:
    rotation, flip, zoom.  `h_flip=False` still consumes the flip draw
    but never applies it, keeping the stream position stable.
    """

    seed: int
    max_rotation_deg: float = 10.0
    h_flip: bool = True
    max_zoom_delta: float = 0.1

    def __post_init__(self):
        if self.max_rotation_deg < 0:
            raise ValueError("max_rotation_deg must be >= 0")
        if not 0 <= self.max_zoom_delta < 1:
            raise ValueError("max_zoom_delta must be in [0, 1)")


@dataclass(frozen=True)
class PreprocessConfig:
    target_size: tuple[int, int] = (224, 224)
    normalize: bool = True
    augment: AugmentSpec | None = None

    def __post_init__(self):
        if self.target_size[0] < 1 or self.target_size[1] < 1:
            raise BadSize(f"target size {self.target_size} below 1")


@dataclass(frozen=True)
class ImageTensor:
    """Channel-major [c][h][w] float tensor."""

    data: np.ndarray

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


def normalize_intensity(img: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0,1]; a constant image maps to all zeros."""
    img = np.asarray(img, dtype=np.float64)
    lo = img.min()
    hi = img.max()
    if hi == lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo)


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear resize with clamped edges.

    Blends in lerp form (v0 + f*(v1-v0)) so a constant image stays
    bit-exactly constant at any output size.
    """
    if out_h < 1 or out_w < 1:
        raise BadSize(f"output size {out_h}x{out_w} below 1")
    img = np.asarray(img, dtype=np.float64)
    in_h, in_w = img.shape

    sy = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    sx = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)

    y0 = np.floor(sy).astype(np.intp)
    x0 = np.floor(sx).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (sy - y0)[:, None]
    fx = (sx - x0)[None, :]

    top_left = img[np.ix_(y0, x0)]
    bottom_left = img[np.ix_(y1, x0)]
    top = top_left + fx * (img[np.ix_(y0, x1)] - top_left)
    bottom = bottom_left + fx * (img[np.ix_(y1, x1)] - bottom_left)
    return top + fy * (bottom - top)


def _sample_bilinear_zero(img: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Bilinear sample at fractional coords; anything outside the grid is 0."""
    in_h, in_w = img.shape
    inside = (ys >= 0.0) & (ys <= in_h - 1.0) & (xs >= 0.0) & (xs <= in_w - 1.0)
    ysc = np.clip(ys, 0.0, in_h - 1.0)
    xsc = np.clip(xs, 0.0, in_w - 1.0)
    y0 = np.floor(ysc).astype(np.intp)
    x0 = np.floor(xsc).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = ysc - y0
    fx = xsc - x0
    value = (
        (1.0 - fy) * (1.0 - fx) * img[y0, x0]
        + (1.0 - fy) * fx * img[y0, x1]
        + fy * (1.0 - fx) * img[y1, x0]
        + fy * fx * img[y1, x1]
    )
    return np.where(inside, value, 0.0)


def augment(img: np.ndarray, spec: AugmentSpec) -> np.ndarray:
    """Seeded zoom + rotation (one composed resample pass) + optional flip.

    The zoom-then-rotate pair is applied as a single inverse-mapped
    bilinear resample about the image center with zero fill; the flip is
    a pure index reversal, so a null draw leaves the image bit-identical.
    """
    img = np.asarray(img, dtype=np.float64)
    rng = SplitMix64(spec.seed)
    rotation_deg = rng.next_in(-spec.max_rotation_deg, spec.max_rotation_deg)
    flip = rng.next_unit() >= 0.5
    zoom = rng.next_in(1.0 - spec.max_zoom_delta, 1.0 + spec.max_zoom_delta)

    if rotation_deg != 0.0 or zoom != 1.0:
        h, w = img.shape
        cy = (h - 1) / 2.0
        cx = (w - 1) / 2.0
        theta = math.radians(rotation_deg)
        cos_t = math.cos(theta)
        sin_t = math.sin(theta)
        yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
        dx = xx - cx
        dy = yy - cy
        # inverse of q = R(theta) @ (zoom * (p - c)) + c
        xs = (cos_t * dx + sin_t * dy) / zoom + cx
        ys = (-sin_t * dx + cos_t * dy) / zoom + cy
        img = _sample_bilinear_zero(img, ys, xs)

    if spec.h_flip and flip:
        img = img[:, ::-1].copy()
    return img


def to_model_input(img: np.ndarray, cfg: PreprocessConfig = PreprocessConfig()) -> ImageTensor:
    """normalize -> resize -> (augment) -> single-channel [1][h][w] in [0,1]."""
    img = np.asarray(img, dtype=np.float64)
    if cfg.normalize:
        img = normalize_intensity(img)
    img = resize_bilinear(img, cfg.target_size[0], cfg.target_size[1])
    if cfg.augment is not None:
        img = augment(img, cfg.augment)
    return ImageTensor(data=img[None, :, :])
