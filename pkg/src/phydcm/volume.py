"""Volume assembly from slice stacks and orthogonal-plane extraction.

A Volume is immutable after assembly: extraction, crosshair mapping, and
window rendering are pure reads, safe under concurrency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dicom import SliceGeometry
from .errors import BadWindow, DuplicatePosition, InconsistentSeries, IndexOutOfRange
from .rounding import round_half_away

PLANES = ("axial", "coronal", "sagittal")


@dataclass(frozen=True)
class Volume:
    """Voxel grid indexed [z][y][x] with millimeter spacing and placement."""

    voxels: np.ndarray
    spacing: tuple[float, float, float]  # (sx, sy, sz)
    origin: tuple[float, float, float]
    row_dir: tuple[float, float, float]
    col_dir: tuple[float, float, float]
    normal: tuple[float, float, float]

    @property
    def dims(self) -> tuple[int, int, int]:
        """(nx, ny, nz)"""
        nz, ny, nx = self.voxels.shape
        return (nx, ny, nz)


@dataclass(frozen=True)
class CrosshairPoint:
    x: int
    y: int
    z: int


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def assemble_volume(slices: list[tuple[np.ndarray, SliceGeometry]]) -> Volume:
    """Order slices along the stack normal and stack them into a Volume.

    Slices may arrive in any order; the result is bitwise identical for
    any permutation of the same input.  The slice gap is the median of
    adjacent projection deltas (1.0 for a single slice), robust to one
    missing slice.
    """
    if not slices:
        raise InconsistentSeries("empty series")

    # canonical reference: lexicographic minimum over geometry fields, so the
    # derived normal (and with it every float in the result) is independent
    # of input order
    ref = min(
        (g for _, g in slices),
        key=lambda g: (g.row_dir, g.col_dir, g.position, g.rows, g.cols),
    )
    ref_rows, ref_cols = ref.rows, ref.cols
    ref_row_dir = np.asarray(ref.row_dir, dtype=np.float64)
    ref_col_dir = np.asarray(ref.col_dir, dtype=np.float64)
    ref_spacing = np.asarray(ref.pixel_spacing, dtype=np.float64)

    for pixels, geom in slices:
        if pixels.shape != (geom.rows, geom.cols):
            raise InconsistentSeries(f"pixel shape {pixels.shape} vs geometry {(geom.rows, geom.cols)}")
        if (geom.rows, geom.cols) != (ref_rows, ref_cols):
            raise InconsistentSeries("slices disagree on rows/cols")
        if (
            np.abs(np.asarray(geom.row_dir) - ref_row_dir).max() > 1e-3
            or np.abs(np.asarray(geom.col_dir) - ref_col_dir).max() > 1e-3
        ):
            raise InconsistentSeries("slices disagree on orientation")
        if np.abs(np.asarray(geom.pixel_spacing) - ref_spacing).max() > 1e-6:
            raise InconsistentSeries("slices disagree on pixel spacing")

    normal = np.cross(_unit(ref_row_dir), _unit(ref_col_dir))
    projections = [float(np.dot(np.asarray(g.position, dtype=np.float64), normal)) for _, g in slices]

    order = sorted(range(len(slices)), key=lambda i: projections[i])
    sorted_proj = [projections[i] for i in order]
    for a, b in zip(sorted_proj, sorted_proj[1:]):
        if abs(b - a) < 1e-6:
            raise DuplicatePosition(f"two slices project to {a:.6f} along the normal")

    if len(slices) == 1:
        sz = 1.0
    else:
        gaps = np.diff(np.asarray(sorted_proj))
        sz = float(np.median(gaps))

    voxels = np.stack([np.asarray(slices[i][0], dtype=np.float64) for i in order], axis=0)
    voxels.setflags(write=False)
    first = slices[order[0]][1]
    # PixelSpacing is (between-rows, between-columns) = (sy, sx)
    return Volume(
        voxels=voxels,
        spacing=(float(ref_spacing[1]), float(ref_spacing[0]), sz),
        origin=tuple(float(c) for c in first.position),
        row_dir=tuple(float(c) for c in _unit(ref_row_dir)),
        col_dir=tuple(float(c) for c in _unit(ref_col_dir)),
        normal=tuple(float(c) for c in normal),
    )


def plane_extent(volume: Volume, plane: str) -> int:
    nx, ny, nz = volume.dims
    try:
        return {"axial": nz, "coronal": ny, "sagittal": nx}[plane]
    except KeyError:
        raise IndexOutOfRange(f"unknown plane {plane!r}") from None


def extract_slice(volume: Volume, plane: str, index: int) -> np.ndarray:
    """One orthogonal plane, no resampling.

    axial(k): rows=y cols=x; coronal(j): rows=z cols=x; sagittal(i):
    rows=z cols=y.
    """
    n = plane_extent(volume, plane)
    if not 0 <= index < n:
        raise IndexOutOfRange(f"{plane} index {index} outside [0, {n})")
    if plane == "axial":
        return volume.voxels[index, :, :]
    if plane == "coronal":
        return volume.voxels[:, index, :]
    return volume.voxels[:, :, index]


def map_crosshair(point: CrosshairPoint, volume: Volume) -> dict[str, tuple[int, int, int]]:
    """Per-plane (slice index, row, col) triples for one voxel."""
    nx, ny, nz = volume.dims
    if not (0 <= point.x < nx and 0 <= point.y < ny and 0 <= point.z < nz):
        raise IndexOutOfRange(f"crosshair {point} outside volume dims {(nx, ny, nz)}")
    return {
        "axial": (point.z, point.y, point.x),
        "coronal": (point.y, point.z, point.x),
        "sagittal": (point.x, point.z, point.y),
    }


def render_window(slice_2d: np.ndarray, window: float, level: float) -> np.ndarray:
    """Linear window/level mapping to uint8, ties rounded away from zero."""
    if window <= 0:
        raise BadWindow(f"window {window} must be positive")
    v = np.asarray(slice_2d, dtype=np.float64)
    scaled = 255.0 * (v - (level - window / 2.0)) / window
    return np.clip(round_half_away(scaled), 0, 255).astype(np.uint8)
