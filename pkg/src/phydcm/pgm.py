"""Binary PGM (P5) reader/writer.

Read side accepts maxval up to 65535 (two-byte big-endian samples per the
format); the write side emits 8-bit maxval-255 files, the slice-export
format of the `mpr` subcommand.
"""

from __future__ import annotations

import numpy as np

from .errors import IoFailure, UnknownFormat


def _tokens(data: bytes):
    """Yield header tokens, skipping whitespace and # comments."""
    i = 0
    while i < len(data):
        c = data[i : i + 1]
        if c in b" \t\r\n":
            i += 1
            continue
        if c == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(data) and data[j : j + 1] not in b" \t\r\n":
            j += 1
        yield data[i:j], j
        i = j


def read_pgm_bytes(data: bytes) -> np.ndarray:
    """Decode a P5 stream to a uint16 array of shape (height, width)."""
    if not data.startswith(b"P5"):
        raise UnknownFormat("not a binary PGM (missing P5 magic)")
    fields = []
    end = 2
    for tok, pos in _tokens(data[2:]):
        fields.append(tok)
        end = 2 + pos
        if len(fields) == 3:
            break
    if len(fields) < 3:
        raise UnknownFormat("PGM header is incomplete")
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise UnknownFormat(f"bad PGM header field: {exc}") from exc
    if width < 1 or height < 1 or not (0 < maxval <= 65535):
        raise UnknownFormat(f"bad PGM dimensions {width}x{height} maxval {maxval}")

    start = end + 1  # single whitespace byte separates header from raster
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    raster = data[start : start + need]
    if len(raster) != need:
        raise UnknownFormat(f"PGM raster is {len(raster)} bytes, header implies {need}")
    return np.frombuffer(raster, dtype=dtype).reshape(height, width).astype(np.uint16)


def read_pgm(path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return read_pgm_bytes(data)


def write_pgm(path, image: np.ndarray, maxval: int = 255) -> None:
    """Write uint8 (maxval 255) or uint16 (maxval up to 65535) P5."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"PGM images are 2-D, got shape {image.shape}")
    if not (0 < maxval <= 65535):
        raise ValueError(f"maxval {maxval} out of range")
    if image.min() < 0 or image.max() > maxval:
        raise ValueError("pixel values exceed maxval")
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n{maxval}\n".encode("ascii")
    payload = image.astype(">u2").tobytes() if maxval > 255 else image.astype("u1").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header + payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
