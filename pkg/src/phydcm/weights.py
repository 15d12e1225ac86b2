"""PDCM v1 weight file codec and the deterministic fixture-weight generator.

Layout (all little endian): magic "PDCM"; version u32 = 1; tensor_count
u32; then per tensor: name_len u16, name UTF-8, ndim u8, ndim x u32 dims,
prod(dims) x f32 data, row-major.  Names, order, and shapes must match the
model schedule exactly; the loader rejects any deviation.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import BadMagic, BadVersion, IoFailure, SchemaMismatch, TruncatedFile
from .inference import MODEL_SCHEDULE, validate_weight_table
from .rng import SplitMix64

MAGIC = b"PDCM"
VERSION = 1


def encode_weights(table: dict[str, np.ndarray]) -> bytes:
    validate_weight_table(table)
    chunks = [MAGIC, struct.pack("<II", VERSION, len(table))]
    for name, arr in table.items():
        arr32 = np.ascontiguousarray(arr, dtype=np.float32)
        name_bytes = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name_bytes)))
        chunks.append(name_bytes)
        chunks.append(struct.pack("<B", arr32.ndim))
        chunks.append(struct.pack(f"<{arr32.ndim}I", *arr32.shape))
        chunks.append(arr32.astype("<f4").tobytes())
    return b"".join(chunks)


def save_weights(table: dict[str, np.ndarray], path) -> None:
    blob = encode_weights(table)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def decode_weights(data: bytes) -> dict[str, np.ndarray]:
    if data[:4] != MAGIC:
        raise BadMagic(f"weight file magic {data[:4]!r} is not {MAGIC!r}")
    if len(data) < 12:
        raise TruncatedFile("weight file shorter than its fixed header")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise BadVersion(f"weight file version {version}, expected {VERSION}")

    expected = [name for name, _ in MODEL_SCHEDULE]
    if count != len(expected):
        raise SchemaMismatch(
            expected[min(count, len(expected) - 1)],
            f"file declares {count} tensors, schedule has {len(expected)}",
        )

    table: dict[str, np.ndarray] = {}
    offset = 12
    for index in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            if len(data) < offset + name_len:
                raise struct.error("name bytes")
            name = data[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (ndim,) = struct.unpack_from("<B", data, offset)
            offset += 1
            dims = struct.unpack_from(f"<{ndim}I", data, offset)
            offset += 4 * ndim
            n = int(np.prod(dims, dtype=np.int64)) if ndim else 1
            end = offset + 4 * n
            if end > len(data):
                raise struct.error("tensor data")
            arr = np.frombuffer(data[offset:end], dtype="<f4").reshape(dims).astype(np.float32)
            offset = end
        except struct.error as exc:
            raise TruncatedFile(f"weight file ends inside tensor #{index}: {exc}") from exc

        want_name = expected[index]
        if name != want_name:
            raise SchemaMismatch(name, f"tensor {name!r} where {want_name!r} was expected")
        table[name] = arr

    if offset != len(data):
        raise SchemaMismatch(expected[-1], f"{len(data) - offset} trailing bytes after the last tensor")
    validate_weight_table(table)
    return table


def load_weights(path) -> dict[str, np.ndarray]:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return decode_weights(data)


def gen_fixture_weights(seed: int) -> dict[str, np.ndarray]:
    """Deterministic weight table: one SplitMix64 draw per scalar.

    Draws map through top-24-bits/2^24 to [0,1) then affinely to
    [-0.05, 0.05], filling tensors in schedule order, row-major.  Layer
    norm gammas are forced to 1 and betas to 0 after their draws are
    consumed, keeping the stream position independent of that override.
    """
    rng = SplitMix64(seed)
    table: dict[str, np.ndarray] = {}
    for name, shape in MODEL_SCHEDULE:
        n = int(np.prod(shape))
        values = np.array([-0.05 + rng.next_unit() * 0.1 for _ in range(n)], dtype=np.float64)
        arr = values.astype(np.float32).reshape(shape)
        if ".ln" in name:
            arr = np.ones(shape, dtype=np.float32) if name.endswith(".g") else np.zeros(shape, dtype=np.float32)
        table[name] = arr
    return table
