"""Uncompressed little-endian DICOM: parser, typed accessors, fixture writer.

Supports explicit and implicit VR little endian only; every compressed or
big-endian transfer syntax is rejected up front.  Sequences are skipped
wholesale using their declared length (undefined-length sequences are not
supported).  Values are decoded as ASCII; non-ASCII bytes stay raw.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagic,
    DicomError,
    IoFailure,
    LengthMismatch,
    MissingTag,
    TruncatedFile,
    UnsupportedFeature,
    UnsupportedTransferSyntax,
)

PREAMBLE_LEN = 128
MAGIC = b"DICM"

UID_IMPLICIT_LE = "1.2.840.10008.1.2"
UID_EXPLICIT_LE = "1.2.840.10008.1.2.1"

EXPLICIT_VR_LE = "ExplicitVRLittleEndian"
IMPLICIT_VR_LE = "ImplicitVRLittleEndian"

SUPPORTED_VRS = frozenset(
    ["UL", "US", "SS", "FL", "FD", "DS", "IS", "CS", "LO", "SH", "PN", "DA", "TM", "UI", "OB", "OW", "UN"]
)
#: explicit-VR codes that use the 2-byte-reserved + 32-bit-length layout
LONG_FORM_VRS = frozenset(["OB", "OW", "OF", "OD", "OL", "OV", "UC", "UR", "UT", "UN", "SQ"])
STRING_VRS = frozenset(["DS", "IS", "CS", "LO", "SH", "PN", "DA", "TM", "UI"])

UNDEFINED_LENGTH = 0xFFFFFFFF


@dataclass(frozen=True, order=True)
class Tag:
    """DICOM element address; orders lexicographically by (group, element)."""

    group: int
    element: int

    def __str__(self) -> str:
        return f"({self.group:04X},{self.element:04X})"


# tags the pipeline reads or writes, with the VR used in implicit streams
TRANSFER_SYNTAX_UID = Tag(0x0002, 0x0010)
MODALITY = Tag(0x0008, 0x0060)
PATIENT_NAME = Tag(0x0010, 0x0010)
PATIENT_ID = Tag(0x0010, 0x0020)
IMAGE_POSITION = Tag(0x0020, 0x0032)
IMAGE_ORIENTATION = Tag(0x0020, 0x0037)
SAMPLES_PER_PIXEL = Tag(0x0028, 0x0002)
ROWS = Tag(0x0028, 0x0010)
COLUMNS = Tag(0x0028, 0x0011)
PIXEL_SPACING = Tag(0x0028, 0x0030)
BITS_ALLOCATED = Tag(0x0028, 0x0100)
PIXEL_REPRESENTATION = Tag(0x0028, 0x0103)
RESCALE_INTERCEPT = Tag(0x0028, 0x1052)
RESCALE_SLOPE = Tag(0x0028, 0x1053)
PIXEL_DATA = Tag(0x7FE0, 0x0010)

_KNOWN_VRS = {
    TRANSFER_SYNTAX_UID: "UI",
    MODALITY: "CS",
    PATIENT_NAME: "PN",
    PATIENT_ID: "LO",
    IMAGE_POSITION: "DS",
    IMAGE_ORIENTATION: "DS",
    SAMPLES_PER_PIXEL: "US",
    ROWS: "US",
    COLUMNS: "US",
    PIXEL_SPACING: "DS",
    BITS_ALLOCATED: "US",
    PIXEL_REPRESENTATION: "US",
    RESCALE_INTERCEPT: "DS",
    RESCALE_SLOPE: "DS",
    PIXEL_DATA: "OW",
}


@dataclass(frozen=True)
class Element:
    tag: Tag
    vr: str
    raw: bytes

    @property
    def length(self) -> int:
        return len(self.raw)

    def as_string(self) -> str:
        """ASCII text with trailing NUL/space padding stripped."""
        return self.raw.decode("ascii", errors="replace").rstrip("\x00 ")

    def as_strings(self) -> list[str]:
        return self.as_string().split("\\") if self.raw else []

    def as_floats(self) -> list[float]:
        return [float(s) for s in self.as_strings() if s != ""]

    def as_ints(self) -> list[int]:
        if self.vr == "US":
            return list(struct.unpack(f"<{len(self.raw) // 2}H", self.raw))
        if self.vr == "SS":
            return list(struct.unpack(f"<{len(self.raw) // 2}h", self.raw))
        if self.vr == "UL":
            return list(struct.unpack(f"<{len(self.raw) // 4}I", self.raw))
        if self.vr == "IS":
            return [int(s) for s in self.as_strings() if s != ""]
        raise DicomError(f"element {self.tag} with VR {self.vr} has no integer decoding")


class DataSet:
    """Tag-indexed element map; iteration yields strictly ascending tags."""

    def __init__(self, transfer_syntax: str = IMPLICIT_VR_LE):
        self.transfer_syntax = transfer_syntax
        self._elements: dict[Tag, Element] = {}

    def add(self, element: Element) -> None:
        self._elements[element.tag] = element

    def __contains__(self, tag: Tag) -> bool:
        return tag in self._elements

    def __len__(self) -> int:
        return len(self._elements)

    def __iter__(self):
        return iter(sorted(self._elements))

    def __getitem__(self, tag: Tag) -> Element:
        try:
            return self._elements[tag]
        except KeyError:
            raise MissingTag(tag) from None

    def get(self, tag: Tag) -> Element | None:
        return self._elements.get(tag)

    def elements(self) -> list[Element]:
        return [self._elements[t] for t in self]

    def non_meta_elements(self) -> list[Element]:
        return [e for e in self.elements() if e.tag.group != 0x0002]

    def get_int(self, tag: Tag, default: int | None = None) -> int | None:
        el = self.get(tag)
        if el is None:
            return default
        values = el.as_ints()
        return values[0] if values else default

    def get_float(self, tag: Tag, default: float | None = None) -> float | None:
        el = self.get(tag)
        if el is None:
            return default
        values = el.as_floats()
        return values[0] if values else default

    def get_floats(self, tag: Tag) -> list[float] | None:
        el = self.get(tag)
        return None if el is None else el.as_floats()

    def get_string(self, tag: Tag, default: str | None = None) -> str | None:
        el = self.get(tag)
        return default if el is None else el.as_string()


@dataclass
class SliceGeometry:
    """Spatial placement and rescale of one slice, with standard defaults."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    row_dir: tuple[float, float, float] = (1.0, 0.0, 0.0)
    col_dir: tuple[float, float, float] = (0.0, 1.0, 0.0)
    pixel_spacing: tuple[float, float] = (1.0, 1.0)
    rows: int = 0
    cols: int = 0
    rescale_slope: float = 1.0
    rescale_intercept: float = 0.0

    def validate(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise DicomError("geometry with zero rows or columns")
        if any(s <= 0 for s in self.pixel_spacing):
            raise DicomError("pixel spacing components must be positive")
        r = np.asarray(self.row_dir, dtype=np.float64)
        c = np.asarray(self.col_dir, dtype=np.float64)
        if abs(np.linalg.norm(r) - 1.0) > 1e-3 or abs(np.linalg.norm(c) - 1.0) > 1e-3:
            raise DicomError("direction cosines are not unit vectors")
        if abs(float(np.dot(r, c))) >= 1e-3:
            raise DicomError("direction cosines are not orthogonal")

    @property
    def normal(self) -> tuple[float, float, float]:
        n = np.cross(np.asarray(self.row_dir, float), np.asarray(self.col_dir, float))
        return (float(n[0]), float(n[1]), float(n[2]))


# --- parsing ----------------------------------------------------------------


class _Reader:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.offset = offset

    def remaining(self) -> int:
        return len(self.data) - self.offset

    def take(self, n: int) -> bytes:
        if self.remaining() < n:
            raise TruncatedFile(f"needed {n} bytes at offset {self.offset}, have {self.remaining()}")
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def _looks_headerless(data: bytes) -> bool:
    """First 8 bytes decode as a plausible implicit-VR element in group 0002/0008."""
    if len(data) < 8:
        return False
    group, _element, length = struct.unpack("<HHI", data[:8])
    if group not in (0x0002, 0x0008):
        return False
    return length != UNDEFINED_LENGTH and 8 + length <= len(data)


def _read_element(r: _Reader, explicit: bool) -> Element | None:
    """One element; returns None for a skipped sequence."""
    group = r.u16()
    element = r.u16()
    tag = Tag(group, element)

    if explicit:
        vr = r.take(2).decode("ascii", errors="replace")
        if vr in LONG_FORM_VRS:
            r.take(2)
            length = r.u32()
        else:
            length = r.u16()
        if vr not in SUPPORTED_VRS and vr != "SQ":
            # unknown VR code: raw bytes preserved under UN
            vr = "UN"
    else:
        length = r.u32()
        vr = _KNOWN_VRS.get(tag, "UN")

    if vr == "SQ":
        if length == UNDEFINED_LENGTH:
            raise UnsupportedFeature(f"undefined-length sequence at {tag}")
        r.take(length)
        return None
    if length == UNDEFINED_LENGTH:
        raise UnsupportedFeature(f"undefined-length value at {tag}")

    raw = r.take(length)
    return Element(tag, vr, raw)


def parse_dicom(data: bytes) -> DataSet:
    """Parse one DICOM stream into a DataSet.

    Accepts preamble+DICM files and headerless implicit-VR streams.  The
    transfer syntax is taken from (0002,0010) when a meta header is
    present; headerless streams are implicit VR little endian.
    """
    if len(data) >= PREAMBLE_LEN + 4 and data[PREAMBLE_LEN : PREAMBLE_LEN + 4] == MAGIC:
        r = _Reader(data, PREAMBLE_LEN + 4)
        meta_explicit = True
        headerless = False
    elif _looks_headerless(data):
        r = _Reader(data, 0)
        meta_explicit = False
        headerless = True
    elif len(data) < PREAMBLE_LEN + 4:
        raise TruncatedFile(f"{len(data)} bytes is below the minimum preamble+magic size")
    else:
        raise BadMagic("no DICM marker at offset 128")

    ds = DataSet()

    # meta group (0002) first: explicit VR after a DICM marker, stream VR otherwise
    while r.remaining() >= 8:
        group = struct.unpack("<H", r.data[r.offset : r.offset + 2])[0]
        if group != 0x0002:
            break
        el = _read_element(r, explicit=meta_explicit)
        if el is not None:
            ds.add(el)

    # (0002,0010) decides the body encoding; without it, implicit is assumed
    ts_el = ds.get(TRANSFER_SYNTAX_UID)
    if ts_el is not None:
        uid = ts_el.as_string()
        if uid == UID_EXPLICIT_LE:
            body_explicit = True
        elif uid == UID_IMPLICIT_LE:
            body_explicit = False
        else:
            raise UnsupportedTransferSyntax(f"transfer syntax {uid!r} is not uncompressed little endian")
    else:
        body_explicit = False
    ds.transfer_syntax = EXPLICIT_VR_LE if body_explicit else IMPLICIT_VR_LE

    while r.remaining() > 0:
        if r.remaining() < 8:
            raise TruncatedFile(f"{r.remaining()} trailing bytes cannot form an element")
        el = _read_element(r, explicit=body_explicit)
        if el is not None:
            ds.add(el)

    return ds


# --- pixel extraction --------------------------------------------------------


def read_geometry(ds: DataSet) -> SliceGeometry:
    """SliceGeometry from a dataset, with defaults for absent optional tags."""
    rows = ds.get_int(ROWS)
    cols = ds.get_int(COLUMNS)
    if rows is None:
        raise MissingTag(ROWS)
    if cols is None:
        raise MissingTag(COLUMNS)

    geom = SliceGeometry(rows=rows, cols=cols)
    pos = ds.get_floats(IMAGE_POSITION)
    if pos is not None:
        if len(pos) != 3:
            raise DicomError("image position needs exactly 3 components")
        geom.position = (pos[0], pos[1], pos[2])
    orient = ds.get_floats(IMAGE_ORIENTATION)
    if orient is not None:
        if len(orient) != 6:
            raise DicomError("image orientation needs exactly 6 components")
        geom.row_dir = (orient[0], orient[1], orient[2])
        geom.col_dir = (orient[3], orient[4], orient[5])
    spacing = ds.get_floats(PIXEL_SPACING)
    if spacing is not None:
        if len(spacing) != 2:
            raise DicomError("pixel spacing needs exactly 2 components")
        geom.pixel_spacing = (spacing[0], spacing[1])
    geom.rescale_slope = ds.get_float(RESCALE_SLOPE, 1.0)
    geom.rescale_intercept = ds.get_float(RESCALE_INTERCEPT, 0.0)
    geom.validate()
    return geom


def extract_pixels(ds: DataSet) -> tuple[np.ndarray, SliceGeometry]:
    """Decode PixelData into rescaled float64 values of shape (rows, cols)."""
    for tag in (ROWS, COLUMNS, BITS_ALLOCATED, PIXEL_REPRESENTATION, PIXEL_DATA):
        if tag not in ds:
            raise MissingTag(tag)
    rows = ds.get_int(ROWS)
    cols = ds.get_int(COLUMNS)
    bits = ds.get_int(BITS_ALLOCATED)
    signed = ds.get_int(PIXEL_REPRESENTATION)
    samples = ds.get_int(SAMPLES_PER_PIXEL, 1)

    if bits not in (8, 16):
        raise UnsupportedFeature(f"BitsAllocated {bits} (only 8 and 16 are handled)")
    if signed not in (0, 1):
        raise DicomError(f"PixelRepresentation {signed} is not 0 or 1")
    if samples != 1:
        raise UnsupportedFeature("multi-sample (color) pixel data is not handled")

    raw = ds[PIXEL_DATA].raw
    expected = rows * cols * (bits // 8)
    if len(raw) != expected:
        raise LengthMismatch(f"PixelData is {len(raw)} bytes, geometry implies {expected}")

    dtype = {(8, 0): "<u1", (8, 1): "<i1", (16, 0): "<u2", (16, 1): "<i2"}[(bits, signed)]
    stored = np.frombuffer(raw, dtype=dtype).reshape(rows, cols)

    geom = read_geometry(ds)
    values = geom.rescale_slope * stored.astype(np.float64) + geom.rescale_intercept
    return values, geom


# --- fixture writer -----------------------------------------------------------


def _format_ds(values) -> str:
    parts = []
    for v in values:
        f = float(v)
        if math.isnan(f) or math.isinf(f):
            raise DicomError("decimal strings cannot hold NaN/Inf")
        parts.append(repr(f))
    return "\\".join(parts)


def _encode_element(tag: Tag, vr: str, raw: bytes) -> bytes:
    if len(raw) % 2:
        raw += b"\x00" if vr in ("UI", "OB") else b" "
    head = struct.pack("<HH", tag.group, tag.element)
    if vr in LONG_FORM_VRS:
        return head + vr.encode("ascii") + b"\x00\x00" + struct.pack("<I", len(raw)) + raw
    if len(raw) > 0xFFFF:
        raise DicomError(f"value of {tag} too long for a short-form element")
    return head + vr.encode("ascii") + struct.pack("<H", len(raw)) + raw


def fixture_dataset_bytes(geometry: SliceGeometry, pixels: np.ndarray, modality: str = "MR") -> bytes:
    """Encode one explicit-VR-little-endian slice with preamble and marker."""
    geometry.validate()
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint16:
        raise DicomError(f"fixture pixels must be uint16, got {pixels.dtype}")
    if pixels.shape != (geometry.rows, geometry.cols):
        raise DicomError(
            f"pixel shape {pixels.shape} disagrees with geometry {(geometry.rows, geometry.cols)}"
        )

    def text(s: str) -> bytes:
        return s.encode("ascii")

    body = b"".join(
        [
            _encode_element(TRANSFER_SYNTAX_UID, "UI", text(UID_EXPLICIT_LE)),
            _encode_element(MODALITY, "CS", text(modality)),
            _encode_element(IMAGE_POSITION, "DS", text(_format_ds(geometry.position))),
            _encode_element(
                IMAGE_ORIENTATION, "DS", text(_format_ds(list(geometry.row_dir) + list(geometry.col_dir)))
            ),
            _encode_element(SAMPLES_PER_PIXEL, "US", struct.pack("<H", 1)),
            _encode_element(ROWS, "US", struct.pack("<H", geometry.rows)),
            _encode_element(COLUMNS, "US", struct.pack("<H", geometry.cols)),
            _encode_element(PIXEL_SPACING, "DS", text(_format_ds(geometry.pixel_spacing))),
            _encode_element(BITS_ALLOCATED, "US", struct.pack("<H", 16)),
            _encode_element(PIXEL_REPRESENTATION, "US", struct.pack("<H", 0)),
            _encode_element(RESCALE_INTERCEPT, "DS", text(repr(float(geometry.rescale_intercept)))),
            _encode_element(RESCALE_SLOPE, "DS", text(repr(float(geometry.rescale_slope)))),
            _encode_element(PIXEL_DATA, "OW", pixels.astype("<u2").tobytes()),
        ]
    )
    return b"\x00" * PREAMBLE_LEN + MAGIC + body


def write_fixture_dicom(geometry: SliceGeometry, pixels: np.ndarray, path) -> None:
    """Write a synthetic slice that round-trips bit-exactly through parse_dicom."""
    blob = fixture_dataset_bytes(geometry, pixels)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def sniff_dicom(data: bytes) -> bool:
    """True when bytes look like a parseable DICOM stream (marker or headerless)."""
    has_magic = len(data) >= PREAMBLE_LEN + 4 and data[PREAMBLE_LEN : PREAMBLE_LEN + 4] == MAGIC
    return has_magic or _looks_headerless(data)
