"""End-to-end prediction producing structured diagnostic records.

Input format detection (DICOM by marker/headerless heuristic, PGM by P5
magic), preprocessing, inference, and the JSON history / CSV export that
downstream consumers read.  Inference is pure given a loaded registry;
history appends are atomic (write-temp-then-rename) and must be
serialized per file by the caller.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import uuid
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import ENGINE_VERSION
from .dicom import extract_pixels, parse_dicom, sniff_dicom
from .errors import CorruptHistory, IoFailure, UnknownFormat
from .inference import forward
from .pgm import read_pgm_bytes
from .preprocess import PreprocessConfig, normalize_intensity, to_model_input
from .registry import Registry
from .rounding import format_fixed

CSV_HEADER = (
    "timestamp,patient_id,patient_name,scan_type,predicted_class,confidence,"
    "p_glioma,p_meningioma,p_pituitary,p_notumor,source_path"
)
CSV_COLUMNS = CSV_HEADER.split(",")


@dataclass(frozen=True)
class QualityMetrics:
    """Mean / std / saturation of the min-max-normalized input image."""

    mean_intensity: float
    std_intensity: float
    saturated_fraction: float


@dataclass(frozen=True)
class DiagnosticRecord:
    record_id: str
    timestamp: str
    patient_id: str | None
    patient_name: str | None
    scan_type: str
    source_path: str
    predicted_class: str
    confidence: float
    probabilities: dict[str, float]
    quality: QualityMetrics
    engine_version: str

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "DiagnosticRecord":
        doc = dict(doc)
        doc["quality"] = QualityMetrics(**doc["quality"])
        return cls(**doc)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def quality_of(img: np.ndarray) -> QualityMetrics:
    normed = normalize_intensity(img)
    saturated = float(np.mean((normed == 0.0) | (normed == 1.0)))
    return QualityMetrics(
        mean_intensity=float(normed.mean()),
        std_intensity=float(normed.std()),
        saturated_fraction=saturated,
    )


def load_image(path) -> np.ndarray:
    """Decode DICOM or binary PGM into a float64 2-D pixel array."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if sniff_dicom(data):
        pixels, _geom = extract_pixels(parse_dicom(data))
        return pixels
    if data.startswith(b"P5"):
        return read_pgm_bytes(data).astype(np.float64)
    raise UnknownFormat(f"{path} is neither DICOM nor binary PGM")


def predict_array(
    img: np.ndarray,
    scan_type: str,
    registry: Registry,
    source_path: str,
    patient_id: str | None = None,
    patient_name: str | None = None,
) -> DiagnosticRecord:
    """Classify an already-decoded pixel array."""
    bundle = registry.get(scan_type).load()
    tensor = to_model_input(img, PreprocessConfig())
    probs = forward(bundle.weight_table, tensor.data)

    labels = bundle.classes
    idx = int(np.argmax(probs))  # first maximum wins ties, i.e. lowest class index
    probabilities = {label: float(p) for label, p in zip(labels, probs)}
    return DiagnosticRecord(
        record_id=str(uuid.uuid4()),
        timestamp=_utc_now(),
        patient_id=patient_id,
        patient_name=patient_name,
        scan_type=scan_type,
        source_path=str(source_path),
        predicted_class=labels[idx],
        confidence=float(probs[idx]),
        probabilities=probabilities,
        quality=quality_of(img),
        engine_version=ENGINE_VERSION,
    )


def predict(
    path,
    scan_type: str,
    registry: Registry,
    patient_id: str | None = None,
    patient_name: str | None = None,
) -> DiagnosticRecord:
    img = load_image(path)
    return predict_array(img, scan_type, registry, str(path), patient_id, patient_name)


# --- history -------------------------------------------------------------------


def read_history(history_path) -> list[DiagnosticRecord]:
    path = Path(history_path)
    if not path.exists():
        return []
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptHistory(f"{path}: {exc}") from exc
    if not isinstance(doc, list):
        raise CorruptHistory(f"{path} does not hold a JSON array")
    try:
        return [DiagnosticRecord.from_dict(item) for item in doc]
    except (KeyError, TypeError) as exc:
        raise CorruptHistory(f"{path} holds malformed records: {exc}") from exc


def _write_history(records: list[DiagnosticRecord], path: Path) -> None:
    payload = json.dumps([r.to_dict() for r in records], indent=2) + "\n"
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), prefix=".history-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload)
        os.replace(tmp_name, path)
    except OSError as exc:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def append_history(record: DiagnosticRecord, history_path) -> None:
    """Append one record atomically; a corrupt file is left untouched."""
    path = Path(history_path)
    records = read_history(path)
    records.append(record)
    _write_history(records, path)


def clear_history(history_path) -> None:
    _write_history([], Path(history_path))


# --- CSV export ------------------------------------------------------------------


def export_csv_text(records: list[DiagnosticRecord]) -> str:
    """RFC-4180 CSV; probabilities at 6 decimals, ties away from zero."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.timestamp,
                r.patient_id or "",
                r.patient_name or "",
                r.scan_type,
                r.predicted_class,
                format_fixed(r.confidence, 6),
                format_fixed(r.probabilities.get("glioma", 0.0), 6),
                format_fixed(r.probabilities.get("meningioma", 0.0), 6),
                format_fixed(r.probabilities.get("pituitary", 0.0), 6),
                format_fixed(r.probabilities.get("notumor", 0.0), 6),
                r.source_path,
            ]
        )
    return buf.getvalue()


def export_csv(records: list[DiagnosticRecord], path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(export_csv_text(records))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
