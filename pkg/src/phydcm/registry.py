"""Model discovery and lazy loading from a models directory.

Pairs are matched by naming convention: `<scan_type>_model.pdcm` plus
`<scan_type>_labels.json`.  Unmatched halves produce warnings, never
errors.  Weight tables load lazily (at most one disk read per bundle,
also under concurrent callers) and are immutable afterwards.
"""

from __future__ import annotations

import json
import os
import threading
import warnings
from pathlib import Path

import numpy as np

from .errors import DirNotFound, LabelCountMismatch, NoModelForScanType
from .inference import NUM_CLASSES
from .weights import decode_weights

MODELS_DIR_ENV = "PHYDCM_MODELS_DIR"
DEFAULT_CLASSES = ["glioma", "meningioma", "pituitary", "notumor"]


class OrphanModelFileWarning(UserWarning):
    """A weight file or label map without its counterpart."""


def _valid_labels(classes) -> bool:
    if not isinstance(classes, list) or not classes:
        return False
    if len(set(classes)) != len(classes):
        return False
    return all(
        isinstance(c, str) and c != "" and c.isascii() and c == c.lower() for c in classes
    )


def read_label_map(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    classes = doc.get("classes") if isinstance(doc, dict) else None
    if not _valid_labels(classes):
        raise ValueError(f"{path} is not a valid label map")
    return classes


def write_label_map(path, classes: list[str]) -> None:
    if not _valid_labels(classes):
        raise ValueError("label names must be unique, non-empty, lowercase ASCII")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"classes": classes}, fh, indent=2)
        fh.write("\n")


class ModelBundle:
    """One (weights, labels) pair for a scan type; weights load lazily."""

    def __init__(self, scan_type: str, weights_path: Path, classes: list[str]):
        self.scan_type = scan_type
        self.weights_path = Path(weights_path)
        self.classes = list(classes)
        self._table: dict[str, np.ndarray] | None = None
        self._lock = threading.Lock()

    @property
    def loaded(self) -> bool:
        return self._table is not None

    @property
    def weight_table(self) -> dict[str, np.ndarray]:
        if self._table is None:
            raise RuntimeError(f"bundle {self.scan_type!r} is not loaded")
        return self._table

    def load(self, read_fn=None) -> "ModelBundle":
        """Load and validate weights; idempotent, exactly one disk read.

        `read_fn(path) -> bytes` exists so tests can count disk reads.
        """
        with self._lock:
            if self._table is None:
                if len(self.classes) != NUM_CLASSES:
                    raise LabelCountMismatch(
                        f"{len(self.classes)} labels for a {NUM_CLASSES}-class model"
                    )
                reader = read_fn if read_fn is not None else (lambda p: Path(p).read_bytes())
                self._table = decode_weights(reader(self.weights_path))
        return self


def scan_models_dir(models_dir, scan_type: str | None = None) -> list[ModelBundle]:
    """Discover unloaded bundles, sorted by scan type.

    Weight files without a label map (and vice versa) are reported as
    OrphanModelFileWarning and skipped.
    """
    root = Path(models_dir)
    if not root.is_dir():
        raise DirNotFound(f"models directory {root} does not exist")

    weight_stems = {p.name[: -len("_model.pdcm")]: p for p in root.glob("*_model.pdcm")}
    label_stems = {p.name[: -len("_labels.json")]: p for p in root.glob("*_labels.json")}

    for stem in sorted(set(weight_stems) - set(label_stems)):
        warnings.warn(f"{weight_stems[stem].name} has no matching {stem}_labels.json", OrphanModelFileWarning)
    for stem in sorted(set(label_stems) - set(weight_stems)):
        warnings.warn(f"{label_stems[stem].name} has no matching {stem}_model.pdcm", OrphanModelFileWarning)

    bundles = []
    for stem in sorted(set(weight_stems) & set(label_stems)):
        if scan_type is not None and stem != scan_type:
            continue
        try:
            classes = read_label_map(label_stems[stem])
        except (ValueError, json.JSONDecodeError) as exc:
            warnings.warn(f"{label_stems[stem].name} skipped: {exc}", OrphanModelFileWarning)
            continue
        bundles.append(ModelBundle(stem, weight_stems[stem], classes))
    return bundles


def default_models_dir(cli_value=None):
    """CLI flag wins over the PHYDCM_MODELS_DIR environment variable."""
    if cli_value is not None:
        return Path(cli_value)
    env = os.environ.get(MODELS_DIR_ENV)
    if env:
        return Path(env)
    return None


class Registry:
    """Scan-type keyed view over the discovered bundles."""

    def __init__(self, bundles: list[ModelBundle]):
        self._bundles = {b.scan_type: b for b in bundles}

    @classmethod
    def from_dir(cls, models_dir, scan_type: str | None = None, eager: bool = False) -> "Registry":
        reg = cls(scan_models_dir(models_dir, scan_type))
        if eager:
            for bundle in reg.bundles():
                bundle.load()
        return reg

    def bundles(self) -> list[ModelBundle]:
        return [self._bundles[k] for k in sorted(self._bundles)]

    def get(self, scan_type: str) -> ModelBundle:
        try:
            return self._bundles[scan_type]
        except KeyError:
            raise NoModelForScanType(f"no model for scan type {scan_type!r}") from None
