"""Local HTTP service exposing models, studies, slices, diagnosis, history.

The only stateful component: the registry and assembled volumes are shared
read-only, history appends are serialized behind a lock, and each study's
volume is assembled exactly once on first slice access.  Pixels travel as
base64 raw 8-bit grayscale plus dimensions; the viewer renders them into a
canvas buffer directly.
"""

from __future__ import annotations

import base64
import logging
import threading
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles

from .diagnose import (
    append_history,
    clear_history,
    export_csv_text,
    predict,
    predict_array,
    read_history,
)
from .dicom import MODALITY, extract_pixels, parse_dicom, sniff_dicom
from .errors import NoModelForScanType, PhydcmError
from .registry import Registry
from .volume import PLANES, CrosshairPoint, Volume, assemble_volume, extract_slice, map_crosshair, render_window

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8640


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


@dataclass
class Study:
    """Lazily assembled DICOM series; metadata is read at discovery time."""

    study_id: str
    source_dir: Path
    files: list[Path]
    dims: tuple[int, int, int]  # (nx, ny, nz)
    spacing: tuple[float, float, float]
    scan_type_hint: str | None
    _volume: Volume | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock)
    assemblies: int = 0

    def volume(self) -> Volume:
        with self._lock:
            if self._volume is None:
                slices = []
                for path in self.files:
                    ds = parse_dicom(path.read_bytes())
                    slices.append(extract_pixels(ds))
                self._volume = assemble_volume(slices)
                self.assemblies += 1
            return self._volume

    def entry(self) -> dict:
        return {
            "study_id": self.study_id,
            "source_dir": str(self.source_dir),
            "dims": list(self.dims),
            "spacing": list(self.spacing),
            "scan_type_hint": self.scan_type_hint,
        }


def discover_studies(data_dir) -> dict[str, Study]:
    """One study per subdirectory holding at least one DICOM file."""
    studies: dict[str, Study] = {}
    root = Path(data_dir)
    if not root.is_dir():
        return studies
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        files = []
        geoms = []
        hint = None
        for f in sorted(p for p in sub.iterdir() if p.is_file()):
            try:
                blob = f.read_bytes()
            except OSError:
                continue
            if not sniff_dicom(blob):
                continue
            try:
                ds = parse_dicom(blob)
                _pixels, geom = extract_pixels(ds)
            except PhydcmError:
                continue
            files.append(f)
            geoms.append(geom)
            if hint is None:
                modality = ds.get_string(MODALITY)
                hint = modality.lower() if modality else None
        if not files:
            continue
        ref = geoms[0]
        normal = np.cross(np.asarray(ref.row_dir, float), np.asarray(ref.col_dir, float))
        projections = sorted(float(np.dot(np.asarray(g.position, float), normal)) for g in geoms)
        if len(projections) > 1:
            sz = float(np.median(np.diff(projections)))
        else:
            sz = 1.0
        studies[sub.name] = Study(
            study_id=sub.name,
            source_dir=sub,
            files=files,
            dims=(ref.cols, ref.rows, len(files)),
            spacing=(float(ref.pixel_spacing[1]), float(ref.pixel_spacing[0]), sz),
            scan_type_hint=hint,
        )
    return studies


def create_app(models_dir, data_dir=None, history_path=None, static_dir=None) -> FastAPI:
    app = FastAPI(title="phydcm service")
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=r"https?://(localhost|127\.0\.0\.1)(:\d+)?",
        allow_methods=["*"],
        allow_headers=["*"],
    )

    log_lines: deque[str] = deque(maxlen=200)
    logger = logging.getLogger("phydcm.service")
    logger.setLevel(logging.INFO)

    class _DequeHandler(logging.Handler):
        def emit(self, record):
            log_lines.append(self.format(record))

    handler = _DequeHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    logger.addHandler(handler)

    registry = Registry.from_dir(models_dir, eager=True)
    studies = discover_studies(data_dir) if data_dir is not None else {}
    history_file = Path(history_path) if history_path is not None else Path("phydcm_history.json")
    history_lock = threading.Lock()

    app.state.registry = registry
    app.state.studies = studies
    app.state.history_path = history_file
    logger.info("service up: %d model(s), %d study(ies)", len(registry.bundles()), len(studies))

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.code, "message": exc.message})

    @app.exception_handler(PhydcmError)
    async def _pipeline_error(request: Request, exc: PhydcmError):
        return JSONResponse(status_code=500, content={"error": exc.code, "message": str(exc)})

    def get_study(study_id: str) -> Study:
        try:
            return studies[study_id]
        except KeyError:
            raise ApiError(404, "unknown_study", f"no study {study_id!r}") from None

    def volume_of(study: Study) -> Volume:
        try:
            return study.volume()
        except PhydcmError as exc:
            raise ApiError(500, exc.code, str(exc)) from exc

    @app.get("/api/models")
    def models(scan_type: str | None = None):
        out = []
        for b in registry.bundles():
            if scan_type is not None and b.scan_type != scan_type:
                continue
            out.append({"scan_type": b.scan_type, "classes": b.classes, "loaded": b.loaded})
        return out

    @app.get("/api/studies")
    def list_studies():
        return [studies[k].entry() for k in sorted(studies)]

    @app.get("/api/studies/{study_id}/slice")
    def get_slice(
        study_id: str,
        plane: str,
        index: str,
        window: str | None = None,
        level: str | None = None,
    ):
        study = get_study(study_id)
        if plane not in PLANES:
            raise ApiError(400, "bad_plane", f"plane must be one of {PLANES}")
        try:
            idx = int(index)
        except ValueError:
            raise ApiError(400, "bad_index", f"index {index!r} is not an integer") from None
        vol = volume_of(study)
        nx, ny, nz = vol.dims
        extent = {"axial": nz, "coronal": ny, "sagittal": nx}[plane]
        if not 0 <= idx < extent:
            raise ApiError(400, "bad_index", f"{plane} index {idx} outside [0, {extent})")

        try:
            win = float(window) if window is not None else None
            lev = float(level) if level is not None else None
        except ValueError:
            raise ApiError(400, "bad_window", "window/level must be numbers") from None
        if win is None or lev is None:
            lo = float(vol.voxels.min())
            hi = float(vol.voxels.max())
            if win is None:
                win = (hi - lo) if hi > lo else 1.0
            if lev is None:
                lev = (hi + lo) / 2.0
        if win <= 0:
            raise ApiError(400, "bad_window", f"window {win} must be positive")

        raw = extract_slice(vol, plane, idx)
        rendered = render_window(raw, win, lev)
        logger.info("slice %s/%s[%d] window=%g level=%g", study_id, plane, idx, win, lev)
        return {
            "width": int(rendered.shape[1]),
            "height": int(rendered.shape[0]),
            "pixels": base64.b64encode(rendered.tobytes()).decode("ascii"),
        }

    @app.post("/api/crosshair")
    def crosshair(payload: dict):
        study = get_study(str(payload.get("study_id")))
        try:
            x, y, z = (int(payload[k]) for k in ("x", "y", "z"))
        except (KeyError, TypeError, ValueError):
            raise ApiError(400, "bad_point", "crosshair needs integer x, y, z") from None
        nx, ny, nz = study.dims
        if not (0 <= x < nx and 0 <= y < ny and 0 <= z < nz):
            raise ApiError(400, "out_of_bounds", f"({x},{y},{z}) outside dims {(nx, ny, nz)}")
        vol = volume_of(study)
        triples = map_crosshair(CrosshairPoint(x, y, z), vol)
        return {plane: list(t) for plane, t in triples.items()}

    @app.post("/api/diagnose")
    def diagnose_endpoint(payload: dict):
        scan_type = payload.get("scan_type")
        if not scan_type:
            raise ApiError(400, "bad_request", "scan_type is required")
        patient_id = payload.get("patient_id")
        patient_name = payload.get("patient_name")

        try:
            if payload.get("study_id"):
                study = get_study(str(payload["study_id"]))
                plane = payload.get("plane", "axial")
                if plane not in PLANES:
                    raise ApiError(400, "bad_plane", f"plane must be one of {PLANES}")
                vol = volume_of(study)
                extent = dict(zip(("sagittal", "coronal", "axial"), vol.dims))[plane]
                index = int(payload.get("index", 0))
                if not 0 <= index < extent:
                    raise ApiError(400, "bad_index", f"{plane} index {index} outside [0, {extent})")
                img = extract_slice(vol, plane, index)
                source = f"{study.study_id}:{plane}:{index}"
                record = predict_array(img, scan_type, registry, source, patient_id, patient_name)
            elif payload.get("path"):
                record = predict(payload["path"], scan_type, registry, patient_id, patient_name)
            else:
                raise ApiError(400, "bad_request", "either study_id or path is required")
        except NoModelForScanType as exc:
            raise ApiError(409, exc.code, str(exc)) from exc
        except ApiError:
            raise
        except PhydcmError as exc:
            raise ApiError(422, exc.code, str(exc)) from exc

        with history_lock:
            append_history(record, history_file)
        logger.info("diagnose %s -> %s (%.4f)", record.source_path, record.predicted_class, record.confidence)
        return record.to_dict()

    @app.get("/api/history")
    def history():
        with history_lock:
            return [r.to_dict() for r in read_history(history_file)]

    @app.get("/api/history/export")
    def history_export(format: str = "csv"):
        if format != "csv":
            raise ApiError(400, "bad_format", "only format=csv is available")
        with history_lock:
            text = export_csv_text(read_history(history_file))
        return Response(
            content=text,
            media_type="text/csv",
            headers={"Content-Disposition": 'attachment; filename="phydcm_history.csv"'},
        )

    @app.delete("/api/history")
    def history_clear():
        with history_lock:
            clear_history(history_file)
        logger.info("history cleared")
        return {"cleared": True}

    @app.get("/api/log")
    def get_log():
        return PlainTextResponse("\n".join(log_lines) + ("\n" if log_lines else ""))

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="viewer")

    return app


def serve(app: FastAPI, host: str = DEFAULT_HOST, port: int = DEFAULT_PORT) -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="info")
