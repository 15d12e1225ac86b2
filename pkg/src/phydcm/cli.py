"""Command-line front door: predict, evaluate, mpr, models, serve, gen-fixture.

Exit codes are a stable contract: 0 success, 1 runtime error, 2 usage
error.  `gen-fixture` is the single source of every test asset, so the
suite bootstraps itself with zero downloaded data.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnose import append_history, predict
from .dicom import SliceGeometry, extract_pixels, parse_dicom, sniff_dicom, write_fixture_dicom
from .errors import PhydcmError
from .metrics import evaluate_dir, render_table
from .pgm import write_pgm
from .registry import DEFAULT_CLASSES, Registry, default_models_dir, write_label_map
from .rng import SplitMix64
from .rounding import format_fixed
from .volume import PLANES, assemble_volume, extract_slice, render_window
from .weights import gen_fixture_weights, save_weights

FIXTURE_SEED = 0x5EED


def _models_dir_or_die(value) -> Path:
    resolved = default_models_dir(value)
    if resolved is None:
        raise PhydcmError(
            "no models directory: pass --models-dir or set PHYDCM_MODELS_DIR"
        )
    return resolved


# --- fixture generation -----------------------------------------------------


def fixture_pixels(seed: int, rows: int, cols: int, slice_index: int = 0) -> np.ndarray:
    """Deterministic synthetic slice: bright ellipse over seeded noise."""
    rng = SplitMix64((seed << 8) ^ slice_index)
    yy, xx = np.meshgrid(np.arange(rows, dtype=np.float64), np.arange(cols, dtype=np.float64), indexing="ij")
    cy, cx = (rows - 1) / 2.0, (cols - 1) / 2.0
    r2 = ((yy - cy) / (0.38 * rows)) ** 2 + ((xx - cx) / (0.30 * cols)) ** 2
    body = np.where(r2 <= 1.0, 2200.0 * (1.0 - 0.6 * r2), 150.0)
    noise = np.array([rng.next_unit() for _ in range(rows * cols)]).reshape(rows, cols)
    offset = 40.0 * slice_index
    return np.clip(body + 300.0 * noise + offset, 0, 65535).astype(np.uint16)


def write_fixture_assets(seed: int, out_dir) -> dict[str, Path]:
    """Fixture weights + labels, a 3-slice DICOM series, and a matching PGM.

    `sample.dcm` carries a non-trivial rescale (slope 2, intercept -100)
    over the same stored pixels as `sample.pgm`; min-max normalization
    absorbs the affine map, so both must classify identically.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    table = gen_fixture_weights(seed)
    paths["weights"] = out / "mri_model.pdcm"
    save_weights(table, paths["weights"])
    paths["labels"] = out / "mri_labels.json"
    write_label_map(paths["labels"], DEFAULT_CLASSES)

    rows = cols = 64
    series_dir = out / "series"
    series_dir.mkdir(exist_ok=True)
    for k in range(3):
        geom = SliceGeometry(
            rows=rows,
            cols=cols,
            position=(0.0, 0.0, float(k) * 2.5),
            pixel_spacing=(0.9, 0.9),
            rescale_slope=1.0,
            rescale_intercept=0.0,
        )
        write_fixture_dicom(geom, fixture_pixels(seed, rows, cols, k), series_dir / f"slice_{k:03d}.dcm")
    paths["series"] = series_dir

    sample = fixture_pixels(seed, rows, cols, 0)
    geom = SliceGeometry(rows=rows, cols=cols, rescale_slope=2.0, rescale_intercept=-100.0)
    paths["dicom"] = out / "sample.dcm"
    write_fixture_dicom(geom, sample, paths["dicom"])
    paths["pgm"] = out / "sample.pgm"
    write_pgm(paths["pgm"], sample, maxval=65535)
    return paths


# --- subcommands ---------------------------------------------------------------


def cmd_predict(args) -> int:
    registry = Registry.from_dir(_models_dir_or_die(args.models_dir))
    record = predict(args.input, args.scan_type, registry)
    if args.history:
        append_history(record, args.history)
    if args.json:
        print(json.dumps(record.to_dict(), indent=2))
    else:
        print(f"{record.predicted_class} {format_fixed(record.confidence, 2)}")
    return 0


def cmd_evaluate(args) -> int:
    registry = Registry.from_dir(_models_dir_or_die(args.models_dir))
    report, cm = evaluate_dir(args.dataset, registry, args.scan_type)
    doc = report.to_dict()
    doc["confusion"] = {"labels": cm.labels, "counts": cm.counts.tolist()}
    Path(args.report).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    if args.table:
        print(render_table(report), end="")
    else:
        print(f"report written to {args.report}")
    return 0


def _load_series(series_dir) -> list:
    root = Path(series_dir)
    if not root.is_dir():
        raise PhydcmError(f"series directory {root} does not exist")
    slices = []
    for path in sorted(p for p in root.iterdir() if p.is_file()):
        blob = path.read_bytes()
        if not sniff_dicom(blob):
            continue
        slices.append(extract_pixels(parse_dicom(blob)))
    if not slices:
        raise PhydcmError(f"no DICOM files under {root}")
    return slices


def cmd_mpr(args) -> int:
    volume = assemble_volume(_load_series(args.series))
    slice_2d = extract_slice(volume, args.plane, args.index)
    if args.window is not None and args.level is not None:
        window, level = args.window, args.level
    else:
        lo, hi = float(volume.voxels.min()), float(volume.voxels.max())
        window = args.window if args.window is not None else ((hi - lo) if hi > lo else 1.0)
        level = args.level if args.level is not None else (hi + lo) / 2.0
    write_pgm(args.out, render_window(slice_2d, window, level))
    print(f"wrote {args.out}")
    return 0


def cmd_models(args) -> int:
    registry = Registry.from_dir(_models_dir_or_die(args.models_dir))
    bundles = registry.bundles()
    if not bundles:
        print("no models found")
        return 0
    for b in bundles:
        print(f"{b.scan_type}: {len(b.classes)} classes {b.classes} ({b.weights_path.name})")
    return 0


def cmd_serve(args) -> int:
    from .server import create_app, serve

    app = create_app(
        _models_dir_or_die(args.models_dir),
        data_dir=args.data_dir,
        history_path=args.history,
        static_dir=args.static_dir,
    )
    try:
        serve(app, host=args.host, port=args.port)
    except (OSError, SystemExit) as exc:
        code = exc.code if isinstance(exc, SystemExit) else 1
        if code:
            print(f"error: cannot serve on port {args.port}: {exc}", file=sys.stderr)
            return 1
    return 0


def cmd_gen_fixture(args) -> int:
    seed = int(args.seed, 16) if isinstance(args.seed, str) else args.seed
    paths = write_fixture_assets(seed, args.out)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phydcm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"phydcm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="classify one DICOM or PGM image")
    p.add_argument("--input", required=True)
    p.add_argument("--scan-type", required=True)
    p.add_argument("--models-dir", default=None)
    p.add_argument("--json", action="store_true", help="print the full diagnostic record")
    p.add_argument("--history", default=None, help="append the record to this JSON history file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="evaluate a per-class-folder dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--scan-type", required=True)
    p.add_argument("--report", required=True, help="output JSON report path")
    p.add_argument("--models-dir", default=None)
    p.add_argument("--table", action="store_true", help="print the aligned per-class table")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("mpr", help="export one reconstructed plane as PGM")
    p.add_argument("--series", required=True)
    p.add_argument("--plane", required=True, choices=PLANES)
    p.add_argument("--index", required=True, type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--level", type=float, default=None)
    p.set_defaults(func=cmd_mpr)

    p = sub.add_parser("models", help="list discovered model bundles")
    p.add_argument("--models-dir", default=None)
    p.set_defaults(func=cmd_models)

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--port", type=int, default=8640)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--models-dir", default=None)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--history", default=None)
    p.add_argument("--static-dir", default=None, help="serve these static viewer assets at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("gen-fixture", help="write fixture weights, labels, DICOM series, and PGM")
    p.add_argument("--seed", default=f"{FIXTURE_SEED:X}", help="hex seed (default 5EED)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_fixture)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PhydcmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
