#!/usr/bin/env python3
"""Self-contained pipeline walkthrough on generated fixtures.

Creates fixture assets in a temp directory, then exercises every stage:
DICOM parse, volume assembly, plane extraction, preprocessing, inference,
record creation, history, and CSV export.  Prints what each stage saw.
"""

import tempfile
from pathlib import Path

from phydcm.cli import write_fixture_assets
from phydcm.diagnose import append_history, export_csv_text, predict, read_history
from phydcm.dicom import extract_pixels, parse_dicom
from phydcm.registry import Registry
from phydcm.volume import assemble_volume, extract_slice


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="phydcm-demo-"))
    paths = write_fixture_assets(0x5EED, workdir)
    print(f"fixtures in {workdir}")

    slices = [extract_pixels(parse_dicom(p.read_bytes())) for p in sorted(paths["series"].iterdir())]
    volume = assemble_volume(slices)
    nx, ny, nz = volume.dims
    print(f"volume {nx}x{ny}x{nz}, spacing {volume.spacing}")
    mid = extract_slice(volume, "axial", nz // 2)
    print(f"middle axial slice: min {mid.min():.0f} max {mid.max():.0f}")

    registry = Registry.from_dir(workdir)
    history = workdir / "history.json"
    for source in (paths["dicom"], paths["pgm"]):
        record = predict(source, "mri", registry)
        append_history(record, history)
        print(f"{source.name}: {record.predicted_class} ({record.confidence:.4f})")

    records = read_history(history)
    assert records[0].probabilities == records[1].probabilities, "dual-route vectors diverged"
    print("dual-route probability vectors identical")
    print()
    print(export_csv_text(records))


if __name__ == "__main__":
    main()
