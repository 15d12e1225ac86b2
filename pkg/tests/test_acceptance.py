"""Acceptance suite: one test per release criterion, each printing a
PASS line with its pinned tolerance.  Run with `pytest tests/test_acceptance.py -v -s`.
"""

import json
import shutil

import numpy as np

from naive_reference import attention_loops, conv2d_loops, forward_straightline
from phydcm.cli import main
from phydcm.diagnose import CSV_HEADER, export_csv_text
from phydcm.dicom import (
    IMAGE_ORIENTATION,
    IMAGE_POSITION,
    PIXEL_SPACING,
    SliceGeometry,
    extract_pixels,
    fixture_dataset_bytes,
    parse_dicom,
)
from phydcm.inference import attention, conv2d, forward
from phydcm.metrics import (
    ConfusionMatrix,
    f1,
    f1_string,
    recall,
    report_from_counts,
    summary_accuracy_string,
)
from phydcm.volume import CrosshairPoint, assemble_volume, extract_slice, map_crosshair
from phydcm.weights import gen_fixture_weights


def passed(name, detail=""):
    print(f"PASS {name}" + (f" ({detail})" if detail else ""))


def test_per_dataset_accuracy_strings():
    """Published per-class counts reproduce the table strings exactly."""
    brisc = report_from_counts(
        ["glioma", "meningioma", "pituitary", "notumor"],
        [254, 306, 300, 140],
        [243, 246, 297, 137],
    )
    assert [r.accuracy_pct for r in brisc.rows] == ["95.67", "80.39", "99.00", "97.86"]
    assert brisc.overall.accuracy_pct == "92.30"

    nick = report_from_counts(
        ["glioma", "meningioma", "pituitary", "notumor"],
        [400, 400, 400, 400],
        [311, 315, 393, 400],
    )
    assert [r.accuracy_pct for r in nick.rows] == ["77.75", "78.75", "98.25", "100.00"]
    assert nick.overall.accuracy_pct == "88.69"

    br35h = report_from_counts(["notumor"], [1500], [1500])
    assert br35h.rows[0].accuracy_pct == "100.00"
    passed("per-dataset-accuracy-strings", "string equality")


def test_f1_and_cross_dataset_summary():
    """f1(0.90, 0.91) -> 0.905; summary accuracy column string-exact."""
    assert f1_string(0.90, 0.91) == "0.905"
    summary = [
        summary_accuracy_string(923, 1000),
        summary_accuracy_string(1419, 1600),
        summary_accuracy_string(1500, 1500),
    ]
    assert summary == ["92.30%", "88.69%", "100%"]
    passed("f1-and-summary-strings", "string equality")


def test_confusion_recall_consistency():
    """Recalls from the published 4x4 counts match its printed percentages."""
    cm = ConfusionMatrix(
        ["glioma", "meningioma", "pituitary", "notumor"],
        [[285, 12, 5, 4], [6, 274, 15, 7], [3, 6, 289, 5], [2, 0, 3, 300]],
    )
    printed = {"glioma": 93.1, "meningioma": 90.7, "pituitary": 95.4, "notumor": 98.4}
    for label, want in printed.items():
        got = round(100.0 * recall(cm, label), 1)
        assert abs(got - want) <= 0.05, (label, got, want)
    passed("confusion-recall-consistency", "±0.05 after 1-decimal rounding")


def test_inference_engine_oracle_equivalence():
    """conv2d/attention vs naive references (>=100 cases each) and the
    golden forward vs a straight-line dual implementation, all at 1e-5."""
    rng = np.random.default_rng(0xACCE97)

    for case in range(100):
        c_in = int(rng.integers(1, 5))
        c_out = int(rng.integers(1, 5))
        h = int(rng.integers(3, 17))
        w = int(rng.integers(3, 17))
        stride = int(rng.choice([1, 2]))
        x = rng.normal(size=(c_in, h, w))
        kernel = rng.normal(size=(c_out, c_in, 3, 3))
        bias = rng.normal(size=c_out)
        got = conv2d(x, kernel, bias, stride).astype(np.float64)
        want = conv2d_loops(x, kernel, bias, stride)
        assert np.abs(got - want).max() < 1e-5, f"conv case {case}"

    for case in range(100):
        n = int(rng.integers(1, 7))
        tokens = rng.normal(size=(n, 32))
        params = []
        for _ in range(4):
            params.append(rng.normal(size=(32, 32)) * 0.2)
            params.append(rng.normal(size=32) * 0.2)
        got = attention(tokens, *params).astype(np.float64)
        want, _ = attention_loops(tokens, *params)
        assert np.abs(got - want).max() < 1e-5, f"attention case {case}"

    table = gen_fixture_weights(0x5EED)
    golden_input = np.full((1, 224, 224), 0.5)
    engine = forward(table, golden_input).astype(np.float64)
    straight = forward_straightline(table, golden_input)
    assert np.abs(engine - straight).max() < 1e-5
    passed("inference-oracle-equivalence", "100+100 cases + golden forward, 1e-5")


def test_probability_contract():
    """50 random inputs: softmax sums and attention rows within 1e-6,
    repeated runs bit-identical."""
    table = gen_fixture_weights(0x5EED)
    rng = np.random.default_rng(0x50B05)
    for case in range(50):
        x = rng.random((1, 224, 224))
        trace = {}
        probs = forward(table, x, trace)
        assert abs(float(probs.astype(np.float64).sum()) - 1.0) < 1e-6
        assert (probs >= 0).all()
        for tb in ("tb1", "tb2"):
            rows = trace[f"{tb}.attn"].astype(np.float64).sum(axis=1)
            assert np.abs(rows - 1.0).max() < 1e-6
        again = forward(table, x)
        assert np.array_equal(probs, again), f"case {case} not bit-identical"
    passed("probability-contract", "50 inputs, 1e-6 sums, bitwise repeatability")


def test_dicom_roundtrip():
    """Every fixture file re-parses with bit-exact tags and pixels; the
    slope/intercept affine law holds exactly."""
    rng = np.random.default_rng(0xD1C0)
    for case in range(40):
        rows = int(rng.integers(1, 16))
        cols = int(rng.integers(1, 16))
        pixels = rng.integers(0, 65536, size=(rows, cols), dtype=np.uint16)
        slope = float(rng.choice([1.0, 2.0, 0.5, 4.0, -2.0]))
        intercept = float(rng.choice([0.0, -1024.0, 100.0, 0.5]))
        position = tuple(float(v) for v in rng.normal(size=3) * 100)
        spacing = (float(rng.uniform(0.1, 3.0)), float(rng.uniform(0.1, 3.0)))
        geom = SliceGeometry(
            rows=rows, cols=cols, position=position, pixel_spacing=spacing,
            rescale_slope=slope, rescale_intercept=intercept,
        )
        ds = parse_dicom(fixture_dataset_bytes(geom, pixels))
        values, parsed = extract_pixels(ds)

        assert np.array_equal(values, slope * pixels.astype(np.float64) + intercept)
        assert ds.get_floats(IMAGE_POSITION) == list(position)
        assert ds.get_floats(IMAGE_ORIENTATION) == [1.0, 0.0, 0.0, 0.0, 1.0, 0.0]
        assert ds.get_floats(PIXEL_SPACING) == list(spacing)
        assert parsed.rescale_slope == slope and parsed.rescale_intercept == intercept

        base, _ = extract_pixels(parse_dicom(fixture_dataset_bytes(
            SliceGeometry(rows=rows, cols=cols, position=position, pixel_spacing=spacing), pixels)))
        assert np.array_equal(values, slope * base + intercept)
    passed("dicom-roundtrip", "40 random fixtures, bit-exact")


def test_mpr_invariants():
    """Bitwise permutation invariance, slice/assembly inverse, and an
    exhaustive crosshair bijection on a 4x5x6 grid."""
    rng = np.random.default_rng(0x3D)
    pix = [rng.random((5, 4)) for _ in range(6)]
    slices = [(pix[k], SliceGeometry(rows=5, cols=4, position=(0, 0, float(k)))) for k in range(6)]

    reference = assemble_volume(slices)
    for trial in range(10):
        shuffled = list(slices)
        rng.shuffle(shuffled)
        vol = assemble_volume(shuffled)
        assert np.array_equal(vol.voxels, reference.voxels)
        assert vol.spacing == reference.spacing and vol.origin == reference.origin

    for k in range(6):
        assert np.array_equal(extract_slice(reference, "axial", k), pix[k])

    nx, ny, nz = reference.dims
    assert (nx, ny, nz) == (4, 5, 6)
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                t = map_crosshair(CrosshairPoint(x, y, z), reference)
                assert t["axial"] == (z, y, x)
                assert t["coronal"] == (y, z, x)
                assert t["sagittal"] == (x, z, y)
                # invert from each plane's triple alone
                assert (t["axial"][2], t["axial"][1], t["axial"][0]) == (x, y, z)
                assert (t["coronal"][2], t["coronal"][0], t["coronal"][1]) == (x, y, z)
                assert (t["sagittal"][0], t["sagittal"][2], t["sagittal"][1]) == (x, y, z)
    passed("mpr-invariants", "bitwise + exhaustive 4x5x6 bijection")


def test_end_to_end(tmp_path, capsys):
    """gen-fixture -> predict (DICOM vs PGM identical) -> evaluate report
    -> CSV header byte-exact."""
    fixture = tmp_path / "fx"
    assert main(["gen-fixture", "--seed", "5EED", "--out", str(fixture)]) == 0
    capsys.readouterr()

    def predict_json(path):
        code = main([
            "predict", "--input", str(path), "--scan-type", "mri",
            "--models-dir", str(fixture), "--json",
        ])
        assert code == 0
        return json.loads(capsys.readouterr().out)

    rec_dicom = predict_json(fixture / "sample.dcm")
    rec_pgm = predict_json(fixture / "sample.pgm")
    assert rec_dicom["probabilities"] == rec_pgm["probabilities"]

    dataset = tmp_path / "dataset"
    for label in ("glioma", "meningioma", "pituitary", "notumor"):
        (dataset / label).mkdir(parents=True)
        shutil.copy(fixture / "sample.pgm", dataset / label / "img.pgm")
    report_path = tmp_path / "report.json"
    code = main([
        "evaluate", "--dataset", str(dataset), "--scan-type", "mri",
        "--report", str(report_path), "--models-dir", str(fixture),
    ])
    assert code == 0
    capsys.readouterr()
    doc = json.loads(report_path.read_text())
    assert len(doc["per_class"]) == 4
    for row in doc["per_class"]:
        assert {"label", "tested", "correct", "misclassified", "accuracy_pct"} <= set(row)
        assert row["tested"] == 1
    assert doc["overall"]["tested"] == 4

    header_bytes = export_csv_text([]).encode("utf-8")
    assert header_bytes == CSV_HEADER.encode("utf-8") + b"\r\n"
    passed("end-to-end", "dual-route vectors identical, report schema valid, CSV header exact")
