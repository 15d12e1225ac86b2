import json
import threading

import pytest

from phydcm.errors import DirNotFound, LabelCountMismatch, NoModelForScanType
from phydcm.registry import (
    DEFAULT_CLASSES,
    MODELS_DIR_ENV,
    OrphanModelFileWarning,
    Registry,
    default_models_dir,
    scan_models_dir,
    write_label_map,
)
from phydcm.weights import gen_fixture_weights, save_weights


def make_pair(dirpath, scan_type="mri", classes=None, seed=7):
    save_weights(gen_fixture_weights(seed), dirpath / f"{scan_type}_model.pdcm")
    write_label_map(dirpath / f"{scan_type}_labels.json", classes or DEFAULT_CLASSES)


def test_single_pair_discovered_unloaded(tmp_path):
    make_pair(tmp_path)
    bundles = scan_models_dir(tmp_path)
    assert len(bundles) == 1
    assert bundles[0].scan_type == "mri"
    assert not bundles[0].loaded
    assert bundles[0].classes == DEFAULT_CLASSES


def test_orphan_weight_file_warns(tmp_path):
    save_weights(gen_fixture_weights(1), tmp_path / "mri_model.pdcm")
    with pytest.warns(OrphanModelFileWarning, match="mri_model.pdcm"):
        bundles = scan_models_dir(tmp_path)
    assert bundles == []


def test_orphan_labels_file_warns(tmp_path):
    write_label_map(tmp_path / "ct_labels.json", DEFAULT_CLASSES)
    with pytest.warns(OrphanModelFileWarning, match="ct_labels.json"):
        assert scan_models_dir(tmp_path) == []


def test_filter_restricts_to_one_scan_type(tmp_path):
    make_pair(tmp_path, "mri")
    make_pair(tmp_path, "ct", seed=8)
    assert len(scan_models_dir(tmp_path)) == 2
    only = scan_models_dir(tmp_path, scan_type="mri")
    assert [b.scan_type for b in only] == ["mri"]


def test_discovery_sorted_by_scan_type(tmp_path):
    for st in ("pet", "ct", "mri"):
        make_pair(tmp_path, st)
    assert [b.scan_type for b in scan_models_dir(tmp_path)] == ["ct", "mri", "pet"]


def test_dir_not_found(tmp_path):
    with pytest.raises(DirNotFound):
        scan_models_dir(tmp_path / "missing")


def test_malformed_labels_warn_and_skip(tmp_path):
    save_weights(gen_fixture_weights(1), tmp_path / "mri_model.pdcm")
    (tmp_path / "mri_labels.json").write_text('{"classes": ["A", "A", ""]}')
    with pytest.warns(OrphanModelFileWarning):
        assert scan_models_dir(tmp_path) == []


def test_load_bundle_happy_path(tmp_path):
    make_pair(tmp_path)
    bundle = scan_models_dir(tmp_path)[0]
    bundle.load()
    assert bundle.loaded
    assert len(bundle.classes) == 4
    assert "stem.w" in bundle.weight_table


def test_label_count_mismatch(tmp_path):
    save_weights(gen_fixture_weights(1), tmp_path / "mri_model.pdcm")
    (tmp_path / "mri_labels.json").write_text(json.dumps({"classes": ["a", "b", "c"]}))
    bundle = scan_models_dir(tmp_path)[0]
    with pytest.raises(LabelCountMismatch):
        bundle.load()


def test_load_idempotent_single_disk_read(tmp_path):
    make_pair(tmp_path)
    bundle = scan_models_dir(tmp_path)[0]
    reads = []

    def counting_read(path):
        reads.append(path)
        return open(path, "rb").read()

    bundle.load(read_fn=counting_read)
    table_first = bundle.weight_table
    bundle.load(read_fn=counting_read)
    assert len(reads) == 1
    assert bundle.weight_table is table_first


def test_concurrent_loads_serialize(tmp_path):
    make_pair(tmp_path)
    bundle = scan_models_dir(tmp_path)[0]
    reads = []
    lock = threading.Lock()

    def counting_read(path):
        with lock:
            reads.append(path)
        return open(path, "rb").read()

    threads = [threading.Thread(target=bundle.load, kwargs={"read_fn": counting_read}) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(reads) == 1
    assert bundle.loaded


def test_registry_get_and_missing(tmp_path):
    make_pair(tmp_path)
    reg = Registry.from_dir(tmp_path)
    assert reg.get("mri").scan_type == "mri"
    with pytest.raises(NoModelForScanType):
        reg.get("ct")


def test_registry_eager_loads_at_startup(tmp_path):
    make_pair(tmp_path)
    reg = Registry.from_dir(tmp_path, eager=True)
    assert reg.get("mri").loaded


def test_filtered_scan_loads_one_weight_file(tmp_path):
    make_pair(tmp_path, "mri")
    make_pair(tmp_path, "ct", seed=9)
    reg = Registry.from_dir(tmp_path, scan_type="mri", eager=True)
    assert [b.scan_type for b in reg.bundles()] == ["mri"]


def test_models_dir_resolution(tmp_path, monkeypatch):
    monkeypatch.delenv(MODELS_DIR_ENV, raising=False)
    assert default_models_dir(None) is None
    monkeypatch.setenv(MODELS_DIR_ENV, str(tmp_path))
    assert default_models_dir(None) == tmp_path
    # an explicit CLI value wins over the environment variable
    assert str(default_models_dir("/elsewhere")) == "/elsewhere"
