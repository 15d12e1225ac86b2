import numpy as np
import pytest

from phydcm.cli import FIXTURE_SEED, write_fixture_assets
from phydcm.dicom import SliceGeometry, fixture_dataset_bytes
from phydcm.registry import Registry
from phydcm.weights import gen_fixture_weights


@pytest.fixture(scope="session")
def fixture_weights():
    return gen_fixture_weights(FIXTURE_SEED)


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    """One gen-fixture output tree shared by the whole session."""
    out = tmp_path_factory.mktemp("fixture")
    write_fixture_assets(FIXTURE_SEED, out)
    return out


@pytest.fixture(scope="session")
def registry(fixture_dir):
    return Registry.from_dir(fixture_dir)


def make_slice_bytes(rows=4, cols=4, z=0.0, slope=1.0, intercept=0.0, pixels=None):
    geom = SliceGeometry(
        rows=rows,
        cols=cols,
        position=(0.0, 0.0, float(z)),
        rescale_slope=slope,
        rescale_intercept=intercept,
    )
    if pixels is None:
        pixels = (np.arange(rows * cols, dtype=np.uint16) * 7 % 1024).reshape(rows, cols)
    return fixture_dataset_bytes(geom, pixels), pixels


@pytest.fixture
def slice_bytes():
    return make_slice_bytes
