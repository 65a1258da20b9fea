import numpy as np
import pytest

from mriq import dataset
from mriq.kspace import forward_kspace
from mriq.phantom import generate_phantom, synth_coil_maps


@pytest.fixture(scope="session")
def phantom64():
    return generate_phantom(7, 64, "knee-fs")


@pytest.fixture(scope="session")
def maps64():
    return synth_coil_maps(64, 4, 3)


@pytest.fixture(scope="session")
def kvol64(phantom64, maps64):
    return forward_kspace(phantom64, maps64, etl=8)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Small but complete on-disk dataset shared by CLI/service tests."""
    out = tmp_path_factory.mktemp("tinyds")
    config = dataset.DatasetConfig(train_slices=4, val_slices=2, test_slices=2,
                                   slices_per_subject=2, m_t=5, size=32, n_coils=2,
                                   etl=8, seed=5)
    manifest = dataset.build_dataset(out, config)
    return out, manifest
