import math

import numpy as np
import pytest

from mriq.errors import DegenerateInputError
from mriq.estimators import (Method, block_dct_heuristic, block_dct_sigma,
                             score_version_set, snr_heuristic)
from mriq.kspace import make_version_set, snr_db
from mriq.phantom import MagnitudeImage


def image(pixels, v=None):
    return MagnitudeImage(pixels=np.asarray(pixels, dtype=float), version=v)


def set_with_exact_snrs(db_values, size=16):
    """Versions whose Eq-(1a) SNR against the clean last version is exact."""
    ref = np.full((size, size), 1.0)
    energy = ref.size
    versions = []
    for v, db in enumerate(db_values, start=1):
        err = math.sqrt(energy / 10 ** (db / 10) / ref.size)
        versions.append(image(ref + err, v=v))
    versions.append(image(ref, v=len(db_values) + 1))
    return versions


def test_snr_heuristic_extrapolation():
    # Q4 = 30, Q3 = 27 -> clean scores 33
    scores = snr_heuristic(set_with_exact_snrs([21.0, 24.0, 27.0, 30.0]))
    assert scores[-1].value == pytest.approx(33.0, abs=1e-9)
    assert scores[2].value == pytest.approx(27.0, abs=1e-9)


def test_snr_heuristic_linear_extrapolation_identity():
    scores = [s.value for s in snr_heuristic(set_with_exact_snrs([12.0, 17.5, 19.0, 28.0]))]
    assert scores[-1] - scores[-2] == pytest.approx(scores[-2] - scores[-3], abs=1e-12)


def test_snr_heuristic_identical_version_degenerate():
    ref = image(np.ones((8, 8)))
    with pytest.raises(DegenerateInputError):
        snr_heuristic([image(np.ones((8, 8))), image(np.full((8, 8), 2.0)), ref])


def test_snr_heuristic_zero_db_at_equal_energy():
    ref = np.ones((8, 8))
    scores = snr_heuristic([image(ref + 1.0), image(ref + 0.5), image(ref)])
    assert scores[0].value == pytest.approx(0.0, abs=1e-12)


def test_snr_heuristic_shape_mismatch():
    with pytest.raises(ValueError):
        snr_heuristic([image(np.ones((8, 8))), image(np.ones((16, 16))), image(np.ones((8, 8)))])


def test_snr_heuristic_matches_direct_eq(phantom64, maps64):
    versions = make_version_set(phantom64, maps64, 5, 12.0, 30.0, 3)
    scores = snr_heuristic(versions)
    clean = versions[-1].pixels
    for v in range(4):
        assert scores[v].value == pytest.approx(snr_db(clean, versions[v].pixels), abs=1e-9)
    assert all(a.value < b.value for a, b in zip(scores, scores[1:]))


def test_block_dct_sigma_zero_image():
    assert block_dct_sigma(image(np.zeros((32, 32)))) == 0.0


def test_block_dct_sigma_recovers_known_noise():
    estimates = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        img = np.abs(100.0 + rng.normal(0, 10.0, (64, 64)))
        estimates.append(block_dct_sigma(image(img)))
    assert 8.5 <= np.mean(estimates) <= 11.5


def test_block_dct_sigma_scales_linearly():
    rng = np.random.default_rng(1)
    base = 50.0 + rng.normal(0, 4.0, (64, 64))
    a = block_dct_sigma(image(np.abs(base)))
    b = block_dct_sigma(image(np.abs(2.0 * base)))
    assert b == pytest.approx(2.0 * a, rel=0.10)


def test_block_dct_sigma_constant_invariance():
    rng = np.random.default_rng(2)
    img = np.abs(30.0 + rng.normal(0, 2.0, (48, 48)))
    a = block_dct_sigma(image(img))
    b = block_dct_sigma(image(img + 17.0))
    assert abs(a - b) < 1e-9


def test_block_dct_sigma_size_validation():
    with pytest.raises(ValueError):
        block_dct_sigma(image(np.ones((8, 8))))


def test_block_dct_heuristic_mapping():
    img = image(np.zeros((32, 32)))
    assert block_dct_heuristic(img).value == pytest.approx(80.0)  # eps floor
    rng = np.random.default_rng(3)
    noisy = image(np.abs(60 + rng.normal(0, 5, (64, 64))))
    sigma = block_dct_sigma(noisy)
    want = -10 * math.log10(max(sigma**2, 1e-8))
    assert block_dct_heuristic(noisy).value == pytest.approx(want, abs=1e-12)


def test_block_dct_antitone_in_noise(phantom64, maps64):
    # rank correlation must be exactly -1 against noise level on every set
    from mriq.metrics import spearman

    for seed in range(20):
        versions = make_version_set(phantom64, maps64, 5, 12.0, 30.0, 100 + seed)
        values = [block_dct_heuristic(v).value for v in versions]
        assert spearman(values, [1, 2, 3, 4, 5]) == pytest.approx(1.0)


def test_score_version_set_dispatch(phantom64, maps64):
    versions = make_version_set(phantom64, maps64, 4, 14.0, 26.0, 9)
    for method in (Method.SNR, Method.BLOCK_DCT):
        scores = score_version_set(versions, method)
        assert len(scores) == 4
        assert all(s.method == method for s in scores)
