import numpy as np
import pytest

from mriq.errors import MissingRulerError, RulerStateError
from mriq.kspace import snr_db
from mriq.phantom import MagnitudeImage, generate_phantom, synth_coil_maps
from mriq.ruler import (ImageRuler, build_ruler, cache_scores, pass_fail,
                        ruler_score, select_ruler)


class FakeNet:
    """Scores an image by its mean pixel value; deterministic and monotone."""

    def score_batch(self, images, batch_size=32):
        return np.array([float(np.mean(im)) for im in np.asarray(images)])


def make_ruler(scores=None, threshold=(3, 3), m_r=8, scan_type="knee-fs"):
    versions = [MagnitudeImage(pixels=np.full((16, 16), float(v)), version=v,
                               scan_type=scan_type) for v in range(m_r)]
    return ImageRuler(scan_type=scan_type, versions=versions,
                      targets_db=list(np.linspace(8, 34, m_r)), snr_range=(8.0, 34.0),
                      s_ruler=scores, threshold=threshold)


def test_build_ruler_ladder(phantom64, maps64):
    ruler = build_ruler(phantom64, maps64, 8, (8.0, 34.0), (12.0, 30.0), seed=1)
    assert ruler.m_r == 8
    clean = ruler.versions[-1].pixels
    energies = [np.sum((v.pixels - clean) ** 2) for v in ruler.versions[:-1]]
    assert all(a > b for a, b in zip(energies, energies[1:]))
    snrs = [snr_db(clean, v.pixels) for v in ruler.versions[:-1]]
    assert all(abs(m - t) <= 0.5 for m, t in zip(snrs, ruler.targets_db[:-1]))


def test_build_ruler_minimal_pair(phantom64, maps64):
    ruler = build_ruler(phantom64, maps64, 2, (8.0, 34.0), (12.0, 30.0), seed=1)
    assert ruler.m_r == 2
    assert ruler.threshold == (1, 1)


def test_build_ruler_range_containment(phantom64, maps64):
    build_ruler(phantom64, maps64, 8, (8.0, 34.0), (12.0, 30.0), seed=1)
    with pytest.raises(ValueError):
        build_ruler(phantom64, maps64, 8, (14.0, 30.5), (12.0, 30.0), seed=1)
    with pytest.raises(ValueError):
        build_ruler(phantom64, maps64, 8, (8.0, 30.0), (12.0, 30.0), seed=1)


def test_cache_scores(phantom64, maps64):
    ruler = build_ruler(phantom64, maps64, 8, (8.0, 34.0), (12.0, 30.0), seed=1)
    net = FakeNet()
    cached = cache_scores(ruler, net)
    assert ruler.s_ruler is None  # original untouched
    assert len(cached.s_ruler) == 8
    again = cache_scores(ruler, net)
    assert np.array_equal(cached.s_ruler, again.s_ruler)


def test_ruler_score_exact_match():
    ruler = make_ruler(scores=np.array([1.0, 2, 3, 4, 5, 6, 7, 8]))
    assert ruler_score(ruler, 5.0) == 4


def test_ruler_score_boundary_clamp():
    ruler = make_ruler(scores=np.array([1.0, 2, 3, 4, 5, 6, 7, 8]))
    assert ruler_score(ruler, -100.0) == 0
    assert ruler_score(ruler, 100.0) == 7


def test_ruler_score_tie_goes_cleaner():
    ruler = make_ruler(scores=np.array([1.0, 2, 3, 4, 5, 6, 7, 8]))
    assert ruler_score(ruler, 4.5) == 4


def test_ruler_score_requires_cache():
    with pytest.raises(RulerStateError):
        ruler_score(make_ruler(scores=None), 1.0)


def test_pass_fail_midpoint_and_inclusivity():
    scores = np.array([2.0, 6.0, 10.0, 14.0, 18.0, 22.0, 26.0, 30.0])
    ruler = make_ruler(scores=scores, threshold=(3, 3))
    assert pass_fail(ruler, scores[3]) is True  # >= is inclusive
    assert pass_fail(ruler, scores[3] - 1e-9) is False
    ruler23 = make_ruler(scores=scores, threshold=(2, 3))
    assert pass_fail(ruler23, 11.9) is False
    assert pass_fail(ruler23, 12.0) is True
    assert pass_fail(ruler23, float(scores.max())) is True


def test_pass_fail_requires_threshold():
    ruler = make_ruler(scores=np.arange(8.0), threshold=None)
    with pytest.raises(RulerStateError):
        pass_fail(ruler, 1.0)


def test_threshold_validation():
    with pytest.raises(ValueError):
        make_ruler(threshold=(3, 2))
    with pytest.raises(ValueError):
        make_ruler(threshold=(0, 9))


def test_select_ruler_exact_and_fallback():
    registry = {"knee-fs": make_ruler(scan_type="knee-fs"),
                "elbow-nfs": make_ruler(scan_type="elbow-nfs")}
    assert select_ruler(registry, "knee-fs").scan_type == "knee-fs"
    assert select_ruler(registry, "hip-fs").scan_type == "knee-fs"
    assert select_ruler(registry, "hip-nfs").scan_type == "elbow-nfs"
    with pytest.raises(MissingRulerError):
        select_ruler({"elbow-nfs": registry["elbow-nfs"]}, "hip-fs")
    with pytest.raises(MissingRulerError):
        select_ruler({}, "knee-fs")


def test_shift_cancellation_exact():
    scores = np.array([3.0, 5.0, 9.0, 11.0, 15.0, 19.0, 25.0, 31.0])
    ruler = make_ruler(scores=scores, threshold=(2, 3))
    rng = np.random.default_rng(0)
    for raw in rng.uniform(0, 35, 50):
        for c in (-7.3, 0.0, 11.25):
            shifted = make_ruler(scores=scores + c, threshold=(2, 3))
            assert ruler_score(shifted, raw + c) == ruler_score(ruler, raw)
            assert pass_fail(shifted, raw + c) == pass_fail(ruler, raw)


def test_ruler_score_monotone_in_raw():
    ruler = make_ruler(scores=np.array([1.0, 2, 3, 4, 5, 6, 7, 8]))
    raws = np.linspace(-1, 10, 200)
    rs = [ruler_score(ruler, r) for r in raws]
    assert all(a <= b for a, b in zip(rs, rs[1:]))


def test_pass_fail_monotone_in_raw():
    ruler = make_ruler(scores=np.array([1.0, 2, 3, 4, 5, 6, 7, 8]), threshold=(2, 4))
    raws = np.linspace(-1, 10, 100)
    pf = [pass_fail(ruler, r) for r in raws]
    assert all((not a) or b for a, b in zip(pf, pf[1:]))


def test_registry_extension_does_not_move_existing_scores():
    registry = {"knee-fs": make_ruler(scores=np.arange(8.0) + 1)}
    raw = 4.2
    before = (ruler_score(select_ruler(registry, "knee-fs"), raw),
              pass_fail(select_ruler(registry, "knee-fs"), raw))
    registry["spine-nfs"] = make_ruler(scores=np.arange(8.0) * 2, scan_type="spine-nfs")
    after = (ruler_score(select_ruler(registry, "knee-fs"), raw),
             pass_fail(select_ruler(registry, "knee-fs"), raw))
    assert before == after
