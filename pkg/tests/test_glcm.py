import numpy as np
import pytest

from canopy.features.texture import GLCM_STATS, glcm_features
from oracles import glcm_oracle_mean_range


def full_mask(shape):
    return np.ones(shape, dtype=bool)


def test_constant_image_single_entry_matrix():
    img = np.full((6, 6), 9, dtype=np.int64)
    stats, degenerate = glcm_features(img, full_mask(img.shape), offset=1)
    assert stats["asm_mean"] == pytest.approx(1.0)
    assert stats["con_mean"] == 0.0
    assert stats["ent_mean"] == pytest.approx(0.0)
    assert stats["cor_mean"] == 0.0  # degenerate correlation resolves to 0
    assert degenerate


def test_two_row_image_horizontal_pairs():
    # rows of 1s and 2s: horizontal pairs are only (1,1) and (2,2)
    img = np.array([[1, 1], [2, 2]], dtype=np.int64)
    stats, _ = glcm_features(img, full_mask(img.shape), offset=1)
    oracle = glcm_oracle_mean_range(img.tolist(), full_mask(img.shape).tolist(), 1)
    # direction 0 alone: ASM = 0.5, contrast = 0 (checked through the oracle's
    # per-direction machinery feeding the mean/range aggregation)
    for key, want in oracle.items():
        assert stats[key] == pytest.approx(want, abs=1e-12), key


@pytest.mark.parametrize("offset", [1, 2, 3])
def test_random_images_match_oracle(offset):
    rng = np.random.default_rng(100 + offset)
    for _ in range(20):
        img = rng.integers(1, 33, size=(8, 8))
        stats, _ = glcm_features(img, full_mask(img.shape), offset=offset)
        oracle = glcm_oracle_mean_range(img.tolist(), full_mask(img.shape).tolist(), offset)
        for key, want in oracle.items():
            assert stats[key] == pytest.approx(want, abs=1e-9), key


def test_masked_pixels_excluded():
    rng = np.random.default_rng(42)
    img = rng.integers(1, 33, size=(8, 8))
    mask = rng.random((8, 8)) > 0.3
    stats, _ = glcm_features(img, mask, offset=1)
    oracle = glcm_oracle_mean_range(img.tolist(), mask.tolist(), 1)
    for key, want in oracle.items():
        assert stats[key] == pytest.approx(want, abs=1e-9), key


def test_symmetry_of_cooccurrence():
    # symmetric matrix: swapping every pair endpoint changes nothing, so a
    # vertically flipped image gives identical 90-degree stats
    rng = np.random.default_rng(3)
    img = rng.integers(1, 33, size=(10, 10))
    stats_a, _ = glcm_features(img, full_mask(img.shape), offset=2)
    stats_b, _ = glcm_features(img[::-1].copy(), full_mask(img.shape), offset=2)
    for name in GLCM_STATS:
        assert stats_a[f"{name}_mean"] == pytest.approx(stats_b[f"{name}_mean"], abs=1e-12)


def test_too_small_image_degenerate_zeros():
    img = np.ones((2, 2), dtype=np.int64)
    stats, degenerate = glcm_features(img, full_mask(img.shape), offset=3)
    assert degenerate
    assert all(v == 0.0 for v in stats.values())
