import numpy as np
import pytest

from canopy.features.texture import lbp_histogram
from oracles import lbp_oracle


def full_mask(shape):
    return np.ones(shape, dtype=bool)


def test_constant_image_all_bits_set():
    img = np.full((8, 8), 0.5)
    hist, degenerate = lbp_histogram(img, full_mask(img.shape), radius=1)
    assert not degenerate
    assert hist["u8"] == pytest.approx(1.0)  # every neighbour >= center
    assert sum(hist.values()) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("radius", [1, 2, 3])
def test_bin_count_is_p_plus_2(radius):
    img = np.random.default_rng(0).random((12, 12))
    hist, _ = lbp_histogram(img, full_mask(img.shape), radius=radius)
    assert len(hist) == 8 * radius + 2


@pytest.mark.parametrize("radius", [1, 2, 3])
def test_rotation_invariance_exact(radius):
    rng = np.random.default_rng(10 + radius)
    for _ in range(10):
        img = rng.random((14, 14))
        base, _ = lbp_histogram(img, full_mask(img.shape), radius=radius)
        for k in (1, 2, 3):
            rot = np.rot90(img, k).copy()
            rotated, _ = lbp_histogram(rot, full_mask(rot.shape), radius=radius)
            assert list(rotated.values()) == list(base.values()), f"k={k}"


def test_matches_naive_oracle():
    rng = np.random.default_rng(77)
    img = rng.random((16, 16))
    hist, _ = lbp_histogram(img, full_mask(img.shape), radius=1)
    assert sum(hist.values()) == pytest.approx(1.0, abs=1e-12)
    want = lbp_oracle(img.tolist(), full_mask(img.shape).tolist(), radius=1)
    np.testing.assert_allclose(list(hist.values()), want, atol=1e-15)


def test_mask_restricts_centers():
    rng = np.random.default_rng(5)
    img = rng.random((10, 10))
    mask = np.zeros((10, 10), dtype=bool)
    mask[4:7, 4:7] = True
    hist, _ = lbp_histogram(img, mask, radius=1)
    want = lbp_oracle(img.tolist(), mask.tolist(), radius=1)
    np.testing.assert_allclose(list(hist.values()), want, atol=1e-15)


def test_too_small_image_degenerate():
    img = np.random.default_rng(1).random((4, 4))
    hist, degenerate = lbp_histogram(img, full_mask(img.shape), radius=2)
    assert degenerate
    assert all(v == 0.0 for v in hist.values())
