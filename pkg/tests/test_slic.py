import numpy as np
import pytest
from scipy import ndimage

from canopy.raster import GeoTransform, Raster
from canopy.slic import (
    SegmentationError,
    SlicConfig,
    enforce_connectivity,
    partition_from_raster,
    partition_to_raster,
    seed_grid,
    slic_segment,
)

GEO_10CM = GeoTransform(0.0, 0.0, 0.1, 0.1)


def rgb_from(arr):
    return Raster(data=np.asarray(arr, np.float32), band_roles=("red", "green", "blue"))


def flood_fill_audit(labels):
    """Every region id must form a single 4-connected component."""
    for rid in range(labels.max() + 1):
        _, n = ndimage.label(labels == rid)
        assert n == 1, f"region {rid} has {n} components"


# --- seed grid ---------------------------------------------------------------

def test_seed_grid_exact_division():
    assert len(seed_grid(100, 100, 10)) == 100


def test_seed_grid_ceil_division():
    assert len(seed_grid(105, 100, 10)) == 110


def test_seed_grid_too_large_spacing():
    with pytest.raises(SegmentationError):
        seed_grid(5, 5, 10)


def test_seed_grid_one_long_axis_ok():
    # spacing exceeds only one dimension: still a valid 1 x n grid
    assert len(seed_grid(20, 5, 10)) == 2


def test_seed_grid_gradient_perturbation():
    grad = np.ones((20, 20))
    grad[4, 6] = 0.0  # adjacent to the (5, 5) cell midpoint
    seeds = seed_grid(20, 20, 10, gradient=grad)
    assert [4, 6] in seeds.tolist()


# --- slic_segment ------------------------------------------------------------

def test_constant_color_near_regular_grid():
    raster = rgb_from(np.full((3, 100, 100), 0.5))
    part = slic_segment(raster, GEO_10CM, SlicConfig())
    # 0.5 m^2 at 10 cm pixels = 50 px/region -> ~200 regions
    assert 150 <= part.n_regions <= 250
    assert np.all(part.pixel_count >= 25)
    assert np.all(part.pixel_count <= 75)
    assert part.pixel_count.sum() == 100 * 100


def test_black_white_split_respected():
    width = 98  # 14 cells of 7 px: seed grid aligns with the split at 49
    img = np.zeros((3, 100, width), np.float32)
    img[:, :, 49:] = 1.0
    raster = rgb_from(img)
    part = slic_segment(raster, GEO_10CM, SlicConfig(smoothing_sigma=0.0))
    black = img[0] == 0.0
    for rid in range(part.n_regions):
        mask = part.labels == rid
        in_black = np.any(mask & black)
        in_white = np.any(mask & ~black)
        assert not (in_black and in_white), f"region {rid} spans the split"


def test_single_pixel_raster():
    raster = rgb_from(np.full((3, 1, 1), 0.3))
    part = slic_segment(raster, GEO_10CM, SlicConfig(target_area_m2=0.01))
    assert part.n_regions == 1
    assert part.labels[0, 0] == 0


def test_raster_smaller_than_superpixel():
    raster = rgb_from(np.full((3, 2, 2), 0.3))
    with pytest.raises(SegmentationError, match="smaller than one superpixel"):
        slic_segment(raster, GEO_10CM, SlicConfig(target_area_m2=10.0))


def test_partition_properties_and_determinism():
    rng = np.random.default_rng(5)
    img = (rng.random((3, 60, 60)) * 0.8 + 0.1).astype(np.float32)
    raster = rgb_from(img)
    part1 = slic_segment(raster, GEO_10CM, SlicConfig())
    part2 = slic_segment(raster, GEO_10CM, SlicConfig())
    np.testing.assert_array_equal(part1.labels, part2.labels)
    # complete partition
    assert part1.pixel_count.sum() == 60 * 60
    assert part1.labels.min() == 0
    assert part1.labels.max() == part1.n_regions - 1
    flood_fill_audit(part1.labels)
    # region table describes the labels
    for rid in (0, part1.n_regions // 2, part1.n_regions - 1):
        rr, cc = np.nonzero(part1.labels == rid)
        assert part1.pixel_count[rid] == len(rr)
        assert part1.centroid_y[rid] == pytest.approx(rr.mean())
        assert part1.centroid_x[rid] == pytest.approx(cc.mean())
        assert tuple(part1.bbox[rid]) == (rr.min(), cc.min(), rr.max(), cc.max())


def region_perimeter_sq_over_area(labels):
    n = labels.max() + 1
    pad = np.pad(labels, 1, constant_values=-1)
    per = np.zeros(n)
    for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)):
        neighbour = pad[1 + dr:pad.shape[0] - 1 + dr, 1 + dc:pad.shape[1] - 1 + dc]
        boundary = neighbour != labels
        per += np.bincount(labels[boundary].ravel(), minlength=n)
    area = np.bincount(labels.ravel(), minlength=n)
    return float(np.mean(per ** 2 / area))


def test_compactness_monotonicity_on_noise():
    rng = np.random.default_rng(17)
    img = (rng.random((3, 64, 64)) * 0.9 + 0.05).astype(np.float32)
    raster = rgb_from(img)
    scores = []
    for m in (1.0, 10.0, 100.0):
        part = slic_segment(raster, GEO_10CM, SlicConfig(compactness=m))
        scores.append(region_perimeter_sq_over_area(part.labels))
    assert scores[1] <= scores[0] + 1e-9
    assert scores[2] <= scores[1] + 1e-9


# --- enforce_connectivity ------------------------------------------------------

def test_connectivity_identity_up_to_relabelling():
    labels = np.repeat(np.arange(4), 25).reshape(10, 10)  # 4 horizontal strips
    out = enforce_connectivity(labels, min_size=5)
    np.testing.assert_array_equal(out, labels)


def test_connectivity_merges_small_island():
    labels = np.zeros((10, 10), np.int64)
    labels[:, 5:] = 1
    labels[0, :3] = 1  # 3-px island of region 1 inside region 0
    out = enforce_connectivity(labels, min_size=6)
    flood_fill_audit(out)
    assert out.max() + 1 == 2
    # the island was merged into the surrounding region
    assert out[0, 0] == out[2, 0]


def test_connectivity_splits_large_fragments():
    labels = np.zeros((10, 10), np.int64)
    labels[:, 5:] = 1
    labels[6:, :2] = 1  # 8-px disconnected fragment, above min_size
    out = enforce_connectivity(labels, min_size=6)
    flood_fill_audit(out)
    assert out.max() + 1 == 3


def test_connectivity_checkerboard():
    rr, cc = np.meshgrid(range(8), range(8), indexing="ij")
    labels = ((rr + cc) % 2).astype(np.int64)
    out = enforce_connectivity(labels, min_size=4)
    flood_fill_audit(out)
    sizes = np.bincount(out.ravel())
    assert np.all(sizes >= 4)


# --- export --------------------------------------------------------------------

def test_partition_raster_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    img = (rng.random((3, 30, 30))).astype(np.float32)
    part = slic_segment(rgb_from(img), GEO_10CM, SlicConfig())
    back = partition_from_raster(partition_to_raster(part))
    np.testing.assert_array_equal(back.labels, part.labels)
    np.testing.assert_array_equal(back.pixel_count, part.pixel_count)
