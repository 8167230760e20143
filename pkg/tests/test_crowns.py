import numpy as np
import pytest

from canopy.pipeline.crowns import (
    CrownError,
    CrownPolygon,
    LabelScheme,
    assign_superpixel_labels,
    rasterize_polygons,
    read_crowns,
    write_crowns,
)
from canopy.raster import GeoTransform
from canopy.slic import SuperpixelPartition, _build_partition

GEO = GeoTransform(0.0, 10.0, 1.0, 1.0)  # 10x10 m, 1 m pixels


def square(cx, cy, half, crown_id=0, label="a"):
    ring = [(cx - half, cy - half), (cx + half, cy - half),
            (cx + half, cy + half), (cx - half, cy + half)]
    return CrownPolygon(id=crown_id, ring=np.array(ring), label=label)


def test_square_covers_exact_pixel_centers():
    # centers at half-integer map coords; a 2x2 m square centered on (5, 5)
    # covers exactly the 4 centers at 4.5/5.5
    poly = square(5.0, 5.0, 1.0)
    out = rasterize_polygons([poly], GEO, (10, 10))
    assert (out >= 0).sum() == 4
    rows, cols = np.nonzero(out >= 0)
    assert sorted(zip(rows.tolist(), cols.tolist())) == [(4, 4), (4, 5), (5, 4), (5, 5)]


def test_zero_area_ring_rejected():
    with pytest.raises(CrownError, match="zero-area"):
        CrownPolygon(id=1, ring=np.array([(0, 0), (1, 1), (2, 2)]), label="x")


def test_self_intersecting_ring_rejected():
    bowtie = np.array([(0, 0), (2, 2), (2, 0), (0, 2)])
    with pytest.raises(CrownError, match="self-intersecting"):
        CrownPolygon(id=1, ring=bowtie, label="x")


def test_overlap_later_listed_wins():
    a = square(4.0, 5.0, 1.5, crown_id=10, label="a")
    b = square(5.0, 5.0, 1.5, crown_id=20, label="b")
    with pytest.warns(UserWarning, match="overlaps"):
        out = rasterize_polygons([a, b], GEO, (10, 10))
    # intersection pixels belong to the later polygon
    assert out[4, 4] == 20
    assert out[4, 3] == 10


def test_polygon_outside_raster_warns():
    far = square(100.0, 100.0, 1.0)
    with pytest.warns(UserWarning, match="no pixel center"):
        out = rasterize_polygons([far], GEO, (10, 10))
    assert (out >= 0).sum() == 0


def test_crown_json_roundtrip(tmp_path):
    crowns = [square(3, 3, 1.2, crown_id=1, label="species_a"),
              square(7, 7, 1.0, crown_id=2, label="species_b")]
    path = tmp_path / "crowns.json"
    write_crowns(crowns, path)
    back = read_crowns(path)
    assert len(back) == 2
    assert back[0].label == "species_a"
    np.testing.assert_allclose(back[0].ring, crowns[0].ring)


def partition_from_labels(labels):
    return _build_partition(np.asarray(labels, dtype=np.int64))


def test_label_transfer_thresholds():
    # region 0: 4 px fully inside crown; region 1: 2 of 4 px (exactly 50%);
    # region 2: 1 of 4 px (25%)
    labels = np.zeros((2, 6), dtype=np.int64)
    labels[:, 2:4] = 1
    labels[:, 4:6] = 2
    crown = np.full((2, 6), -1, dtype=np.int64)
    crown[:, 0:2] = 7   # all of region 0
    crown[0, 2:4] = 7   # half of region 1
    crown[0, 4] = 7     # quarter of region 2
    part = partition_from_labels(labels)
    crowns = [square(0, 0, 1, crown_id=7, label="tree")]
    labelled, overlaps = assign_superpixel_labels(part, crown, crowns)
    by_region = {o.region_id: o for o in overlaps}
    assert by_region[0].fraction == 1.0 and by_region[0].labelled
    assert by_region[1].fraction == 0.5 and by_region[1].labelled  # inclusive
    assert by_region[2].fraction == 0.25 and not by_region[2].labelled
    assert sorted(o.region_id for o in labelled) == [0, 1]


def test_label_transfer_picks_dominant_crown():
    labels = np.zeros((1, 5), dtype=np.int64)
    crown = np.array([[3, 3, 3, 8, -1]], dtype=np.int64)
    part = partition_from_labels(labels)
    crowns = [square(0, 0, 1, crown_id=3, label="a"),
              square(5, 5, 1, crown_id=8, label="b")]
    labelled, _ = assign_superpixel_labels(part, crown, crowns)
    assert len(labelled) == 1
    assert labelled[0].crown_id == 3
    assert labelled[0].fraction == pytest.approx(0.6)


def test_scheme_merge_and_validation():
    scheme = LabelScheme(classes=("a", "other"), merge_map={"b": "other", "c": "other"})
    assert scheme.apply("a") == "a"
    assert scheme.apply("b") == "other"
    assert scheme.index_of("c") == 1
    with pytest.raises(CrownError):
        scheme.apply("unknown")
    with pytest.raises(CrownError):
        LabelScheme(classes=("a",), merge_map={"b": "zzz"})


def test_scheme_identity_preserves_order():
    scheme = LabelScheme.identity(["b", "a", "b", "c"])
    assert scheme.classes == ("b", "a", "c")
