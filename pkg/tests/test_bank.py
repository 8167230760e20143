import numpy as np
import pytest

from canopy.features.bank import (
    FeatureConfig,
    FeatureError,
    FeatureTable,
    RasterSources,
    build_manifest,
    build_region_data,
    compute_region_features,
    extract_features,
    read_manifest_json,
)
from canopy.raster import GeoTransform, Raster
from canopy.slic import SlicConfig, slic_segment


@pytest.fixture(scope="module")
def scene():
    rng = np.random.default_rng(99)
    h = w = 40
    rgb = Raster(data=(rng.random((3, h, w)) * 0.6 + 0.2).astype(np.float32),
                 band_roles=("red", "green", "blue"))
    rgb_geo = GeoTransform(100.0, 500.0, 0.1, 0.1)
    mh, mw = 15, 15  # ~2.7x coarser
    ms = Raster(data=(rng.random((4, mh, mw)) * 0.6 + 0.2).astype(np.float32),
                band_roles=("ms_green", "ms_red", "ms_rededge", "ms_nir"))
    ms_geo = GeoTransform(100.0, 500.0, 4.0 / mw, 4.0 / mh)
    dsm = Raster(data=(rng.random((1, h, w)) * 10 + 30).astype(np.float32),
                 band_roles=("dsm_height_m",))
    sources = RasterSources(rgb=rgb, rgb_geo=rgb_geo, ms=ms, ms_geo=ms_geo,
                            dsm=dsm, dsm_geo=rgb_geo)
    part = slic_segment(rgb, rgb_geo, SlicConfig(target_area_m2=0.25))
    return part, sources


def test_manifest_tally_and_structure():
    manifest = build_manifest(FeatureConfig())
    assert len(manifest) == 1977
    names = [e.name for e in manifest]
    assert len(set(names)) == len(names)
    spectral = [e for e in manifest if e.family == "spectral"]
    textural = [e for e in manifest if e.family == "textural"]
    assert len(spectral) == 981
    assert len(textural) == 996


def test_manifest_is_config_filter():
    full = set(e.name for e in build_manifest(FeatureConfig()))
    sub = build_manifest(FeatureConfig(imagery_sources=("RGB",),
                                       feature_families=("spectral",)))
    assert set(e.name for e in sub) < full
    sources = {e.source for e in sub}
    assert sources == {"rgb", "top", "ind_rgb", "hsv"}


def test_empty_config_rejected():
    with pytest.raises(FeatureError):
        FeatureConfig(imagery_sources=())
    with pytest.raises(FeatureError):
        FeatureConfig(feature_families=())


def test_region_features_deterministic(scene):
    part, sources = scene
    cfg = FeatureConfig()
    rows, cols = np.nonzero(part.labels == 0)
    region = build_region_data(rows, cols, sources, cfg)
    v1, f1 = compute_region_features(region, cfg)
    v2, f2 = compute_region_features(region, cfg)
    assert v1.tobytes() == v2.tobytes()
    assert f1 == f2
    assert np.all(np.isfinite(v1))


def test_full_table_subsets_to_smaller_config(scene):
    part, sources = scene
    ids = list(range(4))
    full = extract_features(part, sources, FeatureConfig(), region_ids=ids)
    sub_cfg = FeatureConfig(imagery_sources=("RGB", "DSM"),
                            feature_families=("spectral",))
    direct = extract_features(part, sources, sub_cfg, region_ids=ids)
    selected = full.select(sub_cfg)
    assert selected.names == direct.names
    assert selected.values.tobytes() == direct.values.tobytes()


def test_worker_count_does_not_change_values(scene):
    part, sources = scene
    ids = list(range(6))
    one = extract_features(part, sources, FeatureConfig(), region_ids=ids, workers=1)
    four = extract_features(part, sources, FeatureConfig(), region_ids=ids, workers=4)
    assert one.values.tobytes() == four.values.tobytes()


def test_ratio_groups_sum_to_one(scene):
    part, sources = scene
    table = extract_features(part, sources, FeatureConfig(), region_ids=[0, 1])
    idx = {n: i for i, n in enumerate(table.names)}
    for source, bands in (("rgb", ("red", "green", "blue")),
                          ("ms", ("ms_green", "ms_red", "ms_rededge", "ms_nir"))):
        total = sum(table.values[0, idx[f"{source}_{b}_ratio"]] for b in bands)
        assert total == pytest.approx(1.0, abs=1e-9), source


def test_csv_and_manifest_roundtrip(scene, tmp_path):
    part, sources = scene
    table = extract_features(part, sources, FeatureConfig(), region_ids=[0, 1, 2])
    csv_path = tmp_path / "features.csv"
    man_path = tmp_path / "manifest.json"
    table.to_csv(csv_path)
    table.write_manifest_json(man_path)
    manifest = read_manifest_json(man_path)
    assert manifest == table.manifest
    back = FeatureTable.from_csv(csv_path, manifest)
    np.testing.assert_array_equal(back.region_ids, table.region_ids)
    assert back.values.tobytes() == table.values.tobytes()


def test_missing_source_raises(scene):
    part, sources = scene
    bare = RasterSources(rgb=sources.rgb, rgb_geo=sources.rgb_geo)
    with pytest.raises(FeatureError, match="MS"):
        extract_features(part, bare, FeatureConfig(), region_ids=[0])


def test_empty_region_raises(scene):
    _, sources = scene
    with pytest.raises(FeatureError, match="empty region"):
        build_region_data(np.array([], np.int64), np.array([], np.int64),
                          sources, FeatureConfig())
