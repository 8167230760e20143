"""Assembly of the full per-region feature vector with a canonical manifest.

The manifest is a pure function of the feature configuration: names, order
and block structure never depend on the data. Every feature value is
intrinsic to the region (never to the configuration), so a table computed
under the full configuration can be column-subset to obtain the table of
any smaller configuration bit-for-bit.

Spectral sources follow the order rgb, top, ms, ind, hsv, dsm; textural
families run GLCM, LBP, Laws, autocorrelation over greyscale RGB, the four
MS bands and the DSM. The ``ratio`` statistic (band mean over the summed
means of its source group) is grouped per imagery kind so that values do
not depend on which other sources are selected.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from canopy._parallel import parallel_map, worker_count
from canopy.raster import (
    MS_ROLES,
    RGB_ROLES,
    GeoTransform,
    Raster,
    extract_region_pixels,
    rgb_to_grey,
)
from canopy.features.indices import MS_INDEX_NAMES, RGB_INDEX_NAMES, vegetation_indices
from canopy.features.spectral import (
    DSM_STATS,
    STANDARD_STATS,
    brightness_filter_top50,
    quantize_levels,
    spectral_stats,
)
from canopy.features.texture import (
    GLCM_STATS,
    LAWS_KERNEL_NAMES,
    autocorrelation_features,
    glcm_features,
    laws_features,
    lbp_histogram,
)

IMAGERY_KINDS = ("RGB", "MS", "DSM")
FEATURE_FAMILIES = ("spectral", "textural")

TEXTURE_OFFSETS = (1, 2, 3)
LBP_RADII = (1, 2, 3)

# spectral source -> (imagery kind, has ratio statistic)
_SPECTRAL_SOURCES = (
    ("rgb", "RGB", True),
    ("top", "RGB", True),
    ("ms", "MS", True),
    ("ind_rgb", "RGB", True),
    ("ind_ms", "MS", True),
    ("hsv", "RGB", False),
    ("dsm", "DSM", False),
)

_TEXTURE_BANDS = (
    ("grey", "RGB"),
    ("ms_green", "MS"),
    ("ms_red", "MS"),
    ("ms_rededge", "MS"),
    ("ms_nir", "MS"),
    ("dsm", "DSM"),
)

_HSV_BANDS = ("hue", "saturation", "value")


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureConfig:
    imagery_sources: tuple[str, ...] = ("RGB", "MS", "DSM")
    feature_families: tuple[str, ...] = ("spectral", "textural")

    def __post_init__(self) -> None:
        object.__setattr__(self, "imagery_sources", tuple(self.imagery_sources))
        object.__setattr__(self, "feature_families", tuple(self.feature_families))
        if not self.imagery_sources:
            raise FeatureError("imagery_sources must be a non-empty subset")
        if not self.feature_families:
            raise FeatureError("feature_families must be a non-empty subset")
        for src in self.imagery_sources:
            if src not in IMAGERY_KINDS:
                raise FeatureError(f"unknown imagery source {src!r}")
        for fam in self.feature_families:
            if fam not in FEATURE_FAMILIES:
                raise FeatureError(f"unknown feature family {fam!r}")


@dataclass(frozen=True)
class ManifestEntry:
    """One feature column: where it comes from and what it measures."""

    name: str
    imagery: str  # RGB | MS | DSM
    family: str  # spectral | textural
    source: str  # rgb/top/ms/ind_rgb/ind_ms/hsv/dsm or glcm/lbp/laws/acor
    band: str  # band role or index symbol, texture band for textures
    statistic: str
    param: int | None = None  # offset (glcm/acor) or radius (lbp)


def _spectral_band_names(source: str) -> tuple[str, ...]:
    if source in ("rgb", "top"):
        return RGB_ROLES
    if source == "ms":
        return MS_ROLES
    if source == "ind_rgb":
        return RGB_INDEX_NAMES
    if source == "ind_ms":
        return MS_INDEX_NAMES
    if source == "hsv":
        return _HSV_BANDS
    if source == "dsm":
        return ("height",)
    raise FeatureError(f"unknown spectral source {source!r}")


def build_manifest(cfg: FeatureConfig) -> tuple[ManifestEntry, ...]:
    """Canonical ordered manifest for a configuration."""
    entries: list[ManifestEntry] = []
    if "spectral" in cfg.feature_families:
        for source, imagery, has_ratio in _SPECTRAL_SOURCES:
            if imagery not in cfg.imagery_sources:
                continue
            stats = DSM_STATS if source == "dsm" else STANDARD_STATS
            stats = stats + ("ratio",) if has_ratio else stats
            for band in _spectral_band_names(source):
                for stat in stats:
                    entries.append(ManifestEntry(
                        name=f"{source}_{band}_{stat}",
                        imagery=imagery, family="spectral",
                        source=source, band=band, statistic=stat,
                    ))
    if "textural" in cfg.feature_families:
        bands = [(b, im) for b, im in _TEXTURE_BANDS if im in cfg.imagery_sources]
        for band, imagery in bands:
            for d in TEXTURE_OFFSETS:
                for stat in GLCM_STATS:
                    for agg in ("mean", "rng"):
                        entries.append(ManifestEntry(
                            name=f"glcm_{band}_o{d}_{stat}_{agg}",
                            imagery=imagery, family="textural",
                            source="glcm", band=band,
                            statistic=f"{stat}_{agg}", param=d,
                        ))
        for band, imagery in bands:
            for r in LBP_RADII:
                bins = [f"u{k}" for k in range(8 * r + 1)] + ["nonuniform"]
                for stat in bins:
                    entries.append(ManifestEntry(
                        name=f"lbp_{band}_r{r}_{stat}",
                        imagery=imagery, family="textural",
                        source="lbp", band=band, statistic=stat, param=r,
                    ))
        for band, imagery in bands:
            for kern in LAWS_KERNEL_NAMES:
                for agg in ("mean", "std"):
                    entries.append(ManifestEntry(
                        name=f"laws_{band}_{kern}_{agg}",
                        imagery=imagery, family="textural",
                        source="laws", band=band, statistic=f"{kern}_{agg}",
                    ))
        for band, imagery in bands:
            for d in TEXTURE_OFFSETS:
                for agg in ("mean", "rng"):
                    entries.append(ManifestEntry(
                        name=f"acor_{band}_o{d}_{agg}",
                        imagery=imagery, family="textural",
                        source="acor", band=band, statistic=agg, param=d,
                    ))
    return tuple(entries)


# ---------------------------------------------------------------------------
# Region data: pixel sets and crops per imagery source
# ---------------------------------------------------------------------------

@dataclass
class RegionData:
    """Everything one region contributes to feature computation."""

    rgb_values: np.ndarray | None = None  # (3, n)
    grey_crop: np.ndarray | None = None  # (h, w) float64
    grey_mask: np.ndarray | None = None
    ms_values: np.ndarray | None = None  # (4, m)
    ms_crops: np.ndarray | None = None  # (4, h2, w2)
    ms_mask: np.ndarray | None = None
    dsm_values: np.ndarray | None = None  # (k,)
    dsm_crop: np.ndarray | None = None
    dsm_mask: np.ndarray | None = None


def compute_region_features(
    region: RegionData, cfg: FeatureConfig,
    manifest: Sequence[ManifestEntry] | None = None,
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Feature vector for one region in manifest order, plus degeneracy flags.

    Deterministic: the same region data always produces the same bytes.
    """
    if manifest is None:
        manifest = build_manifest(cfg)
    values: dict[str, float] = {}
    flags: list[str] = []

    if "spectral" in cfg.feature_families:
        _spectral_blocks(region, cfg, values, flags)
    if "textural" in cfg.feature_families:
        _texture_blocks(region, cfg, values, flags)

    try:
        vec = np.array([values[e.name] for e in manifest], dtype=np.float64)
    except KeyError as exc:
        raise FeatureError(f"manifest entry {exc} not computed; config mismatch") from None
    if not np.all(np.isfinite(vec)):
        bad = [manifest[i].name for i in np.nonzero(~np.isfinite(vec))[0][:5]]
        raise FeatureError(f"non-finite feature values in {bad}")
    return vec, tuple(flags)


def _require(values: np.ndarray | None, what: str) -> np.ndarray:
    if values is None:
        raise FeatureError(f"region lacks {what} data required by the configuration")
    return values


def _spectral_group(values: dict, flags: list, source: str,
                    bands: Iterable[str], pixel_lists: list[np.ndarray],
                    variant: str = "standard", with_ratio: bool = True) -> None:
    band_means = []
    for band, px in zip(bands, pixel_lists):
        if px.size == 0:
            raise FeatureError(f"empty pixel list for {source}/{band}")
        stats, degenerate = spectral_stats(px, variant=variant)
        if degenerate:
            flags.append(f"{source}_{band}")
        for stat, v in stats.items():
            values[f"{source}_{band}_{stat}"] = v
        band_means.append(float(np.mean(px)))
    if with_ratio:
        total = float(np.sum(band_means))
        for band, m in zip(bands, band_means):
            if total == 0.0:
                flags.append(f"{source}_{band}_ratio")
                values[f"{source}_{band}_ratio"] = 0.0
            else:
                values[f"{source}_{band}_ratio"] = m / total


def _spectral_blocks(region: RegionData, cfg: FeatureConfig,
                     values: dict, flags: list) -> None:
    if "RGB" in cfg.imagery_sources:
        rgb = _require(region.rgb_values, "RGB")
        _spectral_group(values, flags, "rgb", RGB_ROLES, list(rgb))
        top, passthrough = brightness_filter_top50(rgb)
        if passthrough:
            flags.append("top_passthrough")
        _spectral_group(values, flags, "top", RGB_ROLES, list(top))
        idx = vegetation_indices(dict(zip(RGB_ROLES, rgb)), kind="RGB")
        _spectral_group(values, flags, "ind_rgb", RGB_INDEX_NAMES,
                        [idx[n] for n in RGB_INDEX_NAMES])
        from canopy.raster import _hsv_from_rgb  # pixel-local transform

        h, s, v = _hsv_from_rgb(np.stack(list(rgb), axis=-1))
        _spectral_group(values, flags, "hsv", _HSV_BANDS, [h, s, v], with_ratio=False)
    if "MS" in cfg.imagery_sources:
        ms = _require(region.ms_values, "MS")
        _spectral_group(values, flags, "ms", MS_ROLES, list(ms))
        idx = vegetation_indices(dict(zip(MS_ROLES, ms)), kind="MS")
        _spectral_group(values, flags, "ind_ms", MS_INDEX_NAMES,
                        [idx[n] for n in MS_INDEX_NAMES])
    if "DSM" in cfg.imagery_sources:
        dsm = _require(region.dsm_values, "DSM")
        _spectral_group(values, flags, "dsm", ("height",), [np.ravel(dsm)],
                        variant="dsm", with_ratio=False)


def _quantized_crop(crop: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """32-level quantization with percentiles taken over region pixels only."""
    member = crop[mask]
    if member.size == 0:
        return np.ones_like(crop, dtype=np.int64)
    p5, p95 = np.quantile(member.astype(np.float64), [0.05, 0.95])
    if p95 <= p5:
        return np.ones_like(crop, dtype=np.int64)
    scaled = 1.0 + 31.0 * (crop.astype(np.float64) - p5) / (p95 - p5)
    return np.clip(np.floor(scaled + 0.5).astype(np.int64), 1, 32)


def _texture_blocks(region: RegionData, cfg: FeatureConfig,
                    values: dict, flags: list) -> None:
    crops: list[tuple[str, np.ndarray, np.ndarray, bool]] = []
    if "RGB" in cfg.imagery_sources:
        crop = _require(region.grey_crop, "RGB greyscale crop")
        crops.append(("grey", crop, region.grey_mask, False))
    if "MS" in cfg.imagery_sources:
        ms = _require(region.ms_crops, "MS crops")
        for bi, band in enumerate(MS_ROLES):
            crops.append((band, ms[bi], region.ms_mask, False))
    if "DSM" in cfg.imagery_sources:
        crop = _require(region.dsm_crop, "DSM crop")
        crops.append(("dsm", crop, region.dsm_mask, True))

    quantized = {band: _quantized_crop(crop, mask) for band, crop, mask, _ in crops}

    for band, crop, mask, use_quantized in crops:
        for d in TEXTURE_OFFSETS:
            stats, degenerate = glcm_features(quantized[band], mask, offset=d)
            if degenerate:
                flags.append(f"glcm_{band}_o{d}")
            for stat, v in stats.items():
                values[f"glcm_{band}_o{d}_{stat}"] = v
        for r in LBP_RADII:
            lbp_input = quantized[band] if use_quantized else crop
            hist, degenerate = lbp_histogram(lbp_input, mask, radius=r)
            if degenerate:
                flags.append(f"lbp_{band}_r{r}")
            for stat, v in hist.items():
                values[f"lbp_{band}_r{r}_{stat}"] = v
        stats, degenerate = laws_features(crop, mask)
        if degenerate:
            flags.append(f"laws_{band}")
        for stat, v in stats.items():
            values[f"laws_{band}_{stat}"] = v
        for d in TEXTURE_OFFSETS:
            stats, degenerate = autocorrelation_features(crop, mask, offset=d)
            if degenerate:
                flags.append(f"acor_{band}_o{d}")
            for agg, v in stats.items():
                values[f"acor_{band}_o{d}_{agg}"] = v


# ---------------------------------------------------------------------------
# Extraction from rasters: pixel sets, cross-resolution mapping, parallel map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RasterSources:
    """The aligned imagery stack features are computed from."""

    rgb: Raster | None = None
    rgb_geo: GeoTransform | None = None
    ms: Raster | None = None
    ms_geo: GeoTransform | None = None
    dsm: Raster | None = None
    dsm_geo: GeoTransform | None = None


def _map_pixels(rows, cols, src_geo: GeoTransform, dst: Raster,
                dst_geo: GeoTransform) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-neighbour mapping of pixel centers into another grid, deduplicated."""
    x, y = src_geo.pixel_center(rows, cols)
    drows, dcols = dst_geo.map_to_pixel(x, y)
    keep = (drows >= 0) & (drows < dst.height) & (dcols >= 0) & (dcols < dst.width)
    drows, dcols = drows[keep], dcols[keep]
    flat = np.unique(drows * dst.width + dcols)
    return flat // dst.width, flat % dst.width


def _crop_from(band_stack: np.ndarray, rows: np.ndarray, cols: np.ndarray):
    """Bounding-box crop of the listed pixels plus their membership mask."""
    r0, r1 = int(rows.min()), int(rows.max()) + 1
    c0, c1 = int(cols.min()), int(cols.max()) + 1
    crop = band_stack[:, r0:r1, c0:c1]
    mask = np.zeros((r1 - r0, c1 - c0), dtype=bool)
    mask[rows - r0, cols - c0] = True
    return crop, mask


def build_region_data(labels_rows: np.ndarray, labels_cols: np.ndarray,
                      sources: RasterSources, cfg: FeatureConfig) -> RegionData:
    """Region data for the pixel set (rows, cols) on the RGB grid."""
    if labels_rows.size == 0:
        raise FeatureError("empty region")
    region = RegionData()
    if "RGB" in cfg.imagery_sources:
        rgb = _require_source(sources.rgb, "RGB")
        pix = extract_region_pixels(rgb, labels_rows, labels_cols)
        if pix.degenerate:
            raise FeatureError("region has no valid RGB pixels")
        region.rgb_values = pix.values
        grey = _grey_full(rgb)
        crop, mask = _crop_from(grey[np.newaxis], labels_rows, labels_cols)
        region.grey_crop = crop[0]
        region.grey_mask = mask
    if "MS" in cfg.imagery_sources:
        ms = _require_source(sources.ms, "MS")
        ms_rows, ms_cols = _map_pixels(labels_rows, labels_cols,
                                       sources.rgb_geo, ms, sources.ms_geo)
        if ms_rows.size == 0:
            raise FeatureError("region maps to no MS pixels")
        pix = extract_region_pixels(ms, ms_rows, ms_cols)
        if pix.degenerate:
            raise FeatureError("region has no valid MS pixels")
        region.ms_values = pix.values
        stack = ms.data[[ms.band_roles.index(r) for r in MS_ROLES]].astype(np.float64)
        region.ms_crops, region.ms_mask = _crop_from(stack, ms_rows, ms_cols)
    if "DSM" in cfg.imagery_sources:
        dsm = _require_source(sources.dsm, "DSM")
        if (sources.dsm_geo == sources.rgb_geo and dsm.height == _rgb_height(sources)
                and dsm.width == _rgb_width(sources)):
            d_rows, d_cols = labels_rows, labels_cols
        else:
            d_rows, d_cols = _map_pixels(labels_rows, labels_cols,
                                         sources.rgb_geo, dsm, sources.dsm_geo)
        if d_rows.size == 0:
            raise FeatureError("region maps to no DSM pixels")
        pix = extract_region_pixels(dsm, d_rows, d_cols)
        if pix.degenerate:
            raise FeatureError("region has no valid DSM pixels")
        region.dsm_values = pix.values[0]
        band = dsm.band(dsm.band_roles[0]).astype(np.float64)
        crop, mask = _crop_from(band[np.newaxis], d_rows, d_cols)
        region.dsm_crop = crop[0]
        region.dsm_mask = mask
        if dsm.nodata is not None:
            region.dsm_mask = mask & (crop[0] != float(np.float32(dsm.nodata)))
    return region


_GREY_CACHE: dict[int, np.ndarray] = {}


def _grey_full(rgb: Raster) -> np.ndarray:
    key = id(rgb)
    if key not in _GREY_CACHE:
        _GREY_CACHE.clear()  # single-entry cache: one stack per run
        _GREY_CACHE[key] = rgb_to_grey(rgb).data[0].astype(np.float64)
    return _GREY_CACHE[key]


def _require_source(raster, what):
    if raster is None:
        raise FeatureError(f"configuration needs {what} imagery but none was supplied")
    return raster


def _rgb_height(sources: RasterSources) -> int:
    return sources.rgb.height if sources.rgb is not None else -1


def _rgb_width(sources: RasterSources) -> int:
    return sources.rgb.width if sources.rgb is not None else -1


@dataclass
class FeatureTable:
    """One row of named features per region, plus per-region degeneracy flags."""

    region_ids: np.ndarray
    names: tuple[str, ...]
    values: np.ndarray  # (n_regions, n_features) float64
    manifest: tuple[ManifestEntry, ...]
    flags: dict[int, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.region_ids), len(self.names)):
            raise FeatureError("feature table shape mismatch")

    def select(self, cfg: FeatureConfig) -> "FeatureTable":
        """Column subset matching a smaller configuration."""
        sub = build_manifest(cfg)
        index = {n: i for i, n in enumerate(self.names)}
        try:
            cols = [index[e.name] for e in sub]
        except KeyError as exc:
            raise FeatureError(f"table lacks column {exc}") from None
        return FeatureTable(
            region_ids=self.region_ids,
            names=tuple(e.name for e in sub),
            values=self.values[:, cols],
            manifest=sub,
            flags=self.flags,
        )

    def rows_for(self, region_ids: Sequence[int]) -> np.ndarray:
        index = {int(r): i for i, r in enumerate(self.region_ids)}
        return self.values[[index[int(r)] for r in region_ids]]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["region_id", *self.names])
            for rid, row in zip(self.region_ids, self.values):
                writer.writerow([int(rid), *(repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, path, manifest: Sequence[ManifestEntry]) -> "FeatureTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            names = tuple(header[1:])
            ids = []
            rows = []
            for rec in reader:
                ids.append(int(rec[0]))
                rows.append([float(v) for v in rec[1:]])
        if tuple(e.name for e in manifest) != names:
            raise FeatureError("CSV header does not match the manifest")
        return cls(region_ids=np.array(ids), names=names,
                   values=np.array(rows, dtype=np.float64), manifest=tuple(manifest))

    def write_manifest_json(self, path) -> None:
        write_manifest_json(self.manifest, path)


def write_manifest_json(manifest: Sequence[ManifestEntry], path) -> None:
    doc = {
        "tally": len(manifest),
        "entries": [
            {
                "name": e.name, "imagery": e.imagery, "family": e.family,
                "source": e.source, "band": e.band, "statistic": e.statistic,
                "param": e.param,
            }
            for e in manifest
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def read_manifest_json(path) -> tuple[ManifestEntry, ...]:
    with open(path) as fh:
        doc = json.load(fh)
    return tuple(
        ManifestEntry(
            name=e["name"], imagery=e["imagery"], family=e["family"],
            source=e["source"], band=e["band"], statistic=e["statistic"],
            param=e["param"],
        )
        for e in doc["entries"]
    )


def extract_features(partition, sources: RasterSources, cfg: FeatureConfig,
                     region_ids: Sequence[int] | None = None,
                     workers: int | None = None) -> FeatureTable:
    """Feature table for the given regions (default: all), in region-id order.

    The per-region computation is a pure function, mapped over regions with
    deterministic output ordering: results do not depend on worker count.
    """
    labels = partition.labels
    order = np.argsort(labels.ravel(), kind="stable")
    sorted_labels = labels.ravel()[order]
    bounds = np.searchsorted(sorted_labels, np.arange(partition.n_regions + 1))
    all_rows = order // labels.shape[1]
    all_cols = order % labels.shape[1]

    if region_ids is None:
        region_ids = range(partition.n_regions)
    region_ids = [int(r) for r in region_ids]
    manifest = build_manifest(cfg)

    def one(rid: int):
        rows = all_rows[bounds[rid]:bounds[rid + 1]]
        cols = all_cols[bounds[rid]:bounds[rid + 1]]
        region = build_region_data(rows, cols, sources, cfg)
        return compute_region_features(region, cfg, manifest)

    results = parallel_map(one, region_ids, worker_count(workers))
    values = np.array([vec for vec, _ in results], dtype=np.float64)
    if values.size == 0:
        values = values.reshape(0, len(manifest))
    flags = {rid: fl for rid, (_, fl) in zip(region_ids, results) if fl}
    return FeatureTable(
        region_ids=np.array(region_ids, dtype=np.int64),
        names=tuple(e.name for e in manifest),
        values=values, manifest=manifest, flags=flags,
    )
