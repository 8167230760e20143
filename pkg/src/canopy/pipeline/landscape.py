"""Landscape prediction, masking, cover summaries and dominance grids."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from canopy.features.bank import FeatureTable
from canopy.models import predict
from canopy.raster import GeoTransform, Raster
from canopy.pipeline.crowns import _centers_in_ring, rasterize_polygons

MASKED_CODE = -1


class LandscapeError(ValueError):
    pass


def landscape_predict(model, partition, table: FeatureTable,
                      mask_polygons=(), geo: GeoTransform | None = None,
                      mask_threshold: float = 0.5) -> tuple[Raster, dict]:
    """Class raster over the whole partition.

    Every region gets its model prediction except regions with at least
    ``mask_threshold`` of their pixels inside a mask polygon, which get the
    reserved MASKED code. Output codes are float32 integers with a legend.
    """
    n = partition.n_regions
    if len(table.region_ids) != n or not np.array_equal(
            table.region_ids, np.arange(n)):
        raise LandscapeError("feature table must cover every region id 0..R-1")
    labels, _ = predict(model, table.values, table.names)

    masked_regions = np.zeros(n, dtype=bool)
    if len(mask_polygons):
        if geo is None:
            raise LandscapeError("mask polygons require the raster geotransform")
        mask_raster = rasterize_polygons(mask_polygons, geo, partition.labels.shape)
        masked_px = mask_raster >= 0
        counts = np.bincount(partition.labels.ravel()[masked_px.ravel()], minlength=n)
        masked_regions = counts / partition.pixel_count >= mask_threshold

    region_code = np.where(masked_regions, MASKED_CODE, labels).astype(np.int64)
    code_raster = region_code[partition.labels]
    legend = {str(MASKED_CODE): "MASKED"}
    legend.update({str(i): cls for i, cls in enumerate(model.classes)})
    raster = Raster(data=code_raster.astype(np.float32)[np.newaxis],
                    band_roles=("class_code",))
    return raster, legend


@dataclass(frozen=True)
class CoverSummary:
    classes: tuple[str, ...]
    percent: np.ndarray  # over classified (unmasked) pixels, sums to 100
    hectares: np.ndarray
    total_hectares: float
    n_classified: int
    n_masked: int


def percent_to_hectares(percent: float, total_hectares: float) -> float:
    return percent / 100.0 * total_hectares


def cover_summary(class_raster: Raster, geo: GeoTransform, classes,
                  boundary=None) -> CoverSummary:
    """Per-class percentage and hectares over classified pixels.

    ``boundary`` restricts the summary to pixels whose center falls inside
    the polygon ring; masked pixels never count toward the denominator.
    """
    codes = class_raster.data[0].astype(np.int64)
    height, width = codes.shape
    selected = np.ones(codes.shape, dtype=bool)
    if boundary is not None:
        rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
        xs, ys = geo.pixel_center(rr, cc)
        selected = _centers_in_ring(xs, ys, np.asarray(boundary, dtype=np.float64))
    classified = selected & (codes >= 0)
    n_classified = int(classified.sum())
    if n_classified == 0:
        raise LandscapeError("no classified pixels inside the boundary")
    counts = np.bincount(codes[classified], minlength=len(classes)).astype(np.float64)
    percent = 100.0 * counts / n_classified
    px_ha = geo.pixel_area_m2 / 10_000.0
    hectares = counts * px_ha
    return CoverSummary(
        classes=tuple(classes), percent=percent, hectares=hectares,
        total_hectares=float(n_classified * px_ha),
        n_classified=n_classified,
        n_masked=int((selected & (codes == MASKED_CODE)).sum()),
    )


def write_cover_csv(summary: CoverSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "cover_percent", "cover_hectares"])
        for cls, pct, ha in zip(summary.classes, summary.percent, summary.hectares):
            writer.writerow([cls, repr(float(pct)), repr(float(ha))])
        writer.writerow(["TOTAL", repr(float(summary.percent.sum())),
                         repr(float(summary.hectares.sum()))])


@dataclass(frozen=True)
class DominanceGrid:
    """Coarse per-cell class prevalence over classified pixels."""

    classes: tuple[str, ...]
    cell_side_m: float
    cell_row: np.ndarray  # (n_cells,)
    cell_col: np.ndarray
    cell_x: np.ndarray  # west edge of cell, map units
    cell_y: np.ndarray  # north edge of cell
    percent: np.ndarray  # (n_cells, K); rows sum to 100 where not empty
    valid_fraction: np.ndarray  # classified pixels / total pixels in cell
    empty: np.ndarray  # cells with zero classified pixels


def dominance_grid(class_raster: Raster, geo: GeoTransform, classes,
                   cell_area_ha: float = 0.25) -> DominanceGrid:
    """Square cells of area ``cell_area_ha`` anchored at the raster origin;
    pixels bin by center, percentages are over classified pixels per cell."""
    side = float(np.sqrt(cell_area_ha * 10_000.0))
    codes = class_raster.data[0].astype(np.int64)
    height, width = codes.shape
    rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    xs, ys = geo.pixel_center(rr, cc)
    cell_c = np.floor((xs - geo.origin_x) / side).astype(np.int64)
    cell_r = np.floor((geo.origin_y - ys) / side).astype(np.int64)
    n_rows = int(cell_r.max()) + 1
    n_cols = int(cell_c.max()) + 1
    cell_index = cell_r * n_cols + cell_c
    n_cells = n_rows * n_cols
    k = len(classes)

    total_px = np.bincount(cell_index.ravel(), minlength=n_cells)
    classified = codes.ravel() >= 0
    class_px = np.bincount(cell_index.ravel()[classified], minlength=n_cells)
    per_class = np.zeros((n_cells, k))
    for ci in range(k):
        sel = codes.ravel() == ci
        per_class[:, ci] = np.bincount(cell_index.ravel()[sel], minlength=n_cells)

    present = total_px > 0
    empty = present & (class_px == 0)
    percent = np.zeros((n_cells, k))
    nonzero = class_px > 0
    percent[nonzero] = 100.0 * per_class[nonzero] / class_px[nonzero, None]
    valid_fraction = np.zeros(n_cells)
    valid_fraction[present] = class_px[present] / total_px[present]

    idx = np.nonzero(present)[0]
    rows = idx // n_cols
    cols = idx % n_cols
    return DominanceGrid(
        classes=tuple(classes), cell_side_m=side,
        cell_row=rows, cell_col=cols,
        cell_x=geo.origin_x + cols * side,
        cell_y=geo.origin_y - rows * side,
        percent=percent[idx], valid_fraction=valid_fraction[idx],
        empty=empty[idx],
    )


def write_dominance_csv(grid: DominanceGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_x", "cell_y", "valid_fraction",
                         *(f"pct_{c}" for c in grid.classes)])
        for i in range(len(grid.cell_row)):
            writer.writerow([
                repr(float(grid.cell_x[i])), repr(float(grid.cell_y[i])),
                repr(float(grid.valid_fraction[i])),
                *(repr(float(v)) for v in grid.percent[i]),
            ])
