"""Superpixel segmentation by localized 5-D k-means over CIELAB + position.

Partitions an RGB orthomosaic into compact, 4-connected regions of roughly
fixed physical area. Pipeline: optional Gaussian pre-smoothing, CIELAB
conversion, seeds on a regular grid of spacing S = round(sqrt(target area in
pixels)) perturbed off gradients, iterative assignment within a 2S x 2S
window per center using D^2 = d_lab^2 + (m/S)^2 * d_xy^2, then connectivity
enforcement that merges fragments smaller than S^2/4 into their largest
neighbour.

The whole routine is single-threaded and deterministic: identical input and
config give an identical partition regardless of worker settings elsewhere.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph

from canopy.raster import GeoTransform, Raster, RasterError, rgb_to_cielab


class SegmentationError(ValueError):
    pass


@dataclass(frozen=True)
class SlicConfig:
    target_area_m2: float = 0.5
    compactness: float = 10.0
    smoothing_sigma: float = 1.0
    max_iterations: int = 10
    convergence_epsilon: float = 0.25  # mean center displacement, pixels

    def __post_init__(self) -> None:
        if self.target_area_m2 <= 0:
            raise SegmentationError("target_area_m2 must be positive")
        if self.compactness <= 0:
            raise SegmentationError("compactness must be positive")
        if self.smoothing_sigma < 0:
            raise SegmentationError("smoothing_sigma must be >= 0")
        if self.max_iterations < 1:
            raise SegmentationError("max_iterations must be >= 1")


@dataclass(frozen=True)
class SuperpixelPartition:
    """Complete segmentation: per-pixel region ids plus a region table.

    Region ids are contiguous 0..R-1 and row i of every table array
    describes region i. Centroids are pixel coordinates (x = column,
    y = row); bboxes are (min_row, min_col, max_row, max_col) inclusive.
    """

    labels: np.ndarray  # (H, W) int32
    pixel_count: np.ndarray  # (R,) int64
    centroid_x: np.ndarray  # (R,) float64
    centroid_y: np.ndarray  # (R,) float64
    bbox: np.ndarray  # (R, 4) int64

    @property
    def n_regions(self) -> int:
        return len(self.pixel_count)


def seed_grid(width: int, height: int, spacing: int,
              gradient: np.ndarray | None = None) -> np.ndarray:
    """(row, col) seed centers on a regular grid of ~``spacing``-sized cells.

    Cells are counted by ceil division per axis and spread evenly over the
    image (so edge cells are not runts). Centers sit at cell midpoints,
    moved to the lowest-gradient pixel of their 3x3 neighbourhood when a
    gradient map is supplied.
    """
    if spacing < 1:
        raise SegmentationError("spacing must be >= 1")
    if spacing > width and spacing > height:
        raise SegmentationError(
            f"spacing {spacing} larger than both image dimensions {width}x{height}"
        )
    n_cols = -(-width // spacing)
    n_rows = -(-height // spacing)
    row_edges = np.rint(np.arange(n_rows + 1) * height / n_rows).astype(np.int64)
    col_edges = np.rint(np.arange(n_cols + 1) * width / n_cols).astype(np.int64)
    rows = []
    cols = []
    for i in range(n_rows):
        for j in range(n_cols):
            rows.append((row_edges[i] + row_edges[i + 1]) // 2)
            cols.append((col_edges[j] + col_edges[j + 1]) // 2)
    seeds = np.stack([np.array(rows, np.int64), np.array(cols, np.int64)], axis=1)
    if gradient is not None:
        seeds = _perturb_seeds(seeds, gradient)
    return seeds


def _perturb_seeds(seeds: np.ndarray, gradient: np.ndarray) -> np.ndarray:
    h, w = gradient.shape
    out = seeds.copy()
    for k, (r, c) in enumerate(seeds):
        r0, r1 = max(r - 1, 0), min(r + 2, h)
        c0, c1 = max(c - 1, 0), min(c + 2, w)
        patch = gradient[r0:r1, c0:c1]
        flat = int(np.argmin(patch))  # first minimum in scan order: deterministic
        out[k, 0] = r0 + flat // patch.shape[1]
        out[k, 1] = c0 + flat % patch.shape[1]
    return out


def _gradient_map(lab: np.ndarray) -> np.ndarray:
    """Squared gradient magnitude summed over Lab channels, edges clamped."""
    padded = np.pad(lab, ((1, 1), (1, 1), (0, 0)), mode="edge")
    dx = padded[1:-1, 2:] - padded[1:-1, :-2]
    dy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    return np.sum(dx * dx + dy * dy, axis=-1)


def slic_segment(rgb: Raster, geo: GeoTransform, cfg: SlicConfig) -> SuperpixelPartition:
    """Segment an RGB raster into superpixels of ~cfg.target_area_m2 each."""
    if not rgb.has_roles(("red", "green", "blue")):
        raise RasterError("slic_segment requires red/green/blue roles")
    height, width = rgb.height, rgb.width
    target_px = cfg.target_area_m2 / geo.pixel_area_m2
    if width * height < target_px:
        raise SegmentationError(
            f"raster of {width * height} px is smaller than one superpixel "
            f"({target_px:.1f} px)"
        )
    spacing = max(1, round(np.sqrt(target_px)))

    rgb_arr = rgb.rgb_array()
    if cfg.smoothing_sigma > 0:
        rgb_arr = ndimage.gaussian_filter(
            rgb_arr, sigma=(cfg.smoothing_sigma, cfg.smoothing_sigma, 0), truncate=3.0
        )
    lab = rgb_to_cielab(rgb_arr)

    seeds = seed_grid(width, height, spacing, gradient=_gradient_map(lab))
    center_rc = seeds.astype(np.float64)
    center_lab = lab[seeds[:, 0], seeds[:, 1]].copy()

    labels, center_rc, center_lab = _iterate_assignments(
        lab, center_rc, center_lab, spacing, cfg
    )
    labels = _fill_unassigned(labels, lab, center_rc, center_lab, spacing, cfg)
    labels = enforce_connectivity(labels, min_size=max(1, (spacing * spacing) // 4))
    return _build_partition(labels)


def _iterate_assignments(lab, center_rc, center_lab, spacing, cfg):
    height, width = lab.shape[:2]
    n = len(center_rc)
    w2 = (cfg.compactness / spacing) ** 2
    row_idx = np.arange(height, dtype=np.float64)
    col_idx = np.arange(width, dtype=np.float64)
    labels = np.full((height, width), -1, dtype=np.int32)

    for _ in range(cfg.max_iterations):
        dist = np.full((height, width), np.inf)
        labels.fill(-1)
        for k in range(n):
            cy, cx = center_rc[k]
            r0 = max(int(round(cy)) - spacing, 0)
            r1 = min(int(round(cy)) + spacing + 1, height)
            c0 = max(int(round(cx)) - spacing, 0)
            c1 = min(int(round(cx)) + spacing + 1, width)
            if r0 >= r1 or c0 >= c1:
                continue
            dl = lab[r0:r1, c0:c1] - center_lab[k]
            d2 = np.einsum("ijk,ijk->ij", dl, dl)
            dr = row_idx[r0:r1] - cy
            dc = col_idx[c0:c1] - cx
            d2 += w2 * (dr * dr)[:, None]
            d2 += w2 * (dc * dc)[None, :]
            window = dist[r0:r1, c0:c1]
            better = d2 < window
            window[better] = d2[better]
            labels[r0:r1, c0:c1][better] = k

        flat = labels.ravel()
        assigned = flat >= 0
        idx = flat[assigned]
        counts = np.bincount(idx, minlength=n).astype(np.float64)
        rows = np.repeat(np.arange(height), width)[assigned]
        cols = np.tile(np.arange(width), height)[assigned]
        new_rc = center_rc.copy()
        new_lab = center_lab.copy()
        nonzero = counts > 0
        new_rc[nonzero, 0] = np.bincount(idx, rows, minlength=n)[nonzero] / counts[nonzero]
        new_rc[nonzero, 1] = np.bincount(idx, cols, minlength=n)[nonzero] / counts[nonzero]
        lab_flat = lab.reshape(-1, 3)[assigned]
        for ch in range(3):
            new_lab[nonzero, ch] = (
                np.bincount(idx, lab_flat[:, ch], minlength=n)[nonzero] / counts[nonzero]
            )
        displacement = np.sqrt(np.sum((new_rc - center_rc) ** 2, axis=1)).mean()
        center_rc, center_lab = new_rc, new_lab
        if displacement < cfg.convergence_epsilon:
            break
    return labels, center_rc, center_lab


def _fill_unassigned(labels, lab, center_rc, center_lab, spacing, cfg):
    """Assign any pixel missed by every search window to its best center."""
    missing = np.argwhere(labels < 0)
    if not len(missing):
        return labels
    w2 = (cfg.compactness / spacing) ** 2
    for r, c in missing:
        dl = center_lab - lab[r, c]
        d2 = np.einsum("ij,ij->i", dl, dl)
        d2 += w2 * ((center_rc[:, 0] - r) ** 2 + (center_rc[:, 1] - c) ** 2)
        labels[r, c] = int(np.argmin(d2))
    return labels


def enforce_connectivity(labels: np.ndarray, min_size: int) -> np.ndarray:
    """Split regions into 4-connected components, merge fragments below
    ``min_size`` into their largest adjacent region, relabel contiguously.

    Total function: accepts any integer label raster. Relabelling follows
    first occurrence in row-major scan order, so the result is deterministic.
    """
    comp = _connected_components(labels)
    n_comp = comp.max() + 1
    sizes = np.bincount(comp.ravel(), minlength=n_comp).astype(np.int64)
    pairs = _component_adjacency(comp)

    parent = np.arange(n_comp)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    neighbours: list[set[int]] = [set() for _ in range(n_comp)]
    for a, b in pairs:
        neighbours[a].add(b)
        neighbours[b].add(a)

    changed = True
    while changed:
        changed = False
        for c in range(n_comp):
            root = find(c)
            if sizes[root] >= min_size:
                continue
            adj_roots = {find(nb) for nb in neighbours[c]} - {root}
            if not adj_roots:
                continue
            target = min(adj_roots, key=lambda r: (-sizes[r], r))
            parent[root] = target
            sizes[target] += sizes[root]
            changed = True

    roots = np.array([find(c) for c in range(n_comp)])
    merged = roots[comp]
    # contiguous ids ordered by first occurrence in scan order
    _, first_idx = np.unique(merged.ravel(), return_index=True)
    order = np.argsort(first_idx)
    remap = np.empty(n_comp, dtype=np.int32)
    uniq_sorted = np.unique(merged.ravel())
    remap_for = np.full(n_comp, -1, dtype=np.int32)
    remap_for[uniq_sorted[order]] = np.arange(len(order), dtype=np.int32)
    del remap
    return remap_for[merged]


def _connected_components(labels: np.ndarray) -> np.ndarray:
    """4-connected components of equal-label pixels, ids 0..C-1."""
    height, width = labels.shape
    n = height * width
    idx = np.arange(n).reshape(height, width)
    edges_src = []
    edges_dst = []
    same_h = labels[:, 1:] == labels[:, :-1]
    edges_src.append(idx[:, :-1][same_h])
    edges_dst.append(idx[:, 1:][same_h])
    same_v = labels[1:, :] == labels[:-1, :]
    edges_src.append(idx[:-1, :][same_v])
    edges_dst.append(idx[1:, :][same_v])
    src = np.concatenate(edges_src)
    dst = np.concatenate(edges_dst)
    graph = sparse.coo_matrix(
        (np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n)
    )
    _, comp = csgraph.connected_components(graph, directed=False)
    return comp.reshape(height, width).astype(np.int64)


def _component_adjacency(comp: np.ndarray) -> np.ndarray:
    """Unique unordered pairs of 4-adjacent component ids."""
    a_h = comp[:, :-1].ravel()
    b_h = comp[:, 1:].ravel()
    a_v = comp[:-1, :].ravel()
    b_v = comp[1:, :].ravel()
    a = np.concatenate([a_h, a_v])
    b = np.concatenate([b_h, b_v])
    diff = a != b
    a, b = a[diff], b[diff]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return np.unique(np.stack([lo, hi], axis=1), axis=0)


def _build_partition(labels: np.ndarray) -> SuperpixelPartition:
    height, width = labels.shape
    n = int(labels.max()) + 1
    counts = np.bincount(labels.ravel(), minlength=n).astype(np.int64)
    rows = np.repeat(np.arange(height), width).astype(np.float64)
    cols = np.tile(np.arange(width), height).astype(np.float64)
    flat = labels.ravel()
    cy = np.bincount(flat, rows, minlength=n) / counts
    cx = np.bincount(flat, cols, minlength=n) / counts
    bbox = np.zeros((n, 4), dtype=np.int64)
    for rid, sl in enumerate(ndimage.find_objects(labels + 1)):
        if sl is None:
            continue
        bbox[rid] = (sl[0].start, sl[1].start, sl[0].stop - 1, sl[1].stop - 1)
    return SuperpixelPartition(
        labels=labels.astype(np.int32), pixel_count=counts,
        centroid_x=cx, centroid_y=cy, bbox=bbox,
    )


# ---------------------------------------------------------------------------
# Partition export / import
# ---------------------------------------------------------------------------

def partition_to_raster(partition: SuperpixelPartition) -> Raster:
    """Region ids as a single float32 band (ids are exact small integers)."""
    return Raster(data=partition.labels.astype(np.float32)[np.newaxis],
                  band_roles=("region_id",))


def partition_from_raster(raster: Raster) -> SuperpixelPartition:
    labels = raster.data[0].astype(np.int32)
    if labels.min() < 0:
        raise SegmentationError("region-id raster contains negative ids")
    return _build_partition(labels.astype(np.int64))


def write_region_table(partition: SuperpixelPartition, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "pixel_count", "centroid_x", "centroid_y"])
        for rid in range(partition.n_regions):
            writer.writerow([
                rid,
                int(partition.pixel_count[rid]),
                repr(float(partition.centroid_x[rid])),
                repr(float(partition.centroid_y[rid])),
            ])
