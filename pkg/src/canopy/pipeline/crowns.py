"""Crown polygons: ingestion, label schemes, rasterization, label transfer."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from canopy.raster import GeoTransform


class CrownError(ValueError):
    pass


@dataclass(frozen=True)
class CrownPolygon:
    """Labelled exterior ring in map coordinates (metres)."""

    id: int
    ring: np.ndarray  # (n, 2) vertices, not repeating the first point
    label: str
    source: str = "field"

    def __post_init__(self) -> None:
        ring = np.asarray(self.ring, dtype=np.float64)
        if ring.ndim != 2 or ring.shape[1] != 2:
            raise CrownError(f"crown {self.id}: ring must be (n, 2)")
        if len(ring) >= 2 and np.array_equal(ring[0], ring[-1]):
            ring = ring[:-1]  # accept closed GeoJSON-style rings
        if len(ring) < 3:
            raise CrownError(f"crown {self.id}: ring needs at least 3 vertices")
        object.__setattr__(self, "ring", ring)
        if abs(_shoelace(ring)) <= 0.0:
            raise CrownError(f"crown {self.id}: degenerate zero-area ring")
        if _self_intersects(ring):
            raise CrownError(f"crown {self.id}: self-intersecting ring")

    @property
    def area_m2(self) -> float:
        return abs(_shoelace(self.ring))


def _shoelace(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _self_intersects(ring: np.ndarray) -> bool:
    """Proper crossing test between non-adjacent edges (O(n^2), n is small)."""
    n = len(ring)
    segs = [(ring[i], ring[(i + 1) % n]) for i in range(n)]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            p1, p2 = segs[i]
            p3, p4 = segs[j]
            d1 = cross(p3, p4, p1)
            d2 = cross(p3, p4, p2)
            d3 = cross(p1, p2, p3)
            d4 = cross(p1, p2, p4)
            if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
                return True
    return False


# ---------------------------------------------------------------------------
# JSON FeatureCollection subset
# ---------------------------------------------------------------------------

def read_crowns(path) -> list[CrownPolygon]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise CrownError(f"{path}: expected a FeatureCollection")
    crowns = []
    for feat in doc.get("features", []):
        geom = feat.get("geometry", {})
        if geom.get("type") != "Polygon":
            raise CrownError(f"{path}: only Polygon geometries are supported")
        props = feat.get("properties", {})
        crowns.append(CrownPolygon(
            id=int(props["id"]),
            ring=np.asarray(geom["coordinates"][0], dtype=np.float64),
            label=str(props["label"]),
            source=str(props.get("source", "field")),
        ))
    ids = [c.id for c in crowns]
    if len(set(ids)) != len(ids):
        raise CrownError(f"{path}: duplicate crown ids")
    return crowns


def write_crowns(crowns, path) -> None:
    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [
                        [[float(x), float(y)] for x, y in crown.ring]
                        + [[float(crown.ring[0][0]), float(crown.ring[0][1])]]
                    ],
                },
                "properties": {"id": crown.id, "label": crown.label,
                               "source": crown.source},
            }
            for crown in crowns
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# Label schemes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabelScheme:
    """Ordered class vocabulary plus a merge map over original labels."""

    classes: tuple[str, ...]
    merge_map: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        for src, dst in self.merge_map.items():
            if dst not in self.classes:
                raise CrownError(f"merge target {dst!r} for {src!r} not in scheme classes")

    @classmethod
    def identity(cls, labels) -> "LabelScheme":
        seen = tuple(dict.fromkeys(labels))
        return cls(classes=seen)

    def apply(self, label: str) -> str:
        out = self.merge_map.get(label, label)
        if out not in self.classes:
            raise CrownError(f"label {label!r} not covered by the scheme")
        return out

    def index_of(self, label: str) -> int:
        return self.classes.index(self.apply(label))


# ---------------------------------------------------------------------------
# Rasterization (pixel-center, even-odd) and label transfer
# ---------------------------------------------------------------------------

def _centers_in_ring(xs: np.ndarray, ys: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Even-odd rule via ray casting toward +x; vectorized over points."""
    inside = np.zeros(xs.shape, dtype=bool)
    n = len(ring)
    for i in range(n):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % n]
        crosses = (y1 > ys) != (y2 > ys)
        if not crosses.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (ys - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (xs < x_at)
    return inside


def rasterize_polygons(polygons, geo: GeoTransform, shape: tuple[int, int]) -> np.ndarray:
    """Crown-id raster: each pixel takes the id of the polygon containing its
    center; pixels outside every polygon get -1.

    Overlaps resolve to the later-listed polygon with a warning; polygons
    covering no pixel center warn about zero coverage.
    """
    height, width = shape
    out = np.full((height, width), -1, dtype=np.int64)
    for poly in polygons:
        xs_min, ys_min = poly.ring.min(axis=0)
        xs_max, ys_max = poly.ring.max(axis=0)
        r0, c0 = geo.map_to_pixel(xs_min, ys_max)
        r1, c1 = geo.map_to_pixel(xs_max, ys_min)
        r0 = int(np.clip(r0, 0, height - 1))
        r1 = int(np.clip(r1, 0, height - 1))
        c0 = int(np.clip(c0, 0, width - 1))
        c1 = int(np.clip(c1, 0, width - 1))
        rows = np.arange(r0, r1 + 1)
        cols = np.arange(c0, c1 + 1)
        if rows.size == 0 or cols.size == 0:
            warnings.warn(f"crown {poly.id} covers no pixel center", stacklevel=2)
            continue
        rr, cc = np.meshgrid(rows, cols, indexing="ij")
        xs, ys = geo.pixel_center(rr, cc)
        inside = _centers_in_ring(xs, ys, poly.ring)
        if not inside.any():
            warnings.warn(f"crown {poly.id} covers no pixel center", stacklevel=2)
            continue
        window = out[r0:r1 + 1, c0:c1 + 1]
        clobbered = inside & (window >= 0)
        if clobbered.any():
            prev = np.unique(window[clobbered]).tolist()
            warnings.warn(
                f"crown {poly.id} overlaps crowns {prev}; later-listed wins",
                stacklevel=2,
            )
        window[inside] = poly.id
    return out


@dataclass(frozen=True)
class RegionOverlap:
    """Best-crown overlap record for one region."""

    region_id: int
    crown_id: int
    label: str
    fraction: float  # of the region's pixels inside that crown

    @property
    def labelled(self) -> bool:
        return self.fraction >= 0.5


def assign_superpixel_labels(partition, crown_raster: np.ndarray,
                             crowns) -> tuple[list[RegionOverlap], list[RegionOverlap]]:
    """Transfer crown labels to regions with >= 50% of their area in a crown.

    Returns (labelled, overlaps): ``overlaps`` records the best crown for
    every region touching any crown; ``labelled`` is the subset meeting the
    inclusive 0.5 threshold.
    """
    if crown_raster.shape != partition.labels.shape:
        raise CrownError("partition and crown raster dimensions differ")
    label_by_id = {c.id: c.label for c in crowns}
    flat_region = partition.labels.ravel().astype(np.int64)
    flat_crown = crown_raster.ravel()
    has_crown = flat_crown >= 0
    pairs = np.stack([flat_region[has_crown], flat_crown[has_crown]], axis=1)
    uniq, counts = np.unique(pairs, axis=0, return_counts=True)

    overlaps: list[RegionOverlap] = []
    for rid in np.unique(uniq[:, 0]):
        rows = uniq[:, 0] == rid
        crown_ids = uniq[rows, 1]
        crown_counts = counts[rows]
        best = int(np.argmax(crown_counts))  # ties: lowest crown id (sorted unique)
        crown_id = int(crown_ids[best])
        fraction = float(crown_counts[best] / partition.pixel_count[rid])
        overlaps.append(RegionOverlap(
            region_id=int(rid), crown_id=crown_id,
            label=label_by_id[crown_id], fraction=fraction,
        ))
    labelled = [o for o in overlaps if o.labelled]
    return labelled, overlaps
