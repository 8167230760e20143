"""Ground-truthed synthetic orthomosaic scenes.

Classes differ by controllable spectral signatures (base colors per band)
and texture kinds, so that spectral-only and texture-enabled models can be
benchmarked against known ground truth:

- ``striped``: sinusoid at a configurable pixel period and angle; its
  per-pixel marginal is the arcsine law of the amplitude.
- ``jagged``: iid arcsine noise, marginal-matched to stripes of the same
  amplitude but spatially uncorrelated.
- ``spotted``: smoothed value noise rank-remapped to a Gaussian marginal,
  so a ``smooth`` class with boosted per-class pixel noise matches its
  per-pixel distribution exactly while differing in spatial structure.
- ``smooth``: no texture.

Crowns are non-overlapping discs rendered over a background class, with
hemispherical caps on a gently sloping ground plane in the DSM. Everything
is deterministic in the scene seed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtri

from canopy.raster import MS_ROLES, RGB_ROLES, ROLE_DSM, GeoTransform, Raster
from canopy.pipeline.crowns import CrownPolygon

TEXTURE_KINDS = ("smooth", "spotted", "striped", "jagged")


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class ClassSpec:
    name: str
    rgb: tuple[float, float, float]
    ms: tuple[float, float, float, float]
    texture: str = "smooth"
    texture_amplitude: float = 0.0
    stripe_period_px: float = 4.7  # in RGB pixels; non-integer avoids aliasing
    stripe_angle_deg: float = 30.0
    spot_scale_px: float = 4.0
    height_range: tuple[float, float] = (4.0, 9.0)
    noise_sigma: float | None = None  # overrides the scene-wide value

    def __post_init__(self) -> None:
        if self.texture not in TEXTURE_KINDS:
            raise SceneError(f"unknown texture kind {self.texture!r}")
        if self.texture_amplitude < 0:
            raise SceneError("texture_amplitude must be >= 0")


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    classes: tuple[ClassSpec, ...]
    background: str
    pixel_size_m: float = 0.1
    crown_count: int = 30
    radius_range_m: tuple[float, float] = (1.2, 2.4)
    noise_sigma: float = 0.01
    ms_scale: float = 2.8
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        if len(self.classes) < 2:
            raise SceneError("a scene needs at least two classes")
        if self.background not in [c.name for c in self.classes]:
            raise SceneError(f"background {self.background!r} is not a class")
        if self.radius_range_m[0] <= 0 or self.radius_range_m[1] < self.radius_range_m[0]:
            raise SceneError("invalid crown radius range")
        if self.noise_sigma < 0:
            raise SceneError("noise_sigma must be >= 0")

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.classes)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, path) -> "SceneSpec":
        with open(path) as fh:
            doc = json.load(fh)
        doc["classes"] = tuple(ClassSpec(**{
            **c, "rgb": tuple(c["rgb"]), "ms": tuple(c["ms"]),
            "height_range": tuple(c["height_range"]),
        }) for c in doc["classes"])
        doc["radius_range_m"] = tuple(doc["radius_range_m"])
        return cls(**doc)


@dataclass
class Scene:
    spec: SceneSpec
    rgb: Raster
    rgb_geo: GeoTransform
    ms: Raster
    ms_geo: GeoTransform
    dsm: Raster
    dsm_geo: GeoTransform
    truth: Raster  # class indices into spec.classes as float32
    crowns: list[CrownPolygon]
    cover_counts: dict[str, int]  # pixel-counted cover of the truth raster


@dataclass(frozen=True)
class _Crown:
    x: float
    y: float
    radius: float
    class_index: int
    height: float


def generate_scene(spec: SceneSpec) -> Scene:
    ss = np.random.SeedSequence(spec.seed)
    rng_place, rng_height, rng_rgb, rng_ms, rng_tex = (
        np.random.default_rng(child) for child in ss.spawn(5)
    )

    width_m = spec.width * spec.pixel_size_m
    height_m = spec.height * spec.pixel_size_m
    geo = GeoTransform(0.0, height_m, spec.pixel_size_m, spec.pixel_size_m)
    ms_px = spec.pixel_size_m * spec.ms_scale
    ms_w = max(1, int(np.ceil(spec.width / spec.ms_scale)))
    ms_h = max(1, int(np.ceil(spec.height / spec.ms_scale)))
    ms_geo = GeoTransform(0.0, height_m, ms_px, ms_px)

    crowns = _place_crowns(spec, rng_place, rng_height, width_m, height_m)

    bg_index = spec.class_names.index(spec.background)
    class_map_rgb = _class_map(spec, crowns, geo, spec.height, spec.width, bg_index)
    class_map_ms = _class_map(spec, crowns, ms_geo, ms_h, ms_w, bg_index)

    rgb_bands = _render_bands(spec, class_map_rgb, geo, rng_rgb, rng_tex,
                              [c.rgb for c in spec.classes], grid_tag=0)
    ms_bands = _render_bands(spec, class_map_ms, ms_geo, rng_ms, rng_tex,
                             [c.ms for c in spec.classes], grid_tag=1)
    dsm = _render_dsm(spec, crowns, geo)

    polygons = [
        _crown_polygon(c, i, spec.class_names[c.class_index])
        for i, c in enumerate(crowns)
    ]
    counts = np.bincount(class_map_rgb.ravel(), minlength=len(spec.classes))
    cover = {name: int(counts[i]) for i, name in enumerate(spec.class_names)}

    return Scene(
        spec=spec,
        rgb=Raster(data=np.clip(rgb_bands, 0.0, 1.0).astype(np.float32),
                   band_roles=RGB_ROLES),
        rgb_geo=geo,
        ms=Raster(data=np.clip(ms_bands, 0.0, 1.0).astype(np.float32),
                  band_roles=MS_ROLES),
        ms_geo=ms_geo,
        dsm=Raster(data=dsm.astype(np.float32)[np.newaxis], band_roles=(ROLE_DSM,)),
        dsm_geo=geo,
        truth=Raster(data=class_map_rgb.astype(np.float32)[np.newaxis],
                     band_roles=("class_code",)),
        crowns=polygons,
        cover_counts=cover,
    )


def _place_crowns(spec, rng_place, rng_height, width_m, height_m) -> list[_Crown]:
    crowns: list[_Crown] = []
    r_lo, r_hi = spec.radius_range_m
    margin = 0.3  # keeps circumscribed polygons of neighbours disjoint
    for i in range(spec.crown_count):
        class_index = i % len(spec.classes)
        placed = False
        for _ in range(10_000):
            radius = float(rng_place.uniform(r_lo, r_hi))
            x = float(rng_place.uniform(radius + margin, width_m - radius - margin))
            y = float(rng_place.uniform(radius + margin, height_m - radius - margin))
            if all(
                (x - c.x) ** 2 + (y - c.y) ** 2 > (radius + c.radius + margin) ** 2
                for c in crowns
            ):
                placed = True
                break
        if not placed:
            raise SceneError(
                f"could not place crown {i} in 10000 attempts; "
                "reduce crown_count or radius_range_m"
            )
        lo, hi = spec.classes[class_index].height_range
        crowns.append(_Crown(x=x, y=y, radius=radius, class_index=class_index,
                             height=float(rng_height.uniform(lo, hi))))
    return crowns


def _pixel_centers(geo, height, width):
    rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    return geo.pixel_center(rr, cc)


def _class_map(spec, crowns, geo, height, width, bg_index) -> np.ndarray:
    xs, ys = _pixel_centers(geo, height, width)
    out = np.full((height, width), bg_index, dtype=np.int64)
    for crown in crowns:
        inside = (xs - crown.x) ** 2 + (ys - crown.y) ** 2 <= crown.radius ** 2
        out[inside] = crown.class_index
    return out


def _texture_field(cls: ClassSpec, spec: SceneSpec, xs, ys, rng) -> np.ndarray:
    if cls.texture == "smooth" or cls.texture_amplitude == 0.0:
        return np.zeros(xs.shape)
    a = cls.texture_amplitude
    if cls.texture == "striped":
        period_m = cls.stripe_period_px * spec.pixel_size_m
        phi = np.deg2rad(cls.stripe_angle_deg)
        phase = (xs * np.cos(phi) + ys * np.sin(phi)) / period_m
        return a * np.sin(2.0 * np.pi * phase)
    if cls.texture == "jagged":
        return a * np.sin(2.0 * np.pi * rng.random(xs.shape))
    if cls.texture == "spotted":
        return a * _gaussian_value_noise(cls, spec, xs.shape, rng)
    raise SceneError(f"unknown texture {cls.texture!r}")


def _gaussian_value_noise(cls, spec, shape, rng) -> np.ndarray:
    """Bilinear value noise rank-remapped to a standard normal marginal."""
    h, w = shape
    step = max(cls.spot_scale_px, 1.0)
    gh = int(np.ceil(h / step)) + 2
    gw = int(np.ceil(w / step)) + 2
    grid = rng.random((gh, gw))
    rr = np.arange(h) / step
    cc = np.arange(w) / step
    r0 = np.floor(rr).astype(int)
    c0 = np.floor(cc).astype(int)
    tr = (rr - r0)[:, None]
    tc = (cc - c0)[None, :]
    field = ((1 - tr) * (1 - tc) * grid[np.ix_(r0, c0)]
             + (1 - tr) * tc * grid[np.ix_(r0, c0 + 1)]
             + tr * (1 - tc) * grid[np.ix_(r0 + 1, c0)]
             + tr * tc * grid[np.ix_(r0 + 1, c0 + 1)])
    order = np.argsort(field.ravel(), kind="stable")
    ranked = np.empty(field.size)
    ranked[order] = ndtri((np.arange(field.size) + 0.5) / field.size)
    return ranked.reshape(shape)


def _render_bands(spec, class_map, geo, rng_noise, rng_tex, base_colors,
                  grid_tag: int) -> np.ndarray:
    height, width = class_map.shape
    n_bands = len(base_colors[0])
    xs, ys = _pixel_centers(geo, height, width)
    out = np.zeros((n_bands, height, width))

    # per-class texture fields; sub-streams keyed by (class, grid) so RGB and
    # MS realizations are independent but reproducible
    fields = []
    for ci, cls in enumerate(spec.classes):
        sub = np.random.default_rng(
            np.random.SeedSequence([spec.seed, 7_000 + grid_tag, ci])
        )
        fields.append(_texture_field(cls, spec, xs, ys, sub))

    for ci, cls in enumerate(spec.classes):
        mask = class_map == ci
        if not mask.any():
            continue
        for b in range(n_bands):
            out[b][mask] = base_colors[ci][b] + fields[ci][mask]
    noise_by_class = np.zeros((height, width))
    for ci, cls in enumerate(spec.classes):
        sigma = spec.noise_sigma if cls.noise_sigma is None else cls.noise_sigma
        noise_by_class[class_map == ci] = sigma
    for b in range(n_bands):
        out[b] += rng_noise.normal(size=(height, width)) * noise_by_class
    return out


def _render_dsm(spec, crowns, geo) -> np.ndarray:
    xs, ys = _pixel_centers(geo, spec.height, spec.width)
    ground = 30.0 + 0.02 * xs + 0.01 * ys  # gently sloping plane
    z = ground.copy()
    for crown in crowns:
        d2 = (xs - crown.x) ** 2 + (ys - crown.y) ** 2
        inside = d2 <= crown.radius ** 2
        cap = crown.height * np.sqrt(np.maximum(0.0, 1.0 - d2 / crown.radius ** 2))
        z[inside] = ground[inside] + cap[inside]
    return z


def _crown_polygon(crown: _Crown, crown_id: int, label: str,
                   n_vertices: int = 32) -> CrownPolygon:
    # circumscribed polygon: its inscribed circle equals the rendered disc,
    # so every rendered pixel center lies inside
    r_out = crown.radius / np.cos(np.pi / n_vertices)
    angles = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    ring = np.stack([
        crown.x + r_out * np.cos(angles),
        crown.y + r_out * np.sin(angles),
    ], axis=1)
    return CrownPolygon(id=crown_id, ring=ring, label=label, source="synthetic")
