"""Raster container, georeferencing, color transforms and bit-exact file IO.

Rasters are immutable in spirit: every operation returns a new raster and
never mutates band data in place, so they are safe to share across workers.
Band data is stored float32 in band-major layout; all math runs in float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

# Canonical role vocabulary. Roles are free-form ASCII strings but these are
# the ones the pipeline understands.
ROLE_RED = "red"
ROLE_GREEN = "green"
ROLE_BLUE = "blue"
ROLE_MS_GREEN = "ms_green"
ROLE_MS_RED = "ms_red"
ROLE_MS_REDEDGE = "ms_rededge"
ROLE_MS_NIR = "ms_nir"
ROLE_DSM = "dsm_height_m"
ROLE_GREY = "greyscale"

RGB_ROLES = (ROLE_RED, ROLE_GREEN, ROLE_BLUE)
MS_ROLES = (ROLE_MS_GREEN, ROLE_MS_RED, ROLE_MS_REDEDGE, ROLE_MS_NIR)

# BT.601 luma weights (greyscale conversion; see package docs).
_GREY_WEIGHTS = (0.299, 0.587, 0.114)


class RasterFormatError(ValueError):
    """Malformed raster file; message names the failing byte offset."""


class RasterError(ValueError):
    """Invalid raster construction or operation."""


@dataclass(frozen=True)
class GeoTransform:
    """Axis-aligned georeferencing: map units are metres, no rotation.

    ``origin_x``/``origin_y`` locate the outer corner of pixel (0, 0);
    y decreases with increasing row (north-up). ``pixel_height`` is stored
    positive.
    """

    origin_x: float
    origin_y: float
    pixel_width: float
    pixel_height: float

    def __post_init__(self) -> None:
        if self.pixel_width <= 0 or self.pixel_height <= 0:
            raise RasterError("pixel_width and pixel_height must be positive")

    @property
    def pixel_area_m2(self) -> float:
        return self.pixel_width * self.pixel_height

    def pixel_center(self, row, col):
        """Map coordinates of pixel centers (accepts arrays)."""
        x = self.origin_x + (np.asarray(col, dtype=np.float64) + 0.5) * self.pixel_width
        y = self.origin_y - (np.asarray(row, dtype=np.float64) + 0.5) * self.pixel_height
        return x, y

    def map_to_pixel(self, x, y):
        """Row/col indices containing map coordinates (floor; may be out of bounds)."""
        col = np.floor((np.asarray(x, dtype=np.float64) - self.origin_x) / self.pixel_width)
        row = np.floor((self.origin_y - np.asarray(y, dtype=np.float64)) / self.pixel_height)
        return row.astype(np.int64), col.astype(np.int64)


@dataclass(frozen=True)
class Raster:
    """Multi-band grid of float32 samples with one unique role per band."""

    data: np.ndarray  # (bands, height, width) float32
    band_roles: tuple[str, ...]
    nodata: float | None = None

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim == 2:
            data = data[np.newaxis]
        if data.ndim != 3:
            raise RasterError(f"raster data must be (bands, height, width), got shape {data.shape}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "band_roles", tuple(self.band_roles))
        if len(self.band_roles) != data.shape[0]:
            raise RasterError(
                f"{len(self.band_roles)} roles for {data.shape[0]} bands"
            )
        if len(set(self.band_roles)) != len(self.band_roles):
            raise RasterError(f"duplicate band roles: {self.band_roles}")
        if data.shape[1] < 1 or data.shape[2] < 1:
            raise RasterError("raster must have at least one pixel")
        self._check_rgb_range()

    def _check_rgb_range(self) -> None:
        for role in RGB_ROLES:
            if role not in self.band_roles:
                return
        rgb = self.data[[self.band_roles.index(r) for r in RGB_ROLES]]
        if self.nodata is not None:
            rgb = rgb[rgb != np.float32(self.nodata)]
        if rgb.size and (np.min(rgb) < 0.0 or np.max(rgb) > 1.0):
            raise RasterError("RGB reflectance must lie in [0, 1]")

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def band(self, role: str) -> np.ndarray:
        """2-D view of the band carrying ``role``."""
        try:
            return self.data[self.band_roles.index(role)]
        except ValueError:
            raise RasterError(f"raster has no band with role {role!r}") from None

    def has_roles(self, roles: Sequence[str]) -> bool:
        return all(r in self.band_roles for r in roles)

    def rgb_array(self) -> np.ndarray:
        """(height, width, 3) float64 RGB stack."""
        if not self.has_roles(RGB_ROLES):
            raise RasterError("raster lacks red/green/blue roles")
        return np.stack([self.band(r) for r in RGB_ROLES], axis=-1).astype(np.float64)


class RegionPixels(NamedTuple):
    """Per-band pixel values for a pixel index set, nodata excluded."""

    values: np.ndarray  # (bands, n) float64, input order preserved
    excluded: int  # pixels dropped because some band equalled nodata

    @property
    def degenerate(self) -> bool:
        return self.values.shape[1] == 0


# ---------------------------------------------------------------------------
# PPM (P6) import
# ---------------------------------------------------------------------------

def read_ppm(path) -> Raster:
    """Read a binary P6 PPM with maxval 255 into an RGB raster in [0, 1]."""
    with open(path, "rb") as fh:
        blob = fh.read()
    pos = 0

    def _fail(msg: str, offset: int):
        raise RasterFormatError(f"{msg} at byte offset {offset} in {path}")

    if blob[:2] != b"P6":
        _fail("not a P6 PPM (bad magic)", 0)
    pos = 2

    def _next_token(pos: int) -> tuple[bytes, int]:
        # skip whitespace and '#' comments between header fields
        while pos < len(blob):
            c = blob[pos:pos + 1]
            if c.isspace():
                pos += 1
            elif c == b"#":
                while pos < len(blob) and blob[pos:pos + 1] != b"\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            _fail("truncated header", start)
        return blob[start:pos], pos

    fields = []
    for _ in range(3):
        tok, pos = _next_token(pos)
        if not tok.isdigit():
            _fail(f"expected integer header field, got {tok!r}", pos - len(tok))
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        _fail(f"non-positive dimensions {width}x{height}", 2)
    if maxval != 255:
        _fail(f"unsupported maxval {maxval} (only 255)", pos - len(str(maxval)))
    pos += 1  # single whitespace byte after maxval
    expected = width * height * 3
    payload = blob[pos:pos + expected]
    if len(payload) < expected:
        _fail(
            f"truncated payload: expected {expected} bytes, found {len(payload)}",
            pos + len(payload),
        )
    samples = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    data = samples.reshape(height, width, 3).transpose(2, 0, 1)
    return Raster(data=data.astype(np.float32), band_roles=RGB_ROLES)


# ---------------------------------------------------------------------------
# FBR: the pipeline's bit-exact raster format
# ---------------------------------------------------------------------------

_FBR_MAGIC = b"FBR1"


def write_fbr(raster: Raster, geo: GeoTransform, path) -> None:
    """Write magic | dims | roles | geotransform | nodata | f32-LE samples."""
    with open(path, "wb") as fh:
        fh.write(_FBR_MAGIC)
        fh.write(struct.pack("<III", raster.width, raster.height, raster.bands))
        for role in raster.band_roles:
            encoded = role.encode("ascii")
            if len(encoded) > 255:
                raise RasterError(f"role too long: {role!r}")
            fh.write(struct.pack("<B", len(encoded)))
            fh.write(encoded)
        fh.write(struct.pack(
            "<dddd", geo.origin_x, geo.origin_y, geo.pixel_width, geo.pixel_height
        ))
        has_nodata = raster.nodata is not None
        fh.write(struct.pack("<Bf", int(has_nodata), raster.nodata if has_nodata else 0.0))
        fh.write(np.ascontiguousarray(raster.data, dtype="<f4").tobytes())


def read_fbr(path) -> tuple[Raster, GeoTransform]:
    """Read an FBR file; inverse of :func:`write_fbr`, bit-exact."""
    with open(path, "rb") as fh:
        blob = fh.read()

    def _fail(msg: str, offset: int):
        raise RasterFormatError(f"{msg} at byte offset {offset} in {path}")

    if blob[:4] != _FBR_MAGIC:
        _fail(f"bad magic {blob[:4]!r}", 0)
    pos = 4
    if len(blob) < pos + 12:
        _fail("truncated header", len(blob))
    width, height, bands = struct.unpack_from("<III", blob, pos)
    pos += 12
    if width < 1 or height < 1 or bands < 1:
        _fail(f"non-positive dimensions {width}x{height}x{bands}", 4)
    roles = []
    for _ in range(bands):
        if pos >= len(blob):
            _fail("truncated role table", pos)
        (n,) = struct.unpack_from("<B", blob, pos)
        pos += 1
        if pos + n > len(blob):
            _fail("truncated role string", pos)
        roles.append(blob[pos:pos + n].decode("ascii"))
        pos += n
    if len(blob) < pos + 32 + 5:
        _fail("truncated geotransform", pos)
    origin_x, origin_y, pw, ph = struct.unpack_from("<dddd", blob, pos)
    pos += 32
    has_nodata, nodata = struct.unpack_from("<Bf", blob, pos)
    pos += 5
    expected = width * height * bands * 4
    if len(blob) - pos != expected:
        _fail(
            f"payload size mismatch: expected {expected} bytes, found {len(blob) - pos}",
            pos,
        )
    data = np.frombuffer(blob, dtype="<f4", count=width * height * bands, offset=pos)
    data = data.reshape(bands, height, width).copy()
    raster = Raster(data=data, band_roles=tuple(roles),
                    nodata=float(nodata) if has_nodata else None)
    return raster, GeoTransform(origin_x, origin_y, pw, ph)


# ---------------------------------------------------------------------------
# Color transforms (pixel-local, pure)
# ---------------------------------------------------------------------------

def rgb_to_hsv(raster: Raster) -> Raster:
    """Hexcone HSV; hue in [0, 1) with achromatic pixels mapped to hue 0."""
    rgb = raster.rgb_array()
    h, s, v = _hsv_from_rgb(rgb)
    data = np.stack([h, s, v]).astype(np.float32)
    return Raster(data=data, band_roles=("hue", "saturation", "value"))


def _hsv_from_rgb(rgb: np.ndarray):
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = np.max(rgb, axis=-1)
    mn = np.min(rgb, axis=-1)
    c = v - mn
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    h = np.zeros_like(v)
    chromatic = c > 0
    cs = np.where(chromatic, c, 1.0)
    rmax = chromatic & (v == r)
    gmax = chromatic & (v == g) & ~rmax
    bmax = chromatic & ~rmax & ~gmax
    h = np.where(rmax, ((g - b) / cs) % 6.0, h)
    h = np.where(gmax, (b - r) / cs + 2.0, h)
    h = np.where(bmax, (r - g) / cs + 4.0, h)
    return h / 6.0, s, v


def _srgb_linearize(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


_D65_WHITE = (0.95047, 1.0, 1.08883)
# sRGB (D65) -> XYZ matrix rows
_SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])


def _lab_f(t: np.ndarray) -> np.ndarray:
    d = 6.0 / 29.0
    return np.where(t > d ** 3, np.cbrt(t), t / (3 * d * d) + 4.0 / 29.0)


def rgb_to_cielab(rgb: np.ndarray) -> np.ndarray:
    """(..., 3) sRGB in [0,1] -> (..., 3) CIELAB under D65."""
    lin = _srgb_linearize(np.asarray(rgb, dtype=np.float64))
    xyz = lin @ _SRGB_TO_XYZ.T
    fx = _lab_f(xyz[..., 0] / _D65_WHITE[0])
    fy = _lab_f(xyz[..., 1] / _D65_WHITE[1])
    fz = _lab_f(xyz[..., 2] / _D65_WHITE[2])
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * fy - 16.0
    lab[..., 1] = 500.0 * (fx - fy)
    lab[..., 2] = 200.0 * (fy - fz)
    return lab


def rgb_to_cielab_lightness(raster: Raster) -> Raster:
    """Single L* band in [0, 100] (sRGB linearization, D65 white point)."""
    lab = rgb_to_cielab(raster.rgb_array())
    return Raster(data=lab[..., 0].astype(np.float32)[np.newaxis],
                  band_roles=("lab_lightness",))


def rgb_to_grey(raster: Raster) -> Raster:
    """Luminance greyscale with BT.601 weights."""
    rgb = raster.rgb_array()
    wr, wg, wb = _GREY_WEIGHTS
    grey = wr * rgb[..., 0] + wg * rgb[..., 1] + wb * rgb[..., 2]
    return Raster(data=grey.astype(np.float32)[np.newaxis], band_roles=(ROLE_GREY,))


# ---------------------------------------------------------------------------
# Region pixel extraction
# ---------------------------------------------------------------------------

def extract_region_pixels(raster: Raster, rows, cols) -> RegionPixels:
    """Pixel values for (rows, cols), preserving order and dropping nodata.

    A pixel is excluded when any of its bands equals the nodata sentinel;
    the excluded count is reported so callers can audit coverage.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if rows.shape != cols.shape:
        raise RasterError("rows and cols must have the same length")
    if rows.size and (
        rows.min() < 0 or rows.max() >= raster.height
        or cols.min() < 0 or cols.max() >= raster.width
    ):
        raise RasterError("pixel index out of bounds")
    values = raster.data[:, rows, cols].astype(np.float64)
    excluded = 0
    if raster.nodata is not None and values.size:
        keep = ~np.any(values == float(np.float32(raster.nodata)), axis=0)
        excluded = int(values.shape[1] - keep.sum())
        values = values[:, keep]
    return RegionPixels(values=values, excluded=excluded)
