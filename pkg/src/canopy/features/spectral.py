"""Per-band spectral statistics, brightness filtering and level quantization.

Every statistic is a pure function of the pixel multiset, so values are
invariant to pixel ordering. Degenerate ratios (anything of the 0/0 kind on
constant input) resolve to 0 and raise the block's degeneracy flag; no NaN
or Inf ever leaves this module.
"""

from __future__ import annotations

import numpy as np

from canopy.raster import rgb_to_cielab

_DECILES = tuple(range(10, 100, 10))

STANDARD_STATS: tuple[str, ...] = (
    "max", "min", "mean", "std", "median", "cov", "skew", "kurt",
    "rng", "rngsig", "rngmean",
    *(f"p{q}" for q in _DECILES),
    "p25", "p75", "iqr", "iqrsig", "iqrmean",
)

DSM_STATS: tuple[str, ...] = (
    "std", "skew", "kurt", "rng", "rngsig", "rngmean", "iqr", "iqrsig",
    "mad", "maxmed", "minmed",
    *(f"p{q}med" for q in _DECILES),
    "p25med", "p75med",
)


def _ratio(num: float, den: float, flags: list[str], what: str) -> float:
    if den == 0.0:
        flags.append(what)
        return 0.0
    return num / den


def spectral_stats(pixels, variant: str = "standard") -> tuple[dict[str, float], bool]:
    """Named statistics of a 1-D pixel sample.

    ``standard`` is the full set used for reflectance-like bands; ``dsm``
    is the median-relative set for absolute heights. Returns the ordered
    stats dict and whether any degenerate ratio was zeroed.
    """
    x = np.asarray(pixels, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("spectral_stats requires at least one pixel")
    x = np.sort(x)  # statistics become bitwise permutation-invariant
    flags: list[str] = []

    mx = float(np.max(x))
    mn = float(np.min(x))
    mean = float(np.mean(x))
    med = float(np.median(x))
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    if x.size == 1:
        flags.append("std")
    rng = mx - mn

    centered = x - mean
    m2 = float(np.mean(centered ** 2))
    if m2 > 0.0:
        skew = float(np.mean(centered ** 3)) / m2 ** 1.5
        kurt = float(np.mean(centered ** 4)) / m2 ** 2 - 3.0
    else:
        skew = kurt = 0.0
        flags.append("moments")

    qs = np.quantile(x, [q / 100 for q in _DECILES] + [0.25, 0.75])
    deciles = qs[:9]
    p25, p75 = float(qs[9]), float(qs[10])
    iqr = p75 - p25

    if variant == "standard":
        out = {
            "max": mx, "min": mn, "mean": mean, "std": std, "median": med,
            "cov": _ratio(mean, std, flags, "cov"),
            "skew": skew, "kurt": kurt,
            "rng": rng,
            "rngsig": _ratio(rng, std, flags, "rngsig"),
            "rngmean": _ratio(rng, mean, flags, "rngmean"),
        }
        for q, v in zip(_DECILES, deciles):
            out[f"p{q}"] = float(v)
        out.update({
            "p25": p25, "p75": p75, "iqr": iqr,
            "iqrsig": _ratio(iqr, std, flags, "iqrsig"),
            "iqrmean": _ratio(iqr, mean, flags, "iqrmean"),
        })
        return out, bool(flags)

    if variant == "dsm":
        mad = float(np.median(np.abs(x - med)))
        out = {
            "std": std, "skew": skew, "kurt": kurt,
            "rng": rng,
            "rngsig": _ratio(rng, std, flags, "rngsig"),
            "rngmean": _ratio(rng, mean, flags, "rngmean"),
            "iqr": iqr,
            "iqrsig": _ratio(iqr, std, flags, "iqrsig"),
            "mad": mad, "maxmed": mx - med, "minmed": mn - med,
        }
        for q, v in zip(_DECILES, deciles):
            out[f"p{q}med"] = float(v) - med
        out["p25med"] = p25 - med
        out["p75med"] = p75 - med
        return out, bool(flags)

    raise ValueError(f"unknown variant {variant!r}")


def brightness_filter_top50(rgb_pixels: np.ndarray) -> tuple[np.ndarray, bool]:
    """Keep the brightest half of a (3, n) RGB pixel sample.

    Brightness is CIELAB L*; pixels at or above the median L* are kept
    (ties included). Fewer than two pixels pass through unchanged with the
    degeneracy flag raised.
    """
    rgb_pixels = np.asarray(rgb_pixels, dtype=np.float64)
    if rgb_pixels.ndim != 2 or rgb_pixels.shape[0] != 3:
        raise ValueError("expected a (3, n) RGB pixel array")
    n = rgb_pixels.shape[1]
    if n < 2:
        return rgb_pixels, True
    lstar = rgb_to_cielab(rgb_pixels.T)[:, 0]
    keep = lstar >= np.median(lstar)
    return rgb_pixels[:, keep], False


def quantize_levels(values, levels: int = 32) -> np.ndarray:
    """Linear map of [p5, p95] onto integer levels [1, levels].

    Values below the 5th percentile map to 1, above the 95th to
    ``levels``; rounding is half-up. Constant input (p5 == p95) maps
    everything to 1.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise ValueError("quantize_levels requires at least one value")
    p5, p95 = np.quantile(x.ravel(), [0.05, 0.95])
    if p95 <= p5:
        return np.ones(x.shape, dtype=np.int64)
    scaled = 1.0 + (levels - 1) * (x - p5) / (p95 - p5)
    q = np.floor(scaled + 0.5).astype(np.int64)
    return np.clip(q, 1, levels)
