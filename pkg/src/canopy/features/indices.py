"""Pixel-wise vegetation and spectral indices.

Each index is an algebraic combination of bands, computed per pixel and
treated downstream as an extra spectral band. Ratio indices return 0 where
the denominator is 0 (flagged by the caller via the zero-denominator count).
"""

from __future__ import annotations

import numpy as np


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    zero = den == 0.0
    out = np.divide(num, np.where(zero, 1.0, den))
    return np.where(zero, 0.0, out)


# name -> fn(red, green, blue); applied to RGB imagery
_RGB_DEFS = {
    "ExR": lambda r, g, b: 2 * r - g - b,
    "ExG": lambda r, g, b: 2 * g - r - b,
    "ExB": lambda r, g, b: 2 * b - r - g,
    "ExGveg": lambda r, g, b: 2 * g - r - b + 50,
    "ExRveg": lambda r, g, b: _safe_div(1.4 * r - g, r + g + b),
    "ExBveg": lambda r, g, b: _safe_div(1.4 * b - g, r + g + b),
    "GLIr": lambda r, g, b: _safe_div(2 * r - g - b, 2 * r + g + b),
    "GLIg": lambda r, g, b: _safe_div(2 * g - r - b, 2 * g + r + b),
    "GLIb": lambda r, g, b: _safe_div(2 * b - r - g, 2 * b + r + g),
    "GRVI": lambda r, g, b: _safe_div(g - r, g + r),
    "mGRVI": lambda r, g, b: _safe_div(g ** 2 - r ** 2, g ** 2 + r ** 2),
    "IKAW": lambda r, g, b: _safe_div(r - b, r + b),
    "NegExR": lambda r, g, b: g - 1.4 * r,
    "RGBVI": lambda r, g, b: _safe_div(g ** 2 - r * b, g ** 2 + r * b),
    "TGI": lambda r, g, b: g - 0.39 * r - 0.61 * b,
    "VARI": lambda r, g, b: _safe_div(g - r, g + r - b),
}

# name -> fn(green, red, rededge, nir); applied to multispectral imagery
_MS_DEFS = {
    "CIG": lambda g, r, re, nir: _safe_div(nir, g) - 1,
    "CVI": lambda g, r, re, nir: _safe_div(nir * r ** 2, g),
    "GRVI": lambda g, r, re, nir: _safe_div(g - r, g + r),
    "mGRVI": lambda g, r, re, nir: _safe_div(g ** 2 - r ** 2, g ** 2 + r ** 2),
    "NegExR": lambda g, r, re, nir: g - 1.4 * r,
    "NDVI": lambda g, r, re, nir: _safe_div(nir - r, nir + r),
    "NDVIg": lambda g, r, re, nir: _safe_div(nir - g, nir + g),
    "NDVIre": lambda g, r, re, nir: _safe_div(nir - re, nir + re),
}

RGB_INDEX_NAMES: tuple[str, ...] = tuple(_RGB_DEFS)
MS_INDEX_NAMES: tuple[str, ...] = tuple(_MS_DEFS)


def vegetation_indices(bands: dict[str, np.ndarray], kind: str) -> dict[str, np.ndarray]:
    """Derived index bands for one imagery kind.

    ``kind='RGB'`` expects bands red/green/blue and yields the 16
    RGB-applicable indices; ``kind='MS'`` expects ms_green/ms_red/
    ms_rededge/ms_nir and yields the 8 MS-applicable ones (GRVI, mGRVI and
    NegExR are defined for both kinds and computed on each sensor's bands).
    """
    if kind == "RGB":
        try:
            r, g, b = (np.asarray(bands[k], np.float64) for k in ("red", "green", "blue"))
        except KeyError as exc:
            raise KeyError(f"missing band role {exc} for RGB indices") from None
        return {name: fn(r, g, b) for name, fn in _RGB_DEFS.items()}
    if kind == "MS":
        try:
            g, r, re, nir = (
                np.asarray(bands[k], np.float64)
                for k in ("ms_green", "ms_red", "ms_rededge", "ms_nir")
            )
        except KeyError as exc:
            raise KeyError(f"missing band role {exc} for MS indices") from None
        return {name: fn(g, r, re, nir) for name, fn in _MS_DEFS.items()}
    raise ValueError(f"unknown imagery kind {kind!r}")
