"""Texture families computed on a region's bounding-box crop.

All four families take a 2-D crop plus a boolean membership mask: GLCM and
autocorrelation count only pixel pairs whose two endpoints are both region
members, LBP histograms only member center pixels (neighbours may sample any
crop pixel), and Laws convolves the whole crop but collects statistics at
member pixels only. Crops too small for a family resolve to all-zero
features with the degeneracy flag raised.

Directions are indexed 0/45/90/135 degrees as (row, col) steps
(0, +d), (-d, +d), (-d, 0), (-d, -d); every per-direction score is reported
as its mean and range over the four directions.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

GLCM_STATS: tuple[str, ...] = (
    "asm", "con", "cor", "var", "idm", "sumav", "sumvar", "sument",
    "ent", "difvar", "difent", "infcor1", "infcor2",
)

LAWS_KERNEL_NAMES: tuple[str, ...] = (
    "L5E5", "L5S5", "L5R5", "L5W5", "E5E5", "E5S5", "E5R5", "E5W5",
    "S5S5", "S5R5", "S5W5", "R5R5", "R5W5", "W5W5",
)

_LAWS_VECTORS = {
    "L5": np.array([1.0, 4.0, 6.0, 4.0, 1.0]),
    "E5": np.array([-1.0, -2.0, 0.0, 2.0, 1.0]),
    "S5": np.array([-1.0, 0.0, 2.0, 0.0, -1.0]),
    "R5": np.array([1.0, -4.0, 6.0, -4.0, 1.0]),
    "W5": np.array([-1.0, 2.0, 0.0, -2.0, 1.0]),
}


def _directions(d: int) -> tuple[tuple[int, int], ...]:
    return ((0, d), (-d, d), (-d, 0), (-d, -d))


def _mean_range(per_direction: np.ndarray) -> tuple[float, float]:
    return float(np.mean(per_direction)), float(np.max(per_direction) - np.min(per_direction))


def _shifted_pairs(crop, mask, dr, dc):
    """Values at both endpoints of every in-mask pixel pair offset by (dr, dc)."""
    h, w = crop.shape
    r0a, r1a = max(0, -dr), min(h, h - dr)
    c0a, c1a = max(0, -dc), min(w, w - dc)
    if r0a >= r1a or c0a >= c1a:
        return None
    a = crop[r0a:r1a, c0a:c1a]
    b = crop[r0a + dr:r1a + dr, c0a + dc:c1a + dc]
    both = mask[r0a:r1a, c0a:c1a] & mask[r0a + dr:r1a + dr, c0a + dc:c1a + dc]
    return a[both], b[both]


# ---------------------------------------------------------------------------
# GLCM / Haralick
# ---------------------------------------------------------------------------

def glcm_features(quantized: np.ndarray, mask: np.ndarray, offset: int,
                  levels: int = 32) -> tuple[dict[str, float], bool]:
    """13 Haralick statistics, mean and range over 4 directions.

    ``quantized`` holds integer levels in [1, levels]. The co-occurrence
    matrix per direction is symmetric and normalized; entropies use the
    natural log. A direction with no valid pair contributes zeros and
    raises the degeneracy flag, as do degenerate correlations.
    """
    quantized = np.asarray(quantized)
    mask = np.asarray(mask, dtype=bool)
    degenerate = False
    scores = np.zeros((4, len(GLCM_STATS)))
    for di, (dr, dc) in enumerate(_directions(offset)):
        pairs = _shifted_pairs(quantized, mask, dr, dc)
        if pairs is None or len(pairs[0]) == 0:
            degenerate = True
            continue
        a, b = pairs
        counts = np.bincount((a - 1) * levels + (b - 1), minlength=levels * levels)
        mat = counts.reshape(levels, levels).astype(np.float64)
        p = mat + mat.T
        p /= p.sum()
        stats, flagged = _haralick_stats(p, levels)
        scores[di] = stats
        degenerate = degenerate or flagged
    out: dict[str, float] = {}
    for si, name in enumerate(GLCM_STATS):
        mean, rng = _mean_range(scores[:, si])
        out[f"{name}_mean"] = mean
        out[f"{name}_rng"] = rng
    return out, degenerate


def _haralick_stats(p: np.ndarray, levels: int) -> tuple[np.ndarray, bool]:
    flagged = False
    lv = np.arange(1, levels + 1, dtype=np.float64)
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mu_x = float(lv @ px)
    mu_y = float(lv @ py)
    var_x = float(((lv - mu_x) ** 2) @ px)
    var_y = float(((lv - mu_y) ** 2) @ py)

    i_idx, j_idx = np.meshgrid(lv, lv, indexing="ij")
    diff = i_idx - j_idx

    asm = float(np.sum(p * p))
    con = float(np.sum(diff ** 2 * p))
    if var_x > 0 and var_y > 0:
        cor = (float(np.sum(i_idx * j_idx * p)) - mu_x * mu_y) / np.sqrt(var_x * var_y)
    else:
        cor = 0.0
        flagged = True
    idm = float(np.sum(p / (1.0 + diff ** 2)))

    # marginals of i+j (2..2L) and |i-j| (0..L-1)
    flat = p.ravel()
    p_sum = np.bincount((i_idx + j_idx).astype(np.int64).ravel(), flat,
                        minlength=2 * levels + 1)
    p_dif = np.bincount(np.abs(diff).astype(np.int64).ravel(), flat,
                        minlength=levels)
    k_sum = np.arange(2 * levels + 1, dtype=np.float64)
    k_dif = np.arange(levels, dtype=np.float64)

    sumav = float(k_sum @ p_sum)
    sumvar = float(((k_sum - sumav) ** 2) @ p_sum)
    sument = _entropy(p_sum)
    ent = _entropy(flat)
    mu_dif = float(k_dif @ p_dif)
    difvar = float(((k_dif - mu_dif) ** 2) @ p_dif)
    difent = _entropy(p_dif)

    hx = _entropy(px)
    hy = _entropy(py)
    pxpy = np.outer(px, py)
    nz = p > 0
    hxy1 = -float(np.sum(p[nz] * np.log(pxpy[nz])))
    nzm = pxpy > 0
    hxy2 = -float(np.sum(pxpy[nzm] * np.log(pxpy[nzm])))
    denom = max(hx, hy)
    if denom > 0:
        infcor1 = (ent - hxy1) / denom
    else:
        infcor1 = 0.0
        flagged = True
    infcor2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - ent)))))

    return np.array([asm, con, cor, var_x, idm, sumav, sumvar, sument,
                     ent, difvar, difent, infcor1, infcor2]), flagged


def _entropy(dist: np.ndarray) -> float:
    nz = dist > 0
    return -float(np.sum(dist[nz] * np.log(dist[nz])))


# ---------------------------------------------------------------------------
# Rotation-invariant uniform LBP
# ---------------------------------------------------------------------------

def _circle_offsets(radius: int, neighbours: int) -> np.ndarray:
    """(P, 2) row/col offsets, exactly closed under 90-degree rotation.

    The first quadrant is computed from cos/sin; the rest are derived by
    exact coordinate swaps so that rotating the image by 90 degrees maps
    sampling positions onto each other bitwise.
    """
    quarter = neighbours // 4
    base = []
    for k in range(quarter):
        theta = 2.0 * np.pi * k / neighbours
        base.append((radius * np.sin(theta), radius * np.cos(theta)))  # (drow, dcol)
    offsets = list(base)
    offsets += [(dc, -dr) for dr, dc in base]    # +90 degrees
    offsets += [(-dr, -dc) for dr, dc in base]   # +180
    offsets += [(-dc, dr) for dr, dc in base]    # +270
    return np.array(offsets, dtype=np.float64)


def lbp_histogram(image: np.ndarray, mask: np.ndarray,
                  radius: int) -> tuple[dict[str, float], bool]:
    """Normalized histogram of rotation-invariant uniform patterns.

    P = 8 * radius circular neighbours are sampled by bilinear
    interpolation and thresholded at >= center. Uniform patterns (at most
    two 0/1 transitions around the circle) bin by popcount, everything
    else lands in one non-uniform bin: P + 2 bins that sum to 1.
    """
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    neighbours = 8 * radius
    names = [f"u{k}" for k in range(neighbours + 1)] + ["nonuniform"]
    h, w = image.shape
    if h < 2 * radius + 1 or w < 2 * radius + 1:
        return {n: 0.0 for n in names}, True

    inner = image[radius:h - radius, radius:w - radius]
    inner_mask = mask[radius:h - radius, radius:w - radius]
    if not inner_mask.any():
        return {n: 0.0 for n in names}, True

    offsets = _circle_offsets(radius, neighbours)
    # +1 corner reads may fall one pixel past the border for exactly-integral
    # offsets; those corners carry weight exactly 0, so edge padding is inert.
    padded = np.pad(image, ((0, 1), (0, 1)), mode="edge")
    bits = np.empty((neighbours,) + inner.shape, dtype=bool)
    for k, (dr, dc) in enumerate(offsets):
        fr, fc = int(np.floor(dr)), int(np.floor(dc))
        tr, tc = dr - fr, dc - fc
        r0, c0 = radius + fr, radius + fc
        hh, ww = inner.shape
        a = padded[r0:r0 + hh, c0:c0 + ww]
        b = padded[r0:r0 + hh, c0 + 1:c0 + 1 + ww]
        c = padded[r0 + 1:r0 + 1 + hh, c0:c0 + ww]
        d = padded[r0 + 1:r0 + 1 + hh, c0 + 1:c0 + 1 + ww]
        sample = ((1 - tr) * (1 - tc) * a + (1 - tr) * tc * b) \
            + (tr * (1 - tc) * c + tr * tc * d)
        bits[k] = sample >= inner
    transitions = np.zeros(inner.shape, dtype=np.int64)
    for k in range(neighbours):
        transitions += bits[k] != bits[(k + 1) % neighbours]
    popcount = bits.sum(axis=0)
    code = np.where(transitions <= 2, popcount, neighbours + 1)

    hist = np.bincount(code[inner_mask].ravel(), minlength=neighbours + 2).astype(np.float64)
    hist /= hist.sum()
    return dict(zip(names, hist)), False


# ---------------------------------------------------------------------------
# Laws texture energy
# ---------------------------------------------------------------------------

def laws_kernels() -> dict[str, np.ndarray]:
    """The 14 averaged 5x5 kernels; symmetric pairs share one feature."""
    out = {}
    for name in LAWS_KERNEL_NAMES:
        a = _LAWS_VECTORS[name[:2]]
        b = _LAWS_VECTORS[name[2:]]
        out[name] = (np.outer(a, b) + np.outer(b, a)) / 2.0
    return out


def _clamped_box_mean(image: np.ndarray, half: int) -> np.ndarray:
    """Mean over a (2*half+1)^2 window clipped at the image border."""
    h, w = image.shape
    integral = np.zeros((h + 1, w + 1))
    integral[1:, 1:] = np.cumsum(np.cumsum(image, axis=0), axis=1)
    r = np.arange(h)
    c = np.arange(w)
    r0 = np.clip(r - half, 0, h)
    r1 = np.clip(r + half + 1, 0, h)
    c0 = np.clip(c - half, 0, w)
    c1 = np.clip(c + half + 1, 0, w)
    total = (integral[np.ix_(r1, c1)] - integral[np.ix_(r0, c1)]
             - integral[np.ix_(r1, c0)] + integral[np.ix_(r0, c0)])
    area = (r1 - r0)[:, None] * (c1 - c0)[None, :]
    return total / area


def laws_features(image: np.ndarray, mask: np.ndarray) -> tuple[dict[str, float], bool]:
    """Mean and std of the 14 kernel responses after 15x15 mean removal.

    The local mean window is clamped at crop borders; the 5x5 correlation
    pads by edge replication. Crops smaller than 15x15 are degenerate.
    """
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    names = [f"{k}_{s}" for k in LAWS_KERNEL_NAMES for s in ("mean", "std")]
    if image.shape[0] < 15 or image.shape[1] < 15 or not mask.any():
        return {n: 0.0 for n in names}, True
    # anchor at an exact grid value: mean removal is shift-invariant, and this
    # keeps a constant image's residual identically zero despite cumsum rounding
    shifted = image - image[0, 0]
    residual = shifted - _clamped_box_mean(shifted, half=7)
    out: dict[str, float] = {}
    n_member = int(mask.sum())
    for name, kernel in laws_kernels().items():
        response = ndimage.correlate(residual, kernel, mode="nearest")
        vals = response[mask]
        out[f"{name}_mean"] = float(vals.mean())
        out[f"{name}_std"] = float(vals.std(ddof=1)) if n_member > 1 else 0.0
    return out, n_member <= 1


# ---------------------------------------------------------------------------
# Directional autocorrelation
# ---------------------------------------------------------------------------

def autocorrelation_features(image: np.ndarray, mask: np.ndarray,
                             offset: int) -> tuple[dict[str, float], bool]:
    """Mean and range over 4 directions of the lag-``offset`` Pearson
    correlation between the crop and its shifted self, over in-mask pairs.

    Zero-variance overlaps (or fewer than two pairs) score 0 and raise the
    degeneracy flag.
    """
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    degenerate = False
    rs = np.zeros(4)
    for di, (dr, dc) in enumerate(_directions(offset)):
        pairs = _shifted_pairs(image, mask, dr, dc)
        if pairs is None or len(pairs[0]) < 2:
            degenerate = True
            continue
        a, b = pairs
        sa = a.std()
        sb = b.std()
        if sa == 0.0 or sb == 0.0:
            degenerate = True
            continue
        rs[di] = float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))
    mean, rng = _mean_range(rs)
    return {"mean": mean, "rng": rng}, degenerate
