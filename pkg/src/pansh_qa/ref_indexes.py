"""Reference-based quality indexes: SAM, ERGAS, UIQI and the hypercomplex Q2n.

Local statistics use population moments; every UIQI/Q2n factor is a ratio
in which the moment normalization cancels, so the choice is observable
only through the degeneracy guards. Blocks tile the image non-overlapping
from the top-left corner; incomplete boundary blocks are dropped. A block
is excluded (and counted) when any factor denominator falls below
``1e-12 * dynamic_range**2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DataError
from .raster import Raster

DEGENERACY_EPS = 1e-12


# ---------------------------------------------------------------------------
# Hypercomplex arithmetic (Cayley-Dickson construction)
# ---------------------------------------------------------------------------

def cd_conjugate(z: np.ndarray) -> np.ndarray:
    """Negate every imaginary component (all but index 0 of the last axis)."""
    out = np.array(z, dtype=np.float64, copy=True)
    out[..., 1:] *= -1.0
    return out


def cd_multiply(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Cayley-Dickson product along the last axis (dimension a power of two).

    Recursion: (a, b)(c, d) = (ac - d*b, da + bc*), which reproduces the
    complexes, Hamilton quaternions and octonions for dimensions 2, 4, 8.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = x.shape[-1]
    if y.shape[-1] != d:
        raise DataError(f"hypercomplex dimensions differ: {d} vs {y.shape[-1]}")
    if d & (d - 1):
        raise DataError(f"hypercomplex dimension must be a power of two, got {d}")
    if d == 1:
        return x * y
    h = d // 2
    a, b = x[..., :h], x[..., h:]
    c, dd = y[..., :h], y[..., h:]
    left = cd_multiply(a, c) - cd_multiply(cd_conjugate(dd), b)
    right = cd_multiply(dd, a) + cd_multiply(b, cd_conjugate(c))
    return np.concatenate([left, right], axis=-1)


@dataclass(frozen=True)
class Hypercomplex:
    """One 2^n-dimensional number: a real part and 2^n - 1 imaginary parts."""

    components: tuple[float, ...]

    def __post_init__(self) -> None:
        comps = tuple(float(c) for c in self.components)
        d = len(comps)
        if d == 0 or d & (d - 1):
            raise DataError(f"hypercomplex dimension must be a power of two, got {d}")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components)

    def conjugate(self) -> "Hypercomplex":
        return Hypercomplex((self.components[0],) + tuple(-c for c in self.components[1:]))

    def __mul__(self, other: "Hypercomplex") -> "Hypercomplex":
        prod = cd_multiply(np.array(self.components), np.array(other.components))
        return Hypercomplex(tuple(prod))

    def __abs__(self) -> float:
        return float(np.sqrt(sum(c * c for c in self.components)))


@lru_cache(maxsize=8)
def _structure_tensor(dim: int) -> np.ndarray:
    """T[a, b, :] = e_a * conj(e_b); lets block covariances come from plain
    band cross-moments instead of per-pixel recursive products."""
    eye = np.eye(dim)
    t = np.empty((dim, dim, dim))
    for a in range(dim):
        for b in range(dim):
            t[a, b] = cd_multiply(eye[a], cd_conjugate(eye[b]))
    t.flags.writeable = False
    return t


@dataclass(frozen=True)
class BlockStats:
    """Hypercomplex first/second moments of one block pair."""

    mean_ref: np.ndarray
    mean_test: np.ndarray
    std_ref: float
    std_test: float
    covariance: np.ndarray

    def __post_init__(self) -> None:
        if self.std_ref < 0 or self.std_test < 0:
            raise DataError("standard deviations must be non-negative")
        cov_mod = float(np.linalg.norm(self.covariance))
        if cov_mod > self.std_ref * self.std_test + 1e-9:
            raise DataError("covariance modulus exceeds Cauchy-Schwarz bound")


def hypercomplex_block_stats(ref: np.ndarray, test: np.ndarray) -> BlockStats:
    """Moments of two (npixels, dim) hypercomplex sample sets."""
    mu_r = ref.mean(axis=0)
    mu_t = test.mean(axis=0)
    rc = ref - mu_r
    tc = test - mu_t
    cov = cd_multiply(rc, cd_conjugate(tc)).mean(axis=0)
    return BlockStats(
        mean_ref=mu_r,
        mean_test=mu_t,
        std_ref=float(np.sqrt(np.mean(np.sum(rc * rc, axis=-1)))),
        std_test=float(np.sqrt(np.mean(np.sum(tc * tc, axis=-1)))),
        covariance=cov,
    )


# ---------------------------------------------------------------------------
# Pixel-wise indexes
# ---------------------------------------------------------------------------

def _check_same_geometry(a: Raster, b: Raster) -> None:
    if a.shape != b.shape:
        raise DataError(f"geometry mismatch: {a.shape} vs {b.shape}")


def sam_with_count(gt: Raster, fused: Raster, unit: str = "degrees") -> tuple[float, int]:
    """Mean spectral angle plus the number of zero-norm pixels skipped."""
    _check_same_geometry(gt, fused)
    if gt.bands < 2:
        raise DataError(f"SAM needs at least 2 bands, got {gt.bands}")
    if unit not in ("degrees", "radians"):
        raise DataError(f"unknown angle unit {unit!r}")
    v = gt.data
    w = fused.data
    dot = np.sum(v * w, axis=0)
    norms = np.sqrt(np.sum(v * v, axis=0) * np.sum(w * w, axis=0))
    valid = norms > 0.0
    skipped = int(valid.size - valid.sum())
    if not valid.any():
        raise DataError("all pixels have zero spectral norm")
    angles = np.arccos(np.clip(dot[valid] / norms[valid], -1.0, 1.0))
    value = float(angles.mean())
    if unit == "degrees":
        value = float(np.degrees(value))
    return value, skipped


def sam(gt: Raster, fused: Raster, unit: str = "degrees") -> float:
    """Average angle between corresponding pixel spectra (scale invariant)."""
    return sam_with_count(gt, fused, unit)[0]


def ergas(gt: Raster, fused: Raster, ratio: int) -> float:
    """Band-normalized global RMS error, ``(100/ratio) * sqrt(mean_b (RMSE_b / mu_b)^2)``."""
    _check_same_geometry(gt, fused)
    if ratio < 1:
        raise DataError(f"ratio must be >= 1, got {ratio}")
    mu = gt.data.mean(axis=(1, 2))
    if np.any(mu == 0.0):
        raise DataError("ERGAS undefined: some ground-truth band has zero mean")
    mse = np.mean((fused.data - gt.data) ** 2, axis=(1, 2))
    return float(100.0 / ratio * np.sqrt(np.mean(mse / mu**2)))


# ---------------------------------------------------------------------------
# Block-statistics indexes
# ---------------------------------------------------------------------------

def block_band_stats(data: np.ndarray, block: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-block band means and cross-moments of a (bands, rows, cols) stack.

    Returns ``means`` of shape (bands, nbr, nbc) and ``cross`` of shape
    (nbr, nbc, bands, bands) holding E[x_i * x_j] per block; one batched
    matrix product covers every band pair at once. Incomplete boundary
    blocks are dropped.
    """
    bands, rows, cols = data.shape
    nbr = rows // block
    nbc = cols // block
    npix = block * block
    means = np.empty((bands, nbr, nbc))
    cross = np.empty((nbr, nbc, bands, bands))
    rows_per_chunk = max(1, 4_000_000 // max(1, nbc * npix * bands))
    for r0 in range(0, nbr, rows_per_chunk):
        r1 = min(r0 + rows_per_chunk, nbr)
        v = data[:, r0 * block : r1 * block, : nbc * block]
        v = v.reshape(bands, r1 - r0, block, nbc, block)
        z = np.ascontiguousarray(v.transpose(1, 3, 0, 2, 4)).reshape(
            (r1 - r0) * nbc, bands, npix
        )
        cross[r0:r1] = (z @ z.transpose(0, 2, 1)).reshape(r1 - r0, nbc, bands, bands) / npix
        means[:, r0:r1] = (z.sum(axis=2) / npix).reshape(r1 - r0, nbc, bands).transpose(2, 0, 1)
    return means, cross


def uiqi_pair_from_stats(
    means: np.ndarray,
    cross: np.ndarray,
    i: int,
    j: int,
    dynamic_range: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-block UIQI values and keep-mask for band pair (i, j) of a stack."""
    mi = means[i]
    mj = means[j]
    var_i = np.maximum(cross[..., i, i] - mi * mi, 0.0)
    var_j = np.maximum(cross[..., j, j] - mj * mj, 0.0)
    cov = cross[..., i, j] - mi * mj
    si = np.sqrt(var_i)
    sj = np.sqrt(var_j)
    threshold = DEGENERACY_EPS * dynamic_range**2
    d1 = si * sj
    d2 = var_i + var_j
    d3 = mi * mi + mj * mj
    keep = (d1 >= threshold) & (d2 >= threshold) & (d3 >= threshold)
    vals = np.zeros_like(d1)
    k = keep
    vals[k] = (cov[k] / d1[k]) * (2.0 * d1[k] / d2[k]) * (2.0 * mi[k] * mj[k] / d3[k])
    # |UIQI| <= 1 mathematically; clip rounding overshoot.
    np.clip(vals, -1.0, 1.0, out=vals)
    return vals, keep


def _uiqi_blocks(
    x: np.ndarray, y: np.ndarray, block: int, dynamic_range: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-block UIQI values and keep-mask for two 2-D arrays."""
    means, cross = block_band_stats(np.stack([x, y]), block)
    return uiqi_pair_from_stats(means, cross, 0, 1, dynamic_range)


def uiqi_with_count(x: Raster, y: Raster, block: int = 32) -> tuple[float, int]:
    """Universal image quality index over non-overlapping blocks, plus the
    number of excluded (degenerate) blocks."""
    _check_same_geometry(x, y)
    if x.bands != 1:
        raise DataError(f"UIQI operates on single-band rasters, got {x.bands} bands")
    if block < 2 or block > min(x.rows, x.cols):
        raise DataError(f"block size {block} invalid for raster {x.rows}x{x.cols}")
    vals, keep = _uiqi_blocks(x.data[0], y.data[0], block, x.dynamic_range)
    excluded = int(keep.size - keep.sum())
    if not keep.any():
        raise DataError("all UIQI windows excluded as degenerate")
    return float(vals[keep].mean()), excluded


def uiqi(x: Raster, y: Raster, block: int = 32) -> float:
    """Product of correlation, contrast and luminance factors, block-averaged."""
    return uiqi_with_count(x, y, block)[0]


def _next_power_of_two(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def _as_blocks(data: np.ndarray, block: int, dim: int) -> np.ndarray:
    """(bands, rows, cols) -> (nblocks, block*block, dim) with zero band padding."""
    bands, rows, cols = data.shape
    nbr = rows // block
    nbc = cols // block
    v = data[:, : nbr * block, : nbc * block].reshape(bands, nbr, block, nbc, block)
    z = v.transpose(1, 3, 2, 4, 0).reshape(nbr * nbc, block * block, bands)
    if dim != bands:
        z = np.concatenate([z, np.zeros((z.shape[0], z.shape[1], dim - bands))], axis=-1)
    return z


def q2n_with_count(gt: Raster, fused: Raster, block: int = 32) -> tuple[float, int]:
    """Hypercomplex extension of UIQI, plus the excluded-block count."""
    _check_same_geometry(gt, fused)
    if block < 2 or block > min(gt.rows, gt.cols):
        raise DataError(f"block size {block} invalid for raster {gt.rows}x{gt.cols}")
    dim = _next_power_of_two(gt.bands)
    tensor = _structure_tensor(dim)
    npix = block * block
    threshold = DEGENERACY_EPS * gt.dynamic_range**2

    # Chunk over block rows to bound memory on large rasters.
    nbr = gt.rows // block
    nbc = gt.cols // block
    total = 0.0
    kept = 0
    excluded = 0
    rows_per_chunk = max(1, 2_000_000 // max(1, nbc * npix * dim))
    for r0 in range(0, nbr, rows_per_chunk):
        r1 = min(r0 + rows_per_chunk, nbr)
        sl = slice(r0 * block, r1 * block)
        z = _as_blocks(gt.data[:, sl, :], block, dim)
        zh = _as_blocks(fused.data[:, sl, :], block, dim)
        mu_z = z.mean(axis=1)
        mu_zh = zh.mean(axis=1)
        zc = z - mu_z[:, None, :]
        zhc = zh - mu_zh[:, None, :]
        var_z = np.einsum("bpi,bpi->b", zc, zc) / npix
        var_zh = np.einsum("bpi,bpi->b", zhc, zhc) / npix
        cross = zc.transpose(0, 2, 1) @ zhc / npix
        sigma_zzh = np.einsum("abk,nab->nk", tensor, cross)

        s_z = np.sqrt(var_z)
        s_zh = np.sqrt(var_zh)
        mod_cov = np.sqrt(np.sum(sigma_zzh * sigma_zzh, axis=-1))
        mod_mu_z = np.sqrt(np.sum(mu_z * mu_z, axis=-1))
        mod_mu_zh = np.sqrt(np.sum(mu_zh * mu_zh, axis=-1))

        d1 = s_z * s_zh
        d2 = var_z + var_zh
        d3 = mod_mu_z**2 + mod_mu_zh**2
        keep = (d1 >= threshold) & (d2 >= threshold) & (d3 >= threshold)
        excluded += int(keep.size - keep.sum())
        kept += int(keep.sum())
        if keep.any():
            scores = (
                (mod_cov[keep] / d1[keep])
                * (2.0 * d1[keep] / d2[keep])
                * (2.0 * mod_mu_z[keep] * mod_mu_zh[keep] / d3[keep])
            )
            # Every factor is <= 1 mathematically; clip rounding overshoot.
            total += float(np.minimum(scores, 1.0).sum())
    if kept == 0:
        raise DataError("all Q2n blocks excluded as degenerate")
    return total / kept, excluded


def q2n(gt: Raster, fused: Raster, block: int = 32) -> float:
    """Multiband UIQI via 2^n-dimensional hypercomplex pixel embedding; in
    [0, 1] with 1 reached iff the images agree everywhere."""
    return q2n_with_count(gt, fused, block)[0]
