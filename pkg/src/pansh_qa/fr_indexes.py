"""No-reference full-resolution indexes: the reprojection family, the
legacy spectral/spatial distortions and the fine-scale local-correlation
spatial index.

Reprojection sends a fused product back to MS geometry by per-band
MTF-matched low-pass filtering followed by shift-aligned decimation, where
the per-band phases come from the PAN/MS correlation search. Comparing the
reprojection against the input MS with any reference metric then yields a
spectral consistency score that no longer depends on how the PAN would be
downscaled and tolerates band misregistration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import estimate_band_shifts
from .errors import DataError
from .filtering import DEFAULT_KERNEL_SIZE, convolve, interpolate_upscale, mtf_kernel, sensor_kernels
from .raster import PanMsPair, Raster, ShiftMap
from .ref_indexes import (
    DEGENERACY_EPS,
    block_band_stats,
    ergas,
    q2n,
    q2n_with_count,
    sam,
    uiqi_pair_from_stats,
)
from .resampling import decimate

R_METRICS = ("SAM", "ERGAS", "Q2n")


# ---------------------------------------------------------------------------
# Reprojection protocol
# ---------------------------------------------------------------------------

def _check_fused_geometry(fused: Raster, pair: PanMsPair) -> None:
    if fused.rows != pair.pan.rows or fused.cols != pair.pan.cols:
        raise DataError(
            f"fused geometry {fused.rows}x{fused.cols} must match PAN "
            f"{pair.pan.rows}x{pair.pan.cols}"
        )
    if fused.bands != pair.ms.bands:
        raise DataError(
            f"fused has {fused.bands} bands but MS has {pair.ms.bands}"
        )


def _reproject_filtered(fused_lp: Raster, pair: PanMsPair, shifts: ShiftMap) -> Raster:
    return decimate(fused_lp, pair.sensor.ratio, shifts)


def reproject(
    fused: Raster,
    pair: PanMsPair,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    workers: int = 1,
) -> Raster:
    """Project a fused product into MS geometry: MTF filter per band, then
    decimate at the per-band alignment phases estimated from the pair."""
    _check_fused_geometry(fused, pair)
    shifts = estimate_band_shifts(pair.pan, pair.ms, pair.sensor, kernel_size)
    kernels = sensor_kernels(pair.sensor.ms_nyquist_gains, pair.sensor.ratio, kernel_size)
    fused_lp = convolve(fused, kernels, workers=workers)
    return _reproject_filtered(fused_lp, pair, shifts)


def r_index(
    fused: Raster,
    pair: PanMsPair,
    metric: str = "Q2n",
    block: int = 32,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    sam_unit: str = "degrees",
    workers: int = 1,
) -> float:
    """Reference metric between the reprojected fused product and the input MS.

    ``metric`` is one of SAM, ERGAS, Q2n. For Q2n the complementary
    alignment-aware spectral distortion is ``1 - r_index(...)``.
    """
    name = "Q2n" if metric.upper() == "Q2N" else metric.upper()
    if name not in R_METRICS:
        raise DataError(f"unknown reprojection metric {metric!r}; choose from {R_METRICS}")
    reproj = reproject(fused, pair, kernel_size, workers=workers)
    if name == "SAM":
        return sam(pair.ms, reproj, sam_unit)
    if name == "ERGAS":
        return ergas(pair.ms, reproj, pair.sensor.ratio)
    return q2n(pair.ms, reproj, block)


def d_lambda_khan_aligned(
    fused: Raster,
    pair: PanMsPair,
    block: int = 32,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    workers: int = 1,
) -> float:
    """Spectral distortion with band-wise aligned decimation: one minus the
    reprojection Q2n."""
    return 1.0 - r_index(fused, pair, "Q2n", block, kernel_size, workers=workers)


def reprojection_error_map(
    fused: Raster,
    pair: PanMsPair,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    workers: int = 1,
) -> Raster:
    """Per-band difference between the input MS and the reprojected product,
    at MS geometry; useful for visual inspection of spectral residuals."""
    reproj = reproject(fused, pair, kernel_size, workers=workers)
    return pair.ms.with_data(pair.ms.data - reproj.data)


# ---------------------------------------------------------------------------
# Legacy spectral distortions
# ---------------------------------------------------------------------------

def _stats_uiqi(stats, i: int, j: int, dynamic_range: float) -> float:
    vals, keep = uiqi_pair_from_stats(stats[0], stats[1], i, j, dynamic_range)
    if not keep.any():
        raise DataError("all UIQI windows excluded as degenerate")
    return float(vals[keep].mean())


def _pairwise_uiqi_gap_mean(
    ref_stats,
    test_stats,
    bands: int,
    p: int,
    dynamic_range: float,
) -> float:
    """Mean of |Q(ref_i, ref_j) - Q(test_i, test_j)|^p over ordered pairs i != j.

    Ordered pairs double the unordered set symmetrically, so iterating i < j
    yields the same mean.
    """
    gaps = []
    for i in range(bands):
        for j in range(i + 1, bands):
            q_ref = _stats_uiqi(ref_stats, i, j, dynamic_range)
            q_test = _stats_uiqi(test_stats, i, j, dynamic_range)
            gaps.append(abs(q_ref - q_test) ** p)
    return float(np.mean(gaps))


def d_lambda(ms: Raster, fused: Raster, p: int = 1, block: int = 32) -> float:
    """Inter-band UIQI divergence between the (interpolated) MS and the fused
    product, both evaluated at the fused scale.

    When ``ms`` is at MS geometry it is upscaled to the fused grid first, so
    a plain interpolation product scores exactly zero.
    """
    if ms.bands != fused.bands:
        raise DataError(f"band count mismatch: {ms.bands} vs {fused.bands}")
    if ms.bands < 2:
        raise DataError("spectral distortion needs at least 2 bands")
    if p < 1:
        raise DataError(f"exponent p must be >= 1, got {p}")
    if ms.shape == fused.shape:
        expanded = ms
    else:
        if fused.rows % ms.rows or fused.cols % ms.cols:
            raise DataError(
                f"fused geometry {fused.rows}x{fused.cols} is not an integer "
                f"multiple of MS geometry {ms.rows}x{ms.cols}"
            )
        ratio = fused.rows // ms.rows
        if ratio != fused.cols // ms.cols:
            raise DataError("row and column upscale ratios differ")
        expanded = interpolate_upscale(ms, ratio)
    ref_stats = block_band_stats(expanded.data, block)
    test_stats = block_band_stats(fused.data, block)
    gap = _pairwise_uiqi_gap_mean(ref_stats, test_stats, ms.bands, p, ms.dynamic_range)
    return float(gap ** (1.0 / p))


def d_lambda_khan(
    fused: Raster,
    pair: PanMsPair,
    block: int = 32,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    workers: int = 1,
) -> float:
    """One minus Q2n between the MTF-degraded, phase-0 decimated fused
    product and the input MS."""
    _check_fused_geometry(fused, pair)
    kernels = sensor_kernels(pair.sensor.ms_nyquist_gains, pair.sensor.ratio, kernel_size)
    fused_lp = convolve(fused, kernels, workers=workers)
    degraded = decimate(fused_lp, pair.sensor.ratio, (0, 0))
    return 1.0 - q2n(pair.ms, degraded, block)


def d_lambda_khan_tilde(
    fused: Raster,
    pair: PanMsPair,
    block: int = 32,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    workers: int = 1,
) -> float:
    """Decimation-free variant: one minus Q2n between the MTF-filtered fused
    product and the interpolated MS, both at full resolution."""
    _check_fused_geometry(fused, pair)
    kernels = sensor_kernels(pair.sensor.ms_nyquist_gains, pair.sensor.ratio, kernel_size)
    fused_lp = convolve(fused, kernels, workers=workers)
    expanded = interpolate_upscale(pair.ms, pair.sensor.ratio, workers=workers)
    return 1.0 - q2n(expanded, fused_lp, block)


# ---------------------------------------------------------------------------
# Spatial distortions
# ---------------------------------------------------------------------------

def pan_downgraded(pair: PanMsPair, kernel_size: int = DEFAULT_KERNEL_SIZE) -> Raster:
    """PAN resized to MS scale with its MTF-matched kernel (phase 0)."""
    kernel = mtf_kernel(pair.sensor.pan_nyquist_gain, pair.sensor.ratio, kernel_size)
    return decimate(convolve(pair.pan, kernel), pair.sensor.ratio, (0, 0))


def d_s(
    fused: Raster,
    pair: PanMsPair,
    q: int = 1,
    block: int = 32,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
) -> float:
    """Cross-scale spatial distortion: per-band gap between Q(fused_b, PAN)
    at full scale and Q(ms_b, PAN downgraded) at MS scale."""
    _check_fused_geometry(fused, pair)
    if q < 1:
        raise DataError(f"exponent q must be >= 1, got {q}")
    pan_low = pan_downgraded(pair, kernel_size)
    ms_block = min(block, pair.ms.rows, pair.ms.cols)
    bands = fused.bands
    hi_stats = block_band_stats(np.concatenate([fused.data, pair.pan.data]), block)
    lo_stats = block_band_stats(np.concatenate([pair.ms.data, pan_low.data]), ms_block)
    gaps = []
    for b in range(bands):
        q_hi = _stats_uiqi(hi_stats, b, bands, fused.dynamic_range)
        q_lo = _stats_uiqi(lo_stats, b, bands, pair.ms.dynamic_range)
        gaps.append(abs(q_hi - q_lo) ** q)
    return float(np.mean(gaps) ** (1.0 / q))


@dataclass(frozen=True)
class CorrelationField:
    """Dense sliding-window Pearson correlations, valid-window layout.

    ``values`` has shape (bands, rows - sigma + 1, cols - sigma + 1), zeros
    where ``kept`` is false; excluded windows are counted, never averaged.
    """

    values: np.ndarray
    sigma: int
    excluded_count: int
    kept: np.ndarray

    def __post_init__(self) -> None:
        if np.any(np.abs(self.values) > 1.0 + 1e-9):
            raise DataError("correlation values outside [-1, 1]")

    def mean(self) -> float:
        if not self.kept.any():
            raise DataError("all correlation windows excluded as degenerate")
        return float(self.values[self.kept].mean())


def local_correlation_field(
    fused: Raster,
    pan: Raster,
    sigma: int = 4,
) -> CorrelationField:
    """Correlation between each fused band and the PAN over every sigma x sigma
    window (incremental run-sum tables, O(rows * cols) per band).

    Windows whose variance falls below ``1e-12 * dynamic_range**2`` on either
    side are excluded and counted.
    """
    from ._kernels import correlation_field_band

    if pan.bands != 1:
        raise DataError(f"PAN must be single-band, got {pan.bands}")
    if fused.rows != pan.rows or fused.cols != pan.cols:
        raise DataError(
            f"fused {fused.rows}x{fused.cols} and PAN {pan.rows}x{pan.cols} differ"
        )
    if sigma < 2:
        raise DataError(f"window size sigma must be >= 2, got {sigma}")
    if sigma > min(fused.rows, fused.cols):
        raise DataError(f"sigma {sigma} exceeds image extent {fused.rows}x{fused.cols}")
    threshold = DEGENERACY_EPS * max(fused.dynamic_range, pan.dynamic_range) ** 2

    pan_band = pan.data[0]
    mean_p = float(pan_band.mean())
    out_shape = (fused.bands, fused.rows - sigma + 1, fused.cols - sigma + 1)
    values = np.empty(out_shape)
    kept = np.empty(out_shape, dtype=bool)
    for b in range(fused.bands):
        band = fused.data[b]
        correlation_field_band(
            band, pan_band, float(band.mean()), mean_p, sigma, threshold, values[b], kept[b]
        )
    excluded = int(kept.size - kept.sum())
    return CorrelationField(values=values, sigma=sigma, excluded_count=excluded, kept=kept)


def d_rho(fused: Raster, pan: Raster, sigma: int = 4) -> float:
    """One minus the mean fine-scale local correlation between the fused
    bands and the PAN; zero means perfect local correlation.

    ``sigma`` defaults to 4, the sensor ratio of the datasets this package
    targets, which restricts the check to detail invisible at MS scale.
    """
    return 1.0 - local_correlation_field(fused, pan, sigma).mean()
