"""Score-report assembly: one pass over a fused product computing every
index, reusing the expensive shared intermediates (interpolated MS,
low-pass PAN, per-band alignment, MTF-filtered fused product)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import estimate_band_shifts
from .errors import DataError
from .filtering import (
    DEFAULT_KERNEL_SIZE,
    convolve,
    interpolate_upscale,
    mtf_kernel,
    sensor_kernels,
)
from .fr_indexes import _pairwise_uiqi_gap_mean, _stats_uiqi, local_correlation_field
from .raster import PanMsPair, Raster, ScoreReport
from .ref_indexes import block_band_stats, ergas, q2n_with_count, sam_with_count
from .resampling import decimate

FR_INDEX_NAMES = (
    "R-SAM",
    "R-ERGAS",
    "R-Q2n",
    "D_lambda_K_align",
    "D_lambda",
    "D_lambda_K",
    "D_lambda_K_tilde",
    "D_S",
    "D_rho",
)

RR_INDEX_NAMES = ("SAM", "ERGAS", "Q2n")


@dataclass(frozen=True)
class EvalConfig:
    """Knobs of the evaluation pipeline; defaults match the documented
    conventions (sigma = sensor ratio, 32x32 statistics blocks, 41-tap
    MTF kernels, single worker)."""

    sigma: int | None = None
    p: int = 1
    q: int = 1
    block: int = 32
    kernel_size: int = DEFAULT_KERNEL_SIZE
    workers: int = 1
    sam_unit: str = "degrees"
    alignment_mode: str = "mirror"

    def clamped_block(self, *dims: int) -> int:
        return min(self.block, *dims)


def evaluate_fr(pair: PanMsPair, fused: Raster, config: EvalConfig = EvalConfig()) -> ScoreReport:
    """All full-resolution indexes of one fused product, with diagnostics."""
    if fused.rows != pair.pan.rows or fused.cols != pair.pan.cols or fused.bands != pair.ms.bands:
        raise DataError(
            f"fused product {fused.shape} does not match pair "
            f"(pan {pair.pan.shape}, ms {pair.ms.shape})"
        )
    ratio = pair.sensor.ratio
    sigma = config.sigma if config.sigma is not None else ratio
    ms_block = config.clamped_block(pair.ms.rows, pair.ms.cols)
    full_block = config.clamped_block(fused.rows, fused.cols)

    # Shared intermediates: every index below reuses these.
    expanded = interpolate_upscale(pair.ms, ratio, workers=config.workers)
    pan_kernel = mtf_kernel(pair.sensor.pan_nyquist_gain, ratio, config.kernel_size)
    pan_lp = convolve(pair.pan, pan_kernel)
    shifts = estimate_band_shifts(
        pair.pan,
        pair.ms,
        pair.sensor,
        config.kernel_size,
        config.alignment_mode,
        _pan_lp=pan_lp.data[0],
        _upscaled=expanded.data,
    )
    kernels = sensor_kernels(pair.sensor.ms_nyquist_gains, ratio, config.kernel_size)
    fused_lp = convolve(fused, kernels, workers=config.workers)
    reprojected = decimate(fused_lp, ratio, shifts)
    degraded_plain = decimate(fused_lp, ratio, (0, 0))
    pan_low = decimate(pan_lp, ratio, (0, 0))

    r_sam, sam_skipped = sam_with_count(pair.ms, reprojected, config.sam_unit)
    r_ergas = ergas(pair.ms, reprojected, ratio)
    r_q2n, r_q2n_excluded = q2n_with_count(pair.ms, reprojected, ms_block)
    khan, khan_excluded = q2n_with_count(pair.ms, degraded_plain, ms_block)
    khan_tilde, tilde_excluded = q2n_with_count(expanded, fused_lp, full_block)

    # One batched-gram pass covers the inter-band and band-vs-PAN statistics.
    bands = fused.bands
    hi_stats = block_band_stats(np.concatenate([fused.data, pair.pan.data]), full_block)
    exp_stats = block_band_stats(expanded.data, full_block)
    lo_stats = block_band_stats(np.concatenate([pair.ms.data, pan_low.data]), ms_block)

    dl_gap = _pairwise_uiqi_gap_mean(
        exp_stats, hi_stats, bands, config.p, pair.ms.dynamic_range
    )
    d_lambda_val = float(dl_gap ** (1.0 / config.p))

    gaps = []
    for b in range(bands):
        q_hi = _stats_uiqi(hi_stats, b, bands, fused.dynamic_range)
        q_lo = _stats_uiqi(lo_stats, b, bands, pair.ms.dynamic_range)
        gaps.append(abs(q_hi - q_lo) ** config.q)
    d_s_val = float(np.mean(gaps) ** (1.0 / config.q))

    field = local_correlation_field(fused, pair.pan, sigma)
    d_rho_val = 1.0 - field.mean()

    scores = {
        "R-SAM": r_sam,
        "R-ERGAS": r_ergas,
        "R-Q2n": r_q2n,
        "D_lambda_K_align": 1.0 - r_q2n,
        "D_lambda": d_lambda_val,
        "D_lambda_K": 1.0 - khan,
        "D_lambda_K_tilde": 1.0 - khan_tilde,
        "D_S": d_s_val,
        "D_rho": d_rho_val,
    }
    diagnostics = {
        "shifts": [list(o) for o in shifts.offsets],
        "shift_peak_correlation": list(shifts.peak_correlations or ()),
        "shift_degenerate_bands": list(shifts.degenerate_bands),
        "excluded_windows": {
            "D_rho": field.excluded_count,
            "R-Q2n": r_q2n_excluded,
            "D_lambda_K": khan_excluded,
            "D_lambda_K_tilde": tilde_excluded,
        },
        "sam_skipped_pixels": sam_skipped,
        "sigma": sigma,
        "block": full_block,
        "ms_block": ms_block,
    }
    return ScoreReport(scores=scores, diagnostics=diagnostics)


def evaluate_rr(
    gt: Raster,
    fused: Raster,
    ratio: int = 4,
    block: int = 32,
    sam_unit: str = "degrees",
) -> ScoreReport:
    """Reference indexes of a fused product against a ground truth."""
    block = min(block, gt.rows, gt.cols)
    sam_val, skipped = sam_with_count(gt, fused, sam_unit)
    q2n_val, excluded = q2n_with_count(gt, fused, block)
    scores = {
        "SAM": sam_val,
        "ERGAS": ergas(gt, fused, ratio),
        "Q2n": q2n_val,
    }
    diagnostics = {
        "sam_skipped_pixels": skipped,
        "excluded_windows": {"Q2n": excluded},
        "block": block,
    }
    return ScoreReport(scores=scores, diagnostics=diagnostics)
