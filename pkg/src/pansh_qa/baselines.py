"""Minimal pansharpening generators used to exercise the index suite
end-to-end: plain interpolation, an intensity-ratio method and a simple
detail-injection method. They exist to produce plausible fused products,
not to compete with real fusion algorithms."""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .filtering import DEFAULT_KERNEL_SIZE, convolve, interpolate_upscale, mtf_kernel, sensor_kernels
from .raster import PanMsPair, Raster
from .resampling import decimate


def exp_baseline(pair: PanMsPair, workers: int = 1) -> Raster:
    """Interpolate the MS to PAN scale; ignores the PAN entirely."""
    return interpolate_upscale(pair.ms, pair.sensor.ratio, workers=workers)


def brovey(pair: PanMsPair, workers: int = 1) -> Raster:
    """Intensity-ratio fusion: each interpolated band is rescaled by
    PAN / intensity, with zero-intensity pixels passed through unchanged."""
    expanded = interpolate_upscale(pair.ms, pair.sensor.ratio, workers=workers)
    intensity = expanded.data.mean(axis=0)
    pan = pair.pan.data[0]
    gain = np.divide(
        pan, intensity, out=np.ones_like(intensity), where=intensity != 0.0
    )
    return expanded.with_data(expanded.data * gain)


def mtf_glp(pair: PanMsPair, kernel_size: int = DEFAULT_KERNEL_SIZE, workers: int = 1) -> Raster:
    """Detail injection: add the PAN high-pass residual (PAN minus its
    MTF-filtered, decimated and re-interpolated version) to each interpolated
    band, scaled by a global regression gain."""
    ratio = pair.sensor.ratio
    expanded = interpolate_upscale(pair.ms, ratio, workers=workers)
    pan_kernel = mtf_kernel(pair.sensor.pan_nyquist_gain, ratio, kernel_size)
    pan_low = interpolate_upscale(
        decimate(convolve(pair.pan, pan_kernel), ratio, (0, 0)), ratio
    )
    low = pan_low.data[0]
    detail = pair.pan.data[0] - low
    low_c = low - low.mean()
    var_low = float(np.mean(low_c * low_c))
    if var_low <= 0.0:
        raise DataError("degenerate PAN: zero variance after filtering")
    out = np.empty_like(expanded.data)
    for b in range(expanded.bands):
        band = expanded.data[b]
        gain = float(np.mean((band - band.mean()) * low_c)) / var_low
        out[b] = band + gain * detail
    return expanded.with_data(out)


BASELINES = {
    "exp": exp_baseline,
    "brovey": brovey,
    "mtf-glp": mtf_glp,
}


def run_baseline(name: str, pair: PanMsPair, workers: int = 1) -> Raster:
    key = name.lower()
    if key not in BASELINES:
        raise DataError(f"unknown baseline {name!r}; choose from {sorted(BASELINES)}")
    return BASELINES[key](pair, workers=workers)
