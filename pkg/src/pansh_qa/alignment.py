"""Band-wise integer shift estimation between low-pass PAN and upscaled MS.

For each band the search scores every candidate offset ``(m, n)`` in
``{0, ..., ratio-1}^2`` by the global correlation between the low-pass PAN
sampled ahead by ``(m, n)`` (mirror fill at the far edges) and the
interpolated band. The winning offset is the decimation phase that aligns
the band with the PAN grid, so it feeds straight into shift-aligned
decimation. Ties break to the lexicographically smallest offset.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .filtering import DEFAULT_KERNEL_SIZE, convolve, mtf_kernel, interpolate_upscale
from .raster import Raster, SensorSpec, ShiftMap, validate_pair


def global_corrcoef(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation over all pixels of two equal-size bands."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError(f"shape mismatch {x.shape} vs {y.shape}")
    if x.size < 2:
        raise DataError("need at least 2 pixels for a correlation")
    xm = x.mean()
    ym = y.mean()
    xc = x - xm
    yc = y - ym
    vx = float(np.mean(xc * xc))
    vy = float(np.mean(yc * yc))
    if vx <= 0.0 or vy <= 0.0:
        raise DataError("degenerate input: zero variance")
    r = float(np.mean(xc * yc)) / np.sqrt(vx * vy)
    return float(min(1.0, max(-1.0, r)))


def _shifted_copy(band: np.ndarray, dr: int, dc: int) -> np.ndarray:
    """``out(i, j) = band(i + dr, j + dc)`` for dr, dc >= 0, mirror fill at
    the far edges; equivalent to indexing with mirror index maps but built
    from two block concatenations."""
    rows, cols = band.shape
    out = band
    if dr:
        out = np.concatenate([out[dr:], out[rows - dr :][::-1]], axis=0)
    if dc:
        out = np.concatenate([out[:, dc:], out[:, cols - dc :][:, ::-1]], axis=1)
    return out


def estimate_band_shifts(
    pan: Raster,
    ms: Raster,
    sensor: SensorSpec,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    mode: str = "mirror",
    *,
    _pan_lp: np.ndarray | None = None,
    _upscaled: np.ndarray | None = None,
) -> ShiftMap:
    """Exhaustive ratio^2 correlation search per MS band.

    ``mode="mirror"`` (default) correlates over the full grid with mirror
    fill; ``mode="valid"`` restricts to the overlap region instead.
    Constant bands cannot be correlated and fall back to offset (0, 0),
    recorded in ``degenerate_bands``. ``_pan_lp``/``_upscaled`` let callers
    that already hold the low-pass PAN and interpolated MS skip recomputing
    them; results are identical.
    """
    if mode not in ("mirror", "valid"):
        raise DataError(f"unknown alignment mode {mode!r}")
    validate_pair(pan, ms, sensor)
    ratio = sensor.ratio
    if _pan_lp is not None:
        pan_lp = _pan_lp
    else:
        pan_lp = convolve(pan, mtf_kernel(sensor.pan_nyquist_gain, ratio, kernel_size)).data[0]
    upscaled = _upscaled if _upscaled is not None else interpolate_upscale(ms, ratio).data
    npix = pan_lp.size

    best = [(0, 0)] * ms.bands
    best_corr = [-np.inf] * ms.bands
    band_mean = upscaled.mean(axis=(1, 2))
    band_var = np.mean((upscaled - band_mean[:, None, None]) ** 2, axis=(1, 2))
    degenerate = [bool(v <= 0.0) for v in band_var]

    upscaled_mat = upscaled.reshape(ms.bands, -1)
    for m in range(ratio):
        for n in range(ratio):
            if mode == "mirror":
                shifted = _shifted_copy(pan_lp, m, n)
                flat = np.ascontiguousarray(shifted).ravel()
                s_mean = float(flat.sum()) / npix
                s_var = float(np.dot(flat, flat)) / npix - s_mean * s_mean
                if s_var <= 0.0:
                    continue
                crosses = upscaled_mat @ flat / npix
                for b in range(ms.bands):
                    if degenerate[b]:
                        continue
                    cov = float(crosses[b]) - s_mean * band_mean[b]
                    corr = cov / np.sqrt(s_var * band_var[b])
                    if corr > best_corr[b]:
                        best_corr[b] = corr
                        best[b] = (m, n)
            else:
                rows, cols = pan_lp.shape
                p_win = pan_lp[m:, n:]
                for b in range(ms.bands):
                    if degenerate[b]:
                        continue
                    m_win = upscaled[b, : rows - m if m else rows, : cols - n if n else cols]
                    try:
                        corr = global_corrcoef(p_win, m_win)
                    except DataError:
                        continue
                    if corr > best_corr[b]:
                        best_corr[b] = corr
                        best[b] = (m, n)

    peaks = tuple(
        0.0 if degenerate[b] else float(min(1.0, max(-1.0, best_corr[b])))
        for b in range(ms.bands)
    )
    return ShiftMap(
        offsets=tuple(best),
        peak_correlations=peaks,
        degenerate_bands=tuple(b for b in range(ms.bands) if degenerate[b]),
    )
