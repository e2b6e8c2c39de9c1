"""Decimation, integer shifting and the reduced-resolution downgrade pipeline.

Offsets are 0-based sampling phases: decimating with offset ``(dr, dc)``
keeps input samples ``(i * ratio + dr, j * ratio + dc)``. A positive shift
in :func:`shift_raster` samples ahead, i.e. ``out(i, j) = in(i + dr, j + dc)``
with mirror fill, so shifting by ``s`` and decimating at phase 0 equals
decimating at phase ``s``.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .filtering import DEFAULT_KERNEL_SIZE, convolve, mtf_kernel, sensor_kernels
from .raster import PanMsPair, Raster, ShiftMap


def _per_band_offsets(offsets, bands: int) -> list[tuple[int, int]]:
    if offsets is None:
        return [(0, 0)] * bands
    if isinstance(offsets, ShiftMap):
        pairs = list(offsets.offsets)
    elif len(offsets) == 2 and all(np.isscalar(v) for v in offsets):
        pairs = [(int(offsets[0]), int(offsets[1]))] * bands
    else:
        pairs = [(int(dr), int(dc)) for dr, dc in offsets]
    if len(pairs) != bands:
        raise DataError(f"got {len(pairs)} offsets for {bands} bands")
    return pairs


def decimate(r: Raster, ratio: int, offsets=None) -> Raster:
    """Subsample by ``ratio`` with per-band phase offsets in ``{0, ..., ratio-1}``."""
    if int(ratio) != ratio or ratio < 2:
        raise DataError(f"decimation ratio must be an integer >= 2, got {ratio}")
    ratio = int(ratio)
    if r.rows % ratio or r.cols % ratio:
        raise DataError(
            f"raster {r.rows}x{r.cols} not divisible by decimation ratio {ratio}"
        )
    pairs = _per_band_offsets(offsets, r.bands)
    out = np.empty((r.bands, r.rows // ratio, r.cols // ratio), dtype=np.float64)
    for b, (dr, dc) in enumerate(pairs):
        if not (0 <= dr < ratio and 0 <= dc < ratio):
            raise DataError(
                f"offset ({dr}, {dc}) out of range for ratio {ratio} (band {b})"
            )
        out[b] = r.data[b, dr::ratio, dc::ratio]
    return r.with_data(out)


def _mirror_indices(n: int, delta: int) -> np.ndarray:
    idx = np.arange(n) + delta
    m = np.mod(idx, 2 * n)
    return np.where(m < n, m, 2 * n - 1 - m)


def shift_raster(r: Raster, shifts) -> Raster:
    """Integer translation with mirror boundary fill.

    ``shifts`` is one ``(dr, dc)`` pair or one per band; magnitudes must be
    smaller than the raster extent.
    """
    pairs = _shift_pairs(shifts, r.bands)
    out = np.empty_like(r.data)
    for b, (dr, dc) in enumerate(pairs):
        if abs(dr) >= r.rows or abs(dc) >= r.cols:
            raise DataError(
                f"shift ({dr}, {dc}) too large for raster {r.rows}x{r.cols}"
            )
        out[b] = r.data[b][np.ix_(_mirror_indices(r.rows, dr), _mirror_indices(r.cols, dc))]
    return r.with_data(out)


def _shift_pairs(shifts, bands: int) -> list[tuple[int, int]]:
    if isinstance(shifts, ShiftMap):
        pairs = list(shifts.offsets)
    elif len(shifts) == 2 and all(np.isscalar(v) for v in shifts):
        pairs = [(int(shifts[0]), int(shifts[1]))] * bands
    else:
        pairs = [(int(dr), int(dc)) for dr, dc in shifts]
    if len(pairs) != bands:
        raise DataError(f"got {len(pairs)} shifts for {bands} bands")
    return pairs


def wald_downgrade(
    pair: PanMsPair,
    misalign: tuple[int, int] | None = None,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    workers: int = 1,
) -> tuple[PanMsPair, Raster]:
    """Resolution-downgrade a pair by its sensor ratio; the original MS
    becomes the ground truth for the reduced-scale fusion problem.

    Both components are MTF-filtered with their Nyquist gains and decimated
    at phase (0, 0). ``misalign`` adds the same extra offset to every MS
    band's decimation grid, reproducing a controlled registration error on
    the MS side only.
    """
    ratio = pair.sensor.ratio
    if pair.ms.rows % ratio or pair.ms.cols % ratio:
        raise DataError(
            f"MS {pair.ms.rows}x{pair.ms.cols} not divisible by ratio {ratio}"
        )
    offset = (0, 0) if misalign is None else (int(misalign[0]), int(misalign[1]))
    ms_kernels = sensor_kernels(pair.sensor.ms_nyquist_gains, ratio, kernel_size)
    ms_lp = convolve(pair.ms, ms_kernels, workers=workers)
    ms_red = decimate(ms_lp, ratio, offset)
    pan_kernel = mtf_kernel(pair.sensor.pan_nyquist_gain, ratio, kernel_size)
    pan_red = decimate(convolve(pair.pan, pan_kernel), ratio, (0, 0))
    reduced = PanMsPair(pan=pan_red, ms=ms_red, sensor=pair.sensor)
    return reduced, pair.ms
