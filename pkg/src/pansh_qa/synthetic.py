"""Procedural scenes standing in for real satellite tiles.

A scene is a band-correlated stack of smooth Gaussian fields plus geometric
shapes (rectangles and disks) with per-band amplitudes. The PAN is a
positive-weighted band average; the MS comes from the scene through the
same MTF-filter-and-decimate recipe used by the resolution downgrade, so
the scene itself is a faithful ground truth at PAN scale.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DataError
from .filtering import convolve, sensor_kernels
from .raster import PanMsPair, Raster, SensorSpec, default_sensor, validate_pair
from .resampling import decimate


def _smooth_field(rng: np.random.Generator, rows: int, cols: int, scale: float) -> np.ndarray:
    field = gaussian_filter(rng.standard_normal((rows, cols)), scale, mode="reflect")
    field -= field.mean()
    peak = np.abs(field).max()
    return field / peak if peak > 0 else field


def synthetic_scene(
    rows: int,
    cols: int,
    bands: int,
    rng: np.random.Generator,
    dynamic_range: float = 2047.0,
    n_shapes: int = 12,
) -> Raster:
    """Band-correlated smooth fields plus shapes, values well inside
    (0, dynamic_range) so every band has positive mean."""
    base = _smooth_field(rng, rows, cols, scale=rows / 16)
    detail = _smooth_field(rng, rows, cols, scale=rows / 64)
    fine = _smooth_field(rng, rows, cols, scale=1.5)

    shapes = np.zeros((rows, cols))
    rr, cc = np.mgrid[0:rows, 0:cols]
    for _ in range(n_shapes):
        kind = rng.integers(0, 2)
        amp = rng.uniform(0.4, 1.0) * (1 if rng.uniform() < 0.7 else -1)
        if kind == 0:
            h = int(rng.integers(rows // 16, rows // 4 + 1))
            w = int(rng.integers(cols // 16, cols // 4 + 1))
            r0 = int(rng.integers(0, rows - h))
            c0 = int(rng.integers(0, cols - w))
            shapes[r0 : r0 + h, c0 : c0 + w] += amp
        else:
            rad = int(rng.integers(rows // 20 + 1, rows // 6 + 1))
            r0 = int(rng.integers(rad, rows - rad))
            c0 = int(rng.integers(rad, cols - rad))
            shapes[(rr - r0) ** 2 + (cc - c0) ** 2 <= rad * rad] += amp
    peak = np.abs(shapes).max()
    if peak > 0:
        shapes /= peak

    mid = 0.45 * dynamic_range
    data = np.empty((bands, rows, cols))
    for b in range(bands):
        w_base = rng.uniform(0.6, 1.0)
        w_detail = rng.uniform(0.3, 0.8)
        w_shape = rng.uniform(0.5, 1.0)
        w_fine = rng.uniform(0.05, 0.15)
        band = (
            mid
            + 0.22 * dynamic_range * w_base * base
            + 0.12 * dynamic_range * w_detail * detail
            + 0.18 * dynamic_range * w_shape * shapes
            + 0.04 * dynamic_range * w_fine * fine
        )
        data[b] = band
    data = np.clip(data, 0.02 * dynamic_range, 0.98 * dynamic_range)
    return Raster(data, dynamic_range)


def synthetic_pair(
    rows: int = 256,
    cols: int = 256,
    bands: int = 8,
    ratio: int = 4,
    rng: np.random.Generator | None = None,
    sensor: SensorSpec | None = None,
    misalign: tuple[int, int] | None = None,
    dynamic_range: float = 2047.0,
    kernel_size: int = 41,
) -> tuple[PanMsPair, Raster]:
    """Scene-derived (pair, ground truth): PAN is a weighted band average of
    the scene, MS is the MTF-downgraded scene (optionally decimated off-phase
    by ``misalign`` to emulate band misregistration)."""
    if rng is None:
        rng = np.random.default_rng(0)
    if rows % ratio or cols % ratio:
        raise DataError(f"scene {rows}x{cols} not divisible by ratio {ratio}")
    if sensor is None:
        sensor = default_sensor(ratio, bands)
    scene = synthetic_scene(rows, cols, bands, rng, dynamic_range)

    weights = rng.uniform(0.5, 1.5, size=bands)
    weights /= weights.sum()
    pan = Raster(np.tensordot(weights, scene.data, axes=(0, 0)), dynamic_range)

    kernels = sensor_kernels(sensor.ms_nyquist_gains, ratio, kernel_size)
    scene_lp = convolve(scene, kernels)
    offset = (0, 0) if misalign is None else misalign
    ms = decimate(scene_lp, ratio, offset)
    return validate_pair(pan, ms, sensor), scene


def noisy_variant(gt: Raster, rng: np.random.Generator, level: float) -> Raster:
    """Ground truth plus white Gaussian noise at ``level`` x dynamic range,
    clipped to the valid range."""
    noise = rng.standard_normal(gt.data.shape) * (level * gt.dynamic_range)
    return gt.with_data(np.clip(gt.data + noise, 0.0, gt.dynamic_range))
