"""MTF-matched Gaussian low-pass kernels, mirror-padded convolution and
polynomial upscaling.

Conventions fixed here and relied on everywhere else:

* Kernels are applied as sliding dot products (correlation, no flip).
  Every shipped kernel is 180-degree symmetric, so the distinction never
  matters for results.
* Boundary policy is mirror padding with edge duplication, i.e.
  ``numpy.pad(mode="symmetric")`` / ``scipy.ndimage`` mode ``"reflect"``.
* Upscaling is dyadic: per factor-2 stage, source samples land on even
  output indices unchanged and odd indices are interpolated with the
  half-band filter shipped in ``config/filters.json``.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DataError
from .raster import Raster

DEFAULT_KERNEL_SIZE = 41


@lru_cache(maxsize=1)
def _filter_config() -> dict:
    with resources.files("pansh_qa.config").joinpath("filters.json").open() as fh:
        return json.load(fh)


@lru_cache(maxsize=1)
def halfband_taps() -> np.ndarray:
    """Full symmetric 23-tap half-band filter, odd phase normalized to unit sum."""
    half = np.asarray(_filter_config()["halfband23"]["center_and_right"], dtype=np.float64)
    taps = np.concatenate([half[:0:-1], half])
    odd = np.abs(np.arange(taps.size) - (taps.size // 2)) % 2 == 1
    taps = taps.copy()
    taps[odd] /= taps[odd].sum()
    taps.flags.writeable = False
    return taps


@dataclass(frozen=True)
class Kernel:
    """2-D low-pass filter realizing a target Nyquist gain.

    ``taps`` is N x N with N odd, 180-degree symmetric and DC-normalized.
    ``taps_1d`` carries the separable factor when the kernel is an outer
    product, enabling the fast two-pass convolution path.
    """

    taps: np.ndarray
    nyquist_gain_target: float
    ratio: int
    taps_1d: np.ndarray | None = None

    def __post_init__(self) -> None:
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1]:
            raise DataError(f"kernel taps must be square, got shape {taps.shape}")
        if taps.shape[0] % 2 == 0:
            raise DataError(f"kernel size must be odd, got {taps.shape[0]}")
        if not np.allclose(taps, taps[::-1, ::-1], rtol=0.0, atol=1e-12):
            raise DataError("kernel taps must be symmetric under 180-degree rotation")
        if abs(taps.sum() - 1.0) > 1e-12:
            raise DataError(f"kernel DC gain must be 1 within 1e-12, got {taps.sum()!r}")
        taps = np.ascontiguousarray(taps)
        taps.flags.writeable = False
        object.__setattr__(self, "taps", taps)
        if self.taps_1d is not None:
            t1 = np.ascontiguousarray(np.asarray(self.taps_1d, dtype=np.float64))
            t1.flags.writeable = False
            object.__setattr__(self, "taps_1d", t1)

    @property
    def size(self) -> int:
        return self.taps.shape[0]


def gaussian_sigma_for_gain(gain: float, ratio: int) -> float:
    """Spatial std-dev whose Gaussian frequency response hits ``gain`` at
    the decimated grid's Nyquist frequency ``1 / (2 * ratio)``."""
    if not 0.0 < gain < 1.0:
        raise DataError(f"Nyquist gain must lie strictly inside (0, 1), got {gain}")
    f_nyquist = 1.0 / (2.0 * ratio)
    return float(np.sqrt(-np.log(gain) / (2.0 * np.pi**2 * f_nyquist**2)))


def mtf_kernel(gain: float, ratio: int, size: int = DEFAULT_KERNEL_SIZE) -> Kernel:
    """Sampled, truncated, DC-normalized Gaussian matching ``gain`` at Nyquist.

    ``size`` should be at least ``4 * ratio + 1`` so truncation stays
    negligible; the 41-tap default covers ratio 4 generously.
    """
    if int(ratio) != ratio or ratio < 2:
        raise DataError(f"ratio must be an integer >= 2, got {ratio}")
    if int(size) != size or size < 1 or size % 2 == 0:
        raise DataError(f"kernel size must be a positive odd integer, got {size}")
    sigma = gaussian_sigma_for_gain(gain, int(ratio))
    t = np.arange(int(size), dtype=np.float64) - int(size) // 2
    g = np.exp(-0.5 * (t / sigma) ** 2)
    g /= g.sum()
    return Kernel(taps=np.outer(g, g), nyquist_gain_target=float(gain), ratio=int(ratio), taps_1d=g)


def sensor_kernels(gains, ratio: int, size: int = DEFAULT_KERNEL_SIZE) -> list[Kernel]:
    """One MTF kernel per band gain."""
    return [mtf_kernel(g, ratio, size) for g in gains]


def _convolve_band(band: np.ndarray, kernel: Kernel, out: np.ndarray) -> np.ndarray:
    if kernel.taps_1d is not None:
        tmp = correlate1d(band, kernel.taps_1d, axis=0, mode="reflect")
        return correlate1d(tmp, kernel.taps_1d, axis=1, mode="reflect", output=out)
    from scipy.ndimage import correlate as nd_correlate

    return nd_correlate(band, kernel.taps, mode="reflect", output=out)


def convolve(
    r: Raster,
    kernels: Kernel | list[Kernel],
    boundary: str = "mirror",
    workers: int = 1,
) -> Raster:
    """Filter each band with its kernel; same-size output, mirror boundary.

    A single kernel is broadcast to every band. Bands are independent, so
    ``workers > 1`` fans them out over a thread pool; results are collected
    in band order and are identical for any worker count.
    """
    if boundary != "mirror":
        raise DataError(f"unsupported boundary policy {boundary!r}; only 'mirror'")
    if isinstance(kernels, Kernel):
        kernels = [kernels] * r.bands
    if len(kernels) != r.bands:
        raise DataError(f"got {len(kernels)} kernels for {r.bands} bands")
    for k in kernels:
        if k.size > min(r.rows, r.cols):
            raise DataError(
                f"kernel size {k.size} exceeds image extent {r.rows}x{r.cols}"
            )
    result = np.empty_like(r.data)
    tasks = [(r.data[b], kernels[b], result[b]) for b in range(r.bands)]
    if workers > 1 and r.bands > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda args: _convolve_band(*args), tasks))
    else:
        for args in tasks:
            _convolve_band(*args)
    return r.with_data(result)


@lru_cache(maxsize=1)
def _odd_phase_weights() -> np.ndarray:
    """Correlation weights for the interpolated (odd) output phase.

    Odd-position taps h[t], t = 2u+1, contribute h[2u+1] * x[i-u] to output
    2i+1; expressed as a 12-tap correlate1d with origin -1.
    """
    taps = halfband_taps()
    center = taps.size // 2
    g = {(t - center - 1) // 2: taps[t] for t in range(taps.size) if (t - center) % 2 != 0}
    w = np.array([g[5 - j] for j in range(12)])
    w.flags.writeable = False
    return w


def _upscale_axis_2x(a: np.ndarray) -> np.ndarray:
    """One dyadic stage along the last axis: even outputs copy the source,
    odd outputs apply the half-band odd-phase taps (mirror boundary)."""
    n = a.shape[-1]
    odd = correlate1d(a, _odd_phase_weights(), axis=-1, mode="reflect", origin=-1)
    out = np.empty(a.shape[:-1] + (2 * n,), dtype=np.float64)
    out[..., 0::2] = a
    out[..., 1::2] = odd
    return out


def _upscale_band_dyadic(band: np.ndarray, stages: int) -> np.ndarray:
    out = band
    for _ in range(stages):
        out = _upscale_axis_2x(out)
        out = _upscale_axis_2x(out.swapaxes(-1, -2)).swapaxes(-1, -2)
    return out


def _cubic_weight(d: np.ndarray) -> np.ndarray:
    # Catmull-Rom kernel (a = -0.5).
    d = np.abs(d)
    w = np.zeros_like(d)
    m1 = d <= 1
    m2 = (d > 1) & (d < 2)
    w[m1] = 1.5 * d[m1] ** 3 - 2.5 * d[m1] ** 2 + 1.0
    w[m2] = -0.5 * d[m2] ** 3 + 2.5 * d[m2] ** 2 - 4.0 * d[m2] + 2.0
    return w


def _upscale_axis_bicubic(a: np.ndarray, ratio: int) -> np.ndarray:
    n = a.shape[-1]
    ap = np.pad(a, [(0, 0)] * (a.ndim - 1) + [(2, 2)], mode="symmetric")
    out = np.empty(a.shape[:-1] + (ratio * n,), dtype=np.float64)
    for phase in range(ratio):
        frac = phase / ratio
        d = np.array([frac + 1.0, frac, 1.0 - frac, 2.0 - frac])
        w = _cubic_weight(d)
        w /= w.sum()
        acc = sum(w[k] * ap[..., 1 + k : 1 + k + n] for k in range(4))
        out[..., phase::ratio] = acc
    return out


def interpolate_upscale(
    r: Raster,
    ratio: int,
    method: str = "halfband23",
    workers: int = 1,
) -> Raster:
    """Upscale by an integer factor, source samples preserved at phase 0.

    ``halfband23`` (the default) requires a power-of-2 ratio and runs
    log2(ratio) dyadic stages of the shipped 23-tap half-band interpolator.
    ``bicubic`` accepts any integer ratio >= 2 and must be requested
    explicitly.
    """
    if int(ratio) != ratio or ratio < 2:
        raise DataError(f"upscale ratio must be an integer >= 2, got {ratio}")
    ratio = int(ratio)
    if method == "halfband23":
        stages = ratio.bit_length() - 1
        if 2**stages != ratio:
            raise DataError(
                f"halfband23 upscaling needs a power-of-2 ratio, got {ratio}; "
                "request method='bicubic' for other ratios"
            )

        def run(band: np.ndarray) -> np.ndarray:
            return _upscale_band_dyadic(band, stages)

    elif method == "bicubic":

        def run(band: np.ndarray) -> np.ndarray:
            rows = _upscale_axis_bicubic(band.swapaxes(-1, -2), ratio).swapaxes(-1, -2)
            return _upscale_axis_bicubic(rows, ratio)

    else:
        raise DataError(f"unknown interpolation method {method!r}")
    bands = [r.data[b] for b in range(r.bands)]
    if workers > 1 and r.bands > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(run, bands))
    else:
        out = [run(b) for b in bands]
    return r.with_data(np.stack(out))
