"""Multiband raster container, sensor metadata and the BSQ+JSON file format.

A raster on disk is a raw band-sequential (BSQ) binary payload next to a
JSON sidecar named ``<payload>.json``. The sidecar declares geometry and
storage dtype; see ``docs/raster_format.md`` for the byte-exact contract.
All in-memory computation uses 64-bit floats regardless of storage dtype.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

# 11-bit products are the norm for the sensor class this package targets.
DEFAULT_DYNAMIC_RANGE = 2047.0

# Conventional Nyquist gains used when a dataset does not declare its own.
DEFAULT_MS_NYQUIST_GAIN = 0.35
DEFAULT_PAN_NYQUIST_GAIN = 0.15

_DTYPES = {
    "u8": np.dtype("<u1"),
    "u16": np.dtype("<u2"),
    "f32": np.dtype("<f4"),
    "f64": np.dtype("<f8"),
}


@dataclass(frozen=True)
class Raster:
    """Immutable B-band image grid of 64-bit floats.

    ``data`` has shape ``(bands, rows, cols)`` (band-sequential) and is
    marked read-only, so rasters can be shared freely across threads.
    """

    data: np.ndarray
    dynamic_range: float = DEFAULT_DYNAMIC_RANGE

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[np.newaxis, :, :]
        if arr.ndim != 3:
            raise DataError(f"raster data must be 2-D or 3-D, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise DataError(f"raster dimensions must be positive, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise DataError("raster contains non-finite values")
        if not (self.dynamic_range > 0 and math.isfinite(self.dynamic_range)):
            raise DataError(f"dynamic_range must be positive, got {self.dynamic_range}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def rows(self) -> int:
        return self.data.shape[1]

    @property
    def cols(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def band(self, index: int) -> "Raster":
        """Single-band raster sharing this raster's storage."""
        if not 0 <= index < self.bands:
            raise DataError(f"band index {index} out of range for {self.bands} bands")
        return Raster(self.data[index], self.dynamic_range)

    def with_data(self, data: np.ndarray) -> "Raster":
        """New raster with the same dynamic range and fresh pixel data."""
        return Raster(data, self.dynamic_range)


@dataclass(frozen=True)
class SensorSpec:
    """Resolution ratio and MTF Nyquist gains of a PAN-MS sensor pair."""

    ratio: int
    ms_nyquist_gains: tuple[float, ...]
    pan_nyquist_gain: float = DEFAULT_PAN_NYQUIST_GAIN
    name: str = "custom"

    def __post_init__(self) -> None:
        if int(self.ratio) != self.ratio or self.ratio < 2:
            raise DataError(f"resolution ratio must be an integer >= 2, got {self.ratio}")
        object.__setattr__(self, "ratio", int(self.ratio))
        gains = tuple(float(g) for g in self.ms_nyquist_gains)
        if not gains:
            raise DataError("ms_nyquist_gains must not be empty")
        for g in gains + (float(self.pan_nyquist_gain),):
            if not 0.0 < g < 1.0:
                raise DataError(f"Nyquist gains must lie strictly inside (0, 1), got {g}")
        object.__setattr__(self, "ms_nyquist_gains", gains)
        object.__setattr__(self, "pan_nyquist_gain", float(self.pan_nyquist_gain))


# Per-band gains for the two 8-band sensors this package is tuned for.
# The WV3 list is the conventional set used by public benchmarking code;
# the PAN gain is this package's convention, not vendor data.
_SENSOR_PRESETS = {
    "wv2": ((DEFAULT_MS_NYQUIST_GAIN,) * 8, DEFAULT_PAN_NYQUIST_GAIN),
    "wv3": ((0.325, 0.355, 0.360, 0.350, 0.365, 0.360, 0.335, 0.315), DEFAULT_PAN_NYQUIST_GAIN),
}


def sensor_preset(name: str, ratio: int = 4) -> SensorSpec:
    """Built-in 8-band sensor description (``wv2`` or ``wv3``)."""
    key = name.lower()
    if key not in _SENSOR_PRESETS:
        raise DataError(f"unknown sensor preset {name!r}; choose from {sorted(_SENSOR_PRESETS)}")
    gains, pan_gain = _SENSOR_PRESETS[key]
    return SensorSpec(ratio=ratio, ms_nyquist_gains=gains, pan_nyquist_gain=pan_gain, name=key)


def default_sensor(ratio: int, bands: int) -> SensorSpec:
    """Fallback sensor with the conventional 0.35/0.15 Nyquist gains."""
    return SensorSpec(
        ratio=ratio,
        ms_nyquist_gains=(DEFAULT_MS_NYQUIST_GAIN,) * bands,
        pan_nyquist_gain=DEFAULT_PAN_NYQUIST_GAIN,
        name="default",
    )


@dataclass(frozen=True)
class PanMsPair:
    """Validated PAN-MS input pair: PAN is exactly ``ratio`` x the MS grid."""

    pan: Raster
    ms: Raster
    sensor: SensorSpec

    def __post_init__(self) -> None:
        r = self.sensor.ratio
        if self.pan.bands != 1:
            raise DataError(f"PAN must have exactly 1 band, got {self.pan.bands}")
        if self.pan.rows != r * self.ms.rows or self.pan.cols != r * self.ms.cols:
            raise DataError(
                "PAN geometry must be ratio x MS geometry: "
                f"pan {self.pan.rows}x{self.pan.cols}, ms {self.ms.rows}x{self.ms.cols}, ratio {r}"
            )
        if len(self.sensor.ms_nyquist_gains) != self.ms.bands:
            raise DataError(
                f"sensor declares {len(self.sensor.ms_nyquist_gains)} band gains "
                f"but MS has {self.ms.bands} bands"
            )


def validate_pair(pan: Raster, ms: Raster, sensor: SensorSpec) -> PanMsPair:
    """Build a :class:`PanMsPair`, raising :class:`DataError` on any geometry violation."""
    return PanMsPair(pan=pan, ms=ms, sensor=sensor)


@dataclass(frozen=True)
class ShiftMap:
    """Per-band integer decimation offsets, components in ``{0, ..., ratio-1}``.

    ``peak_correlations`` records the winning correlation per band so that
    rare alignment failures stay observable; ``degenerate_bands`` lists bands
    that fell back to (0, 0) because their content was constant.
    """

    offsets: tuple[tuple[int, int], ...]
    peak_correlations: tuple[float, ...] | None = None
    degenerate_bands: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        offsets = tuple((int(dr), int(dc)) for dr, dc in self.offsets)
        if not offsets:
            raise DataError("ShiftMap needs at least one band offset")
        for dr, dc in offsets:
            if dr < 0 or dc < 0:
                raise DataError(f"decimation offsets must be non-negative, got ({dr}, {dc})")
        object.__setattr__(self, "offsets", offsets)

    def __len__(self) -> int:
        return len(self.offsets)


@dataclass
class ScoreReport:
    """Named index values plus run diagnostics, JSON-serializable."""

    scores: dict[str, float] = field(default_factory=dict)
    diagnostics: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, value in self.scores.items():
            if not math.isfinite(value):
                raise DataError(f"index {name!r} is not finite: {value}")

    def to_json(self, **extra: object) -> str:
        payload: dict[str, object] = dict(extra)
        payload["scores"] = {k: float(v) for k, v in sorted(self.scores.items())}
        payload["diagnostics"] = self.diagnostics
        return json.dumps(payload, sort_keys=True, indent=2)


def _sidecar_paths(path: str | Path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix == ".json":
        return p.with_suffix(""), p
    return p, p.with_name(p.name + ".json")


def _sensor_from_header(header: dict) -> SensorSpec | None:
    blk = header.get("sensor")
    if blk is None:
        return None
    try:
        return SensorSpec(
            ratio=blk["ratio"],
            ms_nyquist_gains=tuple(blk["ms_nyquist_gains"]),
            pan_nyquist_gain=blk.get("pan_nyquist_gain", DEFAULT_PAN_NYQUIST_GAIN),
            name=blk.get("name", "custom"),
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed sensor block in sidecar: {exc}") from exc


def read_header(path: str | Path) -> dict:
    """Parse and validate the JSON sidecar for a raster payload path."""
    _, sidecar = _sidecar_paths(path)
    if not sidecar.is_file():
        raise DataError(f"missing sidecar header {sidecar}")
    try:
        header = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"unparseable sidecar {sidecar}: {exc}") from exc
    for key in ("rows", "cols", "bands", "dtype"):
        if key not in header:
            raise DataError(f"sidecar {sidecar} missing required field {key!r}")
    for key in ("rows", "cols", "bands"):
        v = header[key]
        if not isinstance(v, int) or v < 1:
            raise DataError(f"sidecar field {key!r} must be a positive integer, got {v!r}")
    if header["dtype"] not in _DTYPES:
        raise DataError(f"unsupported dtype {header['dtype']!r}; expected one of {sorted(_DTYPES)}")
    if header.get("interleave", "bsq") != "bsq":
        raise DataError(f"unsupported interleave {header.get('interleave')!r}; only 'bsq'")
    if header.get("byte_order", "little") != "little":
        raise DataError(f"unsupported byte_order {header.get('byte_order')!r}; only 'little'")
    return header


def read_sensor(path: str | Path) -> SensorSpec | None:
    """Sensor block embedded in a raster sidecar, if any."""
    return _sensor_from_header(read_header(path))


def load_raster(path: str | Path) -> Raster:
    """Read a BSQ payload + JSON sidecar into a float64 :class:`Raster`."""
    payload, sidecar = _sidecar_paths(path)
    header = read_header(path)
    if not payload.is_file():
        raise DataError(f"missing raster payload {payload}")
    dtype = _DTYPES[header["dtype"]]
    rows, cols, bands = header["rows"], header["cols"], header["bands"]
    expected = rows * cols * bands * dtype.itemsize
    actual = payload.stat().st_size
    if actual != expected:
        raise DataError(
            f"payload size mismatch for {payload}: header implies {expected} bytes, found {actual}"
        )
    raw = np.fromfile(payload, dtype=dtype).reshape(bands, rows, cols)
    data = raw.astype(np.float64)
    if not np.isfinite(data).all():
        raise DataError(f"raster {payload} contains non-finite values after conversion")
    dyn = float(header.get("dynamic_range", DEFAULT_DYNAMIC_RANGE))
    return Raster(data, dyn)


def save_raster(
    r: Raster,
    path: str | Path,
    dtype: str = "f64",
    sensor: SensorSpec | None = None,
) -> None:
    """Write raster payload + sidecar; ``load_raster`` inverts it up to dtype quantization.

    Integer dtypes round to nearest and refuse values outside the dtype range.
    """
    if dtype not in _DTYPES:
        raise DataError(f"unsupported dtype {dtype!r}; expected one of {sorted(_DTYPES)}")
    payload, sidecar = _sidecar_paths(path)
    np_dtype = _DTYPES[dtype]
    if np_dtype.kind == "u":
        out = np.rint(r.data)
        info = np.iinfo(np_dtype)
        if out.min() < info.min or out.max() > info.max:
            raise DataError(
                f"value out of range for {dtype}: data spans "
                f"[{out.min()}, {out.max()}], dtype allows [{info.min}, {info.max}]"
            )
        out = out.astype(np_dtype)
    else:
        out = r.data.astype(np_dtype)
        if not np.isfinite(out).all():
            raise DataError(f"value out of range for {dtype}: overflow during conversion")
    header: dict[str, object] = {
        "rows": r.rows,
        "cols": r.cols,
        "bands": r.bands,
        "dtype": dtype,
        "interleave": "bsq",
        "byte_order": "little",
        "dynamic_range": r.dynamic_range,
    }
    if sensor is not None:
        header["sensor"] = {
            "name": sensor.name,
            "ratio": sensor.ratio,
            "ms_nyquist_gains": list(sensor.ms_nyquist_gains),
            "pan_nyquist_gain": sensor.pan_nyquist_gain,
        }
    payload.parent.mkdir(parents=True, exist_ok=True)
    out.tofile(payload)
    sidecar.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")


def load_pair(
    pan_path: str | Path,
    ms_path: str | Path,
    sensor: SensorSpec | None = None,
) -> PanMsPair:
    """Load a PAN/MS pair; sensor falls back to the MS sidecar, then to defaults."""
    pan = load_raster(pan_path)
    ms = load_raster(ms_path)
    if sensor is None:
        sensor = read_sensor(ms_path)
    if sensor is None:
        if pan.rows % ms.rows or pan.cols % ms.cols or pan.rows // ms.rows != pan.cols // ms.cols:
            raise DataError(
                f"cannot infer resolution ratio from pan {pan.rows}x{pan.cols} "
                f"and ms {ms.rows}x{ms.cols}"
            )
        sensor = default_sensor(pan.rows // ms.rows, ms.bands)
    return validate_pair(pan, ms, sensor)
