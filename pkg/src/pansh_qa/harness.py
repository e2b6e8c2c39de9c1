"""Experiment campaigns: full-resolution evaluation runs, reduced-resolution
cross-checks against ground truth, index correlation matrices and
misregistration deltas.

Dataset directories hold tiles as ``<tile>_pan.bsq`` / ``<tile>_ms.bsq``
(plus sidecars); tiles are processed in sorted name order so campaign
results are reproducible bit for bit.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .baselines import BASELINES
from .errors import DataError
from .raster import PanMsPair, Raster, SensorSpec, load_pair
from .report import EvalConfig, FR_INDEX_NAMES, RR_INDEX_NAMES, evaluate_fr, evaluate_rr
from .resampling import wald_downgrade

log = logging.getLogger(__name__)

GT_METHOD = "GT"

# A reduced-resolution method sees the reduced pair and the ground truth
# (pseudo-methods like GT itself or its corrupted variants need the latter).
RrMethod = Callable[[PanMsPair, Raster], Raster]
FrMethod = Callable[[PanMsPair], Raster]


@dataclass(frozen=True)
class CampaignRow:
    tile: str
    method: str
    index: str
    value: float
    excluded: bool = False


@dataclass
class CampaignResult:
    """Long-format score table; every (tile, method) carries the same index set."""

    rows: list[CampaignRow] = field(default_factory=list)

    def __post_init__(self) -> None:
        index_sets: dict[tuple[str, str], set[str]] = {}
        for row in self.rows:
            if not np.isfinite(row.value):
                raise DataError(
                    f"non-finite score {row.value} for {row.tile}/{row.method}/{row.index}"
                )
            index_sets.setdefault((row.tile, row.method), set()).add(row.index)
        if index_sets:
            reference = next(iter(index_sets.values()))
            for key, indexes in index_sets.items():
                if indexes != reference:
                    raise DataError(f"inconsistent index set for {key}")

    @property
    def tiles(self) -> list[str]:
        return sorted({r.tile for r in self.rows})

    @property
    def methods(self) -> list[str]:
        return sorted({r.method for r in self.rows})

    @property
    def indexes(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.rows:
            seen.setdefault(r.index, None)
        return list(seen)

    def value(self, tile: str, method: str, index: str) -> float:
        for r in self.rows:
            if (r.tile, r.method, r.index) == (tile, method, index):
                return r.value
        raise KeyError((tile, method, index))

    def column(self, index: str, exclude_methods: Sequence[str] = ()) -> np.ndarray:
        """Scores for one index over all (tile, method) samples, sorted by
        (tile, method) for a stable sample order."""
        samples = [
            r
            for r in self.rows
            if r.index == index and r.method not in exclude_methods and not r.excluded
        ]
        samples.sort(key=lambda r: (r.tile, r.method))
        return np.array([r.value for r in samples])

    def method_mean(self, index: str, method: str) -> float:
        vals = [r.value for r in self.rows if r.index == index and r.method == method]
        if not vals:
            raise KeyError((method, index))
        return float(np.mean(vals))

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tile", "method", "index", "value", "excluded"])
            for r in self.rows:
                writer.writerow([r.tile, r.method, r.index, repr(r.value), int(r.excluded)])


def discover_tiles(dataset_dir: str | Path) -> list[tuple[str, Path, Path]]:
    """(tile name, pan path, ms path) triples found in a dataset directory."""
    root = Path(dataset_dir)
    if not root.is_dir():
        raise DataError(f"dataset directory {root} does not exist")
    tiles = []
    for pan_path in sorted(root.glob("*_pan.bsq")):
        name = pan_path.name[: -len("_pan.bsq")]
        ms_path = pan_path.with_name(f"{name}_ms.bsq")
        if ms_path.is_file():
            tiles.append((name, pan_path, ms_path))
        else:
            log.warning("skipping tile %s: missing %s", name, ms_path.name)
    if not tiles:
        raise DataError(f"no tiles found in {root} (expected <tile>_pan.bsq / <tile>_ms.bsq)")
    return tiles


def _resolve_fr_methods(methods: Sequence[str] | Mapping[str, FrMethod]) -> dict[str, FrMethod]:
    if isinstance(methods, Mapping):
        return dict(methods)
    resolved: dict[str, FrMethod] = {}
    for name in methods:
        if name not in BASELINES:
            raise DataError(f"unknown method {name!r}; choose from {sorted(BASELINES)}")
        resolved[name] = BASELINES[name]
    return resolved


def run_fr_campaign(
    dataset: str | Path | Sequence[tuple[str, PanMsPair]],
    methods: Sequence[str] | Mapping[str, FrMethod] = ("exp", "brovey", "mtf-glp"),
    config: EvalConfig = EvalConfig(),
    sensor: SensorSpec | None = None,
) -> CampaignResult:
    """Full-resolution indexes for every tile x method.

    ``dataset`` is a directory of tiles or an in-memory list of named pairs.
    Unreadable tiles are skipped with a warning; an empty campaign raises.
    """
    resolved = _resolve_fr_methods(methods)
    rows: list[CampaignRow] = []
    for name, pair in _iter_pairs(dataset, sensor):
        for method_name in resolved:
            fused = resolved[method_name](pair)
            report = evaluate_fr(pair, fused, config)
            for index in FR_INDEX_NAMES:
                rows.append(CampaignRow(name, method_name, index, report.scores[index]))
    if not rows:
        raise DataError("empty dataset: no tiles evaluated")
    return CampaignResult(rows)


def _iter_pairs(dataset, sensor: SensorSpec | None):
    if isinstance(dataset, (str, Path)):
        for name, pan_path, ms_path in discover_tiles(dataset):
            try:
                yield name, load_pair(pan_path, ms_path, sensor)
            except DataError as exc:
                log.warning("skipping unreadable tile %s: %s", name, exc)
    else:
        for name, pair in dataset:
            yield name, pair


def default_rr_methods() -> dict[str, RrMethod]:
    return {name: (lambda pair, gt, fn=fn: fn(pair)) for name, fn in BASELINES.items()}


def run_rr_campaign(
    dataset: str | Path | Sequence[tuple[str, PanMsPair]],
    methods: Mapping[str, RrMethod] | Sequence[str] | None = None,
    misalign: tuple[int, int] | None = None,
    config: EvalConfig = EvalConfig(),
    sensor: SensorSpec | None = None,
    include_gt: bool = True,
) -> CampaignResult:
    """Downgrade each tile, fuse at reduced scale, score reference indexes
    against the ground truth plus every no-reference index on the same output.

    ``misalign`` shifts every MS band's decimation grid during the downgrade,
    creating a controlled registration error. The ground truth itself is
    scored as pseudo-method "GT" unless disabled. Statistics blocks are
    clamped to the reduced MS extent.
    """
    if methods is None:
        resolved = default_rr_methods()
    elif isinstance(methods, Mapping):
        resolved = dict(methods)
    else:
        base = default_rr_methods()
        resolved = {}
        for name in methods:
            if name not in base:
                raise DataError(f"unknown method {name!r}; choose from {sorted(base)}")
            resolved[name] = base[name]
    if include_gt and GT_METHOD not in resolved:
        resolved[GT_METHOD] = lambda pair, gt: gt

    rows: list[CampaignRow] = []
    for name, pair in _iter_pairs(dataset, sensor):
        reduced, gt = wald_downgrade(pair, misalign, config.kernel_size)
        rr_block = min(config.block, gt.rows, gt.cols)
        fr_config = replace(config, block=min(config.block, reduced.ms.rows, reduced.ms.cols))
        for method_name, method in resolved.items():
            fused = method(reduced, gt)
            ref_report = evaluate_rr(gt, fused, reduced.sensor.ratio, rr_block, config.sam_unit)
            fr_report = evaluate_fr(reduced, fused, fr_config)
            for index in RR_INDEX_NAMES:
                rows.append(CampaignRow(name, method_name, index, ref_report.scores[index]))
            for index in FR_INDEX_NAMES:
                rows.append(CampaignRow(name, method_name, index, fr_report.scores[index]))
    if not rows:
        raise DataError("empty dataset: no tiles evaluated")
    return CampaignResult(rows)


# ---------------------------------------------------------------------------
# Cross-index analysis
# ---------------------------------------------------------------------------

# Error-polarity indexes are complemented (x -> 1 - x) before correlating so
# every column shares the "higher is better" orientation.
_QUALITY_POLARITY = {"Q2n", "R-Q2n"}


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (len(self.labels), len(self.labels)):
            raise DataError(f"matrix shape {v.shape} does not match {len(self.labels)} labels")
        if not np.allclose(v, v.T, rtol=0.0, atol=1e-12):
            raise DataError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(v), 1.0, rtol=0.0, atol=1e-12):
            raise DataError("correlation matrix must have unit diagonal")
        if np.any(np.abs(v) > 1.0 + 1e-9):
            raise DataError("correlation entries must lie in [-1, 1]")
        v = np.ascontiguousarray(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def entry(self, a: str, b: str) -> float:
        return float(self.values[self.labels.index(a), self.labels.index(b)])

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", *self.labels])
            for label, row in zip(self.labels, self.values):
                writer.writerow([label, *[repr(float(v)) for v in row]])


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(np.mean(xc * xc))
    vy = float(np.mean(yc * yc))
    if vx <= 0.0 or vy <= 0.0:
        raise DataError("degenerate input: zero variance")
    return float(np.clip(np.mean(xc * yc) / np.sqrt(vx * vy), -1.0, 1.0))


def _mad_keep_mask(x: np.ndarray, cutoff: float = 3.5) -> np.ndarray:
    med = np.median(x)
    mad = np.median(np.abs(x - med))
    if mad == 0.0:
        return np.ones_like(x, dtype=bool)
    return np.abs(0.6745 * (x - med) / mad) <= cutoff


def index_correlation_matrix(
    result: CampaignResult,
    exclude_gt: bool = True,
    outlier_policy: str = "none",
    indexes: Sequence[str] | None = None,
    min_samples: int = 3,
) -> CorrelationMatrix:
    """Pearson correlations between index columns over (tile, method) samples.

    Error-type indexes are complemented to 1 - x first so all columns share
    polarity (this flips signs only, never magnitudes). ``outlier_policy``
    "mad" drops samples with modified z-score above 3.5 in either column of
    a pair; the default keeps everything.
    """
    if outlier_policy not in ("none", "mad"):
        raise DataError(f"unknown outlier policy {outlier_policy!r}")
    names = list(indexes) if indexes is not None else result.indexes
    exclude = (GT_METHOD,) if exclude_gt else ()
    columns = {}
    for name in names:
        col = result.column(name, exclude_methods=exclude)
        if name not in _QUALITY_POLARITY:
            col = 1.0 - col
        columns[name] = col
    sizes = {c.size for c in columns.values()}
    if len(sizes) > 1:
        raise DataError(f"index columns have inconsistent sample counts: {sizes}")
    n = len(names)
    values = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            x, y = columns[names[i]], columns[names[j]]
            if outlier_policy == "mad":
                keep = _mad_keep_mask(x) & _mad_keep_mask(y)
                x, y = x[keep], y[keep]
            if x.size < min_samples:
                raise DataError(
                    f"only {x.size} samples left for ({names[i]}, {names[j]}); "
                    f"need at least {min_samples}"
                )
            values[i, j] = values[j, i] = pearson(x, y)
    return CorrelationMatrix(labels=tuple(names), values=values)


def misregistration_delta(
    aligned: CampaignResult, misaligned: CampaignResult
) -> dict[tuple[str, str], float]:
    """Per (method, index): mean misaligned score minus mean aligned score."""
    if aligned.methods != misaligned.methods or aligned.indexes != misaligned.indexes:
        raise DataError("campaign results cover different methods or indexes")
    return {
        (method, index): misaligned.method_mean(index, method)
        - aligned.method_mean(index, method)
        for method in aligned.methods
        for index in aligned.indexes
    }


def write_delta_csv(deltas: Mapping[tuple[str, str], float], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "index", "delta"])
        for (method, index), delta in sorted(deltas.items()):
            writer.writerow([method, index, repr(delta)])
