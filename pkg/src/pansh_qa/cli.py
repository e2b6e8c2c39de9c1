"""Command-line surface: ``pansh-qa <command>``.

Exit codes: 0 success, 1 usage error, 2 data error. Text output prints
values with 6 significant digits; ``--json`` emits full precision.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .baselines import run_baseline
from .errors import DataError
from .fr_indexes import reprojection_error_map
from .harness import (
    GT_METHOD,
    index_correlation_matrix,
    run_rr_campaign,
)
from .raster import (
    DEFAULT_PAN_NYQUIST_GAIN,
    SensorSpec,
    load_pair,
    load_raster,
    save_raster,
    sensor_preset,
)
from .report import EvalConfig, evaluate_fr, evaluate_rr
from .resampling import wald_downgrade


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _sensor_from_arg(arg: str | None) -> SensorSpec | None:
    if arg is None:
        return None
    if arg.lower() in ("wv2", "wv3"):
        return sensor_preset(arg)
    path = Path(arg)
    if not path.is_file():
        raise DataError(f"sensor spec {arg!r} is neither a preset nor a readable file")
    blk = json.loads(path.read_text())
    try:
        return SensorSpec(
            ratio=blk["ratio"],
            ms_nyquist_gains=tuple(blk["ms_nyquist_gains"]),
            pan_nyquist_gain=blk.get("pan_nyquist_gain", DEFAULT_PAN_NYQUIST_GAIN),
            name=blk.get("name", "custom"),
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed sensor file {arg}: {exc}") from exc


def _print_report(report, as_json: bool) -> None:
    if as_json:
        print(report.to_json())
    else:
        width = max(len(k) for k in report.scores)
        for name in report.scores:
            print(f"{name:<{width}}  {_fmt(report.scores[name])}")


def _add_eval_fr(sub) -> None:
    p = sub.add_parser("eval-fr", help="full-resolution (no-reference) indexes")
    p.add_argument("--pan", required=True)
    p.add_argument("--ms", required=True)
    p.add_argument("--fused", required=True)
    p.add_argument("--sensor", help="wv2 | wv3 | path to sensor JSON")
    p.add_argument("--sigma", type=int, help="local-correlation window (default: ratio)")
    p.add_argument("--p", type=int, default=1, help="spectral-distortion exponent")
    p.add_argument("--q", type=int, default=1, help="spatial-distortion exponent")
    p.add_argument("--block", type=int, default=32, help="statistics block size")
    p.add_argument("--kernel-size", type=int, default=41)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--emit-error-map", metavar="PATH", help="write reprojection error map")
    p.add_argument("--json", action="store_true", help="full-precision JSON output")


def _cmd_eval_fr(args) -> int:
    pair = load_pair(args.pan, args.ms, _sensor_from_arg(args.sensor))
    fused = load_raster(args.fused)
    config = EvalConfig(
        sigma=args.sigma,
        p=args.p,
        q=args.q,
        block=args.block,
        kernel_size=args.kernel_size,
        workers=args.workers,
    )
    report = evaluate_fr(pair, fused, config)
    if args.emit_error_map:
        error_map = reprojection_error_map(fused, pair, args.kernel_size, workers=args.workers)
        save_raster(error_map, args.emit_error_map, "f64")
    _print_report(report, args.json)
    return 0


def _add_eval_rr(sub) -> None:
    p = sub.add_parser("eval-rr", help="reference indexes against a ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--fused", required=True)
    p.add_argument("--ratio", type=int, default=4)
    p.add_argument("--block", type=int, default=32)
    p.add_argument("--json", action="store_true")


def _cmd_eval_rr(args) -> int:
    gt = load_raster(args.gt)
    fused = load_raster(args.fused)
    report = evaluate_rr(gt, fused, args.ratio, args.block)
    _print_report(report, args.json)
    return 0


def _add_downgrade(sub) -> None:
    p = sub.add_parser("downgrade", help="resolution-downgrade a pair (original MS becomes GT)")
    p.add_argument("--pan", required=True)
    p.add_argument("--ms", required=True)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--misalign", nargs=2, type=int, metavar=("DR", "DC"))
    p.add_argument("--sensor", help="wv2 | wv3 | path to sensor JSON")
    p.add_argument("--kernel-size", type=int, default=41)


def _cmd_downgrade(args) -> int:
    pair = load_pair(args.pan, args.ms, _sensor_from_arg(args.sensor))
    misalign = tuple(args.misalign) if args.misalign else None
    reduced, gt = wald_downgrade(pair, misalign, args.kernel_size)
    out = Path(args.out)
    save_raster(reduced.pan, out / "reduced_pan.bsq", "f64", sensor=reduced.sensor)
    save_raster(reduced.ms, out / "reduced_ms.bsq", "f64", sensor=reduced.sensor)
    save_raster(gt, out / "gt.bsq", "f64")
    print(f"wrote reduced pair + GT to {out}")
    return 0


def _add_baseline(sub) -> None:
    p = sub.add_parser("baseline", help="run a reference fusion baseline")
    p.add_argument("--method", required=True, choices=["exp", "brovey", "mtf-glp"])
    p.add_argument("--pan", required=True)
    p.add_argument("--ms", required=True)
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--sensor", help="wv2 | wv3 | path to sensor JSON")


def _cmd_baseline(args) -> int:
    pair = load_pair(args.pan, args.ms, _sensor_from_arg(args.sensor))
    fused = run_baseline(args.method, pair)
    save_raster(fused, args.out, "f64")
    print(f"wrote {args.method} baseline to {args.out}")
    return 0


def _add_cross_check(sub) -> None:
    p = sub.add_parser(
        "cross-check",
        help="reduced-resolution campaign: reference vs no-reference indexes",
    )
    p.add_argument("--dataset", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--misalign", nargs=2, type=int, metavar=("DR", "DC"))
    p.add_argument(
        "--exclude-gt",
        action="store_true",
        default=True,
        help="drop GT rows from the correlation matrix (default)",
    )
    p.add_argument(
        "--include-gt",
        dest="exclude_gt",
        action="store_false",
        help="keep GT rows in the correlation matrix",
    )
    p.add_argument("--outlier-policy", choices=["none", "mad"], default="none")
    p.add_argument("--sensor", help="wv2 | wv3 | path to sensor JSON")
    p.add_argument("--block", type=int, default=32)


def _cmd_cross_check(args) -> int:
    misalign = tuple(args.misalign) if args.misalign else None
    config = EvalConfig(block=args.block)
    result = run_rr_campaign(
        args.dataset,
        misalign=misalign,
        config=config,
        sensor=_sensor_from_arg(args.sensor),
    )
    out = Path(args.out)
    result.to_csv(out / "rr_scores.csv")
    matrix = index_correlation_matrix(
        result, exclude_gt=args.exclude_gt, outlier_policy=args.outlier_policy
    )
    matrix.to_csv(out / "correlation_matrix.csv")
    print(f"tiles: {len(result.tiles)}  methods: {', '.join(result.methods)}")
    for method in result.methods:
        parts = [f"{idx}={_fmt(result.method_mean(idx, method))}" for idx in result.indexes]
        print(f"{method:>8}  " + "  ".join(parts))
    gt_note = "excluded from" if args.exclude_gt else "included in"
    print(f"{GT_METHOD} rows {gt_note} correlation matrix; wrote CSVs to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pansh-qa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_eval_fr(sub)
    _add_eval_rr(sub)
    _add_downgrade(sub)
    _add_baseline(sub)
    _add_cross_check(sub)
    return parser


_COMMANDS = {
    "eval-fr": _cmd_eval_fr,
    "eval-rr": _cmd_eval_rr,
    "downgrade": _cmd_downgrade,
    "baseline": _cmd_baseline,
    "cross-check": _cmd_cross_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (DataError, OSError, json.JSONDecodeError) as exc:
        print(f"pansh-qa: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
