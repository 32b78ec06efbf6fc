"""Command line entry point.

Exit codes: 0 success, 1 configuration or usage error, 2 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _accel, evaluation, peaks, textio
from .ingest import FORMATS, ParseError, read_scan, sliding_window
from .pipeline import STAGES, run_pipeline
from .types import ConfigError, FilterParams, LidarConfig, load_config, validate_config

log = logging.getLogger("lidar_roi")

EMITS = ("depth", "angle", "smoothed", "filtered", "processed", "labels", "barcode", "cloud")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lidar-roi", description="separate regions of interest in LiDAR scans")
    ap.add_argument("--input", required=True, help="scan file or directory of scans")
    ap.add_argument("--format", choices=FORMATS, help="scan format (default: from extension)")
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--pc", type=int, help="SSA components kept")
    ap.add_argument("--beta", type=float, help="ground removal angle, degrees")
    ap.add_argument("--window", type=int, help="SSA window length")
    ap.add_argument("--theta-seg", type=float, help="ROI growth angle threshold, degrees")
    ap.add_argument("--persistence", type=float, help="persistence threshold, fraction of span")
    ap.add_argument("--emit", default="cloud", help=f"comma list of {','.join(EMITS)}")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--bench", type=int, default=0, metavar="N", help="repeat the filter N times per scan")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for directory input")
    ap.add_argument("--scan-window", type=int, default=1, help="concatenate the last K scans")
    ap.add_argument("--eval", dest="eval_dir", metavar="TRUTH_DIR", help="score against truth masks")
    ap.add_argument("--camera", help="camera file for --eval")
    ap.add_argument("--dilation", type=int, default=2, help="raster disc radius for --eval, pixels")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve_params(args) -> tuple[LidarConfig, FilterParams]:
    """Defaults, then the config file, then command line flags."""
    if args.config:
        cfg, params = load_config(args.config)
    else:
        cfg, params = LidarConfig(), FilterParams()
    flags = {
        "pc": args.pc,
        "beta": args.beta,
        "window": args.window,
        "theta_seg": args.theta_seg,
        "persistence_threshold": args.persistence,
    }
    params = replace(params, **{k: v for k, v in flags.items() if v is not None})
    validate_config(cfg, params)
    return cfg, params


def parse_emits(text: str) -> list[str]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in EMITS]
    if bad:
        raise UsageError(f"unknown --emit item(s): {', '.join(bad)}")
    return items


def emit(result, points, stem: str, out: Path, emits) -> None:
    out.mkdir(parents=True, exist_ok=True)
    mats = {
        "depth": result.depth,
        "angle": result.angle,
        "smoothed": result.smoothed,
        "filtered": result.filtered,
        "processed": result.processed,
        "labels": result.labels,
    }
    for name in emits:
        if name in mats:
            textio.write_matrix(out / f"{stem}.{name}.txt", mats[name])
        elif name == "barcode":
            peaks.write_barcode_csv(out / f"{stem}.barcode.csv", result.barcode)
        elif name == "cloud":
            textio.write_labeled_cloud(out / f"{stem}.labels.csv", points, result.regions.point_labels)


def _process(job):
    stem, points, cfg, params, out, emits = job
    result = run_pipeline(points, cfg, params, validate=False)
    emit(result, points, stem, out, emits)
    return stem, result.timings_ms


def bench(points, cfg, params, n: int) -> tuple[float, float, dict[str, float]]:
    run_pipeline(points, cfg, params)  # warm up (jit compile, caches)
    totals = []
    stage_sums = dict.fromkeys(STAGES, 0.0)
    for _ in range(n):
        r = run_pipeline(points, cfg, params, validate=False)
        totals.append(r.total_ms)
        for s in STAGES:
            stage_sums[s] += r.timings_ms[s]
    arr = np.asarray(totals)
    return float(arr.mean()), float(arr.std()), {s: v / n for s, v in stage_sums.items()}


def _inputs(path: Path, fmt) -> list[Path]:
    if path.is_dir():
        files = evaluation.scan_files(path)
        if fmt:
            files = [f for f in files if f.suffix.lower() == f".{fmt}"]
        if not files:
            raise FileNotFoundError(f"no scans in {path}")
        return files
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    return [path]


def run(args) -> int:
    cfg, params = resolve_params(args)
    emits = parse_emits(args.emit)
    if args.scan_window < 1:
        raise ConfigError("scan-window", "must be >= 1")
    if args.jobs < 1:
        raise ConfigError("jobs", "must be >= 1")
    if args.eval_dir and not args.camera:
        raise UsageError("--eval needs --camera")
    out = Path(args.out)
    files = _inputs(Path(args.input), args.format)
    log.info("backend: %s", _accel.backend_name())

    history = []
    jobs = []
    for path in files:
        scan = read_scan(path, args.format)
        if scan.dropped:
            print(f"{path}: dropped {scan.dropped} non-finite points", file=sys.stderr)
        history.append(scan.points)
        history = history[-args.scan_window :]
        jobs.append((path.stem, sliding_window(history, args.scan_window), cfg, params, out, emits))

    if args.bench:
        for stem, points, *_ in jobs:
            mean, std, stages = bench(points, cfg, params, args.bench)
            detail = " ".join(f"{s}={v:.2f}" for s, v in stages.items())
            print(f"{stem}: {len(points)} points, {mean:.2f} ms +- {std:.2f} ms over {args.bench} runs ({detail})")
    elif args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for stem, timings in pool.map(_process, jobs):
                log.info("%s: %.2f ms", stem, sum(timings.values()))
    else:
        for job in jobs:
            stem, timings = _process(job)
            log.info("%s: %.2f ms", stem, sum(timings.values()))

    if args.eval_dir:
        cam = evaluation.read_camera(args.camera)
        scan_dir = Path(args.input) if Path(args.input).is_dir() else Path(args.input).parent
        report = evaluation.evaluate_run(scan_dir, args.eval_dir, cfg, params, cam, args.dilation)
        out.mkdir(parents=True, exist_ok=True)
        (out / "eval.csv").write_text(report.to_csv())
        for cls, metrics in report.summary().items():
            p, r, f = (metrics[m][0] for m in ("precision", "recall", "f1"))
            print(f"{cls}: P={p:.4f} R={r:.4f} F1={f:.4f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return run(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ParseError, evaluation.MissingTruth) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
