"""Command-line entry point.

Exit codes: 0 success, 1 data errors, 2 usage or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import checks
from .config import PRESETS, RunConfig, make_config
from .dataio import (
    CULANE_SIZE,
    TUSIMPLE_SIZE,
    parse_culane_lines,
    read_tusimple_file,
    write_pgm16,
)
from .errors import LaneForgeError
from .geometry import Anchor, Lane, SliceScheme, lane_start_and_theta, resample_polyline
from .kernels import VARIANTS
from .kernels.bench import kernel_bench, parse_size
from .metrics import (
    EvalReport,
    TusimpleImageCounts,
    culane_image_counts,
    prf,
    tusimple_image_counts,
    tusimple_report,
)
from .targets import decode_anchors, grid_shape, make_targets

log = logging.getLogger("laneforge")

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _size(text: str):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("sizes must be positive")
    return w, h


def _jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("LANEFORGE_JOBS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise UsageError(f"LANEFORGE_JOBS must be an integer, got {env!r}") from None


def config_from_args(args) -> RunConfig:
    try:
        return make_config(
            args.preset, sigma=args.sigma, t_theta=args.t_theta, e=args.extend_e,
            n_anchors=args.anchors, input_size=args.input_size, seed=args.seed,
            downsample=getattr(args, "downsample", None),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _map_ordered(fn, items, jobs):
    if jobs <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------- gen-targets


def _load_annotations(path: Path):
    """[(image name, polylines, source (w, h))] for one annotation file."""
    if path.name.endswith(".lines.txt"):
        lanes = parse_culane_lines(path.read_bytes())
        return [(path.name[: -len(".lines.txt")], lanes, CULANE_SIZE)]
    out = []
    for h, lanes, raw in read_tusimple_file(path):
        polys = [[(x, y) for x, y in zip(xs, h) if not np.isnan(x)] for xs in lanes]
        out.append((Path(raw).with_suffix("").as_posix().replace("/", "__"), polys, TUSIMPLE_SIZE))
    return out


def image_targets(polylines, source_size, cfg: RunConfig):
    """Anchors, target maps and decoded anchors for one image."""
    in_w, in_h = cfg.input_size
    sx, sy = in_w / source_size[0], in_h / source_size[1]
    scheme = SliceScheme(cfg.n_slices, in_w, in_h)
    anchors = []
    for poly in polylines:
        if len(poly) < 2:
            continue
        lane = resample_polyline([(x * sx, y * sy) for x, y in poly], scheme)
        if lane.n_present < 2:
            continue
        s_x, s_y, theta = lane_start_and_theta(lane, scheme)
        s_x = min(max(s_x, 0.0), 1.0)
        anchors.append(Anchor(s_x, s_y, theta))
    grid = grid_shape(in_w, in_h, cfg.downsample)
    maps = make_targets(anchors, cfg.target_config(), grid)
    decoded = decode_anchors(maps.hm, maps.theta_map, max(len(anchors), 1), cfg.downsample,
                             (in_w, in_h)) if anchors else []
    return anchors, maps, decoded


def _write_grid_csv(path: Path, grid: np.ndarray):
    with open(path, "w", newline="\n") as f:
        for row in grid:
            f.write(",".join(f"{v:.6f}" for v in row) + "\n")


def _write_anchors_csv(path: Path, decoded):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["s_x", "s_y", "theta", "score"])
        for a, score in decoded:
            w.writerow([f"{a.s_x:.6f}", f"{a.s_y:.6f}", f"{a.theta:.6f}", f"{score:.6f}"])


def cmd_gen_targets(annotations_dir, out_dir, cfg: RunConfig, jobs: int = 1) -> int:
    root = Path(annotations_dir)
    if not root.is_dir():
        raise UsageError(f"annotation directory not found: {root}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = sorted(p for p in root.rglob("*") if p.is_file()
                   and (p.name.endswith(".lines.txt") or p.suffix == ".json"))

    def work(path: Path):
        try:
            return path, _load_annotations(path), None
        except (LaneForgeError, OSError) as exc:
            return path, [], exc

    n_images = n_lanes = n_decoded = 0
    errors = []
    for path, images, err in _map_ordered(work, files, jobs):
        if err is not None:
            errors.append({"file": path.relative_to(root).as_posix(), "error": str(err)})
            log.error("%s: %s", path, err)
            continue
        rel_dir = path.parent.relative_to(root)
        for name, polys, src in images:
            try:
                anchors, maps, decoded = image_targets(polys, src, cfg)
            except LaneForgeError as exc:
                errors.append({"file": path.relative_to(root).as_posix(), "image": name, "error": str(exc)})
                log.error("%s [%s]: %s", path, name, exc)
                continue
            dest = out / rel_dir / name
            dest.mkdir(parents=True, exist_ok=True)
            write_pgm16(dest / "hm.pgm", maps.hm)
            _write_grid_csv(dest / "theta.csv", maps.theta_map)
            _write_anchors_csv(dest / "anchors.csv", decoded)
            n_images += 1
            n_lanes += len(anchors)
            n_decoded += len(decoded)
    summary = {
        "images": n_images,
        "lanes": n_lanes,
        "decoded_anchors": n_decoded,
        "errors": errors,
        "config": cfg.to_dict(),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_DATA if errors else EXIT_OK


# --------------------------------------------------------------------------- loss-check


def cmd_loss_check(seed: int, trials: int, stream=None, grad_fn=None) -> int:
    stream = stream or sys.stdout
    rows = checks.loss_check(seed, trials, grad_fn=grad_fn)
    if not rows:
        print("no trials requested; empty report", file=stream)
        return EXIT_OK
    for r in rows:
        print(r.line(), file=stream)
    return EXIT_OK if all(r.ok for r in rows) else EXIT_DATA


# --------------------------------------------------------------------------- eval


def _culane_lanes(path: Optional[Path], scheme: SliceScheme, errors: list):
    if path is None or not path.exists():
        return []
    lanes = []
    for poly in parse_culane_lines(path.read_bytes()):
        try:
            lanes.append(resample_polyline(poly, scheme))
        except LaneForgeError as exc:
            errors.append(f"{path}: {exc}")
            continue
        if lanes[-1].n_present == 0:
            lanes.pop()
    return lanes


def _eval_culane(pred_root: Path, gt_root: Path, image_size, errors):
    w, h = image_size
    scheme = SliceScheme(h, w, h)
    names = sorted({p.relative_to(gt_root).as_posix() for p in gt_root.rglob("*.lines.txt")}
                   | {p.relative_to(pred_root).as_posix() for p in pred_root.rglob("*.lines.txt")})
    records, tp, fp, fn = [], 0, 0, 0
    for name in names:
        try:
            gts = _culane_lanes(gt_root / name, scheme, errors)
            preds = _culane_lanes(pred_root / name, scheme, errors)
        except LaneForgeError as exc:
            errors.append(f"{name}: {exc}")
            continue
        a, b, c = culane_image_counts(preds, gts, scheme)
        tp, fp, fn = tp + a, fp + b, fn + c
        records.append({"image": name, "tp": a, "fp": b, "fn": c})
    return records, EvalReport(tp, fp, fn, *prf(tp, fp, fn))


def _tusimple_records(root: Path, errors):
    table = {}
    for path in sorted(root.rglob("*.json")):
        try:
            for h, lanes, raw in read_tusimple_file(path):
                table[raw] = (h, [Lane(xs) for xs in lanes])
        except LaneForgeError as exc:
            errors.append(f"{path}: {exc}")
    return table


def _eval_tusimple(pred_root: Path, gt_root: Path, errors):
    gts = _tusimple_records(gt_root, errors)
    preds = _tusimple_records(pred_root, errors)
    records = []
    tot = TusimpleImageCounts(0, 0, 0, 0, 0, 0)
    for raw in sorted(gts):
        h, gl = gts[raw]
        ph, pl = preds.get(raw, (h, []))
        if len(ph) != len(h) or not np.array_equal(ph, h):
            errors.append(f"{raw}: prediction h_samples differ from ground truth")
            continue
        c = tusimple_image_counts(pl, gl)
        for k in vars(tot):
            setattr(tot, k, getattr(tot, k) + getattr(c, k))
        records.append({"image": raw, **vars(c)})
    return records, tusimple_report(tot)


def cmd_eval(pred_dir, gt_dir, mode: str, out=None, image_size=CULANE_SIZE) -> int:
    gt_root, pred_root = Path(gt_dir), Path(pred_dir)
    if not gt_root.is_dir():
        raise UsageError(f"ground-truth directory not found: {gt_root}")
    if not pred_root.is_dir():
        raise UsageError(f"prediction directory not found: {pred_root}")
    errors: List[str] = []
    if mode == "culane":
        records, report = _eval_culane(pred_root, gt_root, image_size, errors)
    elif mode == "tusimple":
        records, report = _eval_tusimple(pred_root, gt_root, errors)
    else:
        raise UsageError(f"unknown eval mode {mode!r}")
    for e in errors:
        log.error("%s", e)
    lines = [json.dumps(r, sort_keys=True) for r in records]
    lines.append(json.dumps({"summary": True, "mode": mode, **report.to_dict()}, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
    return EXIT_DATA if errors else EXIT_OK


# --------------------------------------------------------------------------- kernel-bench


def cmd_kernel_bench(sizes: Sequence, variant: str, seed: int = 0, repeats: int = 3,
                     oracle_check: bool = False, stream=None) -> int:
    stream = stream or sys.stdout
    if variant not in VARIANTS:
        raise UsageError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if oracle_check:
        rows = checks.kernel_oracle_check(seed)
        for r in rows:
            print("# " + r.line(), file=stream)
        if not all(r.ok for r in rows):
            return EXIT_DATA
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kernel", "size", "ns_per_cell", "ops"])
    for r in kernel_bench(sizes, variant, seed, repeats):
        w.writerow([r["kernel"], r["size"], f"{r['ns_per_cell']:.1f}", r["ops"]])
    stream.write(buf.getvalue())
    return EXIT_OK


# --------------------------------------------------------------------------- argparse


def _common_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands re-declare the shared flags with suppressed defaults so a
    # flag given before the subcommand is not overwritten
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=sorted(PRESETS), default=d("culane"))
    common.add_argument("--sigma", type=float, default=d(None))
    common.add_argument("--t-theta", type=float, default=d(None))
    common.add_argument("--extend-e", type=float, default=d(None))
    common.add_argument("--anchors", type=int, default=d(None))
    common.add_argument("--input-size", type=_size, metavar="WxH", default=d(None))
    common.add_argument("--seed", type=int, default=d(0))
    common.add_argument("--jobs", type=int, default=d(None))
    common.add_argument("--out", default=d(None))
    common.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags(suppress=True)
    p = argparse.ArgumentParser(prog="laneforge", parents=[_common_flags(suppress=False)],
                                description="Anchor-decomposition lane detection numerics.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-targets", parents=[common], help="heat map / theta targets from annotations")
    g.add_argument("annotations_dir")
    g.add_argument("--downsample", type=int)

    lc = sub.add_parser("loss-check", parents=[common], help="GLIoU gradient and property checks")
    lc.add_argument("--trials", type=int, default=1000)
    lc.add_argument("--inject-broken-gradient", action="store_true", help=argparse.SUPPRESS)

    ev = sub.add_parser("eval", parents=[common], help="CULane F1 or TuSimple accuracy")
    ev.add_argument("pred_dir")
    ev.add_argument("gt_dir")
    ev.add_argument("--mode", choices=["culane", "tusimple"], default="culane")
    ev.add_argument("--image-size", type=_size, metavar="WxH", default=CULANE_SIZE)

    kb = sub.add_parser("kernel-bench", parents=[common], help="forward kernel throughput")
    kb.add_argument("--sizes", default="8x32x32,16x64x64")
    kb.add_argument("--variant", choices=list(VARIANTS), default="C")
    kb.add_argument("--repeats", type=int, default=3)
    kb.add_argument("--oracle-check", action="store_true")
    return p


def _broken_grad(pred, gt, p):
    from .losses import gliou_loss_and_grad

    loss, g = gliou_loss_and_grad(pred, gt, p)
    return loss, g * 1.01


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        jobs = _jobs(args)
        cfg = config_from_args(args)
        if args.command == "gen-targets":
            if not args.out:
                raise UsageError("gen-targets needs --out")
            return cmd_gen_targets(args.annotations_dir, args.out, cfg, jobs)
        if args.command == "loss-check":
            grad_fn = _broken_grad if args.inject_broken_gradient else None
            return cmd_loss_check(cfg.seed, args.trials, grad_fn=grad_fn)
        if args.command == "eval":
            return cmd_eval(args.pred_dir, args.gt_dir, args.mode, args.out, args.image_size)
        if args.command == "kernel-bench":
            try:
                sizes = [parse_size(s) for s in args.sizes.split(",") if s.strip()]
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            return cmd_kernel_bench(sizes, args.variant, cfg.seed, args.repeats, args.oracle_check)
    except UsageError as exc:
        print(f"laneforge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"laneforge: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
