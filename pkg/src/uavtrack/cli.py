"""Command-line interface.

Subcommands: track, sot, eval-sot, eval-mot, interp, stats, synth,
gmc-estimate. Sequences are processed one at a time (or one per worker with
``--jobs``), so memory use does not grow with the number of sequences.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from .cmc import estimate_gmc, load_correspondences, write_gmc
from .geometry import BoundingBox, filter_min_area
from .io import (
    find_sequences,
    load_bundle,
    parse_gt,
    parse_sot_gt,
    parse_tracks,
    summarize_annotations,
    tracks_by_frame,
    write_bundle,
    write_tracks,
    embeddings_by_frame,
)
from .metrics import average_mota, clear_match, sot_accuracy, sot_records
from .postproc import interpolate, rows_to_tracklets, tracklets_to_rows
from .sot import read_sot_json, track_sot, write_sot_json
from .synth import ScenarioConfig, SplitMix64, generate
from .tracker import Tracker, TrackerConfig, results_to_rows, run_sequence

log = logging.getLogger("uavtrack")


class CliError(Exception):
    pass


def _dump_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _floats(text: str, n: Optional[int] = None) -> List[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


# -- tracker configuration ----------------------------------------------------

def _add_tracker_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tracker (override --config)")
    for f in fields(TrackerConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type in (bool, "bool"):
            g.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        elif f.type in (int, "int"):
            g.add_argument(flag, dest=f.name, type=int, default=None)
        else:
            g.add_argument(flag, dest=f.name, type=float, default=None)


def _tracker_config(args) -> tuple:
    base = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise CliError(f"config file not found: {path}")
        try:
            base = TrackerConfig.from_json(path).to_dict()
        except (ValueError, TypeError) as exc:
            raise CliError(f"invalid config {path}: {exc}") from None
    overrides = {f.name: getattr(args, f.name) for f in fields(TrackerConfig) if getattr(args, f.name) is not None}
    try:
        cfg = TrackerConfig.from_dict({**base, **overrides})
    except (ValueError, TypeError) as exc:
        raise CliError(f"invalid tracker configuration: {exc}") from None
    return cfg, overrides


# -- per-sequence workers ---------------------------------------------------------

def _run_one(job: dict) -> dict:
    """Track one sequence directory; returns a manifest entry."""
    seq_dir = Path(job["seq"])
    cfg = TrackerConfig.from_dict(job["config"])
    out_dir = Path(job["out"])
    mode = job["mode"]
    entry = {"sequence": seq_dir.name, "status": "error"}
    out_path = out_dir / (seq_dir.name + (".txt" if mode == "mot" else ".json"))
    t0 = time.perf_counter()
    try:
        bundle = load_bundle(seq_dir, with_embeddings=cfg.with_reid, with_gmc=cfg.with_cmc,
                             drop_full_frame=job["drop_full_frame"])
        dets = bundle.detections
        if job["prefilter"]:
            dets = {f: filter_min_area(d, cfg.min_box_area) for f, d in dets.items()}
        emb = embeddings_by_frame(bundle.embeddings) if bundle.embeddings is not None else None
        tracker = Tracker(cfg)
        if mode == "mot":
            results = run_sequence(tracker, dets, bundle.n_frames, emb, bundle.gmc)
            rows = results_to_rows(results)
            write_tracks(out_path, rows)
            entry.update(rows=len(rows))
        else:
            init = job.get("init_box") or (bundle.init_box.to_list() if bundle.init_box else None)
            if init is not None:
                sx, sy = job["init_scale"]
                init = BoundingBox(init[0] * sx, init[1] * sy, init[2] * sx, init[3] * sy)
            records = track_sot(tracker, dets, bundle.n_frames, init, bundle.frame_size, emb, bundle.gmc,
                                job["abstain_when_lost"])
            write_sot_json(out_path, records)
            counts: Dict[str, int] = {}
            for r in records:
                counts[r.source.value] = counts.get(r.source.value, 0) + 1
            entry.update(sources=counts)
        entry.update(status="ok", frames=bundle.n_frames, output=out_path.name)
    except Exception as exc:  # noqa: BLE001 - reported per sequence
        entry["error"] = f"{type(exc).__name__}: {exc}"
        if out_path.exists():
            out_path.unlink()
    log.info("%s: %s in %.3fs", seq_dir.name, entry["status"], time.perf_counter() - t0)
    return entry


def _cmd_run(args, mode: str) -> int:
    cfg, overrides = _tracker_config(args)
    try:
        seqs = find_sequences(args.inputs)
    except FileNotFoundError as exc:
        raise CliError(str(exc)) from None
    names = [s.name for s in seqs]
    if len(set(names)) != len(names):
        raise CliError(f"duplicate sequence names among inputs: {sorted(n for n in set(names) if names.count(n) > 1)}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [
        {
            "seq": str(s),
            "config": cfg.to_dict(),
            "out": str(out),
            "mode": mode,
            "prefilter": args.prefilter,
            "drop_full_frame": args.drop_full_frame,
            "init_box": getattr(args, "init_box", None),
            "init_scale": _scale(getattr(args, "init_scale", None)),
            "abstain_when_lost": getattr(args, "abstain_when_lost", False),
        }
        for s in seqs
    ]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            entries = list(pool.map(_run_one, jobs))
    else:
        entries = [_run_one(j) for j in jobs]
    manifest = {
        "version": __version__,
        "mode": mode,
        "inputs": [str(p) for p in args.inputs],
        "config_path": args.config,
        "overrides": overrides,
        "config": cfg.to_dict(),
        "sequences": entries,
    }
    _dump_json(out / "manifest.json", manifest)
    failed = [e for e in entries if e["status"] != "ok"]
    for e in failed:
        print(f"error: {e['sequence']}: {e['error']}", file=sys.stderr)
    return 1 if failed else 0


def _scale(val):
    if val is None:
        return (1.0, 1.0)
    return (val[0], val[0]) if len(val) == 1 else (val[0], val[1])


def cmd_track(args) -> int:
    return _cmd_run(args, "mot")


def cmd_sot(args) -> int:
    return _cmd_run(args, "sot")


# -- evaluation -----------------------------------------------------------------

def _find_gt(gt_root: Path, name: str) -> Optional[Path]:
    for cand in (gt_root / f"{name}.json", gt_root / name / "IR_label.json", gt_root / name / "gt.txt",
                 gt_root / f"{name}.txt"):
        if cand.exists():
            return cand
    return None


def _align(pred_dir: Path, gt_dir: Path, suffix: str):
    if not pred_dir.is_dir():
        raise CliError(f"prediction directory not found: {pred_dir}")
    if not gt_dir.is_dir():
        raise CliError(f"ground-truth directory not found: {gt_dir}")
    preds = {p.stem: p for p in sorted(pred_dir.glob("*" + suffix)) if p.name != "manifest.json"}
    gts = {}
    for p in sorted(gt_dir.iterdir()):
        name = p.stem if p.is_file() else p.name
        found = _find_gt(gt_dir, name)
        if found is not None:
            gts[name] = found
    missing_gt = sorted(set(preds) - set(gts))
    missing_pred = sorted(set(gts) - set(preds))
    if missing_gt or missing_pred:
        raise CliError(
            "sequence sets differ; "
            f"predictions without ground truth: {missing_gt}; ground truth without predictions: {missing_pred}"
        )
    if not preds:
        raise CliError(f"no prediction files ({suffix}) in {pred_dir}")
    return [(n, preds[n], gts[n]) for n in sorted(preds)]


def _print_table(header: Sequence[str], rows: Sequence[Sequence]) -> None:
    cells = [list(map(str, header))] + [[f"{v:.6f}" if isinstance(v, float) else str(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    for k, r in enumerate(cells):
        print("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))))
        if k == 0:
            print("  ".join("-" * w for w in widths))


def cmd_eval_sot(args) -> int:
    per_seq = {}
    for name, pred_path, gt_path in _align(Path(args.pred), Path(args.gt), ".json"):
        preds = read_sot_json(pred_path)
        gts, vis = parse_sot_gt(gt_path)
        s = sot_accuracy(sot_records(preds, gts, vis))
        per_seq[name] = {"acc": s.acc, "T": s.T, "T_star": s.T_star,
                         "mean_iou_term": s.mean_iou_term, "penalty_term": s.penalty_term}
    mean_acc = sum(v["acc"] for v in per_seq.values()) / len(per_seq)
    report = {"metric": "sot_accuracy", "sequences": per_seq, "mean_acc": mean_acc}
    _print_table(["sequence", "acc", "T", "T*"], [[n, v["acc"], v["T"], v["T_star"]] for n, v in per_seq.items()])
    print(f"mean acc: {mean_acc:.6f}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _dump_json(Path(args.out) / "eval_sot.json", report)
    return 0


def cmd_eval_mot(args) -> int:
    per_seq = {}
    for name, pred_path, gt_path in _align(Path(args.pred), Path(args.gt), ".txt"):
        gt = {f: [(i, b) for i, b, v in objs if v > 0] for f, objs in parse_gt(gt_path).items()}
        pred = tracks_by_frame(parse_tracks(pred_path))
        r = clear_match(gt, pred, args.iou_thresh)
        if r.GT == 0:
            raise CliError(f"{gt_path}: no visible ground-truth boxes; MOTA undefined")
        per_seq[name] = {"FP": r.FP, "FN": r.FN, "IDS": r.IDS, "GT": r.GT, "mota": r.mota}
    agg = average_mota([v["mota"] for v in per_seq.values()])
    report = {"metric": "mota", "iou_thresh": args.iou_thresh, "sequences": per_seq, "mean_mota": agg}
    _print_table(["sequence", "MOTA", "FP", "FN", "IDS", "GT"],
                 [[n, v["mota"], v["FP"], v["FN"], v["IDS"], v["GT"]] for n, v in per_seq.items()])
    print(f"mean MOTA: {agg:.6f}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _dump_json(Path(args.out) / "eval_mot.json", report)
    return 0


# -- utilities ------------------------------------------------------------------

def cmd_interp(args) -> int:
    src = Path(args.input)
    if not src.exists():
        raise CliError(f"input not found: {src}")
    files = sorted(p for p in src.glob("*.txt")) if src.is_dir() else [src]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for f in files:
        rows = parse_tracks(f)
        filled = tracklets_to_rows(interpolate(rows_to_tracklets(rows), args.max_gap))
        write_tracks(out / f.name, filled)
    return 0


def _gt_files(paths) -> List[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_file():
            out.append(p)
        elif (p / "gt.txt").exists():
            out.append(p / "gt.txt")
        elif p.is_dir():
            found = sorted(p.glob("*/gt.txt"))
            if not found:
                raise CliError(f"no gt.txt files under {p}")
            out.extend(found)
        else:
            raise CliError(f"ground-truth path not found: {p}")
    return out


def cmd_stats(args) -> int:
    stats = summarize_annotations(_gt_files(args.inputs))
    report = stats.to_dict()
    print(f"sequences: {stats.n_sequences}  frames: {stats.n_frames}  boxes: {stats.n_boxes}")
    _print_table(["dimension", "min", "max", "mean", "std"],
                 [[k, d.min, d.max, d.mean, d.std] for k, d in
                  (("width", stats.width), ("height", stats.height), ("area", stats.area))])
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _dump_json(Path(args.out) / "stats.json", report)
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    base = ScenarioConfig(
        n_objects=args.n_objects,
        n_frames=args.n_frames,
        frame_size=tuple(args.frame_size),
        width_range=tuple(args.width_range),
        speed_range=tuple(args.speed_range),
        pos_jitter=args.pos_jitter,
        size_jitter=args.size_jitter,
        miss_rate=args.miss_rate,
        fp_rate=args.fp_rate,
        camera_drift=tuple(args.camera_drift) if args.camera_drift else None,
        embedding_dim=args.embedding_dim,
        embedding_noise=args.embedding_noise,
        n_background_points=args.background_points,
    )
    for i in range(args.n_sequences):
        name = f"synth-{i + 1:04d}"
        seed = SplitMix64.stream(args.seed, i).next_u64() if args.n_sequences > 1 else args.seed
        write_bundle(generate(replace(base, seed=seed, name=name)), out / name)
    return 0


def cmd_gmc_estimate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sources = []
    for p in map(Path, args.inputs):
        if p.is_file():
            sources.append((p, p.stem))
        elif (p / "corr.txt").exists():
            sources.append((p / "corr.txt", p.name))
        elif p.is_dir() and any(p.glob("*/corr.txt")):
            sources.extend((c, c.parent.name) for c in sorted(p.glob("*/corr.txt")))
        else:
            raise CliError(f"correspondence file not found: {p / 'corr.txt' if p.is_dir() else p}")
    for src, name in sources:
        gmc = estimate_gmc(load_correspondences(src), args.iterations, args.inlier_thresh, args.seed)
        write_gmc(out / f"{name}.txt", gmc)
    return 0


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="tracker configuration JSON")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="parallel sequences")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="uavtrack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, helptext in (("track", cmd_track, "multi-object tracking to MOT files"),
                                 ("sot", cmd_sot, "single-object reports (one box per frame)")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("inputs", nargs="+", help="sequence directories or roots containing them")
        p.add_argument("--prefilter", action="store_true", help="drop detections with area <= min_box_area before tracking")
        p.add_argument("--drop-full-frame", action=argparse.BooleanOptionalAction, default=True)
        _add_tracker_flags(p)
        if name == "sot":
            p.add_argument("--init-box", type=lambda s: _floats(s, 4), help="x,y,w,h of the target in frame 1")
            p.add_argument("--init-scale", type=_floats, help="scale factor(s) sx[,sy] applied to the initial box")
            p.add_argument("--abstain-when-lost", action="store_true")
        p.set_defaults(func=func, needs_out=True)

    for name, func in (("eval-sot", cmd_eval_sot), ("eval-mot", cmd_eval_mot)):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--pred", required=True)
        p.add_argument("--gt", required=True)
        if name == "eval-mot":
            p.add_argument("--iou-thresh", type=float, default=0.5)
        p.set_defaults(func=func, needs_out=False)

    p = sub.add_parser("interp", parents=[common], help="linear gap filling of MOT track files")
    p.add_argument("input")
    p.add_argument("--max-gap", type=int, default=20)
    p.set_defaults(func=cmd_interp, needs_out=True)

    p = sub.add_parser("stats", parents=[common], help="annotation size statistics")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_stats, needs_out=False)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic sequences")
    p.add_argument("--n-sequences", type=int, default=1)
    p.add_argument("--n-objects", type=int, default=5)
    p.add_argument("--n-frames", type=int, default=300)
    p.add_argument("--frame-size", type=lambda s: _floats(s, 2), default=[640.0, 512.0])
    p.add_argument("--width-range", type=lambda s: _floats(s, 2), default=[2.0, 30.0])
    p.add_argument("--speed-range", type=lambda s: _floats(s, 2), default=[0.5, 2.0])
    p.add_argument("--pos-jitter", type=float, default=0.0)
    p.add_argument("--size-jitter", type=float, default=0.0)
    p.add_argument("--miss-rate", type=float, default=0.0)
    p.add_argument("--fp-rate", type=float, default=0.0)
    p.add_argument("--camera-drift", type=lambda s: _floats(s, 6), help="a11,a12,tx,a21,a22,ty per frame")
    p.add_argument("--embedding-dim", type=int, default=128)
    p.add_argument("--embedding-noise", type=float, default=0.1)
    p.add_argument("--background-points", type=int, default=0)
    p.set_defaults(func=cmd_synth, needs_out=True)

    p = sub.add_parser("gmc-estimate", parents=[common], help="RANSAC affine per frame from correspondences")
    p.add_argument("inputs", nargs="+", help="correspondence files or sequence directories with corr.txt")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--inlier-thresh", type=float, default=1.0)
    p.set_defaults(func=cmd_gmc_estimate, needs_out=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.needs_out and not args.out:
        parser.error(f"{args.command} requires --out")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
