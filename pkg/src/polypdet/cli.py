"""Command-line entry point: ``polypdet <command> ...``.

Exit codes: 0 success, 1 pipeline error, 2 usage error, 3 missing file,
4 invalid config, 5 dataset error, 6 malformed detections/model/report file.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Optional, Sequence

from . import __version__
from .augmentation import augment_all
from .config import AugmentationConfig, RunConfig, load_config, with_seed
from .dataset import load_dataset, write_dataset
from .detector import ExemplarModel
from .errors import ConfigError, DatasetError, DetectionsFormatError, ModelFormatError, PolypDetError
from .evaluation import EvalConfig, aggregate, classify_frame, evaluate_video, merge_reports
from .post_learning import (
    augment_fp_records,
    collect_false_positives,
    collect_reliable_regions,
    pseudo_annotate,
)
from .records import (
    DetectionRecord,
    format_table,
    group_by_frame,
    read_detections,
    read_report,
    read_timings,
    write_detections,
    write_report,
    write_timings,
)

EXIT_OK = 0
EXIT_PIPELINE = 1
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_CONFIG = 4
EXIT_DATASET = 5
EXIT_FORMAT = 6

THREADS_ENV = "POLYPDET_THREADS"


class UsageError(Exception):
    pass


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


def _run_config(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    cfg = cfg.with_overrides(getattr(args, "set", None) or [])
    return with_seed(cfg, getattr(args, "seed", None))


def _provenance(cfg: RunConfig) -> Dict[str, object]:
    return {"toolkit": f"polypdet-{__version__}", "config_sha256": cfg.sha256(), "seed": cfg.rng_seed}


def _load_model(path) -> ExemplarModel:
    if not Path(path).is_file():
        raise FileNotFoundError(f"model not found: {path}")
    return ExemplarModel.load(path)


def _new_model(cfg: RunConfig) -> ExemplarModel:
    return ExemplarModel(
        roi_cfg=cfg.roi,
        anchor_cfg=cfg.anchor,
        proposal_cfg=cfg.proposal,
        detect_threshold=cfg.detector.detect_threshold,
        dedup_cosine=cfg.detector.dedup_cosine,
    )


def _write_records(path, records, cfg: RunConfig) -> None:
    write_detections(path, [DetectionRecord(r.frame_id, r.box, r.score) for r in records], _provenance(cfg))


# -- commands --------------------------------------------------------------------


def cmd_augment(args) -> int:
    cfg = _run_config(args)
    strategy_name = args.strategy or cfg.augmentation.strategy
    strategy = AugmentationConfig(strategy_name, cfg.augmentation.visibility_threshold).build()
    manifest = load_dataset(args.dataset)
    out = augment_all(list(manifest.load_frames()), strategy)
    write_dataset(out, args.out)
    print(f"{len(manifest)} frames -> {len(out)} frames ({strategy.name})")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _run_config(args)
    model = _load_model(args.init) if args.init else _new_model(cfg)
    manifest = load_dataset(args.dataset)
    frames = augment_all(list(manifest.load_frames()), cfg.augmentation.build())
    model.train_positive(frames, cfg.sampling_config, include_negatives=not args.positives_only)
    model.save(args.out)
    print(
        f"trained on {len(frames)} frames: {model.positive_exemplars.shape[0]} positive, "
        f"{model.negative_exemplars.shape[0]} negative exemplars -> {args.out}"
    )
    return EXIT_OK


def _detect_all(model: ExemplarModel, frames, threads: int):
    def one(frame):
        start = time.perf_counter()
        dets = model.detect(frame)
        return frame.frame_id, dets, time.perf_counter() - start

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, frames))
    return [one(f) for f in frames]


def cmd_detect(args) -> int:
    cfg = _run_config(args)
    model = _load_model(args.model)
    if args.threshold is not None:
        if not 0 <= args.threshold <= 1:
            raise UsageError("--threshold must lie in [0, 1]")
        model.detect_threshold = args.threshold
    manifest = load_dataset(args.dataset)
    threads = args.threads if args.threads is not None else _default_threads()
    results = _detect_all(model, list(manifest.load_frames(with_annotations=False)), threads)
    records = [DetectionRecord(fid, d.box, d.score) for fid, dets, _ in results for d in dets]
    write_detections(args.out, records, _provenance(cfg))
    write_timings(f"{args.out}.timing.tsv", [(fid, t) for fid, _, t in results])
    print(f"{len(records)} detections on {len(results)} frames -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _run_config(args)
    eval_cfg = EvalConfig(cfg.eval.fps, cfg.eval.duplicates_as_fp or args.duplicates_as_fp)
    manifest = load_dataset(args.dataset, kind=args.kind, fps=eval_cfg.fps)
    by_frame = group_by_frame(read_detections(args.detections))
    frame_ids = {e.frame_id for e in manifest.frames}
    unknown = sorted(set(by_frame) - frame_ids)
    if unknown:
        raise DatasetError(f"detections refer to frames not in the dataset: {unknown[:5]}")
    timing_path = Path(args.timings) if args.timings else Path(f"{args.detections}.timing.tsv")
    timings = read_timings(timing_path) if timing_path.is_file() else {}
    results = [
        classify_frame(by_frame.get(f.frame_id, []), f.masks, f.frame_id, timings.get(f.frame_id),
                       eval_cfg.duplicates_as_fp)
        for f in manifest.load_frames()
    ]
    report = evaluate_video(results, eval_cfg) if args.kind == "video" else aggregate(results)
    label = args.label or Path(args.detections).stem
    if args.out:
        write_report(args.out, report, label, _provenance(cfg))
    sys.stdout.write(format_table([(label, report)]))
    return EXIT_OK


def cmd_fp_learn(args) -> int:
    cfg = _run_config(args)
    model = _load_model(args.model)
    frames = list(load_dataset(args.dataset).load_frames())
    records = collect_false_positives(model, frames, cfg.post_learn)
    _write_records(args.records, records, cfg)
    if records:
        model.train_negative(augment_fp_records(records, frames, cfg.post_learn))
    model.save(args.out)
    print(f"{len(records)} false positives collected -> {args.records}; model -> {args.out}")
    return EXIT_OK


def cmd_offline_learn(args) -> int:
    cfg = _run_config(args)
    model = _load_model(args.model)
    video = list(load_dataset(args.dataset, kind="video", fps=cfg.eval.fps).load_frames(with_annotations=False))
    records = collect_reliable_regions(model, video, cfg.post_learn)
    _write_records(args.records, records, cfg)
    if records:
        strategy = AugmentationConfig(cfg.post_learn.offline_augmentation,
                                      cfg.augmentation.visibility_threshold).build()
        frames = augment_all(pseudo_annotate(video, records), strategy)
        model.train_positive(frames, cfg.sampling_config, include_negatives=False)
    model.save(args.out)
    print(f"{len(records)} reliable regions -> {args.records}; model -> {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _run_config(args)
    rows = [read_report(p) for p in args.reports]
    rows = [(label or Path(p).stem, r) for (label, r), p in zip(rows, args.reports)]
    merged = merge_reports([r for _, r in rows], cfg.eval)
    table_rows = rows + [(args.label, merged)] if len(rows) > 1 else rows
    if args.out:
        write_report(args.out, merged, args.label, _provenance(cfg))
    sys.stdout.write(format_table(table_rows))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config field")
    p.add_argument("--seed", type=int, help="override rng_seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polypdet", description="Region-based polyp detection pipeline.")
    parser.add_argument("--version", action="version", version=f"polypdet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="write an augmented copy of a dataset")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--strategy", help="none, rot, aug1 or aug2 (default: from config)")
    _add_config_args(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train a model on an annotated dataset")
    p.add_argument("dataset")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--init", help="continue from an existing model")
    p.add_argument("--positives-only", action="store_true", help="do not add background exemplars")
    _add_config_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="run a model over a dataset")
    p.add_argument("dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="detections file (timings go to <out>.timing.tsv)")
    p.add_argument("--threshold", type=float, help="override the model's detection threshold")
    p.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    _add_config_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("dataset")
    p.add_argument("--detections", required=True)
    p.add_argument("--out", help="report file to write")
    p.add_argument("--kind", choices=("still", "video"), default="still")
    p.add_argument("--timings", help="timing file (default: <detections>.timing.tsv when present)")
    p.add_argument("--label", help="row label (default: detections file stem)")
    p.add_argument("--duplicates-as-fp", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fp-learn", help="learn false positives found on polyp-free frames")
    p.add_argument("dataset", help="dataset without polyps")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="retrained model file")
    p.add_argument("--records", required=True, help="file for the collected false positives")
    _add_config_args(p)
    p.set_defaults(func=cmd_fp_learn)

    p = sub.add_parser("offline-learn", help="self-train on one video's reliable detections")
    p.add_argument("dataset", help="video dataset (annotations ignored)")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="retrained model file")
    p.add_argument("--records", required=True, help="file for the reliable regions")
    _add_config_args(p)
    p.set_defaults(func=cmd_offline_learn)

    p = sub.add_parser("report", help="merge report files into one table")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", help="write the merged report here")
    p.add_argument("--label", default="all")
    _add_config_args(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc)
    except FileNotFoundError as exc:
        return _fail(EXIT_MISSING, exc)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except DatasetError as exc:
        return _fail(EXIT_DATASET, exc)
    except (DetectionsFormatError, ModelFormatError) as exc:
        return _fail(EXIT_FORMAT, exc)
    except (PolypDetError, ValueError) as exc:
        return _fail(EXIT_PIPELINE, exc)


def _fail(code: int, exc: BaseException) -> int:
    print(f"polypdet: error: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
