"""Frame-level TP/FP/FN/TN classification and the still/video metrics.

A detection is a true positive when its box centroid falls inside a
ground-truth mask; at most one TP is counted per polyp. Percentages are
reported on a 0-100 scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import NotAPositiveSequenceError
from .geometry import BinaryMask, Detection, centroid, contains


@dataclass(frozen=True)
class EvalConfig:
    fps: float = 25.0
    duplicates_as_fp: bool = False

    def __post_init__(self) -> None:
        if not self.fps > 0:
            raise ValueError("fps must be positive")


@dataclass(frozen=True)
class FrameResult:
    frame_id: str
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    processing_time: Optional[float] = None
    duplicates: int = 0

    @property
    def n_gt(self) -> int:
        return self.tp + self.fn

    @property
    def is_polyp_frame(self) -> bool:
        return self.n_gt > 0


@dataclass
class MetricReport:
    tp: int
    fp: int
    fn: int
    tn: int
    pre: float
    rec: float
    spe: float
    f1: float
    f2: float
    pdr: Optional[float] = None
    rt_frames: Optional[float] = None
    rt_seconds: Optional[float] = None
    mpt: Optional[float] = None
    n_frames: int = 0
    n_videos: int = 0
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class VideoMetrics:
    pdr: float
    rt_frames: Optional[float]
    rt_seconds: Optional[float]


def classify_frame(
    dets: Sequence[Detection],
    gts: Sequence[BinaryMask],
    frame_id: str = "",
    processing_time: Optional[float] = None,
    duplicates_as_fp: bool = False,
) -> FrameResult:
    """Apply the centroid-in-mask rule to one frame.

    Each detection is matched to the first mask (annotation order) holding
    its centroid. Unmatched detections are FPs. A second detection on an
    already-detected polyp counts as neither TP nor FP unless
    ``duplicates_as_fp`` is set.
    """
    hit = [False] * len(gts)
    fp = dup = 0
    for d in dets:
        c = centroid(d.box)
        owner = next((i for i, m in enumerate(gts) if contains(m, c)), None)
        if owner is None:
            fp += 1
        elif hit[owner]:
            dup += 1
        else:
            hit[owner] = True
    if duplicates_as_fp:
        fp += dup
        dup = 0
    tp = sum(hit)
    tn = int(not gts and not dets)
    return FrameResult(frame_id, tp, fp, len(gts) - tp, tn, processing_time, dup)


def _pct(num: float, den: float) -> float:
    return 100.0 * num / den if den else 0.0


def metrics_from_counts(tp: int, fp: int, fn: int, tn: int) -> MetricReport:
    """Precision, recall, specificity, F1 and F2 from raw counts."""
    pre = _pct(tp, tp + fp)
    rec = _pct(tp, tp + fn)
    spe = _pct(tn, fp + tn)
    f1 = 2 * pre * rec / (pre + rec) if pre + rec else 0.0
    f2 = 5 * pre * rec / (4 * pre + rec) if pre + rec else 0.0
    return MetricReport(tp, fp, fn, tn, pre, rec, spe, f1, f2)


def aggregate(results: Sequence[FrameResult]) -> MetricReport:
    if not results:
        raise ValueError("cannot aggregate an empty result list")
    report = metrics_from_counts(
        sum(r.tp for r in results),
        sum(r.fp for r in results),
        sum(r.fn for r in results),
        sum(r.tn for r in results),
    )
    report.n_frames = len(results)
    times = [r.processing_time for r in results if r.processing_time is not None]
    if times:
        report.mpt = measure_mpt(times)
    return report


def frames_to_seconds(rt_frames: float, fps: float = 25.0) -> float:
    return rt_frames / fps


def video_metrics(
    results: Sequence[FrameResult],
    first_polyp_frame_index: Optional[int] = None,
    cfg: EvalConfig = EvalConfig(),
) -> VideoMetrics:
    """PDR and reaction time for one video, results in frame order.

    ``first_polyp_frame_index`` defaults to the first frame carrying a
    ground-truth polyp. RT is None when the polyp is never detected.
    """
    polyp_frames = [i for i, r in enumerate(results) if r.is_polyp_frame]
    if not polyp_frames:
        raise NotAPositiveSequenceError("not a positive sequence")
    first = polyp_frames[0] if first_polyp_frame_index is None else first_polyp_frame_index
    first_tp = next((i for i, r in enumerate(results) if r.tp >= 1), None)
    if first_tp is None:
        return VideoMetrics(0.0, None, None)
    rt = float(first_tp - first)
    return VideoMetrics(100.0, rt, frames_to_seconds(rt, cfg.fps))


def aggregate_videos(videos: Sequence[VideoMetrics], cfg: EvalConfig = EvalConfig()) -> VideoMetrics:
    """Average PDR over all videos and RT over the videos where the polyp was found."""
    if not videos:
        raise ValueError("cannot aggregate an empty video list")
    pdr = sum(v.pdr for v in videos) / len(videos)
    found = [v.rt_frames for v in videos if v.pdr == 100.0 and v.rt_frames is not None]
    if not found:
        return VideoMetrics(pdr, None, None)
    rt = math.fsum(found) / len(found)
    return VideoMetrics(pdr, rt, frames_to_seconds(rt, cfg.fps))


def measure_mpt(times: Sequence[float]) -> float:
    if not times:
        raise ValueError("no processing times to average")
    return math.fsum(times) / len(times)


def evaluate_video(
    results: Sequence[FrameResult],
    cfg: EvalConfig = EvalConfig(),
    first_polyp_frame_index: Optional[int] = None,
) -> MetricReport:
    """Counts plus video metrics for a single positive sequence."""
    report = aggregate(results)
    vm = video_metrics(results, first_polyp_frame_index, cfg)
    report.pdr, report.rt_frames, report.rt_seconds = vm.pdr, vm.rt_frames, vm.rt_seconds
    report.n_videos = 1
    return report


def merge_reports(reports: Sequence[MetricReport], cfg: EvalConfig = EvalConfig()) -> MetricReport:
    """Pool counts across reports; average PDR and RT over videos, frame-weight MPT."""
    if not reports:
        raise ValueError("no reports to merge")
    merged = metrics_from_counts(
        sum(r.tp for r in reports), sum(r.fp for r in reports), sum(r.fn for r in reports), sum(r.tn for r in reports)
    )
    merged.n_frames = sum(r.n_frames for r in reports)
    videos = [VideoMetrics(r.pdr, r.rt_frames, r.rt_seconds) for r in reports if r.pdr is not None]
    if videos:
        vm = aggregate_videos(videos, cfg)
        merged.pdr, merged.rt_frames, merged.rt_seconds = vm.pdr, vm.rt_frames, vm.rt_seconds
        merged.n_videos = len(videos)
    weighted = [(r.mpt, r.n_frames) for r in reports if r.mpt is not None and r.n_frames]
    if weighted:
        merged.mpt = math.fsum(m * n for m, n in weighted) / sum(n for _, n in weighted)
    return merged
