"""False-positive learning and video-specific offline learning.

Both procedures run the current model over frames, keep its most confident
detections, and feed them back as training data: as negatives when the
frames are known to be polyp-free, as pseudo-labelled positives when they
come from the video under analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple, Union

from .augmentation import ROT_BOX_FAMILY, ROT_FAMILY, AnnotatedFrame, AugmentationStrategy, augment_all
from .detector import ExemplarModel
from .geometry import BoundingBox, clip_to_frame, rasterize_box
from .proposal import SamplingConfig

DEFAULT_FP_TRANSFORMS = ("r90", "r180", "r270", "fh", "fv")


@dataclass(frozen=True)
class FPRecord:
    frame_id: str
    box: BoundingBox
    score: float


@dataclass(frozen=True)
class PostLearnConfig:
    fp_score_threshold: float = 0.99
    reliable_score_threshold: float = 0.99
    fp_augmentation: Tuple[str, ...] = DEFAULT_FP_TRANSFORMS
    offline_augmentation: str = "rot"

    def __post_init__(self) -> None:
        for v in (self.fp_score_threshold, self.reliable_score_threshold):
            if not 0 < v <= 1:
                raise ValueError("post-learning thresholds must lie in (0, 1]")
        object.__setattr__(self, "fp_augmentation", tuple(self.fp_augmentation))
        unknown = set(self.fp_augmentation) - set(ROT_BOX_FAMILY)
        if unknown:
            raise ValueError(f"unknown FP transforms {sorted(unknown)}; choose from {sorted(ROT_BOX_FAMILY)}")
        AugmentationStrategy.named(self.offline_augmentation)


def collect_false_positives(
    model: ExemplarModel, negative_frames: Sequence[AnnotatedFrame], cfg: PostLearnConfig = PostLearnConfig()
) -> List[FPRecord]:
    """Every detection at or above the FP threshold on polyp-free frames."""
    records = []
    for frame in negative_frames:
        if frame.annotations:
            raise ValueError(f"{frame.frame_id}: false-positive collection expects frames without polyps")
        for d in model.detect(frame):
            if d.score >= cfg.fp_score_threshold:
                records.append(FPRecord(frame.frame_id, d.box, d.score))
    return records


FrameLookup = Union[Mapping[str, AnnotatedFrame], Sequence[AnnotatedFrame]]


def _lookup(frames: FrameLookup) -> Dict[str, AnnotatedFrame]:
    if isinstance(frames, Mapping):
        return dict(frames)
    return {f.frame_id: f for f in frames}


def augment_fp_records(
    records: Sequence[FPRecord], frames: FrameLookup, cfg: PostLearnConfig = PostLearnConfig()
) -> List[Tuple[AnnotatedFrame, BoundingBox]]:
    """The original region plus its right-angle variants, boxes moved with the pixels."""
    by_id = _lookup(frames)
    ops = dict(ROT_FAMILY)
    regions = []
    for rec in records:
        frame = by_id[rec.frame_id]
        w, h = frame.width, frame.height
        regions.append((frame, rec.box))
        for tag in cfg.fp_augmentation:
            moved = ops[tag](frame)
            box = clip_to_frame(ROT_BOX_FAMILY[tag](rec.box, w, h), moved.width, moved.height)
            if box is not None:
                regions.append((moved.renamed(f"{frame.frame_id}_{tag}"), box))
    return regions


def fp_learn(
    model: ExemplarModel, negative_frames: Sequence[AnnotatedFrame], cfg: PostLearnConfig = PostLearnConfig()
) -> ExemplarModel:
    records = collect_false_positives(model, negative_frames, cfg)
    if records:
        model.train_negative(augment_fp_records(records, negative_frames, cfg))
    return model


def collect_reliable_regions(
    model: ExemplarModel, video: Sequence[AnnotatedFrame], cfg: PostLearnConfig = PostLearnConfig()
) -> List[FPRecord]:
    records = []
    for frame in video:
        for d in model.detect(frame):
            if d.score >= cfg.reliable_score_threshold:
                records.append(FPRecord(frame.frame_id, d.box, d.score))
    return records


def pseudo_annotate(video: Sequence[AnnotatedFrame], records: Sequence[FPRecord]) -> List[AnnotatedFrame]:
    """Frames carrying one rasterized-box mask per reliable region; ground truth dropped."""
    by_id = _lookup(video)
    grouped: Dict[str, List[BoundingBox]] = {}
    for rec in records:
        grouped.setdefault(rec.frame_id, []).append(rec.box)
    out = []
    for frame_id, boxes in grouped.items():
        frame = by_id[frame_id]
        masks = [rasterize_box(b, frame.width, frame.height) for b in boxes]
        out.append(AnnotatedFrame.from_masks(frame_id, frame.pixels, masks))
    return out


def offline_learn(
    model: ExemplarModel,
    video: Sequence[AnnotatedFrame],
    cfg: PostLearnConfig = PostLearnConfig(),
    sampling_cfg: SamplingConfig = SamplingConfig(),
) -> ExemplarModel:
    """Self-train on one video: reliable detections become augmented positives.

    Only the positive bank grows; the returned model is meant for a second
    pass over the same video.
    """
    records = collect_reliable_regions(model, video, cfg)
    if not records:
        return model
    frames = augment_all(pseudo_annotate(video, records), AugmentationStrategy.named(cfg.offline_augmentation))
    return model.train_positive(frames, sampling_cfg, include_negatives=False)

