"""Region machinery: anchors, IoU label assignment, sampling, NMS, crop-and-resize."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ._sampling import bilinear
from .errors import EmptyCropError, NothingToSampleError
from .geometry import BoundingBox, Detection, array_to_boxes, boxes_to_array, clip_to_frame, iou_matrix


@dataclass(frozen=True)
class AnchorConfig:
    base_size: float = 128.0
    scales: Tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)
    aspect_ratios: Tuple[float, ...] = (0.5, 1.0, 2.0)
    stride: int = 16

    def __post_init__(self) -> None:
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        object.__setattr__(self, "aspect_ratios", tuple(float(r) for r in self.aspect_ratios))
        if self.base_size <= 0 or self.stride <= 0:
            raise ValueError("base_size and stride must be positive")
        if not self.scales or not self.aspect_ratios:
            raise ValueError("anchor config needs at least one scale and one aspect ratio")
        if any(v <= 0 for v in self.scales + self.aspect_ratios):
            raise ValueError("scales and aspect ratios must be positive")

    @property
    def k(self) -> int:
        return len(self.scales) * len(self.aspect_ratios)


@dataclass(frozen=True)
class SamplingConfig:
    minibatch_size: int = 256
    positive_fraction: float = 0.5
    pos_iou: float = 0.6
    neg_iou: float = 0.3
    rng_seed: int = 0
    force_best_match: bool = True

    def __post_init__(self) -> None:
        if not 0 <= self.neg_iou < self.pos_iou <= 1:
            raise ValueError(f"need 0 <= neg_iou < pos_iou <= 1, got {self.neg_iou}, {self.pos_iou}")
        if self.minibatch_size < 1:
            raise ValueError("minibatch_size must be >= 1")
        if not 0 <= self.positive_fraction <= 1:
            raise ValueError("positive_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class ProposalConfig:
    train_nms_iou: float = 0.7
    test_nms_iou: float = 0.6
    max_proposals: int = 300

    def __post_init__(self) -> None:
        for v in (self.train_nms_iou, self.test_nms_iou):
            if not 0 < v <= 1:
                raise ValueError("NMS thresholds must lie in (0, 1]")
        if self.max_proposals < 1:
            raise ValueError("max_proposals must be >= 1")


@dataclass(frozen=True)
class RoiConfig:
    out_h: int = 16
    out_w: int = 16

    def __post_init__(self) -> None:
        if self.out_h < 2 or self.out_w < 2:
            raise ValueError("crop size must be at least 2x2")


# -- anchors -------------------------------------------------------------------


def anchor_array(feature_h: int, feature_w: int, cfg: AnchorConfig) -> np.ndarray:
    """``(feature_h * feature_w * k, 4)`` xywh anchors, position-major."""
    if feature_h < 1 or feature_w < 1:
        raise ValueError("feature map dimensions must be >= 1")
    shapes = []
    for s in cfg.scales:
        for r in cfg.aspect_ratios:
            shapes.append((cfg.base_size * s / math.sqrt(r), cfg.base_size * s * math.sqrt(r)))
    shapes = np.array(shapes)
    cy = (np.arange(feature_h) + 0.5) * cfg.stride
    cx = (np.arange(feature_w) + 0.5) * cfg.stride
    cyy, cxx = np.meshgrid(cy, cx, indexing="ij")
    centers = np.stack([cxx.ravel(), cyy.ravel()], axis=1)
    ws = shapes[None, :, 0]
    hs = shapes[None, :, 1]
    out = np.empty((centers.shape[0], shapes.shape[0], 4))
    out[..., 0] = centers[:, 0:1] - ws / 2.0
    out[..., 1] = centers[:, 1:2] - hs / 2.0
    out[..., 2] = ws
    out[..., 3] = hs
    return out.reshape(-1, 4)


def generate_anchors(feature_h: int, feature_w: int, cfg: AnchorConfig = AnchorConfig()) -> List[BoundingBox]:
    """Tile ``cfg.k`` anchors at every feature-map position.

    Anchors are centered at ``((j + 0.5) * stride, (i + 0.5) * stride)``; for
    scale ``s`` and ratio ``r`` (h/w) the size is ``base*s/sqrt(r)`` by
    ``base*s*sqrt(r)``. Anchors are not clipped to the frame.
    """
    return array_to_boxes(anchor_array(feature_h, feature_w, cfg))


# -- label assignment and sampling --------------------------------------------


class LabelKind(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    IGNORE = "ignore"


@dataclass(frozen=True)
class AnchorLabel:
    kind: LabelKind
    matched_gt: Optional[int] = None

    def __post_init__(self) -> None:
        if (self.kind is LabelKind.POSITIVE) != (self.matched_gt is not None):
            raise ValueError("positive labels carry a matched gt index; others must not")


def _as_array(boxes) -> np.ndarray:
    if isinstance(boxes, np.ndarray):
        return boxes.reshape(-1, 4).astype(np.float64)
    return boxes_to_array(boxes)


def assign_labels(anchors, gt_boxes, cfg: SamplingConfig = SamplingConfig()) -> List[AnchorLabel]:
    """Label each anchor positive / negative / ignore by its best IoU.

    IoU >= ``pos_iou`` is positive (matched to the best gt, ties to the lowest
    index), best IoU <= ``neg_iou`` is negative, anything between is ignored.
    With ``force_best_match`` each gt also claims its highest-IoU anchor
    (lowest anchor index on ties) as a positive matched to itself, unless
    that anchor is already positive on its own merit or claimed by an earlier gt.
    """
    a = _as_array(anchors)
    g = _as_array(gt_boxes)
    n = a.shape[0]
    if g.shape[0] == 0:
        return [AnchorLabel(LabelKind.NEGATIVE)] * n
    ious = iou_matrix(a, g)
    best_gt = np.argmax(ious, axis=1)
    best_iou = ious[np.arange(n), best_gt]
    matched = np.full(n, -1, dtype=np.intp)
    pos = best_iou >= cfg.pos_iou
    matched[pos] = best_gt[pos]
    kinds = np.where(pos, 1, np.where(best_iou <= cfg.neg_iou, -1, 0))
    if cfg.force_best_match and n:
        for j in range(g.shape[0]):
            i = int(np.argmax(ious[:, j]))
            if kinds[i] != 1:
                kinds[i] = 1
                matched[i] = j
    labels = []
    for kind, m in zip(kinds, matched):
        if kind == 1:
            labels.append(AnchorLabel(LabelKind.POSITIVE, int(m)))
        elif kind == -1:
            labels.append(AnchorLabel(LabelKind.NEGATIVE))
        else:
            labels.append(AnchorLabel(LabelKind.IGNORE))
    return labels


class Minibatch(NamedTuple):
    positives: np.ndarray
    negatives: np.ndarray
    undersized: bool


def sample_minibatch(
    labels: Sequence[AnchorLabel],
    cfg: SamplingConfig = SamplingConfig(),
    rng: Optional[np.random.Generator] = None,
) -> Minibatch:
    """Draw up to ``minibatch_size`` anchor indices, positives capped by the fraction.

    The positive shortfall is filled with negatives. Indices come back sorted.
    ``rng`` defaults to a generator seeded from ``cfg.rng_seed``.
    """
    pos = np.array([i for i, l in enumerate(labels) if l.kind is LabelKind.POSITIVE], dtype=np.intp)
    neg = np.array([i for i, l in enumerate(labels) if l.kind is LabelKind.NEGATIVE], dtype=np.intp)
    if pos.size == 0 and neg.size == 0:
        raise NothingToSampleError("nothing to sample")
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    pos_cap = int(cfg.minibatch_size * cfg.positive_fraction)
    n_pos = min(pos.size, pos_cap)
    n_neg = min(neg.size, cfg.minibatch_size - n_pos)
    take_pos = np.sort(rng.choice(pos, size=n_pos, replace=False)) if n_pos else pos[:0]
    take_neg = np.sort(rng.choice(neg, size=n_neg, replace=False)) if n_neg else neg[:0]
    return Minibatch(take_pos, take_neg, n_pos + n_neg < cfg.minibatch_size)


# -- suppression and proposal selection ----------------------------------------


def nms_indices(boxes: np.ndarray, scores: np.ndarray, iou_threshold: float) -> np.ndarray:
    """Greedy NMS over arrays; returns kept indices in descending-score order.

    Score ties are broken by smaller x, then smaller y, then input order.
    """
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    scores = np.asarray(scores, dtype=np.float64)
    if boxes.shape[0] == 0:
        return np.zeros(0, dtype=np.intp)
    order = np.lexsort((np.arange(len(scores)), boxes[:, 1], boxes[:, 0], -scores))
    ordered = boxes[order]
    suppressed = np.zeros(len(order), dtype=bool)
    keep = []
    for pos in range(len(order)):
        if suppressed[pos]:
            continue
        keep.append(order[pos])
        suppressed |= iou_matrix(ordered[pos], ordered)[0] > iou_threshold
    return np.array(keep, dtype=np.intp)


def nms(dets: Sequence[Detection], iou_threshold: float) -> List[Detection]:
    if not dets:
        return []
    boxes = boxes_to_array(d.box for d in dets)
    scores = np.array([d.score for d in dets])
    return [dets[i] for i in nms_indices(boxes, scores, iou_threshold)]


def select_proposals(
    scored: Sequence[Detection],
    cfg: ProposalConfig,
    mode: str,
    width: int,
    height: int,
) -> List[Detection]:
    """Clip to the frame, drop empty boxes, suppress, keep the top ``max_proposals``."""
    if mode == "train":
        thr = cfg.train_nms_iou
    elif mode == "test":
        thr = cfg.test_nms_iou
    else:
        raise ValueError(f"mode must be 'train' or 'test', got {mode!r}")
    clipped = []
    for d in scored:
        box = clip_to_frame(d.box, width, height)
        if box is not None:
            clipped.append(d if box is d.box else Detection(box, d.score))
    return nms(clipped, thr)[: cfg.max_proposals]


# -- crop and resize ------------------------------------------------------------


def _sample_grid(boxes: np.ndarray, out_h: int, out_w: int) -> Tuple[np.ndarray, np.ndarray]:
    """Corner-aligned sample coordinates, ``(N, out_h, 1)`` rows and ``(N, 1, out_w)`` cols.

    The first and last samples sit on the box's first and last covered pixel
    (``x`` and ``x + w - 1``), so a whole-image box at the image's own size
    reproduces the image.
    """
    x, y, w, h = boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3]
    span_w = np.maximum(w - 1.0, 0.0)
    span_h = np.maximum(h - 1.0, 0.0)
    tr = np.arange(out_h) / (out_h - 1)
    tc = np.arange(out_w) / (out_w - 1)
    rows = y[:, None, None] + span_h[:, None, None] * tr[None, :, None]
    cols = x[:, None, None] + span_w[:, None, None] * tc[None, None, :]
    return rows, cols


def crop_and_resize_batch(image: np.ndarray, boxes: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear crops of many boxes from a 2-D image; no overlap check."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    rows, cols = _sample_grid(boxes, out_h, out_w)
    return bilinear(image, rows, cols, outside="edge")


def crop_and_resize(image: np.ndarray, box: BoundingBox, cfg: RoiConfig) -> np.ndarray:
    """Resample the region under ``box`` to ``cfg.out_h x cfg.out_w``.

    Samples outside the image replicate the nearest edge pixel. Raises
    :class:`EmptyCropError` when the box does not overlap the image.
    """
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]
    if clip_to_frame(box, w, h) is None:
        raise EmptyCropError("empty crop")
    return crop_and_resize_batch(image, boxes_to_array([box]), cfg.out_h, cfg.out_w)[0]
