"""Boxes, masks and the box arithmetic every other module builds on.

Coordinates are continuous pixel units with the origin at the top-left
corner of the frame. A box ``(x, y, w, h)`` covering integer pixel columns
``x .. x+w-1`` is exactly what :func:`mask_bbox` returns for a mask whose
true columns span that range. Pixel lookups of continuous points use
round-half-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from .errors import EmptyAnnotationError

Point = Tuple[float, float]


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box anchored at its top-left corner."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"box {name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box must have positive size, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> "BoundingBox":
        return cls(x1, y1, x2 - x1, y2 - y1)


@dataclass(frozen=True)
class BoxDelta:
    """Regression target relative to an anchor (center offsets, log sizes)."""

    tx: float
    ty: float
    tw: float
    th: float

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.tx, self.ty, self.tw, self.th)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Per-pixel annotation; ``bitmap[row, col]`` is True on the polyp."""

    bitmap: np.ndarray

    def __post_init__(self) -> None:
        bitmap = np.array(self.bitmap, dtype=bool, copy=True)
        if bitmap.ndim != 2 or bitmap.shape[0] < 1 or bitmap.shape[1] < 1:
            raise ValueError(f"mask must be a non-empty 2-D array, got shape {bitmap.shape}")
        bitmap.setflags(write=False)
        object.__setattr__(self, "bitmap", bitmap)

    @property
    def width(self) -> int:
        return self.bitmap.shape[1]

    @property
    def height(self) -> int:
        return self.bitmap.shape[0]

    @property
    def area(self) -> int:
        return int(self.bitmap.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.bitmap.shape == other.bitmap.shape and bool(np.array_equal(self.bitmap, other.bitmap))

    def __hash__(self) -> int:
        return hash((self.bitmap.shape, self.bitmap.tobytes()))


@dataclass(frozen=True)
class Detection:
    """A scored box, the detector's unit of output."""

    box: BoundingBox
    score: float

    def __post_init__(self) -> None:
        score = float(self.score)
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"detection score must lie in [0, 1], got {score}")
        object.__setattr__(self, "score", score)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def centroid(b: BoundingBox) -> Point:
    return (b.x + b.w / 2.0, b.y + b.h / 2.0)


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def contains(m: BinaryMask, p: Point) -> bool:
    """True iff ``p`` rounds to an in-frame pixel that is set in ``m``."""
    col = _round_half_up(p[0])
    row = _round_half_up(p[1])
    if not (0 <= row < m.height and 0 <= col < m.width):
        return False
    return bool(m.bitmap[row, col])


def encode_box(anchor: BoundingBox, gt: BoundingBox) -> BoxDelta:
    acx, acy = centroid(anchor)
    gcx, gcy = centroid(gt)
    return BoxDelta(
        (gcx - acx) / anchor.w,
        (gcy - acy) / anchor.h,
        math.log(gt.w / anchor.w),
        math.log(gt.h / anchor.h),
    )


def decode_box(anchor: BoundingBox, d: BoxDelta) -> BoundingBox:
    acx, acy = centroid(anchor)
    cx = acx + d.tx * anchor.w
    cy = acy + d.ty * anchor.h
    w = anchor.w * math.exp(d.tw)
    h = anchor.h * math.exp(d.th)
    return BoundingBox(cx - w / 2.0, cy - h / 2.0, w, h)


def clip_to_frame(b: BoundingBox, width: float, height: float) -> Optional[BoundingBox]:
    """Intersect ``b`` with the frame rectangle; None when nothing remains."""
    if width <= 0 or height <= 0:
        raise ValueError("frame dimensions must be positive")
    x1, y1 = max(b.x, 0.0), max(b.y, 0.0)
    x2, y2 = min(b.x2, float(width)), min(b.y2, float(height))
    if x2 - x1 <= 0 or y2 - y1 <= 0:
        return None
    if (x1, y1, x2, y2) == (b.x, b.y, b.x2, b.y2):
        return b
    return BoundingBox.from_corners(x1, y1, x2, y2)


def mask_bbox(m: BinaryMask) -> BoundingBox:
    rows = np.flatnonzero(m.bitmap.any(axis=1))
    if rows.size == 0:
        raise EmptyAnnotationError("empty annotation")
    cols = np.flatnonzero(m.bitmap.any(axis=0))
    return BoundingBox(
        float(cols[0]), float(rows[0]), float(cols[-1] - cols[0] + 1), float(rows[-1] - rows[0] + 1)
    )


def rasterize_box(b: BoundingBox, width: int, height: int) -> BinaryMask:
    """Fill the pixels covered by ``b`` (inverse of :func:`mask_bbox` on integer boxes).

    Edges are rounded half-up; a box always sets at least one pixel if it
    overlaps the frame at all.
    """
    x1 = min(max(_round_half_up(b.x), 0), width - 1)
    y1 = min(max(_round_half_up(b.y), 0), height - 1)
    x2 = min(max(_round_half_up(b.x2), x1 + 1), width)
    y2 = min(max(_round_half_up(b.y2), y1 + 1), height)
    bitmap = np.zeros((height, width), dtype=bool)
    bitmap[y1:y2, x1:x2] = True
    return BinaryMask(bitmap)


def boxes_to_array(boxes: Iterable[BoundingBox]) -> np.ndarray:
    """Stack boxes into an ``(N, 4)`` float array of ``(x, y, w, h)`` rows."""
    arr = np.array([b.as_tuple() for b in boxes], dtype=np.float64)
    return arr.reshape(-1, 4)


def array_to_boxes(arr: np.ndarray) -> list:
    return [BoundingBox(*row) for row in np.asarray(arr, dtype=np.float64).reshape(-1, 4)]


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between ``(N, 4)`` and ``(M, 4)`` xywh arrays."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    ax1, ay1 = a[:, 0:1], a[:, 1:2]
    ax2, ay2 = ax1 + a[:, 2:3], ay1 + a[:, 3:4]
    bx1, by1 = b[:, 0], b[:, 1]
    bx2, by2 = bx1 + b[:, 2], by1 + b[:, 3]
    iw = np.clip(np.minimum(ax2, bx2) - np.maximum(ax1, bx1), 0.0, None)
    ih = np.clip(np.minimum(ay2, by2) - np.maximum(ay1, by1), 0.0, None)
    inter = iw * ih
    union = (a[:, 2:3] * a[:, 3:4]) + (b[:, 2] * b[:, 3]) - inter
    return inter / union

