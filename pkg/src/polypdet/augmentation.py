"""Box- and mask-consistent image transforms and the four training strategies.

Every geometric transform moves pixels and masks together and recomputes
each annotation box from its transformed mask, so ``box == mask_bbox(mask)``
holds for every frame this module produces. Photometric transforms leave
annotations untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import correlate1d

from ._sampling import to_uint8, warp_affine
from .geometry import BinaryMask, BoundingBox, mask_bbox


@dataclass(frozen=True)
class Annotation:
    mask: BinaryMask
    box: BoundingBox


@dataclass(frozen=True, eq=False)
class AnnotatedFrame:
    """An ``H x W x 3`` uint8 image with zero or more polyp annotations."""

    frame_id: str
    pixels: np.ndarray
    annotations: Tuple[Annotation, ...] = ()

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels)
        if pixels.ndim == 2:
            pixels = np.repeat(pixels[:, :, None], 3, axis=2)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError(f"frame pixels must be H x W x 3, got shape {pixels.shape}")
        if pixels.dtype != np.uint8:
            raise ValueError(f"frame pixels must be uint8, got {pixels.dtype}")
        if pixels.flags.writeable:
            pixels = pixels.copy()
            pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)
        annotations = tuple(self.annotations)
        for ann in annotations:
            if (ann.mask.height, ann.mask.width) != pixels.shape[:2]:
                raise ValueError(
                    f"{self.frame_id}: mask {ann.mask.width}x{ann.mask.height} does not match "
                    f"frame {pixels.shape[1]}x{pixels.shape[0]}"
                )
            if ann.box != mask_bbox(ann.mask):
                raise ValueError(f"{self.frame_id}: annotation box is not the mask's bounding box")
        object.__setattr__(self, "annotations", annotations)

    @classmethod
    def from_masks(cls, frame_id: str, pixels: np.ndarray, masks: Sequence) -> "AnnotatedFrame":
        anns = []
        for m in masks:
            m = m if isinstance(m, BinaryMask) else BinaryMask(m)
            anns.append(Annotation(m, mask_bbox(m)))
        return cls(frame_id, pixels, tuple(anns))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def masks(self) -> List[BinaryMask]:
        return [a.mask for a in self.annotations]

    @property
    def gt_boxes(self) -> List[BoundingBox]:
        return [a.box for a in self.annotations]

    def renamed(self, frame_id: str) -> "AnnotatedFrame":
        return replace(self, frame_id=frame_id)

    def same_content(self, other: "AnnotatedFrame") -> bool:
        """Bit-exact comparison of pixels and annotations (ids ignored)."""
        return (
            self.pixels.shape == other.pixels.shape
            and bool(np.array_equal(self.pixels, other.pixels))
            and self.annotations == other.annotations
        )


def _rebuild(f: AnnotatedFrame, pixels: np.ndarray, masks: Sequence[np.ndarray]) -> AnnotatedFrame:
    return AnnotatedFrame.from_masks(f.frame_id, pixels, [BinaryMask(m) for m in masks])


# -- rotations and flips ------------------------------------------------------


def rotate(f: AnnotatedFrame, angle: int) -> AnnotatedFrame:
    """Rotate clockwise by 90, 180 or 270 degrees."""
    if angle not in (90, 180, 270):
        raise ValueError(f"rotation angle must be 90, 180 or 270, got {angle}")
    k = -(angle // 90)
    pixels = np.rot90(f.pixels, k=k, axes=(0, 1))
    masks = [np.rot90(m.bitmap, k=k) for m in f.masks]
    return _rebuild(f, np.ascontiguousarray(pixels), masks)


def flip(f: AnnotatedFrame, axis: str) -> AnnotatedFrame:
    """Mirror left-right (``"horizontal"``) or top-bottom (``"vertical"``)."""
    if axis == "horizontal":
        sl = (slice(None), slice(None, None, -1))
    elif axis == "vertical":
        sl = (slice(None, None, -1), slice(None))
    else:
        raise ValueError(f"flip axis must be 'horizontal' or 'vertical', got {axis!r}")
    pixels = np.ascontiguousarray(f.pixels[sl])
    masks = [m.bitmap[sl] for m in f.masks]
    return _rebuild(f, pixels, masks)


def rotate_box(b: BoundingBox, width: float, height: float, angle: int) -> BoundingBox:
    """Where ``b`` lands when a ``width x height`` frame is rotated clockwise."""
    if angle == 90:
        return BoundingBox(height - b.y2, b.x, b.h, b.w)
    if angle == 180:
        return BoundingBox(width - b.x2, height - b.y2, b.w, b.h)
    if angle == 270:
        return BoundingBox(b.y, width - b.x2, b.h, b.w)
    raise ValueError(f"rotation angle must be 90, 180 or 270, got {angle}")


def flip_box(b: BoundingBox, width: float, height: float, axis: str) -> BoundingBox:
    if axis == "horizontal":
        return BoundingBox(width - b.x - b.w, b.y, b.w, b.h)
    if axis == "vertical":
        return BoundingBox(b.x, height - b.y - b.h, b.w, b.h)
    raise ValueError(f"flip axis must be 'horizontal' or 'vertical', got {axis!r}")


# Original frame plus the five right-angle variants, in enumeration order.
ROT_FAMILY: Tuple[Tuple[str, Callable[[AnnotatedFrame], AnnotatedFrame]], ...] = (
    ("", lambda f: f),
    ("r90", lambda f: rotate(f, 90)),
    ("r180", lambda f: rotate(f, 180)),
    ("r270", lambda f: rotate(f, 270)),
    ("fh", lambda f: flip(f, "horizontal")),
    ("fv", lambda f: flip(f, "vertical")),
)

ROT_BOX_FAMILY = {
    "r90": lambda b, w, h: rotate_box(b, w, h, 90),
    "r180": lambda b, w, h: rotate_box(b, w, h, 180),
    "r270": lambda b, w, h: rotate_box(b, w, h, 270),
    "fh": lambda b, w, h: flip_box(b, w, h, "horizontal"),
    "fv": lambda b, w, h: flip_box(b, w, h, "vertical"),
}


# -- resampling transforms ----------------------------------------------------


def _resample_masks(masks: Sequence[BinaryMask], out_shape, inverse) -> List[np.ndarray]:
    out = []
    for m in masks:
        soft = warp_affine(m.bitmap.astype(np.float64), out_shape, inverse, outside="zero")
        out.append(soft)
    return out


def zoom(f: AnnotatedFrame, factor: float, visibility_threshold: float = 0.5) -> Optional[AnnotatedFrame]:
    """Zoom about the frame center, keeping the frame size.

    ``factor > 0`` zooms in: the central ``W/(1+p) x H/(1+p)`` window is
    upscaled to ``W x H``. ``factor < 0`` zooms out: the frame shrinks to
    ``(1-p)`` scale and the border is filled by edge replication.

    Returns None when any annotation keeps less than ``visibility_threshold``
    of its (scale-corrected) area.
    """
    if not abs(factor) < 1:
        raise ValueError(f"zoom factor must satisfy |factor| < 1, got {factor}")
    if factor == 0:
        return f
    scale = 1.0 + factor
    h, w = f.height, f.width
    cx, cy = w / 2.0, h / 2.0
    inverse = np.array([[1.0 / scale, 0.0, cx - cx / scale], [0.0, 1.0 / scale, cy - cy / scale]])
    pixels = to_uint8(warp_affine(f.pixels, (h, w), inverse, outside="edge"))
    masks = []
    for m, soft in zip(f.masks, _resample_masks(f.masks, (h, w), inverse)):
        hard = soft >= 0.5
        expected = m.area * scale * scale
        if hard.sum() < visibility_threshold * expected or not hard.any():
            return None
        masks.append(hard)
    return _rebuild(f, pixels, masks)


def shear_matrix(axis: str, magnitude: float, width: int, height: int) -> Tuple[np.ndarray, Tuple[int, int]]:
    """Forward 2x3 shear map and the ``(height, width)`` canvas that holds it.

    x-axis: ``x' = x + m*y``; y-axis: ``y' = y + m*x``; then shifted so the
    sheared frame starts at the canvas origin.
    """
    if axis == "x":
        offset = max(0.0, -magnitude * height)
        fwd = np.array([[1.0, magnitude, offset], [0.0, 1.0, 0.0]])
        canvas = (height, int(math.ceil(width + abs(magnitude) * height - 1e-9)))
    elif axis == "y":
        offset = max(0.0, -magnitude * width)
        fwd = np.array([[1.0, 0.0, 0.0], [magnitude, 1.0, offset]])
        canvas = (int(math.ceil(height + abs(magnitude) * width - 1e-9)), width)
    else:
        raise ValueError(f"shear axis must be 'x' or 'y', got {axis!r}")
    return fwd, canvas


def _invert_affine(fwd: np.ndarray) -> np.ndarray:
    full = np.vstack([fwd, [0.0, 0.0, 1.0]])
    return np.linalg.inv(full)[:2]


def shear(f: AnnotatedFrame, axis: str, magnitude: float) -> AnnotatedFrame:
    """Shear along ``axis`` onto an enlarged canvas; masks follow the pixels."""
    if abs(magnitude) > 0.5:
        raise ValueError(f"shear magnitude must satisfy |m| <= 0.5, got {magnitude}")
    if magnitude == 0:
        return f
    fwd, canvas = shear_matrix(axis, magnitude, f.width, f.height)
    inverse = _invert_affine(fwd)
    pixels = to_uint8(warp_affine(f.pixels, canvas, inverse, outside="edge"))
    masks = []
    for soft in _resample_masks(f.masks, canvas, inverse):
        hard = soft >= 0.5
        if not hard.any():
            # a sliver thinner than the re-threshold keeps its strongest pixel
            hard = np.zeros_like(hard)
            hard[np.unravel_index(np.argmax(soft), soft.shape)] = True
        masks.append(hard)
    return _rebuild(f, pixels, masks)


# -- photometric transforms ---------------------------------------------------


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps with radius ``ceil(3 * sigma)``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def blur(f: AnnotatedFrame, sigma: float) -> AnnotatedFrame:
    kernel = gaussian_kernel(sigma)
    img = f.pixels.astype(np.float64)
    img = correlate1d(img, kernel, axis=0, mode="nearest")
    img = correlate1d(img, kernel, axis=1, mode="nearest")
    return replace(f, pixels=to_uint8(img))


def adjust_brightness(f: AnnotatedFrame, gain: float) -> AnnotatedFrame:
    if gain <= 0:
        raise ValueError("gain must be positive")
    if gain == 1.0:
        return f
    return replace(f, pixels=to_uint8(f.pixels.astype(np.float64) * gain))


# -- strategies ---------------------------------------------------------------

STRATEGY_NAMES = ("none", "rot", "aug1", "aug2")

_ALIASES = {
    "none": "none",
    "w/o": "none",
    "rot": "rot",
    "augi": "aug1",
    "aug-i": "aug1",
    "aug1": "aug1",
    "augii": "aug2",
    "aug-ii": "aug2",
    "aug2": "aug2",
}


@dataclass(frozen=True)
class AugmentationStrategy:
    name: str = "none"
    zoom_in_factors: Tuple[float, ...] = ()
    zoom_out_factors: Tuple[float, ...] = ()
    shear_magnitudes: Tuple[float, ...] = ()
    blur_sigma: Optional[float] = None
    brightness_gains: Tuple[float, ...] = ()
    visibility_threshold: float = 0.5

    def __post_init__(self) -> None:
        name = _ALIASES.get(str(self.name).lower())
        if name is None:
            raise ValueError(f"unknown augmentation strategy {self.name!r}; expected one of {STRATEGY_NAMES}")
        object.__setattr__(self, "name", name)
        if not 0 < self.visibility_threshold <= 1:
            raise ValueError("visibility_threshold must lie in (0, 1]")

    @classmethod
    def named(cls, name: str, **overrides) -> "AugmentationStrategy":
        key = _ALIASES.get(str(name).lower())
        if key is None:
            raise ValueError(f"unknown augmentation strategy {name!r}; expected one of {STRATEGY_NAMES}")
        params = dict(name=key)
        if key in ("aug1", "aug2"):
            params.update(
                zoom_in_factors=(0.10,),
                zoom_out_factors=(0.10, 0.30, 0.50),
                shear_magnitudes=(0.2, -0.2),
            )
        if key == "aug2":
            params.update(blur_sigma=1.0, brightness_gains=(1.3, 0.7))
        params.update(overrides)
        return cls(**params)


def _tag(frame_id: str, *parts: str) -> str:
    return "_".join([frame_id] + [p for p in parts if p])


def _pct(v: float) -> str:
    return f"{int(round(abs(v) * 100)):02d}"


def apply_strategy(f: AnnotatedFrame, s: AugmentationStrategy) -> List[AnnotatedFrame]:
    """Enumerate the strategy's outputs for one frame, in a fixed order.

    none: the frame. rot: frame, 90/180/270 rotations, horizontal and vertical
    flips. aug1: rot outputs, shears of the original, and every zoom of every
    rot output (zooms failing the visibility check are skipped). aug2: aug1
    plus blur and each brightness gain applied to every rot output.
    """
    if s.name == "none":
        return [f]

    bases = [(tag, op(f).renamed(_tag(f.frame_id, tag))) for tag, op in ROT_FAMILY]
    out = [frame for _, frame in bases]
    if s.name == "rot":
        return out

    for axis in ("x", "y"):
        for m in s.shear_magnitudes:
            sign = "p" if m >= 0 else "m"
            out.append(shear(f, axis, m).renamed(_tag(f.frame_id, f"sh{axis}{sign}{_pct(m)}")))

    zooms = [(f"zi{_pct(p)}", p) for p in s.zoom_in_factors] + [(f"zo{_pct(p)}", -p) for p in s.zoom_out_factors]
    for tag, base in bases:
        for ztag, factor in zooms:
            z = zoom(base, factor, s.visibility_threshold)
            if z is not None:
                out.append(z.renamed(_tag(f.frame_id, tag, ztag)))

    if s.name == "aug2":
        for tag, base in bases:
            if s.blur_sigma is not None:
                out.append(blur(base, s.blur_sigma).renamed(_tag(f.frame_id, tag, "blur")))
            for g in s.brightness_gains:
                out.append(
                    adjust_brightness(base, g).renamed(_tag(f.frame_id, tag, f"bri{int(round(g * 100)):03d}"))
                )
    return out


def augment_all(frames: Sequence[AnnotatedFrame], s: AugmentationStrategy) -> List[AnnotatedFrame]:
    out: List[AnnotatedFrame] = []
    for f in frames:
        out.extend(apply_strategy(f, s))
    return out
