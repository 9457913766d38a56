"""On-disk dataset layout.

::

    <root>/frames/<id>.png      8-bit RGB or grayscale frame (PNG or BMP)
    <root>/masks/<id>.png       optional single-channel mask, nonzero = polyp
    <root>/masks/<id>.<k>.png   additional masks for frames with several polyps

Frames are ordered by file name, so video frames must be zero-padded.
Frames without a mask file, or whose masks are all zero, are negative frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .augmentation import AnnotatedFrame
from .errors import DatasetError, DimensionMismatchError, DuplicateStemError, NoFramesError, UnreadableFileError
from .geometry import BinaryMask

IMAGE_SUFFIXES = (".png", ".bmp")
KINDS = ("still", "video")


@dataclass(frozen=True)
class FrameEntry:
    frame_id: str
    image: Path
    masks: Tuple[Path, ...] = ()


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    frames: Tuple[FrameEntry, ...]
    kind: str = "still"
    fps: float = 25.0

    def __len__(self) -> int:
        return len(self.frames)

    def load_frames(self, with_annotations: bool = True) -> Iterator[AnnotatedFrame]:
        for entry in self.frames:
            yield load_frame(entry, with_annotations)


def _image_files(directory: Path) -> List[Path]:
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _image_size(path: Path) -> Tuple[int, int]:
    try:
        with Image.open(path) as im:
            return im.size
    except (OSError, UnidentifiedImageError) as exc:
        raise UnreadableFileError(f"unreadable file: {path} ({exc})") from exc


def _mask_stem(stem: str, frame_ids) -> str:
    if stem in frame_ids:
        return stem
    base, _, k = stem.rpartition(".")
    if base and k.isdigit() and base in frame_ids:
        return base
    raise DatasetError(f"mask {stem!r} has no matching frame")


def load_dataset(root, kind: str = "still", fps: float = 25.0) -> DatasetManifest:
    root = Path(root)
    if kind not in KINDS:
        raise ValueError(f"dataset kind must be one of {KINDS}, got {kind!r}")
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    frames_dir = root / "frames"
    images = _image_files(frames_dir) if frames_dir.is_dir() else []
    if not images:
        raise NoFramesError(f"no frames found under {frames_dir}")

    by_stem: Dict[str, Path] = {}
    for p in images:
        if p.stem in by_stem:
            raise DuplicateStemError(f"duplicate stems: {by_stem[p.stem].name} and {p.name}")
        by_stem[p.stem] = p

    masks: Dict[str, List[Path]] = {stem: [] for stem in by_stem}
    masks_dir = root / "masks"
    if masks_dir.is_dir():
        seen: Dict[str, Path] = {}
        for p in _image_files(masks_dir):
            if p.stem in seen:
                raise DuplicateStemError(f"duplicate stems: {seen[p.stem].name} and {p.name}")
            seen[p.stem] = p
            masks[_mask_stem(p.stem, by_stem)].append(p)

    entries = []
    for stem, image in by_stem.items():
        size = _image_size(image)
        for m in masks[stem]:
            msize = _image_size(m)
            if msize != size:
                raise DimensionMismatchError(
                    f"dimension mismatch: mask {m.name} is {msize[0]}x{msize[1]}, frame {image.name} is {size[0]}x{size[1]}"
                )
        entries.append(FrameEntry(stem, image, tuple(masks[stem])))
    entries.sort(key=lambda e: e.image.name)
    return DatasetManifest(root, tuple(entries), kind, fps)


def _read(path: Path, mode: str) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert(mode))
    except (OSError, UnidentifiedImageError) as exc:
        raise UnreadableFileError(f"unreadable file: {path} ({exc})") from exc


def load_frame(entry: FrameEntry, with_annotations: bool = True) -> AnnotatedFrame:
    pixels = _read(entry.image, "RGB")
    masks = []
    if with_annotations:
        for path in entry.masks:
            bitmap = _read(path, "L") != 0
            if bitmap.shape != pixels.shape[:2]:
                raise DimensionMismatchError(f"dimension mismatch: {path.name} vs {entry.image.name}")
            if bitmap.any():
                masks.append(BinaryMask(bitmap))
    return AnnotatedFrame.from_masks(entry.frame_id, pixels, masks)


def write_dataset(frames: Sequence[AnnotatedFrame], root) -> Path:
    """Write frames (and their masks) in the layout :func:`load_dataset` reads."""
    root = Path(root)
    (root / "frames").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    for f in frames:
        if "." in f.frame_id or "/" in f.frame_id:
            raise ValueError(f"frame id {f.frame_id!r} must not contain '.' or '/'")
        Image.fromarray(np.asarray(f.pixels)).save(root / "frames" / f"{f.frame_id}.png")
        for k, m in enumerate(f.masks):
            name = f"{f.frame_id}.png" if k == 0 else f"{f.frame_id}.{k}.png"
            Image.fromarray(m.bitmap.astype(np.uint8) * 255).save(root / "masks" / name)
    return root
