"""Synthetic frames with planted textures, used by the tests and the demos.

Textures are random block patterns (gray levels constant over ``cell x cell``
blocks). Two independent textures are nearly orthogonal as features; a
*mimic* of a texture has a chosen cosine similarity to it, which makes it a
controllable polyp look-alike.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from .augmentation import AnnotatedFrame
from .geometry import BinaryMask

Plant = Tuple[np.ndarray, int, int, bool]  # texture, x, y, is_polyp


def block_texture(rng: np.random.Generator, size: int = 32, cell: int = 2, mean: float = 150.0,
                  amplitude: float = 50.0) -> np.ndarray:
    """Zero-mean random blocks scaled to ``amplitude`` std, float image."""
    n = -(-size // cell)
    blocks = rng.standard_normal((n, n))
    blocks = (blocks - blocks.mean()) / blocks.std()
    tex = np.kron(blocks, np.ones((cell, cell)))[:size, :size]
    return mean + amplitude * tex


def mimic(texture: np.ndarray, cosine: float, rng: np.random.Generator, cell: int = 2) -> np.ndarray:
    """A texture whose mean-removed pattern has the given cosine to ``texture``."""
    if not -1 <= cosine <= 1:
        raise ValueError("cosine must lie in [-1, 1]")
    mean = texture.mean()
    t = texture - mean
    noise = block_texture(rng, texture.shape[0], cell, 0.0, 1.0)[: t.shape[0], : t.shape[1]]
    noise = noise - noise.mean()
    noise -= (noise * t).sum() / (t * t).sum() * t
    noise *= np.linalg.norm(t) / np.linalg.norm(noise)
    return mean + cosine * t + np.sqrt(1 - cosine**2) * noise


def occlude(texture: np.ndarray, fraction: float, fill: Optional[float] = None) -> np.ndarray:
    """Cover the right-most ``fraction`` of the columns with a flat value."""
    out = texture.copy()
    cols = int(round(fraction * texture.shape[1]))
    if cols:
        out[:, -cols:] = texture.mean() if fill is None else fill
    return out


def render(size: Tuple[int, int], background: float, plants: Sequence[Plant], frame_id: str) -> AnnotatedFrame:
    """Flat gray frame with textures pasted at ``(x, y)``; polyp plants get masks."""
    h, w = size
    canvas = np.full((h, w), float(background))
    masks = []
    for tex, x, y, is_polyp in plants:
        th, tw = tex.shape
        canvas[y : y + th, x : x + tw] = tex
        if is_polyp:
            m = np.zeros((h, w), dtype=bool)
            m[y : y + th, x : x + tw] = True
            masks.append(BinaryMask(m))
    gray = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
    return AnnotatedFrame.from_masks(frame_id, np.repeat(gray[:, :, None], 3, axis=2), masks)


def centered_polyp_frames(n: int, size: int = 128, polyp: int = 16, seed: int = 0) -> List[AnnotatedFrame]:
    """Frames with one small textured polyp in the middle (no augmentation drops it)."""
    rng = np.random.default_rng(seed)
    off = (size - polyp) // 2
    return [
        render((size, size), 90.0, [(block_texture(rng, polyp), off, off, True)], f"{i:03d}")
        for i in range(n)
    ]


def aligned_offsets(size: int, box: int, stride: int = 16) -> List[int]:
    """Top-left offsets where a ``box``-sized square coincides with a stride anchor."""
    start = stride // 2 - box // 2
    return [o for o in range(start % stride, size - box + 1, stride) if o >= 0]
