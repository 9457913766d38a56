"""Bilinear sampling shared by the geometric augmentations and crop-and-resize."""

from __future__ import annotations

import numpy as np


def bilinear(image: np.ndarray, rows: np.ndarray, cols: np.ndarray, outside: str = "edge") -> np.ndarray:
    """Sample ``image`` at fractional index coordinates.

    ``image`` is ``(H, W)`` or ``(H, W, C)``; ``rows``/``cols`` broadcast
    together and index pixel centers (pixel ``i`` sits at coordinate ``i``).
    ``outside="edge"`` replicates border pixels, ``outside="zero"`` treats the
    image as surrounded by zeros.
    """
    img = np.asarray(image, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.float64)
    if outside == "zero":
        pad = [(1, 1), (1, 1)] + [(0, 0)] * (img.ndim - 2)
        img = np.pad(img, pad, mode="constant")
        rows = rows + 1.0
        cols = cols + 1.0
    elif outside != "edge":
        raise ValueError(f"unknown outside mode {outside!r}")
    h, w = img.shape[:2]
    r = np.clip(rows, 0.0, h - 1.0)
    c = np.clip(cols, 0.0, w - 1.0)
    r0 = np.floor(r).astype(np.intp)
    c0 = np.floor(c).astype(np.intp)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = r - r0
    fc = c - c0
    if img.ndim == 3:
        fr = fr[..., None]
        fc = fc[..., None]
    top = img[r0, c0] * (1.0 - fc) + img[r0, c1] * fc
    bottom = img[r1, c0] * (1.0 - fc) + img[r1, c1] * fc
    return top * (1.0 - fr) + bottom * fr


def warp_affine(
    image: np.ndarray,
    out_shape: tuple,
    inverse: np.ndarray,
    outside: str = "edge",
) -> np.ndarray:
    """Resample ``image`` onto an ``out_shape`` canvas.

    ``inverse`` is a 2x3 matrix mapping continuous output coordinates
    ``(x, y)`` (pixel centers at ``i + 0.5``) to continuous source coordinates.
    """
    out_h, out_w = out_shape
    ys, xs = np.mgrid[0:out_h, 0:out_w].astype(np.float64)
    xs += 0.5
    ys += 0.5
    src_x = inverse[0, 0] * xs + inverse[0, 1] * ys + inverse[0, 2]
    src_y = inverse[1, 0] * xs + inverse[1, 1] * ys + inverse[1, 2]
    return bilinear(image, src_y - 0.5, src_x - 0.5, outside=outside)


def to_uint8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)
