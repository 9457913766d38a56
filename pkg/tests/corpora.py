"""Synthetic corpora for the post-learning tests.

All textures are 32x32 and placed where a stride-16 anchor covers them
exactly, on flat backgrounds, in 128x128 frames.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from polypdet.augmentation import AnnotatedFrame
from polypdet.synthetic import aligned_offsets, block_texture, mimic, occlude, render

SIZE = 128
OFFS = aligned_offsets(SIZE, 32)
BG = 90


@dataclass
class FPCorpus:
    train: List[AnnotatedFrame]
    negatives: List[AnnotatedFrame]        # polyp-free frames used for FP collection
    held_out: List[AnnotatedFrame]         # fresh polyp-free frames with the same distractors
    mimicked_polyps: List[AnnotatedFrame]  # polyps whose textures the distractors imitate
    other_polyps: List[AnnotatedFrame]     # polyps unrelated to any distractor


def fp_corpus(seed: int = 7) -> FPCorpus:
    rng = np.random.default_rng(seed)
    polyps = [block_texture(rng) for _ in range(4)]
    distractors = [mimic(polyps[0], 0.85, rng), mimic(polyps[1], 0.85, rng)]
    n = len(OFFS)

    def at(tex, i, j, is_polyp, fid):
        return render((SIZE, SIZE), BG, [(tex, OFFS[i % n], OFFS[j % n], is_polyp)], fid)

    train = [at(polyps[i % 4], i * 3, i * 5 + 1, True, f"t{i:02d}") for i in range(8)]
    negatives = [at(distractors[i % 2], i * 2, i + 3, False, f"n{i:02d}") for i in range(6)]
    held_out = [at(np.rot90(distractors[i % 2], i % 4), i * 3 + 2, i * 5, False, f"h{i:02d}") for i in range(6)]
    tests = [at(polyps[i % 4], i * 7 + 1, i * 3 + 4, True, f"p{i:02d}") for i in range(8)]
    return FPCorpus(
        train, negatives, held_out,
        [f for i, f in enumerate(tests) if i % 4 in (0, 1)],
        [f for i, f in enumerate(tests) if i % 4 in (2, 3)],
    )


@dataclass
class VideoCorpus:
    train: List[AnnotatedFrame]
    video: List[AnnotatedFrame]
    n_exact: int


def video_corpus(seed: int = 11, n_frames: int = 20, n_exact: int = 5) -> VideoCorpus:
    """Trained polyp P; the video shows a look-alike P' unchanged, then perturbed."""
    rng = np.random.default_rng(seed)
    polyps = [block_texture(rng) for _ in range(3)]
    train = [
        render((SIZE, SIZE), BG, [(polyps[i % 3], OFFS[(i * 3) % 6], OFFS[(i * 5 + 1) % 6], True)], f"t{i:02d}")
        for i in range(6)
    ]
    look_alike = mimic(polyps[0], 0.9, rng)
    video = []
    for i in range(n_frames):
        if i < n_exact:
            tex = look_alike
        else:
            tex = occlude(mimic(look_alike, 0.93, np.random.default_rng(100 + i)), 0.15)
        video.append(render((SIZE, SIZE), BG, [(tex, OFFS[2], OFFS[2 + i % 2], True)], f"{i:03d}"))
    return VideoCorpus(train, video, n_exact)
