"""Detector contract and the exemplar-based reference detector.

The reference detector keeps two banks of unit-norm region features
(positive and negative exemplars). A region's score is
``clamp((1 + s_pos - s_neg) / 2, 0, 1)`` where ``s_pos``/``s_neg`` are its
best cosine similarities to each bank. Detection runs in two stages: every
anchor is scored on a stride-pooled copy of the frame, the survivors of
proposal selection are rescored on exact full-resolution crops.
"""

from __future__ import annotations

import abc
import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ._sampling import bilinear
from .augmentation import AnnotatedFrame
from .errors import ModelFormatError
from .geometry import BoundingBox, Detection, array_to_boxes, boxes_to_array
from .proposal import (
    AnchorConfig,
    ProposalConfig,
    RoiConfig,
    SamplingConfig,
    _sample_grid,
    anchor_array,
    assign_labels,
    crop_and_resize,
    crop_and_resize_batch,
    sample_minibatch,
    select_proposals,
)

MODEL_FORMAT = "polypdet-exemplar-model"
MODEL_VERSION = (1, 0)

_LUMA = np.array([0.299, 0.587, 0.114])

ImageLike = Union[AnnotatedFrame, np.ndarray]


def grayscale(image: ImageLike) -> np.ndarray:
    pixels = image.pixels if isinstance(image, AnnotatedFrame) else np.asarray(image)
    pixels = pixels.astype(np.float64)
    if pixels.ndim == 3:
        return pixels @ _LUMA
    return pixels


def normalize_features(patches: np.ndarray) -> np.ndarray:
    """Mean-remove and unit-normalize rows; flat rows become zero vectors."""
    patches = np.asarray(patches, dtype=np.float64)
    patches = patches.reshape(patches.shape[0], -1)
    centered = patches - patches.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    scale = np.maximum(np.abs(patches).max(axis=1, initial=0.0), 1.0)
    flat = norms <= 1e-9 * scale * np.sqrt(patches.shape[1])
    out = np.zeros_like(centered)
    out[~flat] = centered[~flat] / norms[~flat, None]
    return out


def extract_feature(image: ImageLike, box: BoundingBox, roi_cfg: RoiConfig) -> np.ndarray:
    patch = crop_and_resize(grayscale(image), box, roi_cfg)
    return normalize_features(patch[None])[0]


def box_mean_pool(gray: np.ndarray, stride: int) -> np.ndarray:
    """Average ``stride x stride`` cells; partial edge cells average what they cover."""
    h, w = gray.shape
    r_idx = np.arange(0, h, stride)
    c_idx = np.arange(0, w, stride)
    sums = np.add.reduceat(np.add.reduceat(gray, r_idx, axis=0), c_idx, axis=1)
    r_cnt = np.diff(np.append(r_idx, h))
    c_cnt = np.diff(np.append(c_idx, w))
    return sums / (r_cnt[:, None] * c_cnt[None, :])


class DetectorModel(abc.ABC):
    """What the pipeline needs from a detector.

    ``detect`` must be deterministic for a given model state and frame.
    ``train_*`` may mutate the model and return it.
    """

    @abc.abstractmethod
    def detect(self, frame: AnnotatedFrame) -> List[Detection]:
        ...

    @abc.abstractmethod
    def train_positive(self, frames: Sequence[AnnotatedFrame], sampling_cfg: SamplingConfig) -> "DetectorModel":
        ...

    @abc.abstractmethod
    def train_negative(self, regions: Sequence[Tuple[ImageLike, BoundingBox]]) -> "DetectorModel":
        ...

    @abc.abstractmethod
    def save(self, path) -> None:
        ...

    @classmethod
    @abc.abstractmethod
    def load(cls, path) -> "DetectorModel":
        ...


@dataclass
class ExemplarModel(DetectorModel):
    roi_cfg: RoiConfig = field(default_factory=RoiConfig)
    anchor_cfg: AnchorConfig = field(default_factory=AnchorConfig)
    proposal_cfg: ProposalConfig = field(default_factory=ProposalConfig)
    detect_threshold: float = 0.9
    dedup_cosine: float = 0.999
    positive_exemplars: Optional[np.ndarray] = None
    negative_exemplars: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if not 0 <= self.detect_threshold <= 1:
            raise ValueError("detect_threshold must lie in [0, 1]")
        dim = self.dim
        for name in ("positive_exemplars", "negative_exemplars"):
            bank = getattr(self, name)
            bank = np.zeros((0, dim)) if bank is None else np.asarray(bank, dtype=np.float64).reshape(-1, dim)
            if bank.size and not np.allclose(np.linalg.norm(bank, axis=1), 1.0, atol=1e-9):
                raise ValueError(f"{name} must hold unit-norm rows")
            setattr(self, name, bank)

    @property
    def dim(self) -> int:
        return self.roi_cfg.out_h * self.roi_cfg.out_w

    def copy(self) -> "ExemplarModel":
        return copy.deepcopy(self)

    # -- scoring --------------------------------------------------------------

    def score_features(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64).reshape(-1, self.dim)
        s_pos = self._best_match(features, self.positive_exemplars)
        s_neg = self._best_match(features, self.negative_exemplars)
        return np.clip((1.0 + s_pos - s_neg) / 2.0, 0.0, 1.0)

    @staticmethod
    def _best_match(features: np.ndarray, bank: np.ndarray) -> np.ndarray:
        if bank.shape[0] == 0:
            return np.zeros(features.shape[0])
        return (features @ bank.T).max(axis=1)

    def region_features(self, gray: np.ndarray, boxes: np.ndarray) -> np.ndarray:
        patches = crop_and_resize_batch(gray, boxes, self.roi_cfg.out_h, self.roi_cfg.out_w)
        return normalize_features(patches)

    # -- detection ------------------------------------------------------------

    def propose(self, frame: AnnotatedFrame) -> List[Detection]:
        """Stage one: anchors scored on the stride-pooled frame, then selected."""
        gray = grayscale(frame)
        stride = self.anchor_cfg.stride
        pooled = box_mean_pool(gray, stride)
        anchors = anchor_array(pooled.shape[0], pooled.shape[1], self.anchor_cfg)
        rows, cols = _sample_grid(anchors, self.roi_cfg.out_h, self.roi_cfg.out_w)
        # image pixel index u sits at pooled index (u + 0.5) / stride - 0.5
        patches = bilinear(pooled, (rows + 0.5) / stride - 0.5, (cols + 0.5) / stride - 0.5)
        scores = self.score_features(normalize_features(patches))
        scored = [Detection(b, s) for b, s in zip(array_to_boxes(anchors), scores)]
        return select_proposals(scored, self.proposal_cfg, "test", frame.width, frame.height)

    def detect(self, frame: AnnotatedFrame) -> List[Detection]:
        proposals = self.propose(frame)
        if not proposals:
            return []
        boxes = boxes_to_array(d.box for d in proposals)
        scores = self.score_features(self.region_features(grayscale(frame), boxes))
        dets = [Detection(d.box, s) for d, s in zip(proposals, scores) if s >= self.detect_threshold]
        dets.sort(key=lambda d: (-d.score, d.box.x, d.box.y))
        return dets

    # -- training -------------------------------------------------------------

    def _add(self, bank_name: str, features: np.ndarray) -> int:
        bank = getattr(self, bank_name)
        features = np.asarray(features, dtype=np.float64).reshape(-1, self.dim)
        nonzero = np.linalg.norm(features, axis=1) > 0.5
        features = features[nonzero]
        if features.shape[0] == 0:
            return 0
        best_existing = self._best_match(features, bank)
        accepted: List[int] = []
        for i in range(features.shape[0]):
            if best_existing[i] >= self.dedup_cosine:
                continue
            if accepted and (features[accepted] @ features[i]).max() >= self.dedup_cosine:
                continue
            accepted.append(i)
        if accepted:
            setattr(self, bank_name, np.vstack([bank, features[accepted]]))
        return len(accepted)

    def train_positive(
        self,
        frames: Sequence[AnnotatedFrame],
        sampling_cfg: SamplingConfig = SamplingConfig(),
        include_negatives: bool = True,
    ) -> "ExemplarModel":
        """Add exemplars from annotated frames.

        Per frame: label the anchors against the gt boxes and sample a
        minibatch. Each sampled positive contributes the feature of its
        matched gt box; each sampled negative contributes its own anchor crop.
        """
        rng = np.random.default_rng(sampling_cfg.rng_seed)
        stride = self.anchor_cfg.stride
        for frame in frames:
            fh = -(-frame.height // stride)
            fw = -(-frame.width // stride)
            anchors = anchor_array(fh, fw, self.anchor_cfg)
            gts = boxes_to_array(frame.gt_boxes)
            labels = assign_labels(anchors, gts, sampling_cfg)
            batch = sample_minibatch(labels, sampling_cfg, rng)
            gray = grayscale(frame)
            matched = sorted({labels[i].matched_gt for i in batch.positives})
            if matched:
                self._add("positive_exemplars", self.region_features(gray, gts[matched]))
            if include_negatives and batch.negatives.size:
                self._add("negative_exemplars", self.region_features(gray, anchors[batch.negatives]))
        return self

    def train_negative(self, regions: Sequence[Tuple[ImageLike, BoundingBox]]) -> "ExemplarModel":
        """Append each region's feature to the negative bank (deduplicated)."""
        feats = [extract_feature(image, box, self.roi_cfg) for image, box in regions]
        if feats:
            self._add("negative_exemplars", np.stack(feats))
        return self

    # -- persistence ----------------------------------------------------------

    def metadata(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": list(MODEL_VERSION),
            "detect_threshold": self.detect_threshold,
            "dedup_cosine": self.dedup_cosine,
            "roi": asdict(self.roi_cfg),
            "anchor": asdict(self.anchor_cfg),
            "proposal": asdict(self.proposal_cfg),
        }

    def save(self, path) -> None:
        meta = json.dumps(self.metadata(), sort_keys=True)
        with open(path, "wb") as fh:
            np.savez(
                fh,
                meta=np.array(meta),
                positive_exemplars=self.positive_exemplars,
                negative_exemplars=self.negative_exemplars,
            )

    @classmethod
    def load(cls, path) -> "ExemplarModel":
        path = Path(path)
        try:
            with np.load(path, allow_pickle=False) as data:
                meta = json.loads(str(data["meta"]))
                pos = np.array(data["positive_exemplars"])
                neg = np.array(data["negative_exemplars"])
        except FileNotFoundError:
            raise
        except (OSError, ValueError, KeyError) as exc:
            raise ModelFormatError(f"{path}: not a polypdet model file ({exc})") from exc
        if meta.get("format") != MODEL_FORMAT:
            raise ModelFormatError(f"{path}: unexpected model format {meta.get('format')!r}")
        major = meta.get("version", [None])[0]
        if major != MODEL_VERSION[0]:
            raise ModelFormatError(f"{path}: model version {major} unsupported (expected {MODEL_VERSION[0]}.x)")
        anchor = meta["anchor"]
        return cls(
            roi_cfg=RoiConfig(**meta["roi"]),
            anchor_cfg=AnchorConfig(**{**anchor, "scales": tuple(anchor["scales"]),
                                       "aspect_ratios": tuple(anchor["aspect_ratios"])}),
            proposal_cfg=ProposalConfig(**meta["proposal"]),
            detect_threshold=meta["detect_threshold"],
            dedup_cosine=meta["dedup_cosine"],
            positive_exemplars=pos,
            negative_exemplars=neg,
        )


# Functional spellings of the model methods.


def score_region(model: ExemplarModel, feature: np.ndarray) -> float:
    return float(model.score_features(feature)[0])


def detect(model: DetectorModel, frame: AnnotatedFrame) -> List[Detection]:
    return model.detect(frame)


def train_positive(model: DetectorModel, frames, sampling_cfg: SamplingConfig = SamplingConfig()):
    return model.train_positive(frames, sampling_cfg)


def train_negative(model: DetectorModel, regions):
    return model.train_negative(regions)
