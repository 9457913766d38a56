import numpy as np
import pytest

from polypdet.augmentation import AugmentationStrategy, augment_all
from polypdet.detector import ExemplarModel, extract_feature
from polypdet.evaluation import classify_frame
from polypdet.geometry import BoundingBox
from polypdet.post_learning import (
    FPRecord,
    PostLearnConfig,
    augment_fp_records,
    collect_false_positives,
    collect_reliable_regions,
    fp_learn,
    offline_learn,
    pseudo_annotate,
)
from polypdet.proposal import SamplingConfig
from polypdet.synthetic import block_texture, render
from corpora import fp_corpus, video_corpus

FP_CFG = PostLearnConfig(fp_score_threshold=0.75)
OFF_CFG = PostLearnConfig(reliable_score_threshold=0.85)


@pytest.fixture(scope="module")
def fpc():
    return fp_corpus()


@pytest.fixture(scope="module")
def fp_model(fpc):
    m = ExemplarModel(detect_threshold=0.75)
    return m.train_positive(augment_all(fpc.train, AugmentationStrategy.named("rot")), SamplingConfig())


@pytest.fixture(scope="module")
def vc():
    return video_corpus()


@pytest.fixture(scope="module")
def video_model(vc):
    m = ExemplarModel(detect_threshold=0.8)
    return m.train_positive(augment_all(vc.train, AugmentationStrategy.named("rot")), SamplingConfig())


def fp_count(model, frames):
    return sum(classify_frame(model.detect(f), f.masks).fp for f in frames)


def tp_count(model, frames):
    return sum(classify_frame(model.detect(f), f.masks).tp for f in frames)


class TestCollection:
    def test_empty(self, fp_model):
        assert collect_false_positives(fp_model, []) == []

    def test_rejects_annotated(self, fp_model, fpc):
        with pytest.raises(ValueError):
            collect_false_positives(fp_model, fpc.train[:1])

    def test_threshold_filter(self):
        rng = np.random.default_rng(0)
        hot, cold = block_texture(rng), block_texture(rng)
        frame = render((128, 128), 90, [(hot, 8, 8, False), (cold, 72, 72, False)], "f")
        hot_feat = extract_feature(frame, BoundingBox(8, 8, 32, 32), ExemplarModel().roi_cfg)
        m = ExemplarModel(detect_threshold=0.0, positive_exemplars=hot_feat[None])
        records = collect_false_positives(m, [frame], PostLearnConfig(fp_score_threshold=0.99))
        assert [r.box for r in records] == [BoundingBox(8, 8, 32, 32)]
        assert records[0].score >= 0.99

    def test_augment_records(self, fpc):
        frame = fpc.negatives[0]
        assert augment_fp_records([], fpc.negatives) == []
        regions = augment_fp_records([FPRecord(frame.frame_id, BoundingBox(48, 48, 32, 32), 1.0)], fpc.negatives)
        assert len(regions) == 6
        for f, b in regions:
            assert b.x2 <= f.width and b.y2 <= f.height


class TestFPLearn:
    def test_nothing_fires_model_unchanged(self, fp_model, fpc):
        m = fp_model.copy()
        m.detect_threshold = 1.0
        before = m.negative_exemplars.copy()
        fp_learn(m, fpc.negatives, PostLearnConfig(fp_score_threshold=1.0))
        assert np.array_equal(m.negative_exemplars, before)

    def test_distractors_silenced(self, fp_model, fpc):
        assert fp_count(fp_model, fpc.held_out) > 0
        m = fp_learn(fp_model.copy(), fpc.negatives, FP_CFG)
        assert fp_count(m, fpc.held_out) == 0

    def test_only_negatives_grow(self, fp_model, fpc):
        m = fp_learn(fp_model.copy(), fpc.negatives, FP_CFG)
        assert np.array_equal(m.positive_exemplars, fp_model.positive_exemplars)
        assert m.negative_exemplars.shape[0] >= fp_model.negative_exemplars.shape[0]

    def test_collected_regions_score_at_most_half(self, fp_model, fpc):
        records = collect_false_positives(fp_model, fpc.negatives, FP_CFG)
        m = fp_learn(fp_model.copy(), fpc.negatives, FP_CFG)
        by_id = {f.frame_id: f for f in fpc.negatives}
        for r in records:
            feat = extract_feature(by_id[r.frame_id], r.box, m.roi_cfg)
            assert m.score_features(feat)[0] <= 0.5 + 1e-12

    def test_unrelated_polyps_kept(self, fp_model, fpc):
        m = fp_learn(fp_model.copy(), fpc.negatives, FP_CFG)
        assert tp_count(m, fpc.other_polyps) >= tp_count(fp_model, fpc.other_polyps)

    def test_deterministic(self, fp_model, fpc):
        a = fp_learn(fp_model.copy(), fpc.negatives, FP_CFG)
        b = fp_learn(fp_model.copy(), fpc.negatives, FP_CFG)
        assert np.array_equal(a.negative_exemplars, b.negative_exemplars)


class TestOfflineLearn:
    def test_nothing_reliable_model_unchanged(self, video_model, vc):
        m = offline_learn(video_model.copy(), vc.video, PostLearnConfig(reliable_score_threshold=1.0))
        assert np.array_equal(m.positive_exemplars, video_model.positive_exemplars)

    def test_pseudo_annotations(self, vc):
        rec = FPRecord(vc.video[0].frame_id, BoundingBox(40, 40, 32, 32), 0.99)
        out = pseudo_annotate(vc.video, [rec])
        assert len(out) == 1 and out[0].gt_boxes == [BoundingBox(40, 40, 32, 32)]

    def test_recall_not_lower(self, video_model, vc):
        later = vc.video[vc.n_exact :]
        before = tp_count(video_model, later)
        m = offline_learn(video_model.copy(), vc.video, OFF_CFG)
        assert tp_count(m, later) >= before
        assert tp_count(m, later) > before  # the corpus is built so that it strictly helps

    def test_reliable_regions_rescored_higher(self, video_model, vc):
        records = collect_reliable_regions(video_model, vc.video, OFF_CFG)
        assert records
        m = offline_learn(video_model.copy(), vc.video, OFF_CFG)
        by_id = {f.frame_id: f for f in vc.video}
        for r in records:
            again = {d.box: d.score for d in m.detect(by_id[r.frame_id])}
            assert again.get(r.box, -1.0) >= r.score

    def test_only_positives_grow(self, video_model, vc):
        m = offline_learn(video_model.copy(), vc.video, OFF_CFG)
        assert np.array_equal(m.negative_exemplars, video_model.negative_exemplars)
        assert m.positive_exemplars.shape[0] > video_model.positive_exemplars.shape[0]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PostLearnConfig(fp_augmentation=("r45",))
        with pytest.raises(ValueError):
            PostLearnConfig(reliable_score_threshold=0.0)
