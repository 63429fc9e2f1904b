import numpy as np
import pytest
from oracles import pca_filters_oracle

from sarcd import (
    CHANGED,
    INTERMEDIATE,
    UNCHANGED,
    DegenerateTrainingError,
    FormatError,
    InternalError,
    ParameterError,
    balance_sample,
    batch_features,
    binarize_encode,
    extract_patches,
    features_for,
    histogram_feature,
    learn_pca_filters,
    load_model,
    save_model,
    stage_forward,
    train_pcanet,
)


class TestExtractPatches:
    def test_constant_halves(self):
        patches = extract_patches(np.full((8, 8), 0.3), np.full((8, 8), 0.9), 5)
        assert patches.shape == (64, 10, 5)
        assert (patches[:, :5, :] == 0.3).all()
        assert (patches[:, 5:, :] == 0.9).all()

    def test_interior_patch_is_raw_neighborhood(self):
        rng = np.random.default_rng(0)
        a, b = rng.random((9, 9)), rng.random((9, 9))
        patches = extract_patches(a, b, 5)
        p = patches[4 * 9 + 4]  # pixel (4, 4)
        np.testing.assert_array_equal(p[:5], a[2:7, 2:7])
        np.testing.assert_array_equal(p[5:], b[2:7, 2:7])

    def test_corner_replicates(self):
        a = np.arange(36, dtype=float).reshape(6, 6)
        patches = extract_patches(a, a, 5)
        p = patches[0]  # pixel (0, 0)
        # the two padded rows/cols duplicate row/column 0
        np.testing.assert_array_equal(p[0], p[2])
        np.testing.assert_array_equal(p[:5, 0], p[:5, 2])
        assert p[2, 2] == a[0, 0]

    def test_even_lam_rejected(self):
        with pytest.raises(ParameterError):
            extract_patches(np.ones((8, 8)), np.ones((8, 8)), 4)

    def test_lam_exceeds_image(self):
        with pytest.raises(ParameterError):
            extract_patches(np.ones((3, 3)), np.ones((3, 3)), 5)


def three_way_map(shape, n_changed, n_unchanged, n_intermediate=0):
    labels = np.concatenate(
        [
            np.full(n_changed, CHANGED, np.uint8),
            np.full(n_unchanged, UNCHANGED, np.uint8),
            np.full(n_intermediate, INTERMEDIATE, np.uint8),
        ]
    )
    return labels.reshape(shape)


class TestBalanceSample:
    def test_oversample_minority(self):
        labels = three_way_map((101, 100), 100, 10000)
        sel = balance_sample(labels, 2000, 0.5, seed=0)
        assert sel.indices.size == 2000
        assert (sel.labels == CHANGED).sum() == 1000
        assert (sel.labels == UNCHANGED).sum() == 1000
        changed_idx = sel.indices[sel.labels == CHANGED]
        unchanged_idx = sel.indices[sel.labels == UNCHANGED]
        assert np.unique(changed_idx).size <= 100  # drawn with replacement
        assert np.unique(unchanged_idx).size == 1000  # distinct draws
        # labels recorded for the draws match the map
        assert (labels.ravel()[changed_idx] == CHANGED).all()
        assert (labels.ravel()[unchanged_idx] == UNCHANGED).all()

    def test_even_split(self):
        labels = three_way_map((20, 20), 50, 50, 300)
        sel = balance_sample(labels, 40, 0.5, seed=1)
        assert (sel.labels == CHANGED).sum() == 20
        assert (sel.labels == UNCHANGED).sum() == 20
        # intermediates never drawn
        assert (labels.ravel()[sel.indices] != INTERMEDIATE).all()

    def test_deterministic(self):
        labels = three_way_map((4, 4), 8, 8)
        a = balance_sample(labels, 10, 0.5, seed=7)
        b = balance_sample(labels, 10, 0.5, seed=7)
        assert np.array_equal(a.indices, b.indices)

    def test_missing_class_rejected(self):
        with pytest.raises(DegenerateTrainingError):
            balance_sample(np.full((4, 4), UNCHANGED, np.uint8), 8, 0.5, seed=0)
        with pytest.raises(DegenerateTrainingError):
            balance_sample(np.full((4, 4), CHANGED, np.uint8), 8, 0.5, seed=0)

    def test_bad_ratio(self):
        with pytest.raises(ParameterError):
            balance_sample(three_way_map((4, 4), 8, 8), 8, 0.0, seed=0)


class TestLearnPcaFilters:
    def test_rank_one_patches(self):
        rng = np.random.default_rng(0)
        base = rng.normal(size=(10, 5))
        base -= base.mean()  # zero-mean template survives per-patch centering
        coeffs = rng.uniform(0.5, 2.0, 40)
        patches = coeffs[:, None, None] * base
        filters = learn_pca_filters(patches, 3)
        unit = base / np.linalg.norm(base)
        assert abs(abs((filters[0] * unit).sum()) - 1.0) < 1e-10
        # leading eigenvalue ~ total energy, the rest ~ 0
        scatter_energy = (coeffs**2).sum() * (base**2).sum()
        quad = lambda f: float(f.ravel() @ _scatter(patches) @ f.ravel())
        assert quad(filters[0]) == pytest.approx(scatter_energy, rel=1e-9)
        assert quad(filters[1]) < 1e-9 * scatter_energy

    def test_orthonormal(self):
        patches = np.random.default_rng(1).normal(size=(60, 10, 5))
        filters = learn_pca_filters(patches, 8)
        flat = filters.reshape(8, -1)
        np.testing.assert_allclose(flat @ flat.T, np.eye(8), atol=1e-8)

    def test_matches_svd_oracle(self):
        patches = np.random.default_rng(2).normal(size=(50, 10, 5))
        filters = learn_pca_filters(patches, 8).reshape(8, -1)
        oracle = pca_filters_oracle(patches, 8)
        for mine, ref in zip(filters, oracle):
            cos = abs(float(mine @ ref)) / (np.linalg.norm(mine) * np.linalg.norm(ref))
            assert cos >= 1.0 - 1e-8

    def test_sign_convention(self):
        patches = np.random.default_rng(3).normal(size=(30, 10, 5))
        filters = learn_pca_filters(patches, 4)
        for f in filters:
            v = f.ravel()
            assert v[np.argmax(np.abs(v))] > 0

    def test_too_few_patches(self):
        with pytest.raises(ParameterError):
            learn_pca_filters(np.random.default_rng(0).normal(size=(4, 10, 5)), 8)


def _scatter(patches):
    vecs = patches.reshape(patches.shape[0], -1)
    centered = vecs - vecs.mean(axis=1, keepdims=True)
    return centered.T @ centered


class TestStageForward:
    def test_delta_filter_is_identity(self):
        patch = np.random.default_rng(0).normal(size=(10, 5))
        delta = np.zeros((1, 10, 5))
        delta[0, 5, 2] = 1.0  # filter origin: (rows // 2, cols // 2)
        np.testing.assert_allclose(stage_forward(patch, delta)[0], patch, atol=1e-12)

    def test_zero_input(self):
        filters = np.random.default_rng(1).normal(size=(3, 10, 5))
        out = stage_forward(np.zeros((10, 5)), filters)
        assert not out.any()

    def test_linearity(self):
        rng = np.random.default_rng(2)
        x, y = rng.normal(size=(2, 10, 5))
        a, b = 1.7, -0.4
        filters = rng.normal(size=(4, 10, 5))
        np.testing.assert_allclose(
            stage_forward(a * x + b * y, filters),
            a * stage_forward(x, filters) + b * stage_forward(y, filters),
            atol=1e-9,
        )

    def test_shape_mismatch(self):
        with pytest.raises(ParameterError):
            stage_forward(np.zeros((10, 5)), np.zeros((2, 6, 3)))


class TestBinarizeEncode:
    def test_all_positive_saturates(self):
        codes = binarize_encode(np.ones((8, 10, 5)))
        assert (codes == 255).all()

    def test_nonpositive_is_zero(self):
        maps = np.zeros((8, 10, 5))
        maps[3] = -1.0
        assert not binarize_encode(maps).any()  # H(0) = 0 and H(-1) = 0

    def test_single_bit(self):
        maps = np.full((8, 4, 4), -1.0)
        maps[2] = 1.0  # third map, 1-based index 3 -> 2^2
        assert (binarize_encode(maps) == 4).all()

    def test_too_many_maps(self):
        with pytest.raises(ParameterError):
            binarize_encode(np.ones((32, 2, 2)))


class TestHistogramFeature:
    def test_all_255(self):
        maps = np.full((1, 10, 5), 255, dtype=np.int64)
        feat = histogram_feature(maps, 8)
        assert feat[255] == 50
        assert feat.sum() == 50

    def test_default_length_and_block_mass(self):
        rng = np.random.default_rng(0)
        maps = rng.integers(0, 256, size=(8, 10, 5))
        feat = histogram_feature(maps, 8)
        assert feat.size == 2048
        np.testing.assert_array_equal(feat.reshape(8, 256).sum(axis=1), 50)

    def test_out_of_range_is_internal_error(self):
        with pytest.raises(InternalError):
            histogram_feature(np.full((1, 2, 2), 256, dtype=np.int64), 8)


@pytest.fixture(scope="module")
def trained():
    rng = np.random.default_rng(8)
    patches = rng.normal(size=(400, 10, 5))
    three_way = three_way_map((20, 20), 150, 150, 100)
    selection = balance_sample(three_way, 120, 0.5, seed=0)
    model = train_pcanet(patches, selection, L1=8, L2=8)
    return patches, model


class TestTrainPcanet:
    def test_bank_shapes_and_orthonormality(self, trained):
        _, model = trained
        assert model.stage1.shape == (8, 10, 5)
        assert model.stage2.shape == (8, 8, 10, 5)
        s1 = model.stage1.reshape(8, -1)
        np.testing.assert_allclose(s1 @ s1.T, np.eye(8), atol=1e-8)
        for bank in model.stage2:
            flat = bank.reshape(8, -1)
            np.testing.assert_allclose(flat @ flat.T, np.eye(8), atol=1e-8)

    def test_retraining_is_bit_identical(self, trained):
        patches, model = trained
        selection = balance_sample(three_way_map((20, 20), 150, 150, 100), 120, 0.5, seed=0)
        again = train_pcanet(patches, selection, L1=8, L2=8)
        assert np.array_equal(again.stage1, model.stage1)
        assert np.array_equal(again.stage2, model.stage2)


class TestFeatures:
    def test_zero_patch_concentrates_in_bin_zero(self, trained):
        _, model = trained
        feat = features_for(np.zeros((10, 5)), model)
        blocks = feat.reshape(8, 256)
        assert (blocks[:, 0] == 50).all()
        assert (blocks[:, 1:] == 0).all()

    def test_counts_are_non_negative_integers(self, trained):
        patches, model = trained
        feat = features_for(patches[0], model)
        assert feat.size == model.feature_length == 2048
        assert (feat >= 0).all()
        assert np.array_equal(feat, np.rint(feat))

    def test_scaling_invariance(self, trained):
        patches, model = trained
        np.testing.assert_array_equal(
            features_for(patches[3], model), features_for(3.7 * patches[3], model)
        )

    def test_shape_mismatch(self, trained):
        _, model = trained
        with pytest.raises(ParameterError):
            features_for(np.zeros((6, 3)), model)

    def test_batch_matches_single(self, trained):
        patches, model = trained
        batch = batch_features(patches[:7], model)
        singles = np.stack([features_for(p, model) for p in patches[:7]])
        np.testing.assert_array_equal(batch, singles)


class TestModelSerialization:
    def test_round_trip_is_float32_cast(self, trained, tmp_path):
        _, model = trained
        p = tmp_path / "model.sarm"
        save_model(model, p)
        back = load_model(p)
        assert (back.lam, back.L1, back.L2) == (model.lam, model.L1, model.L2)
        np.testing.assert_array_equal(back.stage1, model.stage1.astype(np.float32))
        np.testing.assert_array_equal(back.stage2, model.stage2.astype(np.float32))

    def test_truncated_rejected(self, trained, tmp_path):
        _, model = trained
        p = tmp_path / "model.sarm"
        save_model(model, p)
        p.write_bytes(p.read_bytes()[:-1])
        with pytest.raises(FormatError):
            load_model(p)
