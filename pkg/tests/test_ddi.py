import math

import numpy as np
import pytest

from sarcd import (
    DdiParams,
    ParameterError,
    SceneSpec,
    cumulative_pool,
    deep_difference,
    generate_pair,
    kernel_mean,
    log_ratio,
    pool_kernel,
    weighted_pool,
)


def reference_kernel(k):
    """Independent hand evaluation of the kernel formula (1-based indices)."""
    w = np.empty((k, k))
    center = (k + 1) // 2
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            if (i, j) == (center, center):
                w[i - 1, j - 1] = 2.0 / k**2
            else:
                d = math.sqrt((center - i) ** 2 + (center - j) ** 2)
                w[i - 1, j - 1] = 1.0 / (k**2 * d)
    return w


class TestPoolKernel:
    def test_k1_center_case(self):
        assert pool_kernel(1).weights.tolist() == [[2.0]]

    def test_k3_values(self):
        w = pool_kernel(3).weights
        assert abs(w[1, 1] - 2 / 9) < 1e-12
        assert abs(w[0, 1] - 1 / 9) < 1e-12
        assert abs(w[0, 0] - 1 / (9 * math.sqrt(2))) < 1e-12

    def test_k5_distance_two(self):
        # 1-based position (1, 3): two rows above the center
        assert abs(pool_kernel(5).weights[0, 2] - 0.02) < 1e-12

    @pytest.mark.parametrize("k", [1, 3, 5, 7, 9])
    def test_matches_reference(self, k):
        np.testing.assert_allclose(pool_kernel(k).weights, reference_kernel(k), atol=1e-15)

    @pytest.mark.parametrize("k", [0, -1, 2, 4])
    def test_bad_k_rejected(self, k):
        with pytest.raises(ParameterError):
            pool_kernel(k)

    @pytest.mark.parametrize("k", [3, 5, 7])
    def test_symmetry(self, k):
        w = pool_kernel(k).weights
        np.testing.assert_array_equal(w, w.T)
        np.testing.assert_array_equal(w, np.rot90(w))


class TestKernelMean:
    def test_k1(self):
        assert kernel_mean(pool_kernel(1)) == 2.0

    def test_k3_hand_sum(self):
        expected = (2 / 9 + 4 * (1 / 9) + 4 / (9 * math.sqrt(2))) / 9
        assert abs(kernel_mean(pool_kernel(3)) - expected) < 1e-12

    @pytest.mark.parametrize("k", [1, 3, 5, 9])
    def test_positive(self, k):
        assert kernel_mean(pool_kernel(k)) > 0.0


class TestWeightedPool:
    @pytest.mark.parametrize("k", [1, 3, 5])
    def test_constant_image_fixed_point(self, k):
        kern = pool_kernel(k)
        out = weighted_pool(np.full((7, 9), 2.5), kern)
        np.testing.assert_allclose(out, 2.5 * kernel_mean(kern), atol=1e-12)

    def test_k1_doubles(self):
        img = np.random.default_rng(0).random((4, 5))
        np.testing.assert_allclose(weighted_pool(img, pool_kernel(1)), 2.0 * img)

    def test_ones_center_equals_kernel_mean(self):
        out = weighted_pool(np.ones((3, 3)), pool_kernel(3))
        assert abs(out[1, 1] - kernel_mean(pool_kernel(3))) < 1e-12

    @pytest.mark.parametrize("seed", [0, 1])
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(8, 8))
        y = rng.normal(size=(8, 8))
        a, b = rng.uniform(-3, 3, 2)
        kern = pool_kernel(3)
        np.testing.assert_allclose(
            weighted_pool(a * x + b * y, kern),
            a * weighted_pool(x, kern) + b * weighted_pool(y, kern),
            atol=1e-9,
        )

    def test_kernel_larger_than_image(self):
        with pytest.raises(ParameterError):
            weighted_pool(np.ones((2, 2)), pool_kernel(3))


class TestLogRatio:
    def test_equal_inputs_zero(self):
        img = np.random.default_rng(0).uniform(0.1, 1.0, (5, 5))
        np.testing.assert_array_equal(log_ratio(img, img), np.zeros((5, 5)))

    def test_factor_e_gives_ones(self):
        img = np.random.default_rng(1).uniform(0.1, 1.0, (4, 4))
        np.testing.assert_allclose(log_ratio(img, math.e * img), np.ones((4, 4)), atol=1e-12)

    def test_hand_value(self):
        out = log_ratio(np.array([[2.0]]), np.array([[0.5]]))
        assert abs(out[0, 0] - math.log(4.0)) < 1e-12

    def test_zero_pixels_floored(self):
        out = log_ratio(np.array([[0.0]]), np.array([[1.0]]))
        assert np.isfinite(out).all()

    def test_shape_mismatch(self):
        with pytest.raises(ParameterError, match="mismatch"):
            log_ratio(np.ones((2, 2)), np.ones((2, 3)))


class TestDeepDifference:
    def test_identical_inputs_zero(self):
        img = np.random.default_rng(0).uniform(0.1, 1.0, (16, 16))
        out = deep_difference(img, img, DdiParams(k=3, T=3))
        np.testing.assert_array_equal(out, np.zeros_like(img))

    @pytest.mark.parametrize("T", [1, 3])
    def test_constant_fixed_point(self, T):
        out = cumulative_pool(np.full((16, 16), 0.37), T)
        assert np.abs(out - 0.37).max() < 1e-6

    def test_symmetry(self):
        rng = np.random.default_rng(11)
        i1 = rng.uniform(0.05, 1.0, (128, 128))
        i2 = rng.uniform(0.05, 1.0, (128, 128))
        params = DdiParams(k=3, T=4)
        a = deep_difference(i1, i2, params)
        b = deep_difference(i2, i1, params)
        assert np.abs(a - b).max() < 1e-12

    def test_window_exceeds_image(self):
        with pytest.raises(ParameterError):
            cumulative_pool(np.ones((8, 8)), T=5)  # largest window 9 > 8

    def test_speckle_variance_reduction(self):
        # measured on the seed-42 scene over its top-left 64x64 unchanged
        # block: var(I_d) = 0.106850, var(DDI) = 0.012430
        i1, i2, truth = generate_pair(SceneSpec(seed=42))
        block = (slice(0, 64), slice(0, 64))
        assert truth[block].sum() == 0
        kern = pool_kernel(3)
        i_d = log_ratio(weighted_pool(i1, kern), weighted_pool(i2, kern))
        ddi = deep_difference(i1, i2, DdiParams(k=3, T=9))
        v_id = i_d[block].var()
        v_ddi = ddi[block].var()
        assert v_id == pytest.approx(0.106850, rel=1e-4)
        assert v_ddi == pytest.approx(0.012430, rel=1e-4)
        assert v_ddi < v_id

    def test_monotone_smoothing_on_iid_noise(self):
        noise = np.random.default_rng(5).uniform(0.0, 1.0, (128, 128))
        variances = []
        for t in range(1, 7):
            kern = pool_kernel(2 * t - 1)
            term = weighted_pool(noise, kern) / kernel_mean(kern)
            variances.append(term[16:-16, 16:-16].var())
        assert all(a >= b for a, b in zip(variances, variances[1:]))
