import math

import numpy as np
import pytest

import oracles
from stainkit import (
    LossWeights,
    cosine_similarity_loss,
    focal_loss,
    l1_loss,
    multiscale_gan_loss,
    overall_loss,
    patch_gan_loss,
    ssim_loss,
)


class TestCosineSimilarityLoss:
    def test_equal_vectors(self, rng):
        a = rng.normal(size=6)
        value, grad_a, grad_b = cosine_similarity_loss(a, a.copy())
        assert abs(value) <= 1e-12
        # gradients vanish at the minimum, hence are orthogonal to a
        assert abs(grad_a @ a) <= 1e-9
        assert abs(grad_b @ a) <= 1e-9

    def test_orthogonal_vectors(self):
        value, _, _ = cosine_similarity_loss(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert abs(value - 1.0) <= 1e-12

    def test_opposite_vectors(self, rng):
        a = rng.normal(size=5)
        value, _, _ = cosine_similarity_loss(a, -a)
        assert abs(value - 2.0) <= 1e-9

    def test_gradients_match_finite_differences(self):
        a = np.array([1.0, 2.0, 3.0])
        b = np.array([4.0, 5.0, 6.0])
        value, grad_a, grad_b = cosine_similarity_loss(a, b)
        fd_a = oracles.central_difference(lambda v: cosine_similarity_loss(v, b)[0], a)
        fd_b = oracles.central_difference(lambda v: cosine_similarity_loss(a, v)[0], b)
        assert np.abs(grad_a - fd_a).max() / np.abs(fd_a).max() <= 1e-5
        assert np.abs(grad_b - fd_b).max() / np.abs(fd_b).max() <= 1e-5

    def test_scale_invariance(self, rng):
        a, b = rng.normal(size=7), rng.normal(size=7)
        base, _, _ = cosine_similarity_loss(a, b)
        for alpha in (0.5, 2.0, 10.0):
            for beta in (0.5, 2.0, 10.0):
                scaled, _, _ = cosine_similarity_loss(alpha * a, beta * b)
                assert abs(scaled - base) <= 1e-9

    def test_range(self, rng):
        for _ in range(50):
            a, b = rng.normal(size=4), rng.normal(size=4)
            value, _, _ = cosine_similarity_loss(a, b)
            assert 0.0 <= value <= 2.0

    def test_gradients_orthogonal_to_own_vector(self, rng):
        a, b = rng.normal(size=5), rng.normal(size=5)
        _, grad_a, grad_b = cosine_similarity_loss(a, b)
        assert abs(grad_a @ a) <= 1e-12 * np.abs(grad_a).max() * np.abs(a).max() + 1e-12
        assert abs(grad_b @ b) <= 1e-12 * np.abs(grad_b).max() * np.abs(b).max() + 1e-12

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            cosine_similarity_loss(np.zeros(3), np.ones(3))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cosine_similarity_loss(np.ones(3), np.ones(4))


class TestL1Loss:
    def test_identical(self, rng):
        a = rng.normal(size=(4, 4))
        value, grad = l1_loss(a, a.copy())
        assert value == 0.0
        assert np.all(grad == 0.0)

    def test_uniform_offset(self, rng):
        a = rng.normal(size=(4, 4))
        value, grad = l1_loss(a + 0.1, a)
        assert abs(value - 0.1) <= 1e-12
        assert np.allclose(grad, 1.0 / a.size, atol=0)

    def test_gradient_matches_finite_differences(self, rng):
        a = rng.normal(size=(4, 4))
        b = rng.normal(size=(4, 4))
        _, grad = l1_loss(a, b)
        fd = oracles.central_difference(lambda v: l1_loss(v, b)[0], a)
        mask = np.abs(a - b) > 1e-4  # FD invalid at the kink
        rel = np.abs(grad - fd)[mask] / np.abs(fd[mask])
        assert rel.max() <= 1e-5

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            l1_loss(np.ones((2, 2)), np.ones((2, 3)))


class TestSsimLoss:
    def test_self_is_zero(self, rng):
        img = rng.random((12, 12, 3))
        assert abs(ssim_loss(img, img)) <= 1e-9

    def test_constant_pair_closed_form(self):
        a = np.full((16, 16, 3), 0.5)
        b = np.full((16, 16, 3), 0.6)
        expected = 1.0 - (0.6 + 1e-4) / (0.61 + 1e-4)
        assert abs(ssim_loss(a, b) - expected) <= 1e-6

    def test_bounded(self, rng):
        for _ in range(5):
            a, b = rng.random((12, 12, 3)), rng.random((12, 12, 3))
            assert 0.0 <= ssim_loss(a, b) <= 2.0


class TestFocalLoss:
    def test_confident_correct_prediction(self):
        value, grad = focal_loss(np.array([1.0, 0.0, 0.0, 0.0]), 0)
        assert value == 0.0
        assert np.all(grad == 0.0)

    def test_half_probability_closed_form(self):
        probs = np.array([0.5, 0.3, 0.1, 0.1])
        value, _ = focal_loss(probs, 0, alpha=1.0, gamma=2.0)
        assert abs(value - 0.25 * math.log(2.0)) <= 1e-12

    def test_gamma_zero_is_cross_entropy(self, rng):
        for _ in range(100):
            probs = rng.dirichlet(np.ones(4))
            target = int(rng.integers(0, 4))
            value, _ = focal_loss(probs, target, alpha=1.0, gamma=0.0)
            assert abs(value - (-math.log(probs[target]))) <= 1e-12

    def test_nonincreasing_in_target_probability(self):
        values = []
        for p_t in np.linspace(0.05, 0.95, 19):
            probs = np.array([p_t, (1 - p_t) / 3, (1 - p_t) / 3, (1 - p_t) / 3])
            value, _ = focal_loss(probs, 0)
            values.append(value)
        assert all(x >= y for x, y in zip(values, values[1:]))

    def test_gradient_matches_finite_differences(self, rng):
        for gamma in (0.0, 1.0, 2.0, 3.5):
            p_t = float(rng.uniform(0.1, 0.9))
            probs = np.array([p_t, (1 - p_t) / 3, (1 - p_t) / 3, (1 - p_t) / 3])
            _, grad = focal_loss(probs, 0, alpha=0.75, gamma=gamma)
            formula = lambda p: -0.75 * (1.0 - p) ** gamma * math.log(p)
            h = 1e-6
            fd = (formula(p_t + h) - formula(p_t - h)) / (2 * h)
            assert abs(grad[0] - fd) / abs(fd) <= 1e-5
            assert np.all(grad[1:] == 0.0)

    def test_validation(self):
        ok = np.array([0.25, 0.25, 0.25, 0.25])
        with pytest.raises(ValueError):
            focal_loss(ok, 4)
        with pytest.raises(ValueError):
            focal_loss(ok, -1)
        with pytest.raises(ValueError):
            focal_loss(np.array([0.9, 0.3, 0.1, 0.1]), 0)  # sums to 1.4
        with pytest.raises(ValueError):
            focal_loss(np.array([0.0, 0.5, 0.25, 0.25]), 0)  # zero target prob
        with pytest.raises(ValueError):
            focal_loss(ok, 0, gamma=-1.0)


class TestPatchGanLoss:
    def test_perfect_real_scores(self):
        assert patch_gan_loss(np.ones((4, 4)), True) == 0.0

    def test_all_zero_scores_against_real(self):
        assert patch_gan_loss(np.zeros((4, 4)), True) == 1.0

    def test_bce_at_half(self):
        scores = np.full((3, 3), 0.5)
        for flag in (True, False):
            got = patch_gan_loss(scores, flag, mode="binary-cross-entropy")
            assert abs(got - math.log(2.0)) <= 1e-12

    def test_least_squares_fake(self, rng):
        scores = rng.random((4, 4))
        expected = float(np.mean(scores**2))
        assert abs(patch_gan_loss(scores, False) - expected) <= 1e-15

    def test_bce_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            patch_gan_loss(np.array([[0.0]]), True, mode="binary-cross-entropy")
        with pytest.raises(ValueError):
            patch_gan_loss(np.array([[1.0]]), True, mode="binary-cross-entropy")

    def test_empty_map_rejected(self):
        with pytest.raises(ValueError):
            patch_gan_loss(np.zeros((0, 3)), True)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            patch_gan_loss(np.ones((2, 2)), True, mode="hinge")


class TestMultiscaleGanLoss:
    def test_mean_of_equals_is_exact(self):
        for x in (0.0, 0.3, 1.7, 123.456):
            assert multiscale_gan_loss(x, x) == x

    def test_midpoint(self):
        assert multiscale_gan_loss(0.0, 1.0) == 0.5
        assert multiscale_gan_loss(0.25, 0.75) == 0.5

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            multiscale_gan_loss(math.inf, 0.0)


class TestOverallLoss:
    def test_all_zero(self):
        assert overall_loss(0, 0, 0, 0, 0, 0, 0).total == 0.0

    def test_all_ones_with_default_weights(self):
        breakdown = overall_loss(1, 1, 1, 1, 1, 1, 1)
        assert abs(breakdown.total - 179.0) <= 1e-9
        assert breakdown.stain == 2.0
        assert breakdown.content == 13.0

    def test_linearity_in_level_weight(self):
        base = overall_loss(0, 0, 0, 0, 0, 1, 0, LossWeights(level=5.0))
        doubled = overall_loss(0, 0, 0, 0, 0, 1, 0, LossWeights(level=10.0))
        assert doubled.total == 2.0 * base.total

    def test_superposition(self, rng):
        w = LossWeights()
        for _ in range(20):
            u = rng.normal(size=7)
            v = rng.normal(size=7)
            lhs = overall_loss(*(u + v), w).total
            rhs = overall_loss(*u, w).total + overall_loss(*v, w).total
            assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))

    def test_hierarchy_invariants(self, rng):
        w = LossWeights()
        components = rng.normal(size=7)
        b = overall_loss(*components, w)
        assert abs(b.stain - (w.h * b.h + w.dab * b.dab)) <= 1e-9
        assert abs(b.content - (w.ssim * b.ssim + w.mae * b.mae + w.cmp * b.cmp)) <= 1e-9
        expected_total = (
            w.stain * b.stain + w.content * b.content + w.level * b.level + w.gan * b.gan
        )
        assert abs(b.total - expected_total) <= 1e-9

    def test_default_weight_constants(self):
        w = LossWeights()
        assert (w.stain, w.content, w.level, w.gan) == (2.0, 13.0, 5.0, 1.0)
        assert (w.h, w.dab, w.cmp, w.mae, w.ssim) == (1.0, 1.0, 2.0, 10.0, 1.0)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            LossWeights(stain=-1.0)

    def test_non_finite_component_rejected(self):
        with pytest.raises(ValueError):
            overall_loss(math.nan, 0, 0, 0, 0, 0, 0)
