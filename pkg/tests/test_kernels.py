import math

import numpy as np
import pytest

from polysketch import kernels as ker
from polysketch.data import DataMatrix
from polysketch.errors import (
    DomainError,
    InvalidParameterError,
    UndefinedValueError,
)
from polysketch.oracle import spectral_sandwich
from polysketch.rng import derive_seed, stream


def _unit_ball_matrix(d, n, seed, norms=None):
    rng = stream(seed, "test-matrix")
    X = rng.standard_normal((d, n))
    X /= np.linalg.norm(X, axis=0)[None, :]
    if norms is None:
        norms = rng.uniform(0.5, 1.0, size=n)
    return DataMatrix(X * np.asarray(norms)[None, :])


class TestExactKernels:
    def test_poly_degree_zero_is_all_ones(self):
        X = DataMatrix(np.random.default_rng(0).standard_normal((3, 4)))
        np.testing.assert_array_equal(ker.poly_kernel_exact(X, 0), np.ones((4, 4)))

    def test_poly_degree_one_is_gram(self):
        Xv = np.random.default_rng(1).standard_normal((3, 4))
        np.testing.assert_array_equal(
            ker.poly_kernel_exact(DataMatrix(Xv), 1), Xv.T @ Xv
        )

    def test_poly_orthonormal_columns(self):
        X = DataMatrix(np.eye(2))
        np.testing.assert_allclose(ker.poly_kernel_exact(X, 3), np.eye(2))

    def test_gaussian_unit_diagonal(self):
        X = _unit_ball_matrix(5, 6, seed=2)
        G = ker.gaussian_kernel_exact(X)
        np.testing.assert_array_equal(np.diag(G), np.ones(6))

    def test_gaussian_orthonormal_pair(self):
        G = ker.gaussian_kernel_exact(DataMatrix(np.eye(2)))
        assert math.isclose(G[0, 1], math.exp(-1.0), rel_tol=1e-12)

    def test_gaussian_diagonal_factorization(self):
        # G equals D exp(X^T X) D with D_ii = exp(-||x_i||^2 / 2)
        X = _unit_ball_matrix(4, 5, seed=3)
        G = ker.gaussian_kernel_exact(X)
        D = np.exp(-0.5 * X.column_norms_sq())
        inner = np.exp(X.values.T @ X.values)
        np.testing.assert_allclose(G, D[:, None] * inner * D[None, :], atol=1e-12)

    def test_ntk_closed_form_values(self):
        e = np.eye(2)
        K = ker.ntk_kernel_exact(DataMatrix(e))
        assert math.isclose(K[0, 0], 0.5, rel_tol=1e-12)  # arccos(1) = 0
        assert K[0, 1] == 0.0  # orthogonal: factor s = 0
        anti = DataMatrix(np.column_stack([e[:, 0], -e[:, 0]]))
        Ka = ker.ntk_kernel_exact(anti)
        assert abs(Ka[0, 1]) <= 1e-12  # arccos(-1) = pi

    def test_ntk_domain_error(self):
        with pytest.raises(DomainError):
            ker.ntk_kernel_exact(DataMatrix(2.0 * np.eye(2)))


class TestGaussianTruncation:
    def test_zero_radius_needs_no_terms(self):
        assert ker.gaussian_truncation_degree(0.0, 8, 0.1) == 0

    def test_monotone_in_radius(self):
        q1 = ker.gaussian_truncation_degree(1.0, 8, 0.1)
        q2 = ker.gaussian_truncation_degree(2.0, 8, 0.1)
        assert q1 <= q2

    def test_frozen_value_r1_n8(self):
        # smallest q with sum_{l>q} 8/l! <= 0.05 is 5 (tail(4) = 0.0796)
        assert ker.gaussian_truncation_degree(1.0, 8, 0.1) == 5

    def test_bound_dominates_exact_tail(self):
        for q in range(6):
            exact = 8.0 * (math.e - sum(1.0 / math.factorial(l) for l in range(q + 1)))
            assert ker.gaussian_tail_bound(1.0, 8, q) >= exact - 1e-12


class TestPconvTruncation:
    def test_factorial_coefficients_reproduce_gaussian_inner_kernel(self):
        coeff = lambda l: math.exp(-math.lgamma(l + 1.0))
        assert ker.pconv_truncation_degree(coeff, 8, 1.0, 0.1) == \
            ker.gaussian_truncation_degree(1.0, 8, 0.1)

    def test_bound_monotone_in_q(self):
        coeff = lambda l: (l + 1.0) ** -3
        bounds = [ker.pconv_tail_bound(coeff, 8, 1.0, q) for q in range(8)]
        assert all(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:]))

    def test_frozen_cubic_decay_value(self):
        # smallest q with sum_{l>q} 8 (l+1)^-3 <= 0.125
        coeff = lambda l: (l + 1.0) ** -3
        q = ker.pconv_truncation_degree(coeff, 8, 1.0, 0.25)
        assert q == 5
        exact = lambda qq: 8 * sum((l + 1.0) ** -3 for l in range(qq + 1, 200000))
        assert exact(q) <= 0.125 < exact(q - 1)
        assert ker.pconv_tail_bound(coeff, 8, 1.0, q) >= exact(q)

    def test_growing_terms_rejected(self):
        with pytest.raises(InvalidParameterError):
            ker.pconv_truncation_degree(lambda l: (l + 1.0) ** -2, 4, 1.5, 0.3)


class TestTaylorPlan:
    def test_probabilities_normalized(self):
        coeffs = np.array([(l + 1.0) ** -2.5 for l in range(10)])
        plan = ker.make_sampled_plan(coeffs, exact_upto=3, m_samples=4)
        assert math.isclose(plan.sampled_probs.sum(), 1.0, rel_tol=1e-12)
        np.testing.assert_array_equal(plan.sampled_indices, np.arange(4, 10))

    def test_invalid_plans_rejected(self):
        with pytest.raises(InvalidParameterError):
            ker.make_sampled_plan(np.array([1.0, -0.5]), exact_upto=0, m_samples=1)
        with pytest.raises(InvalidParameterError):
            ker.make_sampled_plan(np.array([1.0, 0.5]), exact_upto=3, m_samples=1)

    def test_expected_degree_single_term(self):
        plan = ker.make_sampled_plan(np.array([1.0, 1.0, 0.3]), exact_upto=1, m_samples=1)
        assert ker.expected_sampled_degree(plan) == 2.0

    def test_expected_degree_uniform_pair(self):
        plan = ker.make_sampled_plan(np.ones(5), exact_upto=2, m_samples=1)
        assert ker.expected_sampled_degree(plan) == 3.5

    def test_expected_degree_power_law_frozen(self):
        # C_l = l^{-2.5} over l in (4, 100]; direct summation, and within the
        # integral-comparison Theta(s) bound s (p-1)/(p-2) = 12
        coeffs = np.array([1.0] + [float(l) ** -2.5 for l in range(1, 101)])
        plan = ker.make_sampled_plan(coeffs, exact_upto=4, m_samples=1)
        value = ker.expected_sampled_degree(plan)
        assert math.isclose(value, 10.806745886242593, rel_tol=1e-12)
        assert 4.0 < value <= 12.0

    def test_expected_degree_requires_sampled_range(self):
        plan = ker.make_sampled_plan(np.ones(3), exact_upto=2, m_samples=0)
        with pytest.raises(UndefinedValueError):
            ker.expected_sampled_degree(plan)


class TestSamplingEstimator:
    def test_unbiased_against_exact_tail(self):
        X = _unit_ball_matrix(4, 4, seed=10, norms=[0.95, 0.8, 0.7, 0.9])
        coeffs = np.array([(l + 1.0) ** -2.5 for l in range(13)])
        plan = ker.make_sampled_plan(coeffs, exact_upto=2, m_samples=3)
        R = ker.exact_tail_gram(X, plan)
        trials = 300
        acc = np.empty((trials, 4, 4))
        for t in range(trials):
            idx = ker.draw_tail_indices(plan, derive_seed(42, "mc", t))
            acc[t] = ker.sampled_tail_gram(X, plan, idx)
        mean = acc.mean(axis=0)
        se = acc.std(axis=0, ddof=1) / math.sqrt(trials)
        assert (np.abs(mean - R) <= 4.0 * se + 1e-12).all()

    def test_draw_frequencies_track_coefficients(self):
        coeffs = np.array([(l + 1.0) ** -2.5 for l in range(8)])
        plan = ker.make_sampled_plan(coeffs, exact_upto=2, m_samples=64)
        counts = np.zeros(8)
        for t in range(500):
            for i in ker.draw_tail_indices(plan, derive_seed(7, "freq", t)):
                counts[i] += 1
        emp = counts[3:] / counts.sum()
        assert np.abs(emp - plan.sampled_probs).max() <= 0.01


class TestGaussianSketch:
    def test_single_point_at_origin(self):
        sk = ker.gaussian_sketch(DataMatrix(np.zeros((3, 1))), 0.3, 0.1, seed=1)
        np.testing.assert_array_equal(sk.gram(), np.array([[1.0]]))
        assert sk.m_total == 1 and sk.plan.truncation_index == 0

    def test_gram_equals_stacked_gram(self):
        X = _unit_ball_matrix(6, 4, seed=11)
        sk = ker.gaussian_sketch(X, 0.3, 0.1, seed=2, block_m=128)
        W = sk.stack()
        np.testing.assert_allclose(sk.gram(), W.T @ W, atol=1e-12)

    def test_tail_bound_below_half_eps(self):
        X = _unit_ball_matrix(6, 4, seed=12)
        sk = ker.gaussian_sketch(X, 0.3, 0.1, seed=3, block_m=64)
        assert sk.plan.tail_bound <= 0.15

    def test_sandwich_against_exact_kernel(self):
        X = _unit_ball_matrix(8, 4, seed=13)
        G = ker.gaussian_kernel_exact(X)
        passes = 0
        for s in range(30):
            sk = ker.gaussian_sketch(X, 0.3, 0.1, derive_seed(9, "gs", s), block_m=1024)
            passes += spectral_sandwich(sk.gram(), G, 0.3).passed
        assert passes >= 27

    def test_block_dims_scale_cubically_with_truncation(self):
        m_q = sum(ker.gaussian_block_dims(4, 8, 4, 0.3, 0.1))
        m_2q = sum(ker.gaussian_block_dims(4, 8, 8, 0.3, 0.1))
        assert 6.0 <= m_2q / m_q <= 11.0

    def test_psd_and_symmetric(self):
        X = _unit_ball_matrix(5, 4, seed=14)
        G = ker.gaussian_sketch(X, 0.4, 0.1, seed=4, block_m=64).gram()
        assert np.abs(G - G.T).max() <= 1e-10
        assert np.linalg.eigvalsh(G).min() >= -1e-10


class TestPconvSketch:
    def test_all_terms_exact_no_sampling(self):
        X = _unit_ball_matrix(4, 3, seed=15)
        sk = ker.pconv_sketch(X, lambda l: (l + 1.0) ** -3, 3.0, 0.3, 0.1, seed=5,
                              block_m=32)
        plan = sk.plan
        assert plan.exact_upto == plan.truncation_index
        assert not plan.has_sampling
        assert len(sk.blocks) == plan.truncation_index + 1

    def test_radius_above_one_rejected(self):
        X = DataMatrix(1.5 * np.eye(3))
        with pytest.raises(InvalidParameterError):
            ker.pconv_sketch(X, lambda l: (l + 1.0) ** -3, 3.0, 0.3, 0.1, seed=0)

    def test_sampled_route_outside_window_degenerates(self):
        X = _unit_ball_matrix(4, 3, seed=16)
        coeff = lambda l: (l + 1.0) ** -4
        a = ker.sampled_pconv_sketch(X, coeff, 4.0, 0.3, 0.1, seed=6, block_m=32)
        b = ker.pconv_sketch(X, coeff, 4.0, 0.3, 0.1, seed=6, block_m=32)
        assert len(a.blocks) == len(b.blocks)
        for ba, bb in zip(a.blocks, b.blocks):
            np.testing.assert_array_equal(ba.values, bb.values)

    def test_prefix_override_equal_to_truncation_degenerates(self):
        X = _unit_ball_matrix(4, 3, seed=17)
        coeff = lambda l: (l + 1.0) ** -2.5
        q = ker.pconv_truncation_degree(coeff, X.n, X.radius, 0.3)
        a = ker.sampled_pconv_sketch(
            X, coeff, 2.5, 0.3, 0.1, seed=7, block_m=32, s_override=q
        )
        b = ker.pconv_sketch(X, coeff, 2.5, 0.3, 0.1, seed=7, block_m=32)
        for ba, bb in zip(a.blocks, b.blocks):
            np.testing.assert_array_equal(ba.values, bb.values)

    def test_sampled_blocks_carry_unbiased_scales(self):
        X = _unit_ball_matrix(4, 4, seed=18)
        coeff = lambda l: (l + 1.0) ** -2.5
        sk = ker.sampled_pconv_sketch(
            X, coeff, 2.5, 0.3, 0.1, seed=8, block_m=32,
            s_override=1, m_samples_override=6,
        )
        plan = sk.plan
        sampled_blocks = sk.blocks[plan.exact_upto + 1 :]
        assert len(sampled_blocks) == 6
        for b in sampled_blocks:
            idx = b.degree  # identity degree map
            pos = idx - (plan.exact_upto + 1)
            expected = math.sqrt(
                plan.coefficients[idx] / (plan.sampled_probs[pos] * plan.m_samples)
            )
            assert math.isclose(b.scale, expected, rel_tol=1e-12)


class TestNtkCoefficients:
    def test_first_two_values(self):
        assert math.isclose(ker.ntk_coefficient(0), 1.0 / (2.0 * math.pi), rel_tol=1e-14)
        assert math.isclose(ker.ntk_coefficient(1), 1.0 / (12.0 * math.pi), rel_tol=1e-14)

    def test_central_binomial_bounds_up_to_50(self):
        for l in range(1, 51):
            c = ker.ntk_coefficient(l)
            lo = 1.0 / (math.sqrt(4.0 * l) * (2 * l + 1) * 2.0 * math.pi)
            hi = 1.0 / (math.sqrt(3.0 * l + 1.0) * (2 * l + 1) * 2.0 * math.pi)
            assert lo <= c <= hi

    def test_log_gamma_branch_is_continuous(self):
        # exact and log-gamma paths agree where they hand over
        exact30 = math.comb(60, 30) * 0.25**30 / (61 * 2 * math.pi)
        assert math.isclose(ker.ntk_coefficient(30), exact30, rel_tol=1e-12)
        ratio = ker.ntk_coefficient(31) / ker.ntk_coefficient(30)
        assert 0.9 < ratio < 1.0


class TestNtkSeries:
    def test_matches_closed_form_within_tail_bound(self):
        f = lambda s: (0.5 - math.acos(s) / (2.0 * math.pi)) * s
        for s in np.linspace(-0.99, 0.99, 99):
            approx = ker.ntk_series_value(float(s), 40)
            bound = ker.ntk_series_tail_bound(abs(float(s)), 40)
            assert abs(approx - f(s)) <= bound + 1e-14

    def test_value_at_half(self):
        f_half = (0.5 - math.acos(0.5) / (2.0 * math.pi)) * 0.5
        assert abs(ker.ntk_series_value(0.5, 60) - f_half) <= 1e-14


class TestNtkSketch:
    def test_block_degrees_are_linear_plus_even(self):
        X = _unit_ball_matrix(8, 4, seed=19, norms=[1.0, 1.0, 1.0, 1.0])
        sk = ker.ntk_sketch(X, 0.3, 0.1, seed=9, block_m=64)
        degrees = sorted(set(b.degree for b in sk.blocks))
        assert degrees[0] == 1
        assert all(d % 2 == 0 for d in degrees[1:])
        assert set(degrees[1:]) <= {2 * l + 2 for l in range(64)}

    def test_radius_above_one_rejected(self):
        with pytest.raises(InvalidParameterError):
            ker.ntk_sketch(DataMatrix(1.5 * np.eye(3)), 0.3, 0.1, seed=0)

    def test_sandwich_against_exact_kernel(self):
        X = _unit_ball_matrix(8, 4, seed=20, norms=[1.0, 1.0, 1.0, 1.0])
        K = ker.ntk_kernel_exact(X)
        passes = 0
        for s in range(30):
            sk = ker.ntk_sketch(X, 0.3, 0.1, derive_seed(10, "ntk", s), block_m=1024)
            passes += spectral_sandwich(sk.gram(), K, 0.3).passed
        assert passes >= 27

    def test_tail_bound_recorded(self):
        X = _unit_ball_matrix(8, 4, seed=21, norms=[1.0, 1.0, 1.0, 1.0])
        sk = ker.ntk_sketch(X, 0.3, 0.1, seed=11, block_m=32)
        assert 0.0 < sk.plan.tail_bound <= 0.15
