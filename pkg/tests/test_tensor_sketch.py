import itertools
import math

import numpy as np
import pytest

from polysketch.data import DataMatrix
from polysketch.errors import (
    InvalidDimensionError,
    InvalidParameterError,
    OracleGuardError,
)
from polysketch.kernels import poly_kernel_exact
from polysketch.oracle import tensor_power_dense
from polysketch.rng import derive_seed
from polysketch.tensor_sketch import (
    dense_operator,
    plan_dims,
    sketch_matrix,
    sketch_vector,
    tensor_sketcher,
)
from polysketch.transforms import ose_dims, srht_apply, tensor_srht_apply_pair


def _kron_power(x, p):
    out = np.ones(1)
    for _ in range(p):
        out = np.kron(out, x)
    return out


class TestSketchVector:
    def test_degree_one_is_plain_srht(self):
        ts = tensor_sketcher(5, 8, 1, seed=3)
        x = np.linspace(-1, 1, 5)
        np.testing.assert_array_equal(sketch_vector(ts, x), srht_apply(ts.srht, x))

    def test_degree_two_is_one_squaring(self):
        ts = tensor_sketcher(5, 8, 2, seed=4)
        x = np.random.default_rng(0).standard_normal(5)
        w0 = srht_apply(ts.srht, x)
        expected = tensor_srht_apply_pair(ts.pair_sketch, w0, w0)
        np.testing.assert_array_equal(sketch_vector(ts, x), expected)

    def test_degree_five_combines_levels_zero_and_two(self):
        # 5 = 101 in binary: z starts at w_0 and combines with w_2
        ts = tensor_sketcher(6, 16, 5, seed=5)
        x = np.random.default_rng(1).standard_normal(6)
        w0 = srht_apply(ts.srht, x)
        w1 = tensor_srht_apply_pair(ts.pair_sketch, w0, w0)
        w2 = tensor_srht_apply_pair(ts.pair_sketch, w1, w1)
        expected = tensor_srht_apply_pair(ts.pair_sketch, w0, w2)
        np.testing.assert_array_equal(sketch_vector(ts, x), expected)
        assert ts.base_level == 0 and ts.combine_levels == (2,)

    def test_matches_dense_operator_on_tensor_power(self):
        ts = tensor_sketcher(2, 4, 4, seed=6)
        op = dense_operator(ts)
        rng = np.random.default_rng(2)
        for _ in range(100):
            x = rng.standard_normal(2)
            lhs = sketch_vector(ts, x)
            rhs = op @ _kron_power(x, 4)
            assert np.abs(lhs - rhs).max() <= 1e-10

    def test_rejects_bad_degree_and_dims(self):
        with pytest.raises(InvalidParameterError):
            tensor_sketcher(4, 8, 0, seed=0)
        with pytest.raises(InvalidDimensionError):
            tensor_sketcher(4, 6, 2, seed=0)  # m not a power of two
        ts = tensor_sketcher(4, 8, 2, seed=0)
        with pytest.raises(InvalidDimensionError):
            sketch_vector(ts, np.zeros(5))


class TestSketchMatrix:
    @pytest.mark.parametrize("p", [1, 2, 3, 5, 6, 7, 8])
    def test_columns_match_reference_bitwise(self, p):
        rng = np.random.default_rng(p)
        X = DataMatrix(rng.standard_normal((5, 3)))
        ts = tensor_sketcher(5, 8, p, seed=11)
        Z = sketch_matrix(ts, X)
        for j in range(3):
            np.testing.assert_array_equal(
                Z.values[:, j], sketch_vector(ts, X.values[:, j])
            )

    def test_single_column_reduces_to_sketch_vector(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(4)
        ts = tensor_sketcher(4, 8, 3, seed=9)
        Z = sketch_matrix(ts, DataMatrix(x[:, None]))
        np.testing.assert_array_equal(Z.values[:, 0], sketch_vector(ts, x))

    def test_column_permutation_equivariance(self):
        rng = np.random.default_rng(4)
        Xv = rng.standard_normal((6, 5))
        perm = np.array([3, 0, 4, 1, 2])
        ts = tensor_sketcher(6, 8, 4, seed=13)
        Z = sketch_matrix(ts, DataMatrix(Xv)).values
        Zp = sketch_matrix(ts, DataMatrix(Xv[:, perm])).values
        np.testing.assert_array_equal(Zp, Z[:, perm])

    def test_dimension_mismatch(self):
        ts = tensor_sketcher(6, 8, 2, seed=0)
        with pytest.raises(InvalidDimensionError):
            sketch_matrix(ts, DataMatrix(np.zeros((5, 2))))


class TestDenseOperator:
    def test_degree_one_is_dense_srht(self):
        from polysketch.transforms import srht_dense

        ts = tensor_sketcher(3, 8, 1, seed=2)
        np.testing.assert_allclose(
            dense_operator(ts), srht_dense(ts.srht)[:, :3], atol=1e-14
        )

    def test_degree_two_matches_explicit_product(self):
        from polysketch.transforms import srht_dense, tensor_srht_dense

        ts = tensor_sketcher(2, 4, 2, seed=8)
        dense_t = srht_dense(ts.srht)[:, :2]
        dense_s = tensor_srht_dense(ts.pair_sketch)
        explicit = dense_s @ np.kron(dense_t, dense_t)
        np.testing.assert_allclose(dense_operator(ts), explicit, atol=1e-12)

    def test_mixed_product_on_basis_vectors(self):
        ts = tensor_sketcher(2, 4, 2, seed=12)
        op = dense_operator(ts)
        for i, j in itertools.product(range(2), repeat=2):
            e = np.zeros(2)
            f = np.zeros(2)
            e[i] = 1.0
            f[j] = 1.0
            u = srht_apply(ts.srht, e)
            v = srht_apply(ts.srht, f)
            col = tensor_srht_apply_pair(ts.pair_sketch, u, v)
            np.testing.assert_allclose(op[:, i * 2 + j], col, atol=1e-14)

    def test_guards(self):
        with pytest.raises(InvalidParameterError):
            dense_operator(tensor_sketcher(2, 4, 3, seed=0))
        with pytest.raises(OracleGuardError):
            dense_operator(tensor_sketcher(32, 4, 4, seed=0))  # 32^4 > 2^16


class TestExactFactorization:
    """Sketching a vector equals applying the materialized operator."""

    @pytest.mark.parametrize("p", [2, 4, 8])
    def test_power_of_two_degrees(self, p):
        rng = np.random.default_rng(p)
        for seed in range(3):
            ts = tensor_sketcher(2, 4, p, seed=seed)
            op = dense_operator(ts)
            for _ in range(10):
                x = rng.standard_normal(2)
                diff = np.abs(sketch_vector(ts, x) - op @ _kron_power(x, p)).max()
                assert diff <= 1e-10


class TestPlanDims:
    def test_eps_hat_for_degree_one(self):
        _, eps_hat = plan_dims(4, 16, 1, 0.3, 0.1)
        assert math.isclose(eps_hat, 0.1)

    def test_matches_base_formula(self):
        m, eps_hat = plan_dims(8, 32, 4, 0.5, 0.1, constant=1.0)
        assert math.isclose(eps_hat, 0.5 / 12.0)
        expected = max(
            ose_dims(8, 32, eps_hat, 0.1, "srht", 1.0),
            ose_dims(8, 32, eps_hat, 0.1, "tensor_srht", 1.0),
        )
        assert m == expected

    def test_doubling_degree_scales_rows_by_four_ish(self):
        m1, _ = plan_dims(8, 256, 2, 0.25, 0.1, constant=5e-4)
        m2, _ = plan_dims(8, 256, 4, 0.25, 0.1, constant=5e-4)
        assert m2 / m1 in (4.0, 8.0)

    def test_rejects_bad_inputs(self):
        with pytest.raises(InvalidParameterError):
            plan_dims(4, 8, 0, 0.3, 0.1)
        with pytest.raises(InvalidParameterError):
            plan_dims(4, 8, 2, 1.5, 0.1)


class TestSubspacePreservation:
    """Norm distortion of sketched tensor powers stays within the composed
    per-level budget for most seeds, including non power-of-two degrees."""

    @pytest.mark.parametrize("p", [2, 3, 5, 7])
    def test_norm_ratio_within_composed_bound(self, p):
        n, d, eps = 8, 16, 0.25
        m, eps_hat = plan_dims(n, d, p, eps, 0.1, constant=5e-4)
        rng = np.random.default_rng(100 + p)
        X = DataMatrix(rng.standard_normal((d, n)))
        y = rng.standard_normal(n)
        K = poly_kernel_exact(X, p)
        ref = math.sqrt(max(y @ K @ y, 0.0))
        lo = (1.0 - eps_hat) ** (3 * p)
        hi = (1.0 + eps_hat) ** (3 * p)
        hits = 0
        trials = 50
        for t in range(trials):
            ts = tensor_sketcher(d, m, p, derive_seed(55, "sub", 100 * p + t))
            Z = sketch_matrix(ts, X).values
            ratio = np.linalg.norm(Z @ y) / ref
            hits += lo <= ratio <= hi
        assert hits >= 0.9 * trials

    def test_gram_identity_matches_dense_tensor_power(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((3, 4))
        dense = tensor_power_dense(X, 3)
        np.testing.assert_allclose(
            dense.T @ dense, (X.T @ X) ** 3, atol=1e-10
        )


def test_sketcher_is_a_function_of_two_streams():
    # same seed gives identical base sketches; the only randomness is one
    # stream for the base transform and one for the pair sketch
    a = tensor_sketcher(6, 16, 5, seed=21)
    b = tensor_sketcher(6, 16, 5, seed=21)
    np.testing.assert_array_equal(a.srht.signs, b.srht.signs)
    np.testing.assert_array_equal(a.srht.rows, b.srht.rows)
    np.testing.assert_array_equal(a.pair_sketch.signs1, b.pair_sketch.signs1)
    np.testing.assert_array_equal(a.pair_sketch.signs2, b.pair_sketch.signs2)
    np.testing.assert_array_equal(a.pair_sketch.rows1, b.pair_sketch.rows1)
    c = tensor_sketcher(6, 16, 5, seed=22)
    assert not np.array_equal(a.srht.signs, c.srht.signs)
