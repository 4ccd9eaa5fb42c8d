import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dime.errors import RejectedInputError
from dime.kernels import (
    KernelFamily,
    KernelSpec,
    entrywise_power,
    evaluate_kernel,
    gram_matrix,
    hadamard,
)

E = math.e


class TestEvaluateKernel:
    def test_self_similarity_is_one(self):
        assert evaluate_kernel(KernelSpec.gaussian(1.0), [3.7, -2.0], [3.7, -2.0]) == 1.0

    def test_gaussian_value(self):
        assert evaluate_kernel(KernelSpec.gaussian(1.0), [0.0], [math.sqrt(2.0)]) == pytest.approx(E**-1, abs=1e-15)

    def test_factorized_laplacian_value(self):
        spec = KernelSpec(KernelFamily.FACTORIZED_LAPLACIAN, 1.0 / math.sqrt(2.0))
        assert evaluate_kernel(spec, [0.0, 0.0], [1.0, 1.0]) == pytest.approx(E**-2, abs=1e-15)

    def test_elliptical_laplacian_value(self):
        spec = KernelSpec(KernelFamily.ELLIPTICAL_LAPLACIAN, 1.0 / math.sqrt(2.0))
        # ||(3, 4)||_2 = 5
        assert evaluate_kernel(spec, [0.0, 0.0], [3.0, 4.0]) == pytest.approx(E**-5, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(RejectedInputError):
            evaluate_kernel(KernelSpec.gaussian(1.0), [0.0, 1.0], [0.0])

    @pytest.mark.parametrize("sigma", [0.0, -1.0, math.inf, math.nan, 1e-301])
    def test_bad_bandwidth(self, sigma):
        with pytest.raises(RejectedInputError):
            KernelSpec.gaussian(sigma)

    def test_unknown_family(self):
        with pytest.raises(RejectedInputError):
            KernelSpec("cauchy", 1.0)

    def test_extreme_bandwidths_are_legal(self):
        KernelSpec.gaussian(1e-250)
        KernelSpec.gaussian(1e250)


class TestGramMatrix:
    def test_single_sample(self):
        K = gram_matrix([[1.0, 2.0]], KernelSpec.gaussian(1.0))
        assert K.shape == (1, 1) and K[0, 0] == 1.0

    def test_identical_rows_give_ones(self):
        K = gram_matrix(np.tile([1.5, -0.5, 2.0], (6, 1)), KernelSpec.gaussian(0.3))
        assert np.array_equal(K, np.ones((6, 6)))

    def test_two_points(self):
        K = gram_matrix([[0.0], [math.sqrt(2.0)]], KernelSpec.gaussian(1.0))
        np.testing.assert_allclose(K, [[1.0, E**-1], [E**-1, 1.0]], rtol=0, atol=1e-15)

    @pytest.mark.parametrize("family", list(KernelFamily))
    def test_matches_pointwise_kernel(self, rng, family):
        data = rng.standard_normal((12, 3))
        spec = KernelSpec(family, 1.3)
        K = gram_matrix(data, spec)
        expected = np.array([[evaluate_kernel(spec, a, b) for b in data] for a in data])
        np.testing.assert_allclose(K, expected, rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("family", list(KernelFamily))
    def test_structure(self, rng, family):
        K = gram_matrix(rng.standard_normal((30, 4)), KernelSpec(family, 0.8))
        assert np.array_equal(K, K.T)
        assert np.all(np.diag(K) == 1.0)
        assert K.min() >= 0.0 and K.max() <= 1.0
        assert np.linalg.eigvalsh(K).min() >= -1e-10 * 30

    def test_rejects_non_finite(self):
        with pytest.raises(RejectedInputError):
            gram_matrix([[0.0], [np.nan]], KernelSpec.gaussian(1.0))

    def test_one_dimensional_input_is_a_column(self):
        K1 = gram_matrix([0.0, 1.0, 3.0], KernelSpec.gaussian(1.0))
        K2 = gram_matrix([[0.0], [1.0], [3.0]], KernelSpec.gaussian(1.0))
        assert np.array_equal(K1, K2)


class TestEntrywisePower:
    def test_identity_exponent(self, rng):
        K = gram_matrix(rng.standard_normal((8, 2)), KernelSpec.gaussian(1.0))
        assert np.array_equal(entrywise_power(K, 1.0), K)

    def test_ones_fixed(self):
        J = np.ones((5, 5))
        assert np.array_equal(entrywise_power(J, 3.7), J)

    def test_gaussian_rescaling(self, rng):
        data = rng.standard_normal((25, 3))
        powered = entrywise_power(gram_matrix(data, KernelSpec.gaussian(2.0)), 4.0)
        np.testing.assert_allclose(powered, gram_matrix(data, KernelSpec.gaussian(1.0)), rtol=0, atol=1e-12)

    @pytest.mark.parametrize("gamma", [0.0, -0.5, math.nan])
    def test_bad_exponent(self, gamma):
        with pytest.raises(RejectedInputError):
            entrywise_power(np.ones((2, 2)), gamma)


class TestHadamard:
    def test_ones_is_identity(self, rng):
        K = gram_matrix(rng.standard_normal((7, 2)), KernelSpec.gaussian(1.0))
        assert np.array_equal(hadamard(K, np.ones_like(K)), K)

    def test_identity_squared(self):
        assert np.array_equal(hadamard(np.eye(4), np.eye(4)), np.eye(4))

    def test_two_by_two(self):
        out = hadamard([[1, 0.5], [0.5, 1]], [[1, 0.2], [0.2, 1]])
        np.testing.assert_allclose(out, [[1, 0.1], [0.1, 1]], rtol=0, atol=1e-16)

    def test_size_mismatch(self):
        with pytest.raises(RejectedInputError):
            hadamard(np.eye(2), np.eye(3))

    def test_schur_product_is_psd(self, rng):
        A = gram_matrix(rng.standard_normal((20, 2)), KernelSpec.gaussian(0.7))
        B = gram_matrix(rng.standard_normal((20, 5)), KernelSpec(KernelFamily.ELLIPTICAL_LAPLACIAN, 2.0))
        assert np.linalg.eigvalsh(hadamard(A, B)).min() >= -1e-12


data_matrices = arrays(
    np.float64,
    st.tuples(st.integers(2, 12), st.integers(1, 4)),
    elements=st.floats(-5, 5, allow_nan=False, allow_infinity=False),
)


@settings(max_examples=60, deadline=None)
@given(data_matrices, st.floats(0.05, 20.0), st.floats(0.05, 8.0), st.floats(0.05, 8.0))
def test_power_composition(data, sigma, a, b):
    K = gram_matrix(data, KernelSpec.gaussian(sigma))
    lhs = entrywise_power(entrywise_power(K, a), b)
    np.testing.assert_allclose(lhs, entrywise_power(K, a * b), rtol=0, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(data_matrices, st.floats(0.05, 20.0), st.floats(0.05, 10.0))
def test_gaussian_width_equivalence(data, sigma, gamma):
    powered = entrywise_power(gram_matrix(data, KernelSpec.gaussian(sigma)), gamma)
    rescaled = gram_matrix(data, KernelSpec.gaussian(sigma / math.sqrt(gamma)))
    np.testing.assert_allclose(powered, rescaled, rtol=0, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(data_matrices, st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_hadamard_commutes_and_associates(data, s1, s2, s3):
    A = gram_matrix(data, KernelSpec.gaussian(s1))
    B = gram_matrix(data, KernelSpec(KernelFamily.FACTORIZED_LAPLACIAN, s2))
    C = gram_matrix(data, KernelSpec(KernelFamily.ELLIPTICAL_LAPLACIAN, s3))
    np.testing.assert_allclose(hadamard(A, B), hadamard(B, A), rtol=0, atol=1e-15)
    np.testing.assert_allclose(hadamard(hadamard(A, B), C), hadamard(A, hadamard(B, C)), rtol=0, atol=1e-15)
