import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ndsys.errors import CapacityError, DomainError, ShapeError
from ndsys.linalg import (
    Colligation,
    SubspaceBasis,
    haar_unitary,
    kron,
    multi_indices,
    multi_indices_upto,
    orth,
    random_cmatrix,
    spectral_norm,
    stack_colligation,
    torus_point,
    unitarity_defect,
)

from conftest import random_system


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(3)) == pytest.approx(1.0, rel=1e-12)

    def test_nilpotent_jordan_cell(self):
        assert spectral_norm([[0, 1], [0, 0]]) == pytest.approx(1.0, rel=1e-12)

    def test_diagonal(self):
        assert spectral_norm([[3, 0], [0, 4]]) == pytest.approx(4.0, rel=1e-12)

    def test_empty_is_zero(self):
        assert spectral_norm(np.zeros((0, 3))) == 0.0
        assert spectral_norm(np.zeros((2, 0))) == 0.0


class TestUnitarityDefect:
    def test_identity_and_permutation(self):
        assert unitarity_defect(np.eye(4)) == 0.0
        assert unitarity_defect([[0, 1], [1, 0]]) == 0.0

    def test_scalar_half(self):
        assert unitarity_defect([[0.5]]) == pytest.approx(0.75, abs=1e-15)

    def test_non_square_rejected(self):
        with pytest.raises(ShapeError):
            unitarity_defect(np.ones((2, 3)))

    @given(st.integers(0, 10_000), st.floats(1e-6, 1e-2))
    def test_product_perturbation_bound(self, seed, eps):
        rng = np.random.default_rng(seed)
        u = haar_unitary(3, rng) + eps * random_cmatrix(3, 3, rng)
        v = haar_unitary(3, rng) + eps * random_cmatrix(3, 3, rng)
        du, dv = unitarity_defect(u), unitarity_defect(v)
        assert unitarity_defect(u @ v) <= du + dv + du * dv + 1e-9


class TestKron:
    def test_identities(self):
        np.testing.assert_array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))

    def test_scalar_left(self):
        b = np.arange(6).reshape(2, 3)
        np.testing.assert_array_equal(kron([[2]], b), 2 * b)

    def test_index_convention(self):
        s = np.array([[0, 1], [0, 0]])
        out = kron(s, s)
        expect = np.zeros((4, 4))
        expect[0, 3] = 1
        np.testing.assert_array_equal(out, expect)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            kron(np.zeros((200, 1)), np.zeros((200, 1)))

    @given(st.integers(0, 10_000))
    def test_norm_multiplicative(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_cmatrix(3, 3, rng), random_cmatrix(3, 3, rng)
        assert spectral_norm(kron(a, b)) == pytest.approx(spectral_norm(a) * spectral_norm(b), abs=1e-10)


class TestColligation:
    def test_stack_example(self):
        alpha = Colligation([[[0]]], [[[1]]], [[[1]]], [[[0]]])
        np.testing.assert_array_equal(stack_colligation(alpha, 0), [[0, 1], [1, 0]])

    def test_stack_degenerate_blocks(self):
        a = np.array([[[1, 2], [3, 4]]], dtype=complex)
        alpha = Colligation(a, np.zeros((1, 2, 0)), np.zeros((1, 0, 2)), np.zeros((1, 0, 0)))
        np.testing.assert_array_equal(stack_colligation(alpha, 0), a[0])

    def test_index_range(self):
        alpha = Colligation.zeros(2, 1, 1, 1)
        with pytest.raises(IndexError):
            stack_colligation(alpha, 2)

    @given(st.integers(0, 10_000), st.integers(1, 3), st.integers(0, 3), st.integers(0, 2), st.integers(0, 2))
    def test_stack_round_trip_exact(self, seed, n, dx, din, dout):
        alpha = random_system(np.random.default_rng(seed), n, dx, din, dout)
        back = Colligation.from_stacked(alpha.stacked(), dx)
        assert back.allclose(alpha, atol=0.0)

    def test_shape_checks(self):
        with pytest.raises(ShapeError):
            Colligation(np.zeros((1, 2, 2)), np.zeros((1, 3, 1)), np.zeros((1, 1, 2)), np.zeros((1, 1, 1)))
        with pytest.raises(ShapeError):
            Colligation(np.zeros((2, 2, 2)), np.zeros((1, 2, 1)), np.zeros((1, 1, 2)), np.zeros((1, 1, 1)))

    def test_immutable(self):
        alpha = Colligation.zeros(1, 2, 1, 1)
        with pytest.raises(ValueError):
            alpha.a[0, 0, 0] = 1


class TestMultiIndices:
    def test_counts(self):
        assert len(list(multi_indices(3, 4))) == 15
        assert list(multi_indices(2, 2)) == [(2, 0), (1, 1), (0, 2)]
        assert len(list(multi_indices_upto(2, 3, 1))) == 2 + 3 + 4

    def test_torus_point(self):
        torus_point([1, 1j, np.exp(0.3j)])
        with pytest.raises(DomainError):
            torus_point([1, 0.5])


class TestSubspaces:
    def test_orth_rank_cut(self):
        v = np.array([[1, 1], [0, 1e-14], [0, 0]], dtype=complex)
        assert orth(v).shape[1] == 1
        assert orth(v, rtol=0).shape[1] == 2
        assert orth(v, rtol=0, atol=1e-12).shape[1] == 1

    def test_coordinate_complement_exact(self):
        x = SubspaceBasis.coordinates(4, [1, 3])
        assert x.complement().coordinate_indices() == [0, 2]

    def test_general_complement(self, rng):
        x = SubspaceBasis.span(random_cmatrix(5, 2, rng))
        q = x.complement().basis
        assert q.shape == (5, 3)
        assert spectral_norm(x.basis.conj().T @ q) < 1e-12

    def test_not_orthonormal(self):
        with pytest.raises(ValueError):
            SubspaceBasis(np.array([[1.0], [1.0]]))
