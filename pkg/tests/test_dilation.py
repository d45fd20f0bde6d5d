import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ndsys.dilation import (
    FAMILIES,
    assemble_dilation,
    assembled_embedding,
    build_subspaces_fixed_zeta,
    compress,
    extract_embedded,
    is_dilation,
    is_dilation_sampled,
    subspace_residuals,
    random_conservative_dilation,
    random_dilation_pair,
    reduce_uniform,
    vanish_residual,
)
from ndsys.errors import PreconditionError, StructuralError
from ndsys.linalg import Colligation, SubspaceBasis, random_cmatrix, random_torus_points, spectral_norm
from ndsys.pencil import is_conservative_algebraic, random_conservative_pencil
from ndsys.realize import trivial_realization
from ndsys.transfer import transfer_eval

from conftest import random_system


def autonomous(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 2:
        a = a[None]
    n, d, _ = a.shape
    return Colligation(a, np.zeros((n, d, 0)), np.zeros((n, 0, d)), np.zeros((n, 0, 0)))


def three_cycle():
    p = np.zeros((3, 3))
    p[1, 0] = p[2, 1] = p[0, 2] = 1
    return autonomous(p), autonomous(np.zeros((1, 1))), SubspaceBasis.coordinates(3, [1])


def triangular():
    return autonomous([[0, 1], [0, 0]]), autonomous(np.zeros((1, 1))), SubspaceBasis.coordinates(2, [1])


def julia_beta(g):
    """One-parameter unitary colligation [[-G*, D_G*], [D_G, G]] around a scalar contraction G."""
    dg = np.sqrt(1 - abs(g) ** 2)
    return Colligation([[[-np.conj(g)]]], [[[dg]]], [[[dg]]], [[[g]]])


class TestIsDilation:
    def test_reflexive(self, rng):
        alpha = random_system(rng, 2, 3, 2, 1)
        rep = is_dilation(alpha, alpha, SubspaceBasis.full(3), 6)
        assert rep.passed and rep.max_residual == 0.0

    def test_three_cycle(self):
        big, small, embed = three_cycle()
        assert is_dilation(big, small, embed, 2).passed
        rep = is_dilation(big, small, embed, 3)
        assert not rep.passed
        assert rep.residuals["plain"] == 1.0
        assert rep.first_failure() == (3, "plain")

    def test_triangular_all_degrees(self):
        big, small, embed = triangular()
        for m in range(11):
            assert is_dilation(big, small, embed, m).max_residual <= 1e-12

    def test_default_cap(self, rng):
        big, small, embed = random_dilation_pair(2, 2, 1, 1, 1, 1, seed=0)
        assert is_dilation(big, small, embed).degree_cap == 2 * big.dx

    def test_d_mismatch(self, rng):
        alpha = random_system(rng, 2, 2, 1, 1)
        other = Colligation(alpha.a, alpha.b, alpha.c, alpha.d + 1e-15)
        with pytest.raises(StructuralError):
            is_dilation(other, alpha, SubspaceBasis.full(2))

    def test_shape_mismatch(self, rng):
        alpha = random_system(rng, 2, 2, 1, 1)
        with pytest.raises(StructuralError):
            is_dilation(alpha, alpha, SubspaceBasis.coordinates(2, [0]))

    @given(st.integers(0, 10_000))
    def test_generated_pairs_pass(self, seed):
        big, small, embed = random_dilation_pair(2, 2, 2, 1, 1, 2, seed)
        assert is_dilation(big, small, embed).passed


class TestSampled:
    def test_vacuous(self):
        big, small, embed = three_cycle()
        rep = is_dilation_sampled(big, small, embed, [], 5)
        assert rep.passed and rep.samples == 0

    def test_three_cycle(self, rng):
        big, small, embed = three_cycle()
        for z in random_torus_points(1, 5, rng):
            rep = is_dilation_sampled(big, small, embed, [z], 4)
            assert rep.first_failure() == (3, "plain")

    @given(st.integers(0, 10_000), st.sampled_from(["exact", "near", "broken"]))
    def test_agrees_with_symmetrized(self, seed, mode):
        rng = np.random.default_rng(seed)
        big, small, embed = random_dilation_pair(2, 2, 1, 1, 1, 1, seed)
        if mode != "exact":
            eps = 1e-6 if mode == "near" else 0.3
            small = Colligation(small.a + eps * random_cmatrix(2, 2, rng)[None].repeat(2, 0), small.b, small.c, small.d)
        sym = is_dilation(big, small, embed, 4, tol=1e-8)
        smp = is_dilation_sampled(big, small, embed, random_torus_points(2, 20, rng), 4, tol=1e-8)
        assert sym.passed == smp.passed


class TestSubspaces:
    def test_identity(self, rng):
        alpha = random_system(rng, 2, 3, 1, 1)
        d, dstar = build_subspaces_fixed_zeta(alpha, alpha, SubspaceBasis.full(3), [1, 1])
        assert d.dim == 0 and dstar.dim == 0

    def test_triangular(self):
        big, small, embed = triangular()
        d, dstar = build_subspaces_fixed_zeta(big, small, embed, [1])
        assert d.dim == 1 and abs(abs(d.basis[0, 0]) - 1) < 1e-14
        assert dstar.dim == 0

    def test_three_cycle_precondition(self):
        big, small, embed = three_cycle()
        with pytest.raises(PreconditionError) as info:
            build_subspaces_fixed_zeta(big, small, embed, [1])
        assert info.value.detail == {"family": "plain", "degree": 3}

    @given(st.integers(0, 10_000), st.integers(0, 2), st.integers(0, 2))
    def test_subspace_identities(self, seed, dd, dds):
        big, small, embed = random_dilation_pair(2, 2, dd, dds, 1, 1, seed)
        zeta = random_torus_points(2, 1, np.random.default_rng(seed))[0]
        d, dstar = build_subspaces_fixed_zeta(big, small, embed, zeta)
        assert d.dim + dstar.dim + small.dx == big.dx
        assert max(subspace_residuals(big, small, embed, zeta, d, dstar).values()) <= 1e-8


class TestBlockMoves:
    def test_assemble_empty_aux(self):
        g = random_conservative_pencil(2, 3, seed=5)
        alpha = Colligation.from_stacked(g, 2)
        beta = trivial_realization(g).beta
        assert assemble_dilation(beta, 2, alpha).allclose(alpha, atol=0.0)

    def test_assemble_shapes(self, rng):
        alpha = random_system(rng, 2, 2, 1, 1)
        g = alpha.stacked()
        beta = Colligation(
            np.stack([random_cmatrix(3, 3, rng) for _ in range(2)]),
            np.stack([random_cmatrix(3, 3, rng) for _ in range(2)]),
            np.stack([random_cmatrix(3, 3, rng) for _ in range(2)]),
            g,
        )
        big = assemble_dilation(beta, 2, alpha)
        assert big.a.shape == (2, 5, 5) and big.b.shape == (2, 5, 1) and big.c.shape == (2, 1, 5)

    def test_assemble_rejects_wrong_corner(self, rng):
        alpha = random_system(rng, 1, 1, 1, 1)
        beta = Colligation(np.zeros((1, 1, 1)), np.zeros((1, 1, 2)), np.zeros((1, 2, 1)), alpha.stacked() + 1e-9)
        with pytest.raises(StructuralError):
            assemble_dilation(beta, 1, alpha)

    def test_extract_whole_space(self, rng):
        alpha = random_system(rng, 2, 3, 1, 2)
        beta = extract_embedded(alpha, SubspaceBasis.full(3))
        assert beta.dx == 0
        np.testing.assert_array_equal(beta.d, alpha.stacked())

    @given(st.integers(0, 10_000))
    def test_extract_assemble_round_trip(self, seed):
        big = random_system(np.random.default_rng(seed), 2, 4, 1, 1)
        embed = assembled_embedding(2, 2)
        beta = extract_embedded(big, embed)
        small = Colligation.from_stacked(beta.d, 2)
        assert assemble_dilation(beta, 2, small).allclose(big, atol=0.0)

    @given(st.integers(0, 10_000))
    def test_extract_keeps_conservativity(self, seed):
        big, small, embed = random_conservative_dilation(2, 2, 1, 1, 1, seed)
        beta = extract_embedded(big, embed)
        assert is_conservative_algebraic(beta.stacked(), 1e-10)[0]
        assert max(vanish_residual(beta, 2, 6)) <= 1e-8

    def test_vanish_empty_aux(self, rng):
        beta = Colligation(np.zeros((2, 0, 0)), np.zeros((2, 0, 3)), np.zeros((2, 3, 0)), random_cmatrix(3, 3, rng)[None].repeat(2, 0))
        assert vanish_residual(beta, 2, 4) == [0.0] * 5

    def test_vanish_julia(self):
        res = vanish_residual(julia_beta(0.5), 0, 3)
        assert res[0] == pytest.approx(0.75, abs=1e-15)
        # H T^n F = (3/4) (-1/2)^n
        for n, r in enumerate(res):
            assert r == pytest.approx(0.75 * 0.5**n, abs=1e-15)

    def test_compress_examples(self, rng):
        alpha = random_system(rng, 2, 3, 1, 1)
        assert compress(alpha, SubspaceBasis.full(3)).allclose(alpha, atol=1e-15)
        static = compress(alpha, SubspaceBasis.zero(3))
        z = np.array([0.2, -0.3j])
        np.testing.assert_allclose(transfer_eval(static, z), np.tensordot(z, alpha.d, axes=1))
        big, small, embed = triangular()
        assert compress(big, embed).allclose(small, atol=0.0)


class TestReduce:
    def test_minimal_unchanged(self, rng):
        alpha = random_system(rng, 2, 3, 1, 1)
        red = reduce_uniform(alpha)
        assert red.alpha_min.dx == 3 and red.d.dim == 0 and red.dstar.dim == 0

    def test_recovers_observable_reachable_core(self):
        a = np.array([[[0, 1], [0, 0.5]]], dtype=complex)
        b = np.array([[[0], [1]]], dtype=complex)
        c = np.array([[[0, 1]]], dtype=complex)
        alpha = Colligation(a, b, c, np.zeros((1, 1, 1)))
        red = reduce_uniform(alpha)
        assert red.alpha_min.dx == 1 and red.d.dim == 1
        np.testing.assert_allclose(red.alpha_min.a, [[[0.5]]])

    @given(st.integers(0, 10_000))
    def test_dilation_and_idempotence(self, seed):
        big, small, embed = random_dilation_pair(2, 2, 2, 1, 1, 1, seed)
        red = reduce_uniform(big)
        assert red.alpha_min.dx + red.d.dim + red.dstar.dim == big.dx
        assert is_dilation(big, red.alpha_min, red.embed, 6).max_residual <= 1e-8
        again = reduce_uniform(red.alpha_min)
        assert again.alpha_min.dx == red.alpha_min.dx
        assert is_dilation(red.alpha_min, again.alpha_min, again.embed, 6).max_residual <= 1e-8


class TestTransferInvariance:
    @given(st.integers(0, 10_000))
    def test_dilation_preserves_transfer(self, seed):
        rng = np.random.default_rng(seed)
        big, small, embed = random_dilation_pair(2, 2, 1, 1, 1, 1, seed)
        assert is_dilation(big, small, embed, 4).max_residual <= 1e-10
        for z in rng.standard_normal((20, 2)) + 1j * rng.standard_normal((20, 2)):
            za = np.tensordot(z, big.a, axes=1)
            z = z * min(1.0, 0.9 / spectral_norm(za))
            assert spectral_norm(transfer_eval(big, z) - transfer_eval(small, z)) <= 1e-8


def test_family_names():
    assert FAMILIES == ("plain", "sharp", "flat", "flat_sharp")
