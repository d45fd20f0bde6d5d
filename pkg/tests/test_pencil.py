import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ndsys.errors import ConfigurationError, ShapeError
from ndsys.linalg import random_cmatrix, random_polydisc_points, random_torus_points, unitarity_defect
from ndsys.pencil import (
    Verdict,
    conservativity_residuals,
    eval_pencil,
    is_conservative_algebraic,
    random_conservative_pencil,
    torus_norm_max,
    torus_norm_upper_bound,
)


def sampled_unitary(g, rng, count=1000, tol=1e-8):
    pts = random_torus_points(g.shape[0], count, rng)
    return all(unitarity_defect(eval_pencil(g, z)) <= tol for z in pts)


class TestEvalPencil:
    def test_examples(self):
        g = np.array([np.eye(2), np.zeros((2, 2))])
        np.testing.assert_allclose(eval_pencil(g, [0.5, 0.9]), 0.5 * np.eye(2))
        g = np.array([np.diag([1, 0]), np.diag([0, 1])])
        np.testing.assert_allclose(eval_pencil(g, [1j, 1]), np.diag([1j, 1]))
        np.testing.assert_allclose(eval_pencil(np.array([[[0.5]], [[0.5]]]), [1, 1]), [[1]])

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            eval_pencil(np.zeros((2, 1, 1)), [1, 2, 3])


class TestTorusNormMax:
    def test_two_halves(self):
        rep = torus_norm_max(np.array([[[0.5]], [[0.5]]]))
        assert rep.torus_max == pytest.approx(1.0, abs=1e-12)
        assert abs(rep.argmax[0] - rep.argmax[1]) < 1e-5
        assert rep.verdict is Verdict.DISSIPATIVE

    def test_single_nilpotent(self):
        rep = torus_norm_max(np.array([[[0, 1], [0, 0]]]))
        assert rep.torus_max == pytest.approx(1.0, abs=1e-12)

    def test_scalar_triple(self):
        rep = torus_norm_max(np.array([[[0.8]], [[0.5]], [[0.1]]]))
        assert rep.torus_max == pytest.approx(1.4, abs=1e-9)
        assert rep.verdict is Verdict.VIOLATION

    def test_argmax_attains_value(self, rng):
        g = np.stack([random_cmatrix(3, 3, rng) for _ in range(3)])
        rep = torus_norm_max(g)
        assert np.linalg.norm(eval_pencil(g, rep.argmax), 2) == pytest.approx(rep.torus_max, abs=1e-9)
        assert np.allclose(np.abs(rep.argmax), 1)

    def test_bad_grid(self):
        with pytest.raises(ConfigurationError):
            torus_norm_max(np.zeros((2, 1, 1)), grid=1)

    def test_quasi_random_fallback(self, rng):
        g = np.stack([random_cmatrix(2, 2, rng) for _ in range(6)])
        rep = torus_norm_max(g, grid=32, restarts=0)
        assert rep.quasi_random
        assert rep.torus_max <= torus_norm_upper_bound(g[:3], 64) + sum(np.linalg.norm(x, 2) for x in g[3:])

    @given(st.integers(0, 10_000), st.integers(1, 3))
    def test_necessary_condition(self, seed, n):
        rng = np.random.default_rng(seed)
        g = np.stack([random_cmatrix(2, 2, rng) for _ in range(n)])
        g = g / sum(np.linalg.norm(x, 2) for x in g) * rng.uniform(0.3, 1.6)
        rep = torus_norm_max(g, grid=16, restarts=1, seed=seed)
        if rep.is_dissipative:
            assert rep.necessary_bound <= 1 + 1e-8
        # the torus average of (zG)*(zG) is sum G*G, so its norm never exceeds max^2
        assert rep.necessary_bound <= rep.torus_max**2 + 1e-9

    @given(st.integers(0, 10_000))
    def test_maximum_principle(self, seed):
        rng = np.random.default_rng(seed)
        g = np.stack([random_cmatrix(2, 3, rng) for _ in range(2)])
        rep = torus_norm_max(g, grid=32, restarts=2, seed=seed)
        inner = max(np.linalg.norm(eval_pencil(g, z), 2) for z in random_polydisc_points(2, 200, rng))
        assert inner <= rep.torus_max + 1e-9

    @given(st.integers(0, 10_000), st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False))
    def test_homogeneity(self, seed, c):
        rng = np.random.default_rng(seed)
        g = np.stack([random_cmatrix(2, 2, rng) for _ in range(2)])
        a = torus_norm_max(g, grid=32, restarts=2, seed=seed).torus_max
        b = torus_norm_max(c * g, grid=32, restarts=2, seed=seed).torus_max
        assert b == pytest.approx(abs(c) * a, abs=1e-9 * max(1, abs(c) * a))

    def test_upper_bound_dominates(self, rng):
        g = np.stack([random_cmatrix(2, 2, rng) for _ in range(3)])
        low = torus_norm_max(g).torus_max
        up = torus_norm_upper_bound(g, 128)
        assert low <= up + 1e-12
        assert up - low < 0.1 * low


class TestConservativity:
    def test_projections(self):
        ok, res = is_conservative_algebraic(np.array([np.diag([1, 0]), np.diag([0, 1])]))
        assert ok and max(res.values()) == 0.0

    def test_halves_not_conservative(self):
        ok, res = is_conservative_algebraic(np.array([[[0.5]], [[0.5]]]))
        assert not ok
        assert res["left_cross"] == pytest.approx(0.25)

    def test_single_unitary(self, rng):
        from ndsys.linalg import haar_unitary

        assert is_conservative_algebraic(haar_unitary(4, rng)[None])[0]

    def test_residual_keys(self):
        assert set(conservativity_residuals(np.eye(2)[None])) == {"left_cross", "right_cross", "isometry", "coisometry"}

    @pytest.mark.parametrize("n,d", [(1, 3), (2, 2), (3, 5), (4, 6)])
    def test_generator(self, n, d):
        g = random_conservative_pencil(n, d, seed=n * 10 + d)
        assert is_conservative_algebraic(g, 1e-10)[0]
        if d >= n:
            assert all(np.linalg.norm(gk, 2) > 0.5 for gk in g)

    def test_generator_two_by_two_orthogonal(self):
        g = random_conservative_pencil(2, 2, seed=3)
        assert np.linalg.norm(g[0].conj().T @ g[1]) < 1e-14

    def test_generator_sampled_n3(self):
        g = random_conservative_pencil(3, 5, seed=11)
        pts = random_torus_points(3, 1000, np.random.default_rng(0))
        assert max(unitarity_defect(eval_pencil(g, z)) for z in pts) <= 1e-10

    @given(st.integers(0, 10_000), st.integers(1, 4), st.booleans())
    def test_algebraic_equals_sampled(self, seed, n, perturb):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(n, 7))
        g = random_conservative_pencil(n, d, seed)
        if perturb:
            g = g + 1e-3 * np.stack([random_cmatrix(d, d, rng) for _ in range(n)])
        assert is_conservative_algebraic(g, 1e-10)[0] == sampled_unitary(g, rng, count=200)
