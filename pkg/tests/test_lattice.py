import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ndsys.errors import GapError, ShapeError
from ndsys.lattice import LatticeSignal, impulse_response, simulate
from ndsys.linalg import multi_indices, multi_indices_upto
from ndsys.transfer import taylor_coeff

from conftest import random_system


def zero_state(alpha):
    return LatticeSignal.zeros_on_level(alpha.n, alpha.dx, 0)


def full_input(alpha, levels, rng):
    u = LatticeSignal(alpha.n, alpha.din)
    for t in multi_indices_upto(alpha.n, levels - 1):
        u[t] = rng.standard_normal(alpha.din) + 1j * rng.standard_normal(alpha.din)
    return u


class TestSimulate:
    def test_zero(self, rng):
        alpha = random_system(rng, 2, 2, 1, 1)
        u = LatticeSignal(2, 1)
        for t in multi_indices_upto(2, 3):
            u[t] = [0]
        states, outs = simulate(alpha, zero_state(alpha), u, 4)
        assert all(np.all(v == 0) for v in outs.data.values())
        assert all(np.all(v == 0) for v in states.data.values())

    def test_one_parameter_recursion(self, rng):
        alpha = random_system(rng, 1, 2, 1, 1)
        u = full_input(alpha, 6, rng)
        x0 = LatticeSignal(1, 2)
        x0[(0,)] = rng.standard_normal(2)
        states, outs = simulate(alpha, x0, u, 6)
        x = x0[(0,)]
        for t in range(1, 7):
            y = alpha.c[0] @ x + alpha.d[0] @ u[(t - 1,)]
            x = alpha.a[0] @ x + alpha.b[0] @ u[(t - 1,)]
            np.testing.assert_allclose(states[(t,)], x, atol=1e-14)
            np.testing.assert_allclose(outs[(t,)], y, atol=1e-14)

    def test_impulse_first_step(self, rng):
        alpha = random_system(rng, 3, 2, 2, 1)
        v = np.array([1.0, -2.0])
        states, outs = simulate(alpha, zero_state(alpha), LatticeSignal.impulse(3, 2, v), 1, zero_input=True)
        for k in range(3):
            e = tuple(int(i == k) for i in range(3))
            np.testing.assert_allclose(states[e], alpha.b[k] @ v)
            np.testing.assert_allclose(outs[e], alpha.d[k] @ v)

    def test_gap_error_names_point(self, rng):
        alpha = random_system(rng, 2, 1, 1, 1)
        u = LatticeSignal(2, 1)
        u[(0, 0)] = [1]
        with pytest.raises(GapError) as info:
            simulate(alpha, zero_state(alpha), u, 2)
        assert info.value.point in {(1, 0), (0, 1)}
        assert "lattice point" in str(info.value)

    def test_missing_initial_state(self, rng):
        alpha = random_system(rng, 2, 1, 1, 1)
        with pytest.raises(GapError):
            simulate(alpha, LatticeSignal(2, 1), LatticeSignal.impulse(2, 1, [1]), 2, zero_input=True)

    def test_value_dim_checked(self):
        sig = LatticeSignal(2, 2)
        with pytest.raises(ShapeError):
            sig[(0, 0)] = [1, 2, 3]

    @given(st.integers(0, 10_000), st.integers(1, 3))
    def test_linearity(self, seed, n):
        rng = np.random.default_rng(seed)
        alpha = random_system(rng, n, 2, 2, 1)
        u1, u2 = full_input(alpha, 4, rng), full_input(alpha, 4, rng)
        both = LatticeSignal(n, 2)
        for t in u1.data:
            both[t] = u1[t] + u2[t]
        x0 = zero_state(alpha)
        _, o1 = simulate(alpha, x0, u1, 4)
        _, o2 = simulate(alpha, x0, u2, 4)
        _, o12 = simulate(alpha, x0, both, 4)
        for t in o12.data:
            np.testing.assert_allclose(o12[t], o1[t] + o2[t], atol=1e-12)

    @given(st.integers(0, 10_000), st.integers(1, 3))
    def test_shift_stationarity(self, seed, n):
        rng = np.random.default_rng(seed)
        alpha = random_system(rng, n, 2, 1, 1)
        tau = tuple(int(v) for v in rng.integers(0, 3, n))
        x0 = zero_state(alpha)
        _, base = simulate(alpha, x0, LatticeSignal.impulse(n, 1, [1]), 4, zero_input=True)
        _, moved = simulate(alpha, x0.shifted(tau), LatticeSignal.impulse(n, 1, [1], at=tau), 4, base=tau,
                            zero_input=True)
        for t, v in base.data.items():
            np.testing.assert_array_equal(moved[tuple(a + b for a, b in zip(t, tau))], v)


class TestImpulseResponse:
    def test_units_and_pairs(self, rng):
        alpha = random_system(rng, 3, 2, 2, 2)
        resp = impulse_response(alpha, 2)
        np.testing.assert_allclose(resp[(0, 1, 0)], alpha.d[1])
        np.testing.assert_allclose(resp[(1, 0, 1)], alpha.c[0] @ alpha.b[2] + alpha.c[2] @ alpha.b[0], atol=1e-15)

    def test_classical(self, rng):
        alpha = random_system(rng, 1, 3, 1, 1)
        np.testing.assert_allclose(impulse_response(alpha, 3)[(3,)], alpha.c[0] @ alpha.a[0] @ alpha.b[0], atol=1e-15)

    @given(st.integers(0, 10_000), st.integers(1, 3))
    def test_matches_taylor(self, seed, n):
        alpha = random_system(np.random.default_rng(seed), n, 2, 2, 1)
        resp = impulse_response(alpha, 5)
        for s in multi_indices_upto(n, 5, 1):
            np.testing.assert_allclose(resp[s], taylor_coeff(alpha, s), atol=1e-10)

    def test_levels_keys(self, rng):
        alpha = random_system(rng, 2, 1, 1, 1)
        assert set(impulse_response(alpha, 3)) == {s for d in (1, 2, 3) for s in multi_indices(2, d)}
