"""Transfer functions: point values, Taylor coefficients, and values on commuting tuples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, ShapeError, SingularityError
from .linalg import (
    Colligation,
    check_multi_index,
    kron,
    multi_indices_upto,
    operator_tuple,
    spectral_norm,
)
from .multipower import SymPowerKind, word_sum
from .pencil import eval_pencil

COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class CommutingTuple:
    """``N`` pairwise commuting contractions on ``C^dim``."""

    mats: np.ndarray
    commutator_tol: float = 1e-12
    contraction_tol: float = 1e-10

    def __post_init__(self):
        t = operator_tuple(self.mats)
        if t.shape[1] != t.shape[2]:
            raise ShapeError(f"commuting tuple needs square matrices, got {t.shape[1:]}")
        comm = self.commutator_residual(t)
        if comm > self.commutator_tol:
            raise PreconditionError(f"tuple does not commute (residual {comm:.3e})", residual=comm)
        worst = max(spectral_norm(tk) for tk in t)
        if worst > 1 + self.contraction_tol:
            raise PreconditionError(f"tuple member has norm {worst:.12g} > 1", norm=worst)
        t.setflags(write=False)
        object.__setattr__(self, "mats", t)

    @staticmethod
    def commutator_residual(t) -> float:
        n = t.shape[0]
        return max(
            (spectral_norm(t[k] @ t[l] - t[l] @ t[k]) for k in range(n) for l in range(k + 1, n)),
            default=0.0,
        )

    @property
    def n(self) -> int:
        return self.mats.shape[0]

    @property
    def dim(self) -> int:
        return self.mats.shape[1]


@dataclass(frozen=True, eq=False)
class TupleEvalResult:
    value: np.ndarray
    norm: float
    r: float
    resolvent_margin: float


def _resolvent_solve(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if lhs.shape[0] == 0:
        return np.zeros((0, rhs.shape[1]), dtype=np.complex128)
    cond = np.linalg.cond(lhs)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularityError(f"resolvent condition number {cond:.3e} exceeds {COND_LIMIT:.0e}", cond)
    return np.linalg.solve(lhs, rhs)


def transfer_eval(alpha: Colligation, z) -> np.ndarray:
    """``theta(z) = zD + zC (I - zA)^{-1} zB``."""
    z = np.asarray(z, dtype=np.complex128).reshape(-1)
    if z.shape[0] != alpha.n:
        raise ShapeError(f"{z.shape[0]} coordinates for a system with N={alpha.n}")
    za = eval_pencil(alpha.a, z)
    zb = eval_pencil(alpha.b, z)
    zc = eval_pencil(alpha.c, z)
    zd = eval_pencil(alpha.d, z)
    return zd + zc @ _resolvent_solve(np.eye(alpha.dx) - za, zb)


def taylor_coeff(alpha: Colligation, s) -> np.ndarray:
    """Coefficient of ``z^s`` in the power series of the transfer function.

    Zero at ``s = 0``, ``D_k`` at ``s = e_k`` and the unnormalized sum of
    all ``C A...A B`` words with letter multiset ``s`` when ``|s| >= 2``.
    """
    s = check_multi_index(s, alpha.n)
    deg = sum(s)
    if deg == 0:
        return np.zeros((alpha.dout, alpha.din), dtype=np.complex128)
    if deg == 1:
        return alpha.d[s.index(1)].copy()
    return word_sum(SymPowerKind.FLAT_SHARP, alpha.a, alpha.b, alpha.c, s)


def _tensor_pencil(g: np.ndarray, t: np.ndarray, r: float) -> np.ndarray:
    return sum(kron(g[k], r * t[k]) for k in range(g.shape[0]))


def _check_tuple(n: int, t: CommutingTuple):
    if t.n != n:
        raise ShapeError(f"commuting tuple has N={t.n}, expected {n}")


def eval_on_tuple(alpha: Colligation, t: CommutingTuple, r: float) -> TupleEvalResult:
    """``theta(rT)`` in closed form on ``C^dout (x) C^dim``.

    Because the ``T_k`` commute, ``(sum_k A_k (x) rT_k)^n`` collects the
    words of each multiset into ``(word sum) (x) (rT)^s``, so the defining
    power series equals the resolvent expression
    ``sum D_k (x) rT_k + (sum C_k (x) rT_k)(I - sum A_k (x) rT_k)^{-1}(sum B_k (x) rT_k)``.
    """
    _check_tuple(alpha.n, t)
    big_a = _tensor_pencil(alpha.a, t.mats, r)
    margin = 1.0 - spectral_norm(big_a)
    if margin <= 0:
        raise PreconditionError(
            f"||sum A_k (x) rT_k|| >= 1 (margin {margin:.3e}); resolvent series need not converge",
            margin=margin,
        )
    big_b = _tensor_pencil(alpha.b, t.mats, r)
    big_c = _tensor_pencil(alpha.c, t.mats, r)
    big_d = _tensor_pencil(alpha.d, t.mats, r)
    value = big_d + big_c @ _resolvent_solve(np.eye(big_a.shape[0]) - big_a, big_b)
    return TupleEvalResult(value=value, norm=spectral_norm(value), r=r, resolvent_margin=margin)


def eval_series_on_tuple(alpha: Colligation, t: CommutingTuple, r: float, max_degree: int) -> np.ndarray:
    """Truncated series ``sum_{|s| <= max_degree} theta_s (x) (rT)^s`` (test oracle)."""
    _check_tuple(alpha.n, t)
    dim = t.dim
    out = np.zeros((alpha.dout * dim, alpha.din * dim), dtype=np.complex128)
    for s in multi_indices_upto(alpha.n, max_degree, 1):
        power = np.eye(dim, dtype=np.complex128)
        for k, e in enumerate(s):
            power = power @ np.linalg.matrix_power(r * t.mats[k], e)
        out += kron(taylor_coeff(alpha, s), power)
    return out


def pencil_on_tuple(g, t: CommutingTuple, r: float = 1.0) -> TupleEvalResult:
    """``sum_k G_k (x) rT_k`` and its norm."""
    g = operator_tuple(g)
    _check_tuple(g.shape[0], t)
    value = _tensor_pencil(g, t.mats, r)
    return TupleEvalResult(value=value, norm=spectral_norm(value), r=r, resolvent_margin=np.inf)
