"""Von Neumann inequality violations for linear pencils and the systems they produce.

For operator coefficients ``M = (M_1, ..., M_N)`` and a commuting tuple of
contractions ``T`` the multivariable von Neumann inequality would say
``||sum M_k (x) T_k|| <= max_{z in T^N} ||sum z_k M_k||``. It holds for
``N <= 2`` and can fail for ``N >= 3``; a failure turns the normalised
pencil ``G = M / max ||L_M||`` into a system that is dissipative but whose
pencil is not in the Schur–Agler class.

Two commuting families are provided. ``varopoulos_tuple`` builds
order-3 nilpotent operators ``T_k(a, v, b) = (0, a x_k, <v, y_k>)``;
``block_nilpotent_tuple`` builds ``T_k = [[0, 0], [X_k, 0]]``, for which
every product ``T_k T_l`` vanishes, so any contractions ``X_k`` give a
commuting tuple.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, PreconditionError, ShapeError
from .linalg import Colligation, operator_tuple, random_cmatrix, spectral_norm
from .pencil import GRID_CAP, torus_norm_max, torus_norm_upper_bound
from .transfer import CommutingTuple

WITNESS_MARGIN = 1e-9
REVALIDATE_TOL = 1e-10
VERIFY_RADIUS = 1.0 - 1e-6
SYMMETRY_TOL = 1e-12
RHS_GRID = 64
RHS_RESTARTS = 4


@dataclass(frozen=True)
class SearchConfig:
    """Budget of ``violation_search``.

    ``inner_grid`` is the phase grid used for the normaliser while
    searching; reported witnesses are re-evaluated with the full
    ``torus_norm_max`` at ``rhs_grid``.
    """

    restarts: int = 3
    iters: int = 40
    inner_grid: int = 24
    rhs_grid: int = RHS_GRID
    family: str = "block"

    def __post_init__(self):
        if self.restarts < 1 or self.iters < 0:
            raise ConfigurationError("need restarts >= 1 and iters >= 0")
        if self.family not in ("block", "varopoulos"):
            raise ConfigurationError(f"unknown family {self.family!r}")


@dataclass(frozen=True, eq=False)
class ViolationWitness:
    """``||L_M(rT)||`` against the torus maximum of ``||L_M||``.

    ``rhs`` is the best-found torus maximum (a lower bound), ``rhs_upper``
    a certified upper bound when one was computed. ``certified`` needs the
    ratio to clear the margin even against ``rhs_upper``.
    """

    m: np.ndarray
    t: CommutingTuple
    r: float
    lhs: float
    rhs: float
    ratio: float
    seed: int
    rhs_upper: Optional[float] = None
    family: str = "block"
    budget: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.m.shape[0]

    @property
    def is_valid(self) -> bool:
        return self.ratio > 1 + WITNESS_MARGIN

    @property
    def certified(self) -> bool:
        return self.rhs_upper is not None and self.lhs / self.rhs_upper > 1 + WITNESS_MARGIN

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


# -- commuting families ----------------------------------------------------------------


def varopoulos_tuple(x, y) -> CommutingTuple:
    """``T_k(a, v, b) = (0, a x_k, <v, y_k>)`` on ``C (+) C^m (+) C``.

    Requires ``<x_l, y_k> = <x_k, y_l>`` so that ``T_k T_l(a, v, b) = (0, 0, a <x_l, y_k>)``
    is symmetric in ``k, l``, and ``||x_k||, ||y_k|| <= 1``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.complex128))
    y = np.atleast_2d(np.asarray(y, dtype=np.complex128))
    if x.shape != y.shape:
        raise ShapeError(f"x and y must have the same shape, got {x.shape} and {y.shape}")
    n, m = x.shape
    gram = y.conj() @ x.T  # gram[k, l] = <x_l, y_k>
    asym = float(np.max(np.abs(gram - gram.T), initial=0.0))
    if asym > SYMMETRY_TOL:
        raise PreconditionError(f"<x_l, y_k> is not symmetric (defect {asym:.3e})", defect=asym)
    worst = max(float(np.max(np.linalg.norm(x, axis=1))), float(np.max(np.linalg.norm(y, axis=1))))
    if worst > 1 + 1e-12:
        raise PreconditionError(f"vector of norm {worst:.12g} > 1", norm=worst)
    t = np.zeros((n, m + 2, m + 2), dtype=np.complex128)
    t[:, 1 : m + 1, 0] = x
    t[:, m + 1, 1 : m + 1] = y.conj()
    return CommutingTuple(t)


def block_nilpotent_tuple(x) -> CommutingTuple:
    """``T_k = [[0, 0], [X_k, 0]]`` on ``C^q (+) C^p`` for ``p x q`` contractions ``X_k``."""
    x = operator_tuple(x)
    n, p, q = x.shape
    worst = max(spectral_norm(xk) for xk in x)
    if worst > 1 + 1e-10:
        raise PreconditionError(f"X_k has norm {worst:.12g} > 1", norm=worst)
    t = np.zeros((n, p + q, p + q), dtype=np.complex128)
    t[:, q:, :q] = x
    return CommutingTuple(t)


# -- evaluation ----------------------------------------------------------------------


def tensor_pencil_norm(m, t, r: float = 1.0) -> float:
    """``||sum_k M_k (x) r T_k||`` assembled with ``np.kron`` and a full SVD."""
    m = np.asarray(m, dtype=np.complex128)
    t = np.asarray(t, dtype=np.complex128)
    total = np.zeros((m.shape[1] * t.shape[1], m.shape[2] * t.shape[2]), dtype=np.complex128)
    for mk, tk in zip(m, t):
        total += np.kron(mk, r * tk)
    if total.size == 0:
        return 0.0
    return float(np.linalg.svd(total, compute_uv=False)[0])


def _rhs(m, grid, seed):
    return torus_norm_max(m, grid=grid, restarts=RHS_RESTARTS, seed=seed).torus_max


def make_witness(m, t: CommutingTuple, seed: int = 0, r: float = VERIFY_RADIUS, rhs_grid: int = RHS_GRID,
                 upper_grid: Optional[int] = None, family: str = "block", budget=None) -> ViolationWitness:
    """Evaluate both sides from scratch and package the result."""
    m = operator_tuple(m)
    if t.n != m.shape[0]:
        raise ShapeError(f"tuple has N={t.n}, coefficients N={m.shape[0]}")
    lhs = tensor_pencil_norm(m, t.mats, r)
    rhs = _rhs(m, rhs_grid, seed)
    upper = None
    if upper_grid is not None:
        upper = torus_norm_upper_bound(m, upper_grid)
    return ViolationWitness(
        m=m, t=t, r=r, lhs=lhs, rhs=rhs, ratio=lhs / rhs if rhs > 0 else np.inf, seed=seed,
        rhs_upper=upper, family=family, budget=dict(budget or {}),
    )


def revalidate(w: ViolationWitness) -> ViolationWitness:
    """Recompute ``lhs``, ``rhs`` and ``ratio`` by an independent path; raise on mismatch."""
    fresh = make_witness(
        w.m, CommutingTuple(np.array(w.t.mats)), seed=w.seed, r=w.r,
        rhs_grid=w.budget.get("rhs_grid", RHS_GRID),
        upper_grid=w.budget.get("upper_grid"), family=w.family, budget=w.budget,
    )
    if abs(fresh.ratio - w.ratio) > REVALIDATE_TOL:
        raise PreconditionError(
            f"stored ratio {w.ratio!r} does not reproduce (got {fresh.ratio!r})",
            stored=w.ratio, recomputed=fresh.ratio,
        )
    return fresh


# -- search --------------------------------------------------------------------------


def _grid_max(m, phases):
    z = np.concatenate([np.ones((phases.shape[0], 1)), np.exp(1j * phases)], axis=1)
    vals = np.einsum("pk,kij->pij", z, m)
    return float(np.max(np.linalg.svd(vals, compute_uv=False)[:, 0]))


def _grid_phases(n_free, grid):
    if n_free == 0:
        return np.zeros((1, 0))
    grid = max(2, min(grid, int(round(GRID_CAP ** (1 / n_free)))))
    axis = 2 * np.pi * np.arange(grid) / grid
    mesh = np.meshgrid(*([axis] * n_free), indexing="ij")
    return np.stack([g.reshape(-1) for g in mesh], axis=1)


def _polar(w):
    u, _, vh = np.linalg.svd(w)
    return u @ vh


def _best_x(m, x, sweeps=8):
    """Alternating ascent of ``||sum M_k (x) X_k||`` over contractions ``X_k``.

    With top singular vectors ``u, v`` reshaped to ``U, V``, the bilinear
    form is ``sum_k Re tr(X_k^T U* M_k V)``; each ``X_k`` is replaced by the
    unitary maximising its term, which never decreases the norm.
    """
    n, nm, _ = m.shape
    q = x.shape[1]
    for _ in range(sweeps):
        big = sum(np.kron(mk, xk) for mk, xk in zip(m, x))
        u, _, vh = np.linalg.svd(big)
        uu = u[:, 0].reshape(nm, q)
        vv = vh[0].conj().reshape(nm, q)
        x = np.stack([_polar(uu.conj().T @ mk @ vv).conj() for mk in m])
    big = sum(np.kron(mk, xk) for mk, xk in zip(m, x))
    return x, spectral_norm(big)


def _varopoulos_lhs(m, x):
    col = sum(np.kron(mk, xk[:, None]) for mk, xk in zip(m, x))
    row = sum(np.kron(mk, xk.conj()[None, :]) for mk, xk in zip(m, x))
    return max(spectral_norm(col), spectral_norm(row))


def _normalise_rows(x):
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.maximum(norms, 1.0)


def violation_search(n: int, matrix_dim: int = 2, defect_dim: int = 2, seed: int = 0,
                     config: SearchConfig = SearchConfig()) -> ViolationWitness:
    """Best-found ratio ``||L_M(T)|| / max_T^N ||L_M||`` over ``M`` and a commuting family.

    Each restart draws ``M`` and the family parameters at random, then
    alternates (a) an exact-step ascent of the left side over the family
    parameters and (b) coordinate-wise random moves on each ``M_k`` with an
    adaptive step, accepted when the ratio (normaliser on a phase grid)
    improves. The winner is re-evaluated at radius ``1 - 1e-6`` with a
    refined torus maximum; it is returned whether or not it violates.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    phases = _grid_phases(n - 1, config.inner_grid)
    best = None
    for restart in range(config.restarts):
        m = np.stack([random_cmatrix(matrix_dim, matrix_dim, rng) for _ in range(n)])
        if config.family == "block":
            x = np.stack([_polar(random_cmatrix(defect_dim, defect_dim, rng)) for _ in range(n)])
            x, lhs = _best_x(m, x)
        else:
            x = _normalise_rows(rng.standard_normal((n, defect_dim)))
            lhs = _varopoulos_lhs(m, x)
        ratio = lhs / _grid_max(m, phases)
        step = 0.3
        for _ in range(config.iters):
            improved = False
            for k in range(n):
                cand_m = m.copy()
                scale = spectral_norm(m[k]) + 1e-3
                cand_m[k] = m[k] + step * scale * random_cmatrix(matrix_dim, matrix_dim, rng) / matrix_dim
                if config.family == "block":
                    cand_x, cand_lhs = _best_x(cand_m, x, sweeps=3)
                else:
                    cand_x = _normalise_rows(x + step * rng.standard_normal(x.shape))
                    cand_lhs = _varopoulos_lhs(cand_m, cand_x)
                cand_ratio = cand_lhs / _grid_max(cand_m, phases)
                if cand_ratio > ratio:
                    m, x, lhs, ratio = cand_m, cand_x, cand_lhs, cand_ratio
                    improved = True
            step = min(step * 1.2, 1.0) if improved else max(step / 2, 1e-4)
        if best is None or ratio > best[0]:
            best = (ratio, m, x)
    _, m, x = best
    t = block_nilpotent_tuple(x) if config.family == "block" else varopoulos_tuple(x, x)
    budget = {
        "restarts": config.restarts, "iters": config.iters, "inner_grid": config.inner_grid,
        "rhs_grid": config.rhs_grid, "matrix_dim": matrix_dim, "defect_dim": defect_dim,
    }
    return make_witness(m, t, seed=seed, rhs_grid=config.rhs_grid, family=config.family, budget=budget)


def pauli_witness(r: float = VERIFY_RADIUS, upper_grid: int = 1024) -> ViolationWitness:
    """``M = (I, sigma_x, sigma_z)`` against ``T_k = [[0, 0], [conj(M_k), 0]]``.

    ``||sum M_k (x) conj(M_k)|| = 3`` (attained at the maximally entangled
    vector) while ``max_T^3 ||L_M|| = sqrt(6)``, a ratio of ``sqrt(3/2)``.
    """
    m = np.array([np.eye(2), [[0, 1], [1, 0]], [[1, 0], [0, -1]]], dtype=np.complex128)
    t = block_nilpotent_tuple(m.conj())
    budget = {"rhs_grid": RHS_GRID, "upper_grid": upper_grid, "source": "closed form"}
    return make_witness(m, t, seed=0, r=r, upper_grid=upper_grid, family="block", budget=budget)


# -- systems -------------------------------------------------------------------------


def normalised_pencil(m, grid: int = RHS_GRID, seed: int = 0) -> np.ndarray:
    """``G = M / max_T^N ||L_M||``."""
    m = operator_tuple(m)
    if not np.any(m):
        raise PreconditionError("all M_k vanish; the pencil cannot be normalised")
    return m / _rhs(m, grid, seed)


def build_counterexample_system(m, grid: int = RHS_GRID, seed: int = 0) -> Colligation:
    """Split ``G = M / max ||L_M||`` with state space ``C^(n_M - 1)`` and scalar input/output."""
    m = operator_tuple(m)
    if m.shape[1] != m.shape[2] or m.shape[1] < 2:
        raise ShapeError(f"M_k must be square of size >= 2, got {m.shape[1:]}")
    return Colligation.from_stacked(normalised_pencil(m, grid, seed), m.shape[1] - 1)


def safe_pad_norm(w: ViolationWitness, n: int) -> float:
    """Largest padding norm that provably keeps ``lhs > rhs`` after extending to ``n`` parameters."""
    return (w.ratio - 1) * w.rhs / (4 * (n - 3))


def extend_to_higher_n(w: ViolationWitness, n: int, pad_norm: float) -> ViolationWitness:
    """Append ``M_k = pad_norm * I`` and ``T_k = 0`` for ``k = 4, ..., n``.

    The left side is unchanged and the torus maximum grows by at most
    ``(n - 3) * pad_norm``. The extended witness is re-evaluated from scratch.
    """
    if w.n != 3:
        raise ShapeError(f"expected a witness with N=3, got N={w.n}")
    if n <= 3:
        raise ConfigurationError(f"n must exceed 3, got {n}")
    bound = safe_pad_norm(w, n)
    if pad_norm < 0 or pad_norm > bound:
        raise PreconditionError(f"pad_norm {pad_norm:.3e} outside [0, {bound:.3e}]", safe_bound=bound)
    extra = n - 3
    nm = w.m.shape[1]
    m = np.concatenate([w.m, pad_norm * np.broadcast_to(np.eye(nm), (extra, nm, nm))])
    dim = w.t.dim
    t = CommutingTuple(np.concatenate([w.t.mats, np.zeros((extra, dim, dim))]))
    budget = dict(w.budget)
    budget.pop("upper_grid", None)
    return make_witness(m, t, seed=w.seed, r=w.r, rhs_grid=w.budget.get("rhs_grid", RHS_GRID),
                        family=w.family, budget=budget)
