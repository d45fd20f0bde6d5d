"""Approximate conservative realizations of a linear pencil.

Given ``G = (G_1, ..., G_N)`` we look for ``beta = (T, F, H, S = G)`` on an
auxiliary state space ``C^dY`` whose stacked pencil
``[[T_k, F_k], [H_k, G_k]]`` is conservative and whose bordered words
``(H♭T#F)^s`` vanish for ``2 <= |s| <= M + 2``. The corner ``S = G`` is
fixed by the parametrisation; everything else is found by penalised
descent over ``(T, F, H)``.

A finite-dimensional conservative ``beta`` has an inner transfer function,
so for non-conservative ``G`` an exact solution needs ``dY`` to grow with
``M``; the search returns residuals, never a membership claim.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from .dilation import vanish_residual
from .errors import ConfigurationError, PreconditionError
from .linalg import Colligation, multi_indices, operator_tuple
from .multipower import polynomial_coefficient
from .pencil import conservativity_residuals, is_conservative_algebraic, random_conservative_pencil

FD_STEP = 1e-6
STOP_IMPROVEMENT = 1e-14
DEFAULT_DEGREE = 4
INIT_PERTURBATION = 0.5


@dataclass(frozen=True)
class RealizeConfig:
    """Search budget and optimiser settings for ``search_realization``."""

    restarts: int = 4
    iters: int = 1500
    step0: float = 1e-2
    fd_step: float = FD_STEP
    stop_improvement: float = STOP_IMPROVEMENT
    perturbation: float = INIT_PERTURBATION
    method: str = "adaptive"  # or "lbfgs": scipy L-BFGS-B on the same FD gradient

    def __post_init__(self):
        if self.restarts < 1 or self.iters < 0:
            raise ConfigurationError("need restarts >= 1 and iters >= 0")
        if self.method not in ("adaptive", "lbfgs"):
            raise ConfigurationError(f"unknown method {self.method!r}")


@dataclass(frozen=True, eq=False)
class RealizationResult:
    beta: Colligation
    dy: int
    degree_cap: int
    unitarity_residual: float
    vanish_residuals: list[float]
    objective: float
    objective_trace: list[float]
    seed: int
    iters: int
    restarts: int
    restart_objectives: list[float] = field(default_factory=list)

    @property
    def epsilon(self) -> float:
        """Total residual: conservativity defect plus the largest vanish residual."""
        return self.unitarity_residual + max(self.vanish_residuals, default=0.0)


# -- parametrisation -----------------------------------------------------------------


class _Problem:
    """Real-vector parametrisation of ``(T, F, H)`` and the batched objective."""

    def __init__(self, g: np.ndarray, dy: int, degree_cap: int):
        self.g = g
        self.n, self.rows, self.cols = g.shape
        self.dy = dy
        self.m = degree_cap
        self.shapes = [(self.n, dy, dy), (self.n, dy, self.cols), (self.n, self.rows, dy)]
        self.sizes = [int(np.prod(s)) for s in self.shapes]
        self.size = 2 * sum(self.sizes)
        self.words = [
            (s, polynomial_coefficient(s))
            for deg in range(2, degree_cap + 3)
            for s in multi_indices(self.n, deg)
        ]

    def unpack(self, x: np.ndarray):
        """``x`` of shape ``(batch, size)`` -> batched ``T, F, H``."""
        half = self.size // 2
        z = x[:, :half] + 1j * x[:, half:]
        out, lo = [], 0
        for shape, size in zip(self.shapes, self.sizes):
            out.append(z[:, lo : lo + size].reshape((x.shape[0],) + shape))
            lo += size
        return out

    def pack(self, t, f, h) -> np.ndarray:
        z = np.concatenate([np.ravel(t), np.ravel(f), np.ravel(h)])
        return np.concatenate([z.real, z.imag])

    def stacked(self, t, f, h) -> np.ndarray:
        batch = t.shape[0]
        g = np.broadcast_to(self.g, (batch,) + self.g.shape)
        top = np.concatenate([t, f], axis=3)
        bottom = np.concatenate([h, g], axis=3)
        return np.concatenate([top, bottom], axis=2)

    def objective(self, x: np.ndarray) -> np.ndarray:
        """Squared Frobenius residuals of the four conservativity families plus the vanish words."""
        x = np.atleast_2d(x)
        t, f, h = self.unpack(x)
        gs = self.stacked(t, f, h)  # (B, N, r, c)
        gh = np.conj(np.swapaxes(gs, -1, -2))
        dim_r, dim_c = gs.shape[2], gs.shape[3]
        left = np.einsum("bkij,bljm->bklim", gh, gs)  # G_k* G_l
        right = np.einsum("bkij,blmj->bklim", gs, np.conj(gs))  # G_k G_l*
        diag = np.arange(self.n)
        iso = left[:, diag, diag].sum(axis=1) - np.eye(dim_c)
        coiso = right[:, diag, diag].sum(axis=1) - np.eye(dim_r)
        off = ~np.eye(self.n, dtype=bool)
        j = (
            np.sum(np.abs(left[:, off]) ** 2, axis=(1, 2, 3))
            + np.sum(np.abs(right[:, off]) ** 2, axis=(1, 2, 3))
            + np.sum(np.abs(iso) ** 2, axis=(1, 2))
            + np.sum(np.abs(coiso) ** 2, axis=(1, 2))
        )
        return j + self._vanish_penalty(t, f, h)

    def _vanish_penalty(self, t, f, h):
        inner = {}
        n = self.n
        for deg in range(1, self.m + 2):
            for s in multi_indices(n, deg):
                if deg == 1:
                    inner[s] = f[:, s.index(1)]
                else:
                    inner[s] = sum(
                        t[:, k] @ inner[_minus(s, k)] for k in range(n) if s[k] > 0
                    )
        total = 0.0
        for s, cs in self.words:
            w = sum(h[:, k] @ inner[_minus(s, k)] for k in range(n) if s[k] > 0) / cs
            total = total + np.sum(np.abs(w) ** 2, axis=(1, 2))
        return total

    def gradient(self, x: np.ndarray, step: float) -> np.ndarray:
        """Central differences, all ``2 * size`` probes in one batched call."""
        probes = np.concatenate([x + step * np.eye(self.size), x - step * np.eye(self.size)])
        vals = self.objective(probes)
        return (vals[: self.size] - vals[self.size :]) / (2 * step)

    def beta(self, x: np.ndarray) -> Colligation:
        t, f, h = (arr[0] for arr in self.unpack(x[None, :]))
        return Colligation(t, f, h, self.g)


def _minus(s, k):
    t = list(s)
    t[k] -= 1
    return tuple(t)


# -- optimisers ----------------------------------------------------------------------


def _adaptive_descent(problem: _Problem, x: np.ndarray, cfg: RealizeConfig):
    value = float(problem.objective(x)[0])
    trace = [value]
    step = cfg.step0
    for _ in range(cfg.iters):
        grad = problem.gradient(x, cfg.fd_step)
        cand = x - step * grad
        cand_val = float(problem.objective(cand)[0])
        if cand_val < value:
            improvement = value - cand_val
            x, value = cand, cand_val
            step *= 1.2
            trace.append(value)
            if improvement < cfg.stop_improvement:
                break
        else:
            step /= 2
            if step < 1e-300:
                break
    return x, value, trace


def _lbfgs(problem: _Problem, x: np.ndarray, cfg: RealizeConfig):
    trace = [float(problem.objective(x)[0])]

    def fun(v):
        return float(problem.objective(v)[0])

    def jac(v):
        return problem.gradient(v, cfg.fd_step)

    res = minimize(
        fun, x, jac=jac, method="L-BFGS-B",
        options={"maxiter": cfg.iters, "ftol": cfg.stop_improvement, "gtol": 1e-12},
        callback=lambda v: trace.append(fun(v)),
    )
    value = float(res.fun)
    if value > trace[0]:
        return x, trace[0], trace
    return res.x, value, trace


# -- public API ----------------------------------------------------------------------


def _report(problem: _Problem, x, value, trace, seed, cfg, restart_values) -> RealizationResult:
    beta = problem.beta(x)
    res = conservativity_residuals(beta.stacked())
    return RealizationResult(
        beta=beta,
        dy=problem.dy,
        degree_cap=problem.m,
        unitarity_residual=max(res.values()),
        vanish_residuals=vanish_residual(beta, 0, problem.m),
        objective=value,
        objective_trace=trace,
        seed=seed,
        iters=cfg.iters,
        restarts=cfg.restarts,
        restart_objectives=restart_values,
    )


def trivial_realization(g, tol: float = 1e-10) -> RealizationResult:
    """``beta`` with ``dY = 0`` and ``S = G``; only valid for a conservative pencil."""
    g = operator_tuple(g)
    ok, res = is_conservative_algebraic(g, tol)
    if not ok:
        raise PreconditionError(
            f"pencil is not conservative (worst residual {max(res.values()):.3e})", residuals=res
        )
    problem = _Problem(g, 0, DEFAULT_DEGREE)
    x = np.zeros(problem.size)
    return _report(problem, x, float(problem.objective(x)[0]), [], 0, RealizeConfig(restarts=1, iters=0), [])


def warm_start(g, dy: int, seed: int) -> np.ndarray:
    """Block-diagonal point: ``T`` a random conservative pencil on ``C^dY``, ``F = H = 0``."""
    g = operator_tuple(g)
    problem = _Problem(g, dy, DEFAULT_DEGREE)
    if dy == 0:
        return np.zeros(problem.size)
    t = random_conservative_pencil(g.shape[0], dy, seed)
    return problem.pack(t, np.zeros(problem.shapes[1]), np.zeros(problem.shapes[2]))


def search_realization(
    g,
    dy: Optional[int] = None,
    degree_cap: int = DEFAULT_DEGREE,
    seed: int = 0,
    config: RealizeConfig = RealizeConfig(),
    init: Optional[Callable[[int], np.ndarray]] = None,
) -> RealizationResult:
    """Best-found ``beta`` minimising the conservativity-plus-vanish objective.

    Restart 0 starts from the block-diagonal warm start (optimal when ``G``
    is conservative); restart ``i >= 1`` perturbs a fresh warm start by
    Gaussian noise. ``init(i)``, when given, supplies the start vector of
    restart ``i`` instead (it may return ``None`` to keep the default).
    The best restart wins, ties broken by restart index.
    """
    g = operator_tuple(g)
    if dy is None:
        dy = 2 * g.shape[2]
    if dy < 0 or degree_cap < 0:
        raise ConfigurationError("need dY >= 0 and M >= 0")
    problem = _Problem(g, dy, degree_cap)
    seeds = np.random.SeedSequence(seed).spawn(config.restarts)
    best = None
    restart_values = []
    for i, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        x0 = init(i) if init is not None else None
        if x0 is None:
            x0 = warm_start(g, dy, int(rng.integers(2**31)))
            if i > 0:
                x0 = x0 + config.perturbation * rng.standard_normal(problem.size)
        x0 = np.asarray(x0, dtype=float)
        run = _adaptive_descent if config.method == "adaptive" else _lbfgs
        x, value, trace = run(problem, x0, config)
        restart_values.append(value)
        if best is None or value < best[1]:
            best = (x, value, trace)
    return _report(problem, best[0], best[1], best[2], seed, config, restart_values)


def pad_realization(beta: Colligation, dy_new: int, seed: int = 0) -> Colligation:
    """Embed ``beta`` into a larger auxiliary space without changing its residuals.

    The extra block of ``T`` is a random conservative pencil and ``F``, ``H``
    are zero there, so the conservativity defect and every bordered word
    are unchanged.
    """
    n, dy = beta.n, beta.dx
    extra = dy_new - dy
    if extra < 0:
        raise ConfigurationError(f"cannot pad dY={dy} down to {dy_new}")
    t = np.zeros((n, dy_new, dy_new), dtype=np.complex128)
    t[:, :dy, :dy] = beta.a
    if extra:
        t[:, dy:, dy:] = random_conservative_pencil(n, extra, seed)
    f = np.concatenate([beta.b, np.zeros((n, extra, beta.din))], axis=1)
    h = np.concatenate([beta.c, np.zeros((n, beta.dout, extra))], axis=2)
    return Colligation(t, f, h, beta.d)


def dy_sweep(g, dys, degree_cap: int = DEFAULT_DEGREE, seed: int = 0, config: RealizeConfig = RealizeConfig()):
    """``search_realization`` over increasing ``dY``, each warm-started from the padded previous best.

    Restart 0 at each ``dY`` begins from the previous winner, and descent
    never increases the objective, so best-found objectives are
    non-increasing along the sweep.
    """
    g = operator_tuple(g)
    results = []
    prev = None
    for dy in sorted(dys):
        hook = None
        if prev is not None:
            problem = _Problem(g, dy, degree_cap)
            padded = pad_realization(prev.beta, dy, seed)
            start = problem.pack(padded.a, padded.b, padded.c)
            hook = lambda i, start=start: start if i == 0 else None  # noqa: E731
        res = search_realization(g, dy, degree_cap, seed, config, init=hook)
        results.append(res)
        prev = res
    return results
