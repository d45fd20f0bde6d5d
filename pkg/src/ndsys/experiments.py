"""Canned, seeded experiments; each returns a JSON-serialisable bundle."""

from __future__ import annotations

import time

import numpy as np

from . import __version__
from .dilation import assemble_dilation, assembled_embedding, is_dilation
from .linalg import Colligation
from .realize import RealizeConfig, search_realization
from .vneumann import SearchConfig, pauli_witness, violation_search

GUARD_TOL = 1e-8


def converse42(seed: int = 0, dys=(2, 4, 6, 8), degree_cap: int = 4) -> dict:
    """``G = [[1/2]]`` -> approximate conservative ``beta`` -> assembled dilation -> moment check.

    The original system is ``A = [[1/2]]`` with no inputs or outputs, so
    the dilation condition reads ``P_X Ã^n|X = 2^-n``.
    """
    g = np.array([[[0.5]]], dtype=np.complex128)
    alpha = Colligation.from_stacked(g, 1)
    rows = []
    for dy in dys:
        res = search_realization(g, dy, degree_cap, seed=seed)
        big = assemble_dilation(res.beta, 1, alpha)
        report = is_dilation(big, alpha, assembled_embedding(dy, 1), degree_cap)
        bound = 20 * degree_cap * res.epsilon
        rows.append({
            "dy": dy,
            "epsilon": res.epsilon,
            "unitarity_residual": res.unitarity_residual,
            "vanish_max": max(res.vanish_residuals),
            "objective": res.objective,
            "moment_residual": report.max_residual,
            "propagation_bound": bound,
            "within_bound": bool(report.max_residual <= bound),
        })
    return {
        "experiment": "converse42",
        "seed": seed,
        "degree_cap": degree_cap,
        "target_epsilon": 0.05,
        "rows": rows,
        "verdict": "pass" if all(r["within_bound"] for r in rows) else "fail",
    }


def ando_guard(seed: int = 0, count: int = 100, config: SearchConfig = SearchConfig()) -> dict:
    """``count`` seeded two-parameter searches; none may exceed ratio ``1 + 1e-8``."""
    ratios = [violation_search(2, seed=seed * 100_003 + i, config=config).ratio for i in range(count)]
    worst = max(ratios)
    return {
        "experiment": "ando-guard",
        "seed": seed,
        "count": count,
        "tolerance": GUARD_TOL,
        "max_ratio": worst,
        "ratios": ratios,
        "verdict": "pass" if worst <= 1 + GUARD_TOL else "fail",
    }


def n3_search(seed: int = 0, restarts: int = 8, iters: int = 100) -> dict:
    """Best-effort three-parameter search; informational only."""
    w = violation_search(3, seed=seed, config=SearchConfig(restarts=restarts, iters=iters))
    ref = pauli_witness()
    return {
        "experiment": "n3-search",
        "seed": seed,
        "restarts": restarts,
        "iters": iters,
        "best_ratio": w.ratio,
        "lhs": w.lhs,
        "rhs": w.rhs,
        "reference_ratio": ref.ratio,
        "verdict": "informational",
    }


EXPERIMENTS = {"converse42": converse42, "ando-guard": ando_guard, "n3-search": n3_search}


def run_experiment(name: str, seed: int = 0) -> dict:
    if name not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    bundle = EXPERIMENTS[name](seed=seed)
    bundle["tool_version"] = __version__
    bundle["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return bundle
