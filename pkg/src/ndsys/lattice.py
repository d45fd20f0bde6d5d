"""Simulation of multiparametric systems on the lattice ``Z_+^N``.

The state and output at ``t`` are driven by the state and input at the
``N`` predecessors ``t - e_k``:

    x(t)      = sum_k A_k x(t - e_k) + B_k u(t - e_k)
    y(t)      = sum_k C_k x(t - e_k) + D_k u(t - e_k)

Computation proceeds level by level in ``|t|``, inside the window
``{t in Z_+^N : |t| <= L}``. Missing data is an error, never zero-filled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GapError, ShapeError
from .linalg import Colligation, check_multi_index, multi_indices


@dataclass
class LatticeSignal:
    """Vectors of length ``value_dim`` attached to lattice points of ``Z_+^n``."""

    n: int
    value_dim: int
    data: dict = field(default_factory=dict)

    def __setitem__(self, t, v):
        t = check_multi_index(t, self.n)
        v = np.asarray(v, dtype=np.complex128).reshape(-1)
        if v.shape[0] != self.value_dim:
            raise ShapeError(f"value at {t} has length {v.shape[0]}, expected {self.value_dim}")
        self.data[t] = v

    def __getitem__(self, t):
        t = tuple(t)
        if t not in self.data:
            raise GapError(t)
        return self.data[t]

    def __contains__(self, t):
        return tuple(t) in self.data

    def level(self, ell: int) -> dict:
        return {t: v for t, v in self.data.items() if sum(t) == ell}

    def points(self):
        return sorted(self.data, key=lambda t: (sum(t), tuple(-v for v in t)))

    def shifted(self, tau) -> "LatticeSignal":
        tau = check_multi_index(tau, self.n)
        out = LatticeSignal(self.n, self.value_dim)
        for t, v in self.data.items():
            out[tuple(a + b for a, b in zip(t, tau))] = v
        return out

    @classmethod
    def impulse(cls, n, value_dim, v, at=None) -> "LatticeSignal":
        sig = cls(n, value_dim)
        sig[at if at is not None else (0,) * n] = v
        return sig

    @classmethod
    def zeros_on_level(cls, n, value_dim, ell) -> "LatticeSignal":
        sig = cls(n, value_dim)
        for t in multi_indices(n, ell):
            sig[t] = np.zeros(value_dim)
        return sig


def _predecessors(t):
    for k, tk in enumerate(t):
        if tk > 0:
            prev = list(t)
            prev[k] -= 1
            yield k, tuple(prev)


def simulate(alpha: Colligation, x0: LatticeSignal, inputs: LatticeSignal, levels: int, base=None,
             zero_input: bool = False):
    """States and outputs for ``0 < |t - base| <= levels`` inside the shifted window.

    ``x0`` must cover the base level (``|t - base| = 0``) of the window and
    ``inputs`` every point of levels ``0 .. levels - 1``; ``zero_input``
    treats absent inputs as zero instead (useful for impulse responses).
    Predecessors outside the window (a coordinate below ``base``) are
    skipped, matching the convention that the window is
    ``base + Z_+^N``.
    """
    n = alpha.n
    base = (0,) * n if base is None else check_multi_index(base, n)
    if x0.n != n or inputs.n != n:
        raise ShapeError("signals and system disagree on N")
    if x0.value_dim != alpha.dx or inputs.value_dim != alpha.din:
        raise ShapeError("signal value dimensions do not match the system")
    states = LatticeSignal(n, alpha.dx)
    outputs = LatticeSignal(n, alpha.dout)
    zero_u = np.zeros(alpha.din, dtype=np.complex128)

    def shift(s):
        return tuple(a + b for a, b in zip(s, base))

    for s in multi_indices(n, 0):
        states[shift(s)] = x0[shift(s)]

    def u_at(t):
        if zero_input and t not in inputs:
            return zero_u
        return inputs[t]

    for ell in range(1, levels + 1):
        for s in multi_indices(n, ell):
            t = shift(s)
            x = np.zeros(alpha.dx, dtype=np.complex128)
            y = np.zeros(alpha.dout, dtype=np.complex128)
            for k, ps in _predecessors(s):
                p = shift(ps)
                xp, up = states[p], u_at(p)
                x = x + alpha.a[k] @ xp + alpha.b[k] @ up
                y = y + alpha.c[k] @ xp + alpha.d[k] @ up
            states[t] = x
            outputs[t] = y
    return states, outputs


def impulse_response(alpha: Colligation, max_level: int) -> dict:
    """``s -> `` output matrix at ``s`` for unit impulses at the origin, ``1 <= |s| <= max_level``.

    Column ``j`` comes from the impulse ``u(0) = e_j`` with zero initial state.
    """
    if max_level < 1:
        raise ValueError("max_level must be >= 1")
    n = alpha.n
    x0 = LatticeSignal.zeros_on_level(n, alpha.dx, 0)
    cols = []
    for j in range(alpha.din):
        e = np.zeros(alpha.din)
        e[j] = 1.0
        _, out = simulate(alpha, x0, LatticeSignal.impulse(n, alpha.din, e), max_level, zero_input=True)
        cols.append(out)
    resp = {}
    for ell in range(1, max_level + 1):
        for s in multi_indices(n, ell):
            if cols:
                resp[s] = np.stack([c[s] for c in cols], axis=1)
            else:
                resp[s] = np.zeros((alpha.dout, 0), dtype=np.complex128)
    return resp
