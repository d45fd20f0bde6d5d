"""Symmetrized multipowers of operator tuples.

For a multi-index ``s`` the symmetrized multipower averages, over all
``c_s = |s|! / (s_1! ... s_N!)`` arrangements of a multiset containing
``s_k`` copies of type ``k``, the noncommutative word whose letters are
taken from the tuples below:

============  =====================================  ==========================
kind          word                                   domain
============  =====================================  ==========================
PLAIN         ``A A ... A``                          every ``s``
SHARP_B       ``A ... A B``   (last letter from B)   ``|s| >= 1``
FLAT_C        ``C A ... A``   (first letter from C)  ``|s| >= 1``
FLAT_SHARP    ``C A ... A B``                        ``|s| >= 2``
============  =====================================  ==========================
"""

from __future__ import annotations

import enum
import itertools
import math

import numpy as np

from .errors import CapacityError, DomainError, ShapeError
from .linalg import check_multi_index, multi_indices

INT64_MAX = (1 << 63) - 1
ORACLE_MAX_DEGREE = 8


class SymPowerKind(enum.Enum):
    PLAIN = "plain"
    SHARP_B = "sharp_b"
    FLAT_C = "flat_c"
    FLAT_SHARP = "flat_sharp"


def polynomial_coefficient(s) -> int:
    """The multinomial coefficient ``|s|! / prod(s_k!)``."""
    s = check_multi_index(s)
    out = math.factorial(sum(s))
    for v in s:
        out //= math.factorial(v)
    if out > INT64_MAX:
        raise CapacityError(f"polynomial coefficient of {s} exceeds 64 bits")
    return out


def _check_domain(kind: SymPowerKind, s: tuple[int, ...]):
    deg = sum(s)
    if kind in (SymPowerKind.SHARP_B, SymPowerKind.FLAT_C) and deg < 1:
        raise DomainError(f"{kind.value} multipower is undefined at s = 0")
    if kind is SymPowerKind.FLAT_SHARP and deg < 2:
        raise DomainError(f"{kind.value} multipower is undefined at s = {s}")


def _operands(kind, a, b, c):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ShapeError(f"A must be an (N, d, d) tuple, got {a.shape}")
    n, d = a.shape[0], a.shape[1]
    if kind in (SymPowerKind.SHARP_B, SymPowerKind.FLAT_SHARP):
        if b is None:
            raise ShapeError(f"{kind.value} needs a B tuple")
        b = np.asarray(b, dtype=np.complex128)
        if b.ndim != 3 or b.shape[:2] != (n, d):
            raise ShapeError(f"B must be ({n}, {d}, m), got {b.shape}")
    if kind in (SymPowerKind.FLAT_C, SymPowerKind.FLAT_SHARP):
        if c is None:
            raise ShapeError(f"{kind.value} needs a C tuple")
        c = np.asarray(c, dtype=np.complex128)
        if c.ndim != 3 or c.shape[0] != n or c.shape[2] != d:
            raise ShapeError(f"C must be ({n}, p, {d}), got {c.shape}")
    return a, b, c


def _minus(s, k):
    t = list(s)
    t[k] -= 1
    return tuple(t)


def word_sum(kind: SymPowerKind, a, b=None, c=None, s=(), reverse=False) -> np.ndarray:
    """Unnormalized sum of all ``c_s`` words of the given kind.

    Built by peeling the leftmost letter, ``W(s) = sum_{k: s_k > 0} X_k W(s - e_k)``,
    so the cost is one matrix product per sub-multi-index and active letter
    instead of one per word. ``reverse`` only flips the summation order.
    """
    a, b, c = _operands(kind, a, b, c)
    n, d = a.shape[0], a.shape[1]
    s = check_multi_index(s, n)
    _check_domain(kind, s)
    ks = range(n - 1, -1, -1) if reverse else range(n)

    plain: dict[tuple, np.ndarray] = {}

    def w_plain(t):
        if t not in plain:
            if sum(t) == 0:
                plain[t] = np.eye(d, dtype=np.complex128)
            else:
                plain[t] = sum(a[k] @ w_plain(_minus(t, k)) for k in ks if t[k] > 0)
        return plain[t]

    sharp: dict[tuple, np.ndarray] = {}

    def w_sharp(t):
        if t not in sharp:
            if sum(t) == 1:
                sharp[t] = b[t.index(1)].copy()
            else:
                sharp[t] = sum(a[k] @ w_sharp(_minus(t, k)) for k in ks if t[k] > 0)
        return sharp[t]

    if kind is SymPowerKind.PLAIN:
        return w_plain(s)
    if kind is SymPowerKind.SHARP_B:
        return w_sharp(s)
    if kind is SymPowerKind.FLAT_C:
        return sum(c[k] @ w_plain(_minus(s, k)) for k in ks if s[k] > 0)
    return sum(c[k] @ w_sharp(_minus(s, k)) for k in ks if s[k] > 0)


def word_sums_upto(kind: SymPowerKind, a, b=None, c=None, max_degree=0) -> dict[tuple, np.ndarray]:
    """Unnormalized word sums for every ``s`` in the kind's domain with ``|s| <= max_degree``.

    Same recursion as ``word_sum``, computed level by level with one shared table.
    """
    a, b, c = _operands(kind, a, b, c)
    n, d = a.shape[0], a.shape[1]
    need_plain = kind in (SymPowerKind.PLAIN, SymPowerKind.FLAT_C)
    need_sharp = kind in (SymPowerKind.SHARP_B, SymPowerKind.FLAT_SHARP)
    bordered = kind in (SymPowerKind.FLAT_C, SymPowerKind.FLAT_SHARP)
    inner_max = max_degree - 1 if bordered else max_degree

    inner: dict[tuple, np.ndarray] = {}
    for deg in range(inner_max + 1):
        for s in multi_indices(n, deg):
            if need_plain and deg == 0:
                inner[s] = np.eye(d, dtype=np.complex128)
            elif need_sharp and deg == 0:
                continue
            elif need_sharp and deg == 1:
                inner[s] = b[s.index(1)].copy()
            else:
                inner[s] = sum(a[k] @ inner[_minus(s, k)] for k in range(n) if s[k] > 0)
    if not bordered:
        return inner
    lowest = 1 if kind is SymPowerKind.FLAT_C else 2
    return {
        s: sum(c[k] @ inner[_minus(s, k)] for k in range(n) if s[k] > 0)
        for deg in range(lowest, max_degree + 1)
        for s in multi_indices(n, deg)
    }


def sym_powers_upto(kind: SymPowerKind, a, b=None, c=None, max_degree=0) -> dict[tuple, np.ndarray]:
    return {
        s: w / polynomial_coefficient(s)
        for s, w in word_sums_upto(kind, a, b, c, max_degree).items()
    }


def sym_power(kind: SymPowerKind, a, b=None, c=None, s=()) -> np.ndarray:
    """Symmetrized multipower ``c_s^{-1} * word_sum``."""
    return word_sum(kind, a, b, c, s) / polynomial_coefficient(s)


def _arrangements(s):
    letters = [k for k, v in enumerate(s) for _ in range(v)]
    return sorted(set(itertools.permutations(letters)))


def sym_power_oracle(kind: SymPowerKind, a, b=None, c=None, s=()) -> np.ndarray:
    """Literal average over every distinct arrangement; test oracle for ``sym_power``."""
    a, b, c = _operands(kind, a, b, c)
    n, d = a.shape[0], a.shape[1]
    s = check_multi_index(s, n)
    _check_domain(kind, s)
    if sum(s) > ORACLE_MAX_DEGREE:
        raise CapacityError(f"oracle enumeration limited to |s| <= {ORACLE_MAX_DEGREE}")
    words = _arrangements(s)
    total = None
    for w in words:
        factors = [a[k] for k in w]
        if kind in (SymPowerKind.SHARP_B, SymPowerKind.FLAT_SHARP):
            factors[-1] = b[w[-1]]
        if kind in (SymPowerKind.FLAT_C, SymPowerKind.FLAT_SHARP):
            factors[0] = c[w[0]]
        prod = np.eye(d, dtype=np.complex128)
        if factors:
            prod = factors[0]
            for f in factors[1:]:
                prod = prod @ f
        total = prod if total is None else total + prod
    return total / len(words)
