"""Dense complex matrix kernels and the shared system types.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. An operator
tuple ``(G_1, ..., G_N)`` is a single array of shape ``(N, rows, cols)``;
index ``k`` along the first axis is the parameter index (0-based).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DomainError, ShapeError

TORUS_TOL = 1e-12
ORTH_TOL = 1e-10
# largest dense dimension a kron product may produce
MAX_DIM = 1 << 14


def cmatrix(m, rows=None, cols=None) -> np.ndarray:
    """Coerce ``m`` to a finite 2-D complex array, optionally of fixed shape."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        if arr.size == 0 and rows is not None and cols is not None:
            arr = arr.reshape(rows, cols)
        else:
            raise ShapeError(f"expected a 2-D matrix, got shape {arr.shape}")
    if rows is not None and arr.shape[0] != rows or cols is not None and arr.shape[1] != cols:
        raise ShapeError(f"expected shape ({rows}, {cols}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def operator_tuple(mats, rows=None, cols=None) -> np.ndarray:
    """Stack ``N`` same-shaped matrices into an ``(N, rows, cols)`` array."""
    if isinstance(mats, np.ndarray) and mats.ndim == 3:
        arr = mats.astype(np.complex128, copy=False)
    else:
        mats = list(mats)
        if not mats:
            raise ShapeError("an operator tuple needs at least one matrix")
        first = cmatrix(mats[0], rows, cols)
        rows, cols = first.shape
        arr = np.empty((len(mats), rows, cols), dtype=np.complex128)
        for k, m in enumerate(mats):
            arr[k] = cmatrix(m, rows, cols)
    if arr.shape[0] < 1:
        raise ShapeError("an operator tuple needs at least one matrix")
    if rows is not None and arr.shape[1] != rows or cols is not None and arr.shape[2] != cols:
        raise ShapeError(f"expected matrices of shape ({rows}, {cols}), got {arr.shape[1:]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("operator tuple has non-finite entries")
    return arr


def spectral_norm(m) -> float:
    """Largest singular value; 0 for an empty matrix."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def batched_norms(stack: np.ndarray) -> np.ndarray:
    """Spectral norms of a stack of matrices with shape ``(..., r, c)``."""
    if stack.shape[-1] == 0 or stack.shape[-2] == 0:
        return np.zeros(stack.shape[:-2])
    return np.linalg.svd(stack, compute_uv=False)[..., 0]


def unitarity_defect(m) -> float:
    """``max(||m* m - I||, ||m m* - I||)`` in spectral norm."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"unitarity defect needs a square matrix, got {m.shape}")
    eye = np.eye(m.shape[0])
    mh = m.conj().T
    return max(spectral_norm(mh @ m - eye), spectral_norm(m @ mh - eye))


def kron(a, b) -> np.ndarray:
    """Kronecker product with index convention ``[(i1,i2),(j1,j2)] = a[i1,j1] b[i2,j2]``."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows > MAX_DIM or cols > MAX_DIM:
        raise CapacityError(f"kron result {rows}x{cols} exceeds the {MAX_DIM} dimension cap")
    return np.kron(a, b)


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(m, -1, -2))


# -- multi-indices -----------------------------------------------------------


def unit_index(n: int, k: int) -> tuple[int, ...]:
    s = [0] * n
    s[k] = 1
    return tuple(s)


def check_multi_index(s, n=None) -> tuple[int, ...]:
    s = tuple(int(v) for v in s)
    if any(v < 0 for v in s):
        raise DomainError(f"multi-index {s} has a negative component")
    if n is not None and len(s) != n:
        raise ShapeError(f"multi-index {s} has length {len(s)}, expected {n}")
    return s


def multi_indices(n: int, degree: int):
    """All ``s`` in ``Z_+^n`` with ``|s| = degree``, in lexicographic order."""
    if n == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in multi_indices(n - 1, degree - first):
            yield (first,) + rest


def multi_indices_upto(n: int, max_degree: int, min_degree: int = 0):
    for deg in range(min_degree, max_degree + 1):
        yield from multi_indices(n, deg)


# -- torus -------------------------------------------------------------------


def torus_point(coords) -> np.ndarray:
    """Validate a point of the N-torus (every coordinate unimodular)."""
    z = np.asarray(coords, dtype=np.complex128).reshape(-1)
    if np.any(np.abs(np.abs(z) - 1.0) > TORUS_TOL):
        raise DomainError(f"{z} is not on the torus")
    return z


def random_torus_points(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` uniform random points of ``T^n`` as a ``(count, n)`` array."""
    return np.exp(2j * np.pi * rng.random((count, n)))


def random_polydisc_points(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    radius = np.sqrt(rng.random((count, n)))
    return radius * np.exp(2j * np.pi * rng.random((count, n)))


# -- systems -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Colligation:
    """A multiparametric system ``(N; A, B, C, D)``.

    Each field is an ``(N, rows, cols)`` complex array: ``a`` is
    ``dx x dx``, ``b`` is ``dx x din``, ``c`` is ``dout x dx`` and ``d``
    is ``dout x din``. Zero dimensions are allowed.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.complex128)
        b = np.asarray(self.b, dtype=np.complex128)
        c = np.asarray(self.c, dtype=np.complex128)
        d = np.asarray(self.d, dtype=np.complex128)
        for name, arr in zip("abcd", (a, b, c, d)):
            if arr.ndim != 3:
                raise ShapeError(f"{name} must be an (N, rows, cols) array, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        n = a.shape[0]
        if n < 1 or {b.shape[0], c.shape[0], d.shape[0]} != {n}:
            raise ShapeError("all four tuples must share the same N >= 1")
        dx = a.shape[1]
        if a.shape[2] != dx:
            raise ShapeError(f"A_k must be square, got {a.shape[1:]}")
        din, dout = d.shape[2], d.shape[1]
        if b.shape[1:] != (dx, din):
            raise ShapeError(f"B_k must be {dx}x{din}, got {b.shape[1:]}")
        if c.shape[1:] != (dout, dx):
            raise ShapeError(f"C_k must be {dout}x{dx}, got {c.shape[1:]}")
        for name, arr in zip("abcd", (a, b, c, d)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def dx(self) -> int:
        return self.a.shape[1]

    @property
    def din(self) -> int:
        return self.d.shape[2]

    @property
    def dout(self) -> int:
        return self.d.shape[1]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.dx, self.din, self.dout

    @classmethod
    def zeros(cls, n, dx, din, dout) -> "Colligation":
        z = np.zeros
        return cls(z((n, dx, dx)), z((n, dx, din)), z((n, dout, dx)), z((n, dout, din)))

    @classmethod
    def from_stacked(cls, g, dx: int) -> "Colligation":
        """Split each ``G_k`` as ``[[A_k, B_k], [C_k, D_k]]`` with ``A_k`` of size ``dx``."""
        g = operator_tuple(g)
        if dx > min(g.shape[1], g.shape[2]):
            raise ShapeError(f"state dimension {dx} does not fit matrices of shape {g.shape[1:]}")
        return cls(g[:, :dx, :dx], g[:, :dx, dx:], g[:, dx:, :dx], g[:, dx:, dx:])

    def stacked(self) -> np.ndarray:
        """The tuple ``G`` with ``G_k = [[A_k, B_k], [C_k, D_k]]``."""
        top = np.concatenate([self.a, self.b], axis=2)
        bottom = np.concatenate([self.c, self.d], axis=2)
        return np.concatenate([top, bottom], axis=1)

    def allclose(self, other: "Colligation", atol=0.0) -> bool:
        if self.n != other.n or self.dims != other.dims:
            return False
        return all(
            np.allclose(x, y, rtol=0.0, atol=atol)
            for x, y in zip((self.a, self.b, self.c, self.d), (other.a, other.b, other.c, other.d))
        )


def stack_colligation(alpha: Colligation, k: int) -> np.ndarray:
    """The block matrix ``[[A_k, B_k], [C_k, D_k]]`` (0-based ``k``)."""
    if not 0 <= k < alpha.n:
        raise IndexError(f"parameter index {k} out of range for N={alpha.n}")
    return alpha.stacked()[k]


# -- subspaces ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """An orthonormal basis (columns of ``basis``) of a subspace of ``C^ambient_dim``."""

    basis: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.basis, dtype=np.complex128)
        if q.ndim != 2:
            raise ShapeError(f"basis must be 2-D, got shape {q.shape}")
        if q.shape[1] > q.shape[0]:
            raise ShapeError("more basis vectors than the ambient dimension")
        if q.shape[1] and spectral_norm(q.conj().T @ q - np.eye(q.shape[1])) > ORTH_TOL:
            raise ValueError("basis columns are not orthonormal")
        q.setflags(write=False)
        object.__setattr__(self, "basis", q)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    @classmethod
    def coordinates(cls, ambient_dim: int, indices) -> "SubspaceBasis":
        """Span of the standard basis vectors at ``indices``."""
        return cls(np.eye(ambient_dim, dtype=np.complex128)[:, list(indices)])

    @classmethod
    def span(cls, vectors, ambient_dim=None, rtol=ORTH_TOL) -> "SubspaceBasis":
        return cls(orth(vectors, ambient_dim, rtol))

    @classmethod
    def full(cls, ambient_dim: int) -> "SubspaceBasis":
        return cls(np.eye(ambient_dim, dtype=np.complex128))

    @classmethod
    def zero(cls, ambient_dim: int) -> "SubspaceBasis":
        return cls(np.zeros((ambient_dim, 0), dtype=np.complex128))

    def coordinate_indices(self):
        """Indices ``i`` if the basis is exactly a selection of standard vectors, else ``None``."""
        q = self.basis
        idx = []
        for j in range(q.shape[1]):
            nz = np.flatnonzero(q[:, j])
            if len(nz) != 1 or q[nz[0], j] != 1:
                return None
            idx.append(int(nz[0]))
        return idx

    def complement(self) -> "SubspaceBasis":
        """Orthonormal basis of the orthogonal complement.

        Coordinate subspaces get the complementary coordinate vectors, in
        increasing order, so block extraction is exact.
        """
        idx = self.coordinate_indices()
        if idx is not None:
            rest = [i for i in range(self.ambient_dim) if i not in set(idx)]
            return SubspaceBasis.coordinates(self.ambient_dim, rest)
        return SubspaceBasis(orth_complement(self.basis))

    def join(self, other: "SubspaceBasis") -> "SubspaceBasis":
        """Orthonormal basis of the (closed) sum of two subspaces."""
        return SubspaceBasis.span(np.hstack([self.basis, other.basis]), self.ambient_dim)


def orth(vectors, ambient_dim=None, rtol=ORTH_TOL, atol=0.0) -> np.ndarray:
    """Orthonormal basis of the column span.

    Singular values at or below ``max(rtol * s_max, atol)`` count as zero;
    ``atol`` lets callers discard directions that are pure rounding noise.
    """
    v = np.asarray(vectors, dtype=np.complex128)
    if v.ndim == 1:
        v = v[:, None]
    if ambient_dim is not None and v.shape[0] != ambient_dim:
        raise ShapeError(f"vectors live in C^{v.shape[0]}, expected C^{ambient_dim}")
    if v.size == 0:
        return np.zeros((v.shape[0], 0), dtype=np.complex128)
    u, sv, _ = np.linalg.svd(v, full_matrices=False)
    if sv[0] == 0:
        return np.zeros((v.shape[0], 0), dtype=np.complex128)
    rank = int(np.sum(sv > max(rtol * sv[0], atol)))
    return u[:, :rank]


def orth_complement(q: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of the span of orthonormal columns ``q``."""
    dim, r = q.shape
    if r == 0:
        return np.eye(dim, dtype=np.complex128)
    u, _, _ = np.linalg.svd(q, full_matrices=True)
    return u[:, r:]


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``d x d`` unitary (QR of a Ginibre matrix, phase-corrected)."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.where(np.abs(np.diagonal(r)) == 0, 1, np.abs(np.diagonal(r)))
    return q * ph


def random_cmatrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def pairs(n: int):
    """Ordered pairs ``(k, l)`` with ``k != l``."""
    return [(k, l) for k, l in itertools.product(range(n), repeat=2) if k != l]
