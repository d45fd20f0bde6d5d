"""Dilations of multiparametric systems: verification, construction, compression, reduction.

A system ``big`` dilates ``small`` when the state space of ``small`` sits
isometrically inside that of ``big`` (the ``embed`` basis) and every
symmetrized moment of ``small`` is the corresponding compression of the
moment of ``big``. Both the symmetrized-multipower form and the sampled
``zeta``-power form of that condition are checked here up to a finite
degree cap, which the reports carry along.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, StructuralError
from .linalg import (
    Colligation,
    SubspaceBasis,
    dagger,
    haar_unitary,
    orth,
    random_cmatrix,
    spectral_norm,
)
from .multipower import SymPowerKind, sym_powers_upto
from .pencil import eval_pencil, random_conservative_pencil

FAMILIES = ("plain", "sharp", "flat", "flat_sharp")
DEFAULT_TOL = 1e-8
S_MATCH_TOL = 1e-12
# absolute rank threshold for Krylov growth, relative to the operator scale
KRYLOV_TOL = 1e-10


@dataclass(frozen=True)
class MomentReport:
    """Moment residuals of a candidate dilation, up to total degree ``degree_cap``.

    ``by_degree[family][m]`` is the largest residual among multi-indices (or
    ``zeta`` samples) of total degree ``m``; degrees outside a family's
    domain hold 0.
    """

    degree_cap: int
    tol: float
    by_degree: dict[str, list[float]]
    samples: int = 0

    @property
    def residuals(self) -> dict[str, float]:
        return {f: max(v, default=0.0) for f, v in self.by_degree.items()}

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def first_failure(self):
        """``(degree, family)`` of the lowest-degree residual above ``tol``, or ``None``."""
        for m in range(self.degree_cap + 1):
            for f in FAMILIES:
                if self.by_degree[f][m] > self.tol:
                    return m, f
        return None


def default_degree_cap(big: Colligation) -> int:
    return 2 * big.dx


def _check_pair(big: Colligation, small: Colligation, embed: SubspaceBasis):
    if big.n != small.n:
        raise StructuralError(f"parameter counts differ: {big.n} vs {small.n}")
    if (big.din, big.dout) != (small.din, small.dout):
        raise StructuralError("input/output dimensions differ")
    if embed.ambient_dim != big.dx or embed.dim != small.dx:
        raise StructuralError(
            f"embedding maps C^{embed.dim} into C^{embed.ambient_dim}; "
            f"need C^{small.dx} into C^{big.dx}"
        )
    if not np.array_equal(big.d, small.d):
        raise StructuralError("D tuples of a dilation pair must coincide exactly")


def _empty_by_degree(cap):
    return {f: [0.0] * (cap + 1) for f in FAMILIES}


def is_dilation(big: Colligation, small: Colligation, embed: SubspaceBasis, degree_cap=None, tol=DEFAULT_TOL) -> MomentReport:
    """Compare symmetrized multipowers of ``small`` with compressions of those of ``big``.

    ``plain``: ``A^s`` vs ``V* Ã^s V``; ``sharp``: ``(A#B)^s`` vs ``V* (Ã#B̃)^s``;
    ``flat``: ``(C♭A)^s`` vs ``(C̃♭Ã)^s V``; ``flat_sharp``: ``(C♭A#B)^s`` vs ``(C̃♭Ã#B̃)^s``.
    """
    _check_pair(big, small, embed)
    cap = default_degree_cap(big) if degree_cap is None else int(degree_cap)
    v = embed.basis
    vh = v.conj().T
    out = _empty_by_degree(cap)
    pairs = {
        "plain": (SymPowerKind.PLAIN, lambda w: vh @ w @ v),
        "sharp": (SymPowerKind.SHARP_B, lambda w: vh @ w),
        "flat": (SymPowerKind.FLAT_C, lambda w: w @ v),
        "flat_sharp": (SymPowerKind.FLAT_SHARP, lambda w: w),
    }
    for fam, (kind, compress_fn) in pairs.items():
        small_w = sym_powers_upto(kind, small.a, small.b, small.c, cap)
        big_w = sym_powers_upto(kind, big.a, big.b, big.c, cap)
        for s, w in small_w.items():
            deg = sum(s)
            res = spectral_norm(w - compress_fn(big_w[s]))
            out[fam][deg] = max(out[fam][deg], res)
    return MomentReport(degree_cap=cap, tol=tol, by_degree=out)


def _zeta_moments(sys: Colligation, zeta, cap):
    """Sampled moments ``(zA)^n``, ``(zA)^n zB``, ``zC (zA)^n``, ``zC (zA)^n zB`` keyed by total degree."""
    za = eval_pencil(sys.a, zeta)
    zb = eval_pencil(sys.b, zeta)
    zc = eval_pencil(sys.c, zeta)
    powers = [np.eye(sys.dx, dtype=np.complex128)]
    for _ in range(cap):
        powers.append(za @ powers[-1])
    return {
        "plain": {m: powers[m] for m in range(cap + 1)},
        "sharp": {m: powers[m - 1] @ zb for m in range(1, cap + 1)},
        "flat": {m: zc @ powers[m - 1] for m in range(1, cap + 1)},
        "flat_sharp": {m: zc @ powers[m - 2] @ zb for m in range(2, cap + 1)},
    }


def _sampled_residuals(big, small, v, zeta, cap):
    vh = v.conj().T
    mb = _zeta_moments(big, zeta, cap)
    ms = _zeta_moments(small, zeta, cap)
    compress = {
        "plain": lambda w: vh @ w @ v,
        "sharp": lambda w: vh @ w,
        "flat": lambda w: w @ v,
        "flat_sharp": lambda w: w,
    }
    return {
        fam: {m: spectral_norm(ms[fam][m] - compress[fam](mb[fam][m])) for m in ms[fam]}
        for fam in FAMILIES
    }


def is_dilation_sampled(big: Colligation, small: Colligation, embed: SubspaceBasis, zetas, degree_cap=None, tol=DEFAULT_TOL) -> MomentReport:
    """The ``zeta``-power form of the dilation condition at the sampled points.

    A moment with ``n`` inner ``A`` factors has total degree ``n`` (plain),
    ``n + 1`` (sharp, flat) or ``n + 2`` (flat_sharp); every family is
    checked up to total degree ``degree_cap`` so verdicts line up with
    ``is_dilation`` at the same cap. No samples means a vacuous pass.
    """
    _check_pair(big, small, embed)
    cap = default_degree_cap(big) if degree_cap is None else int(degree_cap)
    zetas = np.asarray(zetas, dtype=np.complex128).reshape(-1, big.n)
    out = _empty_by_degree(cap)
    for zeta in zetas:
        for fam, per_deg in _sampled_residuals(big, small, embed.basis, zeta, cap).items():
            for m, res in per_deg.items():
                out[fam][m] = max(out[fam][m], res)
    return MomentReport(degree_cap=cap, tol=tol, by_degree=out, samples=len(zetas))


# -- one-parameter subspace construction ---------------------------------------------


def _krylov(ops, start, atol):
    """Orthonormal basis of the smallest subspace containing ``start`` and invariant under ``ops``.

    New directions are added only when their component orthogonal to the
    current basis exceeds ``atol``; the loop ends once a pass adds nothing.
    """
    dim = start.shape[0]
    basis = orth(start, atol=atol)
    frontier = basis
    while frontier.shape[1] and basis.shape[1] < dim:
        images = np.hstack([op @ frontier for op in ops])
        images = images - basis @ (basis.conj().T @ images)
        fresh = orth(images, atol=atol)
        if fresh.shape[1]:
            # one re-orthogonalisation pass against the existing basis
            fresh = orth(fresh - basis @ (basis.conj().T @ fresh), atol=0.5)
        basis = np.hstack([basis, fresh])
        frontier = fresh
    return basis


def build_subspaces_fixed_zeta(big: Colligation, small: Colligation, embed: SubspaceBasis, zeta):
    """Subspaces ``(D, D_*)`` realising the one-parameter system at ``zeta`` as a dilation.

    ``D`` is the smallest ``zeta Ã``-invariant subspace containing the
    ranges of ``zeta Ã V - V zeta A`` and ``zeta B̃ - V zeta B``;
    ``D_*`` is the orthogonal complement of ``X + D``. Raises
    ``PreconditionError`` when the sampled moment identities fail at
    ``zeta`` up to degree ``dim X̃``.
    """
    zeta = np.asarray(zeta, dtype=np.complex128).reshape(-1)
    report = is_dilation_sampled(big, small, embed, [zeta], degree_cap=big.dx)
    if not report.passed:
        deg, fam = report.first_failure()
        raise PreconditionError(
            f"moment identity '{fam}' fails at degree {deg} (residual {report.by_degree[fam][deg]:.3e})",
            family=fam,
            degree=deg,
        )
    v = embed.basis
    za_big = eval_pencil(big.a, zeta)
    zb_big = eval_pencil(big.b, zeta)
    start = np.hstack([za_big @ v - v @ eval_pencil(small.a, zeta), zb_big - v @ eval_pencil(small.b, zeta)])
    scale = max(spectral_norm(za_big), spectral_norm(zb_big), 1.0)
    d = SubspaceBasis(_krylov([za_big], start, KRYLOV_TOL * scale))
    dstar = SubspaceBasis.span(np.hstack([v, d.basis]), big.dx).complement()
    return d, dstar


def subspace_residuals(big, small, embed, zeta, d: SubspaceBasis, dstar: SubspaceBasis) -> dict[str, float]:
    """Residuals of the decomposition, invariance and compression identities at ``zeta``."""
    zeta = np.asarray(zeta, dtype=np.complex128).reshape(-1)
    v, qd, qs = embed.basis, d.basis, dstar.basis
    za = eval_pencil(big.a, zeta)
    zb = eval_pencil(big.b, zeta)
    zc = eval_pencil(big.c, zeta)
    eye = np.eye(big.dx)
    frame = np.hstack([qd, v, qs])
    return {
        "orthogonal_sum": spectral_norm(frame.conj().T @ frame - np.eye(frame.shape[1]))
        + abs(frame.shape[1] - big.dx),
        "a_invariant_d": spectral_norm((eye - d.projector) @ za @ qd),
        "c_kills_d": spectral_norm(zc @ qd),
        "a_star_invariant_dstar": spectral_norm((eye - dstar.projector) @ za.conj().T @ qs),
        "b_star_kills_dstar": spectral_norm(zb.conj().T @ qs),
        "compress_a": spectral_norm(v.conj().T @ za @ v - eval_pencil(small.a, zeta)),
        "compress_b": spectral_norm(v.conj().T @ zb - eval_pencil(small.b, zeta)),
        "compress_c": spectral_norm(zc @ v - eval_pencil(small.c, zeta)),
    }


# -- block moves ---------------------------------------------------------------------


def assemble_dilation(beta: Colligation, dx: int, alpha: Colligation) -> Colligation:
    """Re-partition ``beta = (T, F, H, S = G)`` into a system on ``Y (+) X``.

    ``Ã_k = [[T_k, F_k|X], [P_X H_k, A_k]]``, ``B̃_k = [F_k|N-; B_k]``,
    ``C̃_k = [P_N+ H_k, C_k]``, ``D̃ = D``. The auxiliary space ``Y`` comes
    first; ``alpha`` occupies the trailing ``dx`` state coordinates
    (see ``assembled_embedding``).
    """
    if alpha.dx != dx:
        raise StructuralError(f"alpha has state dimension {alpha.dx}, split says {dx}")
    if beta.n != alpha.n:
        raise StructuralError(f"parameter counts differ: {beta.n} vs {alpha.n}")
    if beta.din != dx + alpha.din or beta.dout != dx + alpha.dout:
        raise StructuralError(
            f"beta has input/output dims ({beta.din}, {beta.dout}); "
            f"expected ({dx + alpha.din}, {dx + alpha.dout})"
        )
    gap = np.max(np.abs(beta.d - alpha.stacked()), initial=0.0)
    if gap > S_MATCH_TOL:
        raise StructuralError(f"beta's feedthrough differs from alpha's stacked tuple by {gap:.3e}")
    t, f, h = beta.a, beta.b, beta.c
    a = np.concatenate(
        [np.concatenate([t, f[:, :, :dx]], axis=2), np.concatenate([h[:, :dx, :], alpha.a], axis=2)],
        axis=1,
    )
    b = np.concatenate([f[:, :, dx:], alpha.b], axis=1)
    c = np.concatenate([h[:, dx:, :], alpha.c], axis=2)
    return Colligation(a, b, c, alpha.d.copy())


def assembled_embedding(dy: int, dx: int) -> SubspaceBasis:
    """Where ``assemble_dilation`` places the original state space."""
    return SubspaceBasis.coordinates(dy + dx, range(dy, dy + dx))


def extract_embedded(big: Colligation, embed: SubspaceBasis) -> Colligation:
    """Re-partition ``big``'s stacked operator around ``X̃ ⊖ X``.

    Returns ``beta = (T, F, H, S)`` with state space ``X̃ ⊖ X``, input
    ``X (+) N-`` and output ``X (+) N+``; ``S`` is the compression of the
    stacked tuple of ``big`` to ``X``.
    """
    if embed.ambient_dim != big.dx:
        raise StructuralError(f"embedding lives in C^{embed.ambient_dim}, state space is C^{big.dx}")
    v = embed.basis
    q = embed.complement().basis
    vh, qh = v.conj().T, q.conj().T
    t = qh @ big.a @ q
    f = np.concatenate([qh @ big.a @ v, qh @ big.b], axis=2)
    h = np.concatenate([vh @ big.a @ q, big.c @ q], axis=1)
    s = np.concatenate(
        [np.concatenate([vh @ big.a @ v, vh @ big.b], axis=2), np.concatenate([big.c @ v, big.d], axis=2)],
        axis=1,
    )
    return Colligation(t, f, h, s)


def vanish_residual(beta: Colligation, dx: int, degree_cap: int) -> list[float]:
    """``max_{|s| = m} ||(H♭T#F)^s||`` for ``m = 2, ..., degree_cap + 2``.

    These words must all vanish for the re-partitioned system to dilate
    the one whose stacked tuple is ``S``.
    """
    if not 0 <= dx <= min(beta.din, beta.dout):
        raise StructuralError(f"split {dx} does not fit beta's input/output dims")
    words = sym_powers_upto(SymPowerKind.FLAT_SHARP, beta.a, beta.b, beta.c, degree_cap + 2)
    out = [0.0] * (degree_cap + 1)
    for s, w in words.items():
        out[sum(s) - 2] = max(out[sum(s) - 2], spectral_norm(w))
    return out


def compress(alpha: Colligation, x0: SubspaceBasis) -> Colligation:
    """``(P A|X0, P B, C|X0, D)`` on the subspace ``X0``."""
    if x0.ambient_dim != alpha.dx:
        raise StructuralError(f"subspace lives in C^{x0.ambient_dim}, state space is C^{alpha.dx}")
    q = x0.basis
    qh = q.conj().T
    return Colligation(qh @ alpha.a @ q, qh @ alpha.b, alpha.c @ q, alpha.d.copy())


# -- reduction -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Reduction:
    alpha_min: Colligation
    embed: SubspaceBasis
    d: SubspaceBasis
    dstar: SubspaceBasis
    passes: int = field(default=1)


def _reduce_once(alpha: Colligation):
    dim = alpha.dx
    scale = max(1.0, *(spectral_norm(m) for m in (*alpha.a, *alpha.b, *alpha.c)))
    cstar = np.hstack(list(dagger(alpha.c))) if alpha.dout else np.zeros((dim, 0))
    observable = _krylov(list(dagger(alpha.a)), cstar, KRYLOV_TOL * scale)
    d = SubspaceBasis(observable).complement()
    bcols = np.hstack(list(alpha.b)) if alpha.din else np.zeros((dim, 0))
    reachable = _krylov(list(alpha.a), bcols, KRYLOV_TOL * scale)
    upper = SubspaceBasis.span(np.hstack([d.basis, reachable]), dim)
    dstar = upper.complement()
    keep = SubspaceBasis.span(np.hstack([d.basis, dstar.basis]), dim).complement()
    return d, dstar, keep


def reduce_uniform(alpha: Colligation) -> Reduction:
    """Compress away the largest ``zeta``-independent pair ``(D, D_*)``.

    ``D`` is the unobservable subspace (invariant under every ``A_k``,
    killed by every ``C_k``); ``D_*`` is the complement of ``D`` plus the
    reachable subspace, hence invariant under every ``A_k*`` and killed by
    every ``B_k*``. The compression to ``X ⊖ (D (+) D_*)`` is dilated by
    ``alpha``. Passes repeat until nothing more is removed, so the result is
    idempotent. Only subspaces independent of ``zeta`` are searched.
    """
    dim = alpha.dx
    frame = SubspaceBasis.full(dim)
    d_total = np.zeros((dim, 0), dtype=np.complex128)
    ds_total = np.zeros((dim, 0), dtype=np.complex128)
    current = alpha
    passes = 0
    while True:
        passes += 1
        d, dstar, keep = _reduce_once(current)
        d_total = np.hstack([d_total, frame.basis @ d.basis])
        ds_total = np.hstack([ds_total, frame.basis @ dstar.basis])
        if keep.dim == current.dx:
            break
        frame = SubspaceBasis(frame.basis @ keep.basis)
        current = compress(alpha, frame)
        if current.dx == 0:
            break
    return Reduction(
        alpha_min=current,
        embed=frame,
        d=SubspaceBasis(orth(d_total) if d_total.shape[1] else d_total),
        dstar=SubspaceBasis(orth(ds_total) if ds_total.shape[1] else ds_total),
        passes=passes,
    )


# -- generators ----------------------------------------------------------------------


def _rotate(a, b, c, w):
    wh = w.conj().T
    return w @ a @ wh, w @ b, c @ wh


def random_dilation_pair(n, dx, dd, dds, din, dout, seed, scale=0.4, rotate=True):
    """A random ``(big, small, embed)`` with ``big`` dilating ``small`` exactly.

    ``big``'s state space is ``D (+) X (+) D_*`` (then rotated by a Haar
    unitary) with block upper-triangular ``Ã_k``, ``B̃_k = [*; B_k; 0]``
    and ``C̃_k = [0, C_k, *]``.
    """
    rng = np.random.default_rng(seed)
    dim = dd + dx + dds

    def blk(r, c_):
        return scale * random_cmatrix(r, c_, rng) / np.sqrt(max(1, dim + din + dout))

    a = np.zeros((n, dim, dim), dtype=np.complex128)
    b = np.zeros((n, dim, din), dtype=np.complex128)
    c = np.zeros((n, dout, dim), dtype=np.complex128)
    d = np.stack([blk(dout, din) for _ in range(n)])
    xs = slice(dd, dd + dx)
    for k in range(n):
        a[k][:dd, :] = blk(dd, dim)
        a[k][xs, dd:] = blk(dx, dx + dds)
        a[k][dd + dx :, dd + dx :] = blk(dds, dds)
        b[k][: dd + dx, :] = blk(dd + dx, din)
        c[k][:, dd:] = blk(dout, dx + dds)
    small = Colligation(a[:, xs, xs], b[:, xs, :], c[:, :, xs], d)
    embed_cols = np.eye(dim, dtype=np.complex128)[:, xs]
    if rotate:
        w = haar_unitary(dim, rng)
        a, b, c = _rotate(a, b, c, w)
        embed_cols = w @ embed_cols
    return Colligation(a, b, c, d), small, SubspaceBasis(embed_cols)


def random_conservative_dilation(n, dx, dd, dds, dio, seed, rotate=True):
    """A conservative ``big`` dilating a conservative ``small`` (square inputs/outputs ``dio``).

    A block upper-triangular unitary is block diagonal, so in finite
    dimensions exact conservative dilations of this shape decouple: the
    stacked operator is ``diag(g_D, G, g_D*)`` up to a state-space rotation.
    """
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**31, size=3)
    g = random_conservative_pencil(n, dx + dio, int(seeds[0]))
    small = Colligation.from_stacked(g, dx)
    dim = dd + dx + dds
    a = np.zeros((n, dim, dim), dtype=np.complex128)
    if dd:
        a[:, :dd, :dd] = random_conservative_pencil(n, dd, int(seeds[1]))
    a[:, dd : dd + dx, dd : dd + dx] = small.a
    if dds:
        a[:, dd + dx :, dd + dx :] = random_conservative_pencil(n, dds, int(seeds[2]))
    b = np.zeros((n, dim, dio), dtype=np.complex128)
    b[:, dd : dd + dx, :] = small.b
    c = np.zeros((n, dio, dim), dtype=np.complex128)
    c[:, :, dd : dd + dx] = small.c
    embed_cols = np.eye(dim, dtype=np.complex128)[:, dd : dd + dx]
    if rotate:
        w = haar_unitary(dim, rng)
        a, b, c = _rotate(a, b, c, w)
        embed_cols = w @ embed_cols
    return Colligation(a, b, c, small.d.copy()), small, SubspaceBasis(embed_cols)
