"""Text file formats for systems and violation witnesses.

Both formats are JSON documents written in one canonical layout: fixed key
order, one matrix row per line, every real number rendered with 17
significant digits (``%.17g``), which round-trips IEEE doubles exactly.
Complex entries are ``[re, im]`` pairs, matrices are row-major.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NDSysError, ShapeError
from .linalg import Colligation
from .transfer import CommutingTuple
from .vneumann import ViolationWitness, revalidate

FORMAT_VERSION = 1


class FormatError(NDSysError, ValueError):
    """A file does not follow the expected format."""


def _num(x: float) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise FormatError(f"cannot serialise non-finite number {x}")
    return format(x, ".17g")


def _matrix(m: np.ndarray, indent: str) -> str:
    if m.shape[0] == 0:
        return "[]"
    rows = [
        "[" + ", ".join(f"[{_num(v.real)}, {_num(v.imag)}]" for v in row) + "]"
        for row in m
    ]
    inner = (",\n" + indent + "  ").join(rows)
    return "[\n" + indent + "  " + inner + "\n" + indent + "]"


def _tuple(t: np.ndarray, indent: str) -> str:
    items = [_matrix(m, indent + "  ") for m in t]
    return "[\n" + indent + "  " + (",\n" + indent + "  ").join(items) + "\n" + indent + "]"


def _scalar(v) -> str:
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return json.dumps(v)
    if isinstance(v, (float, np.floating)):
        return _num(v)
    if isinstance(v, (np.integer,)):
        return str(int(v))
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_scalar(v[k])}" for k in sorted(v)) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_scalar(x) for x in v) + "]"
    raise FormatError(f"cannot serialise {type(v).__name__}")


def _document(fields) -> str:
    lines = [f'  {json.dumps(k)}: {v}' for k, v in fields]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def _read_matrix(raw, rows, cols, where) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: entries must be [re, im] number pairs") from exc
    if rows == 0 or cols == 0:
        if arr.size != 0:
            raise FormatError(f"{where}: expected an empty {rows}x{cols} matrix")
        return np.zeros((rows, cols), dtype=np.complex128)
    if arr.shape != (rows, cols, 2):
        raise FormatError(f"{where}: expected shape ({rows}, {cols}) of [re, im] pairs, got {arr.shape[:-1]}")
    out = np.empty((rows, cols), dtype=np.complex128)
    # assign parts separately: re + 1j*im would turn an imaginary -0 into +0
    out.real = arr[..., 0]
    out.imag = arr[..., 1]
    return out


def _read_tuple(raw, n, rows, cols, where) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != n:
        raise FormatError(f"{where}: expected a list of {n} matrices")
    out = np.empty((n, rows, cols), dtype=np.complex128)
    for k, m in enumerate(raw):
        out[k] = _read_matrix(m, rows, cols, f"{where}[{k}]")
    return out


def _parse_int(token: str):
    # '%.17g' renders negative zero as '-0'; keep its sign bit
    return -0.0 if token == "-0" else int(token)


def _load_json(text: str, where: str) -> dict:
    try:
        doc = json.loads(text, parse_int=_parse_int)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{where}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{where}: top level must be an object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"{where}: unsupported format_version {doc.get('format_version')!r}")
    return doc


def _require(doc, key, where):
    if key not in doc:
        raise FormatError(f"{where}: missing field {key!r}")
    return doc[key]


# -- systems -------------------------------------------------------------------------


def dumps_system(alpha: Colligation, metadata=None) -> str:
    """Canonical text of a system file."""
    fields = [
        ("format_version", str(FORMAT_VERSION)),
        ("kind", '"system"'),
        ("n", str(alpha.n)),
        ("dims", _scalar({"state": alpha.dx, "input": alpha.din, "output": alpha.dout})),
        ("a", _tuple(alpha.a, "  ")),
        ("b", _tuple(alpha.b, "  ")),
        ("c", _tuple(alpha.c, "  ")),
        ("d", _tuple(alpha.d, "  ")),
    ]
    if metadata:
        fields.append(("metadata", _scalar(dict(metadata))))
    return _document(fields)


def loads_system(text: str, where: str = "<string>"):
    """Parse a system file; returns ``(alpha, metadata)``."""
    doc = _load_json(text, where)
    if doc.get("kind", "system") != "system":
        raise FormatError(f"{where}: expected kind 'system', got {doc.get('kind')!r}")
    n = _require(doc, "n", where)
    dims = _require(doc, "dims", where)
    try:
        dx, din, dout = int(dims["state"]), int(dims["input"]), int(dims["output"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{where}: dims must give integer state/input/output") from exc
    if not isinstance(n, int) or n < 1 or min(dx, din, dout) < 0:
        raise FormatError(f"{where}: invalid n or dims")
    a = _read_tuple(_require(doc, "a", where), n, dx, dx, f"{where}: a")
    b = _read_tuple(_require(doc, "b", where), n, dx, din, f"{where}: b")
    c = _read_tuple(_require(doc, "c", where), n, dout, dx, f"{where}: c")
    d = _read_tuple(_require(doc, "d", where), n, dout, din, f"{where}: d")
    try:
        alpha = Colligation(a, b, c, d)
    except (ShapeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from exc
    return alpha, doc.get("metadata", {})


def save_system(path, alpha: Colligation, metadata=None) -> None:
    Path(path).write_text(dumps_system(alpha, metadata), encoding="utf-8")


def load_system(path):
    path = Path(path)
    return loads_system(path.read_text(encoding="utf-8"), str(path))


def pencil_system(g) -> Colligation:
    """View a bare pencil ``G`` as a system with empty state space (``D = G``)."""
    g = np.asarray(g, dtype=np.complex128)
    n, rows, cols = g.shape
    return Colligation(np.zeros((n, 0, 0)), np.zeros((n, 0, cols)), np.zeros((n, rows, 0)), g)


# -- witnesses -----------------------------------------------------------------------


def dumps_witness(w: ViolationWitness, provenance=None) -> str:
    prov = {"tool_version": __version__, "search_seed": int(w.seed)}
    prov.update(provenance or {})
    fields = [
        ("format_version", str(FORMAT_VERSION)),
        ("kind", '"witness"'),
        ("n", str(w.n)),
        ("family", json.dumps(w.family)),
        ("m", _tuple(w.m, "  ")),
        ("t", _tuple(np.asarray(w.t.mats), "  ")),
        ("r", _num(w.r)),
        ("lhs", _num(w.lhs)),
        ("rhs", _num(w.rhs)),
        ("rhs_upper", "null" if w.rhs_upper is None else _num(w.rhs_upper)),
        ("ratio", _num(w.ratio)),
        ("seed", str(int(w.seed))),
        ("budget", _scalar(w.budget)),
        ("provenance", _scalar(prov)),
    ]
    return _document(fields)


def loads_witness(text: str, where: str = "<string>", validate: bool = True):
    """Parse a witness file; with ``validate`` the ratio is recomputed and must match."""
    doc = _load_json(text, where)
    if doc.get("kind") != "witness":
        raise FormatError(f"{where}: expected kind 'witness', got {doc.get('kind')!r}")
    m_raw = _require(doc, "m", where)
    t_raw = _require(doc, "t", where)
    try:
        n = int(doc["n"])
        nm = len(m_raw[0])
        dim = len(t_raw[0])
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise FormatError(f"{where}: malformed m/t tuples") from exc
    m = _read_tuple(m_raw, n, nm, nm, f"{where}: m")
    t = _read_tuple(t_raw, n, dim, dim, f"{where}: t")
    w = ViolationWitness(
        m=m,
        t=CommutingTuple(t),
        r=float(_require(doc, "r", where)),
        lhs=float(_require(doc, "lhs", where)),
        rhs=float(_require(doc, "rhs", where)),
        ratio=float(_require(doc, "ratio", where)),
        seed=int(_require(doc, "seed", where)),
        rhs_upper=None if doc.get("rhs_upper") is None else float(doc["rhs_upper"]),
        family=doc.get("family", "block"),
        budget=doc.get("budget", {}),
    )
    if validate:
        revalidate(w)
    return w, doc.get("provenance", {})


def save_witness(path, w: ViolationWitness, provenance=None) -> None:
    Path(path).write_text(dumps_witness(w, provenance), encoding="utf-8")


def load_witness(path, validate: bool = True):
    path = Path(path)
    return loads_witness(path.read_text(encoding="utf-8"), str(path), validate)
