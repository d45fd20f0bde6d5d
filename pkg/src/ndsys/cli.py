"""Command-line interface.

Every subcommand prints ``key=value`` report lines followed by a
``summary:`` line. Exit codes: 0 property holds / task done, 1 property
refuted, 2 usage or format error, 3 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .dilation import (
    assemble_dilation,
    assembled_embedding,
    build_subspaces_fixed_zeta,
    extract_embedded,
    is_dilation,
    subspace_residuals,
    reduce_uniform,
)
from .errors import CapacityError, ConfigurationError, DomainError, NDSysError, PreconditionError, ShapeError
from .errors import SingularityError, StructuralError
from .experiments import EXPERIMENTS, run_experiment
from .io import FormatError, load_system, load_witness, save_system, save_witness
from .lattice import impulse_response
from .linalg import SubspaceBasis, multi_indices_upto
from .pencil import CONSERVATIVE_TOL, is_conservative_algebraic, torus_norm_max
from .realize import RealizeConfig, search_realization
from .transfer import taylor_coeff, transfer_eval
from .vneumann import SearchConfig, build_counterexample_system, violation_search

EXIT_OK, EXIT_REFUTED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
SEED_ENV = "NDSYS_SEED"


class UsageError(NDSysError):
    pass


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    if isinstance(v, np.ndarray):
        return json.dumps([[[float(x.real), float(x.imag)] for x in row] for row in np.atleast_2d(v)])
    if isinstance(v, (list, tuple)):
        return json.dumps([float(x) if isinstance(x, (float, np.floating)) else x for x in v])
    return str(v)


def _report(out, items, summary):
    for k, v in items:
        print(f"{k}={_fmt(v)}", file=out)
    print(f"summary: {summary}", file=out)


def _parse_complex_list(text, name):
    try:
        return np.array([complex(tok.replace(" ", "").replace("i", "j")) for tok in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"--{name}: cannot parse {text!r} as comma-separated complex numbers") from exc


def _parse_int_list(text, name):
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"--{name}: cannot parse {text!r} as comma-separated integers") from exc


def _need(args, attr, flag):
    v = getattr(args, attr)
    if v is None:
        raise UsageError(f"{args.command} needs {flag}")
    return v


def _embed(args, big, small_dx):
    if args.embed is None:
        return assembled_embedding(big.dx - small_dx, small_dx)
    idx = _parse_int_list(args.embed, "embed")
    if len(idx) != small_dx or any(not 0 <= i < big.dx for i in idx):
        raise UsageError(f"--embed {args.embed!r}: need {small_dx} distinct indices in [0, {big.dx})")
    return SubspaceBasis.coordinates(big.dx, idx)


def _common_meta(args, **extra):
    meta = [("tool_version", __version__), ("seed", args.seed)]
    meta += list(extra.items())
    return meta


# -- subcommands ---------------------------------------------------------------------


def cmd_check_dissipative(args, out):
    alpha, _ = load_system(_need(args, "inp", "--in"))
    rep = torus_norm_max(alpha.stacked(), grid=args.grid, restarts=args.restarts, seed=args.seed)
    _report(out, _common_meta(args, grid=args.grid, restarts=args.restarts) + [
        ("torus_max", rep.torus_max), ("argmax", list(np.angle(rep.argmax))),
        ("necessary_bound", rep.necessary_bound), ("quasi_random", rep.quasi_random),
        ("verdict", rep.verdict.value),
    ], f"{'dissipative (heuristic)' if rep.is_dissipative else 'violation found'}; max norm {rep.torus_max:.12g}")
    return EXIT_OK if rep.is_dissipative else EXIT_REFUTED


def cmd_check_conservative(args, out):
    alpha, _ = load_system(_need(args, "inp", "--in"))
    tol = args.tol if args.tol is not None else CONSERVATIVE_TOL
    ok, res = is_conservative_algebraic(alpha.stacked(), tol)
    _report(out, _common_meta(args, tol=tol) + sorted(res.items()) + [("conservative", ok)],
            "conservative" if ok else f"not conservative (worst residual {max(res.values()):.3e})")
    return EXIT_OK if ok else EXIT_REFUTED


def cmd_transfer_eval(args, out):
    alpha, _ = load_system(_need(args, "inp", "--in"))
    z = _parse_complex_list(_need(args, "z", "--z"), "z")
    value = transfer_eval(alpha, z)
    _report(out, _common_meta(args) + [("z", " ".join(_fmt(complex(v)) for v in z)), ("value", value),
                                       ("norm", float(np.linalg.norm(value, 2)) if value.size else 0.0)],
            "transfer function evaluated")
    return EXIT_OK


def cmd_taylor(args, out):
    alpha, _ = load_system(_need(args, "inp", "--in"))
    if args.s is not None:
        indices = [tuple(_parse_int_list(args.s, "s"))]
    else:
        indices = list(multi_indices_upto(alpha.n, args.degree))
    items = _common_meta(args, degree=args.degree)
    for s in indices:
        items.append(("coeff[" + ",".join(map(str, s)) + "]", taylor_coeff(alpha, s)))
    _report(out, items, f"{len(indices)} Taylor coefficient(s)")
    return EXIT_OK


def _load_pair(args):
    big, _ = load_system(_need(args, "inp", "--in"))
    small, _ = load_system(_need(args, "small", "--small"))
    return big, small, _embed(args, big, small.dx)


def cmd_verify_dilation(args, out):
    big, small, embed = _load_pair(args)
    tol = args.tol if args.tol is not None else 1e-8
    rep = is_dilation(big, small, embed, args.degree, tol)
    fail = rep.first_failure()
    _report(out, _common_meta(args, degree_cap=rep.degree_cap, tol=tol) + sorted(rep.residuals.items())
            + [("passed", rep.passed), ("first_failure", "none" if fail is None else f"{fail[1]}@{fail[0]}")],
            "dilation identities hold up to the cap" if rep.passed else f"identity {fail[1]} fails at degree {fail[0]}")
    return EXIT_OK if rep.passed else EXIT_REFUTED


def cmd_build_subspaces(args, out):
    big, small, embed = _load_pair(args)
    zeta = _parse_complex_list(args.zeta, "zeta") if args.zeta else np.ones(big.n)
    try:
        d, dstar = build_subspaces_fixed_zeta(big, small, embed, zeta)
    except PreconditionError as exc:
        _report(out, _common_meta(args) + [("precondition", "failed"), ("family", exc.detail.get("family")),
                                           ("degree", exc.detail.get("degree"))], str(exc))
        return EXIT_REFUTED
    res = subspace_residuals(big, small, embed, zeta, d, dstar)
    _report(out, _common_meta(args) + [("dim_d", d.dim), ("dim_dstar", dstar.dim)] + sorted(res.items()),
            f"D has dimension {d.dim}, D_* has dimension {dstar.dim}")
    return EXIT_OK


def cmd_assemble_dilation(args, out):
    beta, _ = load_system(_need(args, "inp", "--in"))
    small, _ = load_system(_need(args, "small", "--small"))
    big = assemble_dilation(beta, small.dx, small)
    if args.out:
        save_system(args.out, big, {"name": "assembled dilation", "seed": args.seed})
    _report(out, _common_meta(args) + [("state_dim", big.dx), ("embed", f"{beta.dx}..{big.dx - 1}")],
            f"assembled a system with state dimension {big.dx}")
    return EXIT_OK


def cmd_extract(args, out):
    big, _ = load_system(_need(args, "inp", "--in"))
    if args.embed is None:
        raise UsageError("extract needs --embed")
    idx = _parse_int_list(args.embed, "embed")
    beta = extract_embedded(big, SubspaceBasis.coordinates(big.dx, idx))
    if args.out:
        save_system(args.out, beta, {"name": "extracted beta", "split": len(idx)})
    _report(out, _common_meta(args) + [("aux_dim", beta.dx), ("split", len(idx))],
            f"extracted beta with auxiliary dimension {beta.dx}")
    return EXIT_OK


def cmd_reduce(args, out):
    alpha, _ = load_system(_need(args, "inp", "--in"))
    red = reduce_uniform(alpha)
    if args.out:
        save_system(args.out, red.alpha_min, {"name": "uniform reduction"})
    _report(out, _common_meta(args) + [("state_dim", alpha.dx), ("reduced_dim", red.alpha_min.dx),
                                       ("dim_d", red.d.dim), ("dim_dstar", red.dstar.dim), ("passes", red.passes)],
            f"reduced state dimension {alpha.dx} -> {red.alpha_min.dx}")
    return EXIT_OK


def cmd_realize(args, out):
    alpha, _ = load_system(_need(args, "inp", "--in"))
    cfg = RealizeConfig(restarts=args.restarts, iters=args.iters if args.iters is not None else RealizeConfig.iters)
    res = search_realization(alpha.stacked(), args.dy, args.degree, seed=args.seed, config=cfg)
    if args.out:
        save_system(args.out, res.beta, {"name": "approximate realization", "seed": args.seed, "dy": res.dy})
    _report(out, _common_meta(args, degree_cap=args.degree, restarts=cfg.restarts, iters=cfg.iters) + [
        ("dy", res.dy), ("objective", res.objective), ("unitarity_residual", res.unitarity_residual),
        ("vanish_residuals", res.vanish_residuals), ("epsilon", res.epsilon),
    ], f"best-found total residual {res.epsilon:.3e} (evidence only, not a certificate)")
    return EXIT_OK


def cmd_vn_search(args, out):
    iters = args.iters if args.iters is not None else SearchConfig.iters
    cfg = SearchConfig(restarts=args.restarts, iters=iters, rhs_grid=args.grid)
    w = violation_search(args.n, args.matrix_dim, args.defect_dim, seed=args.seed, config=cfg)
    if args.out:
        save_witness(args.out, w)
    _report(out, _common_meta(args, restarts=cfg.restarts, iters=cfg.iters, grid=cfg.rhs_grid) + [
        ("n", args.n), ("lhs", w.lhs), ("rhs", w.rhs), ("ratio", w.ratio), ("violation", w.is_valid),
    ], f"best ratio {w.ratio:.12g}")
    return EXIT_OK


def cmd_build_counterexample(args, out):
    w, _ = load_witness(_need(args, "inp", "--in"))
    alpha = build_counterexample_system(w.m, grid=args.grid)
    if args.out:
        save_system(args.out, alpha, {"name": "counterexample system", "witness_ratio": w.ratio})
    rep = torus_norm_max(alpha.stacked(), grid=args.grid, restarts=args.restarts, seed=args.seed)
    _report(out, _common_meta(args, grid=args.grid) + [("torus_max", rep.torus_max), ("witness_ratio", w.ratio),
                                                       ("state_dim", alpha.dx)],
            "dissipative system whose pencil violates the von Neumann inequality")
    return EXIT_OK


def cmd_simulate(args, out):
    alpha, _ = load_system(_need(args, "inp", "--in"))
    resp = impulse_response(alpha, args.levels)
    items = _common_meta(args, levels=args.levels)
    for s, v in resp.items():
        items.append(("response[" + ",".join(map(str, s)) + "]", v))
    _report(out, items, f"impulse response on {len(resp)} lattice points")
    return EXIT_OK


def cmd_validate_witness(args, out):
    w, prov = load_witness(_need(args, "inp", "--in"))
    items = _common_meta(args) + [("n", w.n), ("lhs", w.lhs), ("rhs", w.rhs), ("ratio", w.ratio),
                                  ("certified", w.certified), ("valid", w.is_valid)]
    if w.rhs_upper is not None:
        items.append(("rhs_upper", w.rhs_upper))
    _report(out, items, f"ratio {w.ratio:.12g} reproduced")
    return EXIT_OK if w.is_valid else EXIT_REFUTED


def cmd_experiment(args, out):
    bundle = run_experiment(args.name, args.seed)
    text = json.dumps(bundle, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    _report(out, [("tool_version", __version__), ("seed", args.seed), ("experiment", args.name),
                  ("verdict", bundle["verdict"])], text if not args.out else f"bundle written to {args.out}")
    return EXIT_OK if bundle["verdict"] in ("pass", "informational") else EXIT_REFUTED


COMMANDS = {
    "check-dissipative": cmd_check_dissipative,
    "check-conservative": cmd_check_conservative,
    "transfer-eval": cmd_transfer_eval,
    "taylor": cmd_taylor,
    "verify-dilation": cmd_verify_dilation,
    "build-subspaces": cmd_build_subspaces,
    "assemble-dilation": cmd_assemble_dilation,
    "extract": cmd_extract,
    "reduce": cmd_reduce,
    "realize": cmd_realize,
    "vn-search": cmd_vn_search,
    "build-counterexample": cmd_build_counterexample,
    "simulate": cmd_simulate,
    "validate-witness": cmd_validate_witness,
}


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer")


def build_parser(default_seed=0) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--in", dest="inp", help="input file")
    common.add_argument("--out", help="output file")
    common.add_argument("--seed", type=int, default=default_seed)
    common.add_argument("--degree", type=int, default=4, help="degree cap M")
    common.add_argument("--grid", type=int, default=64, help="phase grid density")
    common.add_argument("--restarts", type=int, default=4)
    common.add_argument("--tol", type=float, default=None)

    parser = argparse.ArgumentParser(prog="ndsys", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ndsys {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "transfer-eval":
            p.add_argument("--z", help="comma-separated complex point, e.g. 0.3+0.1j,0.2")
        if name == "taylor":
            p.add_argument("--s", help="multi-index, e.g. 2,1 (default: all up to --degree)")
        if name in ("verify-dilation", "build-subspaces", "assemble-dilation"):
            p.add_argument("--small", help="the smaller system")
        if name in ("verify-dilation", "build-subspaces", "extract"):
            p.add_argument("--embed", help="state coordinates of the small system (default: trailing)")
        if name == "build-subspaces":
            p.add_argument("--zeta", help="torus point (default: all ones)")
        if name == "realize":
            p.add_argument("--dy", type=int, default=None)
            p.add_argument("--iters", type=int, default=None)
        if name == "vn-search":
            p.add_argument("--n", type=int, default=3)
            p.add_argument("--matrix-dim", type=int, default=2)
            p.add_argument("--defect-dim", type=int, default=2)
            p.add_argument("--iters", type=int, default=None)
        if name == "simulate":
            p.add_argument("--levels", type=int, default=4)
    p = sub.add_parser("experiment", parents=[common])
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser(_default_seed()).parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    handler = cmd_experiment if args.command == "experiment" else COMMANDS[args.command]
    try:
        return handler(args, out)
    except SingularityError as exc:
        print(f"error: numerical guard tripped in {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, FormatError, ShapeError, StructuralError, DomainError, ConfigurationError,
            CapacityError, PreconditionError, OSError) as exc:
        where = getattr(args, "inp", None)
        print(f"error: {args.command}{f' ({where})' if where else ''}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
