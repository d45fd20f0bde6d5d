"""Regenerate the committed witness fixtures under tests/fixtures/."""

import argparse
from pathlib import Path

from ndsys.io import save_witness
from ndsys.vneumann import SearchConfig, make_witness, pauli_witness, violation_search

UPPER_GRID = 1024


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", default=Path(__file__).resolve().parents[1] / "tests" / "fixtures", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    args.dir.mkdir(parents=True, exist_ok=True)

    w = pauli_witness(upper_grid=UPPER_GRID)
    save_witness(args.dir / "witness_pauli_n3.json", w, {"source": "closed form"})
    print(f"pauli: ratio={w.ratio:.12g} certified={w.certified}")

    cfg = SearchConfig()
    found = violation_search(3, seed=args.seed, config=cfg)
    found = make_witness(found.m, found.t, seed=found.seed, rhs_grid=cfg.rhs_grid, upper_grid=UPPER_GRID,
                         family=found.family, budget={**found.budget, "upper_grid": UPPER_GRID})
    save_witness(args.dir / f"witness_search_n3_seed{args.seed}.json", found, {"source": "violation_search"})
    print(f"search seed {args.seed}: ratio={found.ratio:.12g} certified={found.certified}")


if __name__ == "__main__":
    main()
