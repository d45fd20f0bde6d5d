"""Run the 'converse42' experiment and write its JSON bundle."""

import argparse
import json
import os

from ndsys.experiments import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=int(os.environ.get("NDSYS_SEED", 0)))
    ap.add_argument("--out", default=None, help="bundle path (default: print)")
    args = ap.parse_args()
    bundle = run_experiment("converse42", args.seed)
    text = json.dumps(bundle, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    print(f"verdict: {bundle['verdict']}")


if __name__ == "__main__":
    main()
