#!/usr/bin/env python3
"""Posterior-robustness verification battery, plus the side-by-side runs of
the displayed-formula kernels against their textbook variants.

Usage: python scripts/run_robustness_suite.py [--out DIR]
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from gammaglasso.cli import main as cli_main
from gammaglasso.robustness import PosteriorKind, robustness_curve, standard_experiment


def run(args):
    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="robustness_"))
    out.mkdir(parents=True, exist_ok=True)
    rc = cli_main(["verify", "--output-dir", str(out), "--seed", "20"])
    print((out / "verdict.json").read_text())
    if rc != 0:
        print("verification battery FAILED", file=sys.stderr)
        return rc

    # displayed t/dp kernels vs their textbook variants on the same harness
    side_by_side = {}
    for tag in ("t", "dp"):
        exp = standard_experiment(tag)
        for textbook in (False, True):
            kind = PosteriorKind(kind=tag, nu=3.0, alpha=0.5, lam=1.0, textbook=textbook)
            curve = robustness_curve(kind, exp)
            side_by_side[f"{tag}_{'textbook' if textbook else 'displayed'}"] = [
                [z, d] for z, d in curve
            ]
    (out / "textbook_comparison.json").write_text(json.dumps(side_by_side, indent=2) + "\n")
    print("textbook-variant comparison written to", out / "textbook_comparison.json")
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None)
    sys.exit(run(parser.parse_args()))
