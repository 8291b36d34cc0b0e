#!/usr/bin/env python3
"""Split-step phase diagram: bulk winding against the localization index.

Writes the same CSV as ``qwalk-index phase-diagram`` and prints the winding
regions as a character map (``.`` marks a closed gap, ``x`` a mismatch).
"""

import argparse
import csv
import sys
from pathlib import Path

from qwalk_index.cli import main as cli_main

SYMBOL = {"-1": "-", "0": "0", "1": "+"}


def draw(path: Path) -> int:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    t1 = sorted({r["theta1"] for r in rows}, key=float)
    t2 = sorted({r["theta2"] for r in rows}, key=float)
    cell = {(r["theta1"], r["theta2"]): r for r in rows}
    mismatches = 0
    for b in reversed(t2):
        line = []
        for a in t1:
            r = cell[(a, b)]
            if r["status"] == "gap_closed":
                line.append(".")
            elif r["agree"] != "true":
                line.append("x")
                mismatches += 1
            else:
                line.append(SYMBOL.get(r["winding"], "?"))
        print(" ".join(line))
    print(f"theta1 runs left to right, theta2 bottom to top; {mismatches} mismatches")
    return mismatches


def main(argv=None) -> int:
    here = Path(__file__).resolve().parents[1]
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, default=here / "configs" / "split_step_sweep.ini")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args(argv)
    code = cli_main(
        ["phase-diagram", "--config", str(args.config), "--out", str(args.out), "--threads", str(args.threads)]
    )
    if code:
        return code
    return 1 if draw(args.out / "phase_diagram.csv") else 0


if __name__ == "__main__":
    sys.exit(main())
