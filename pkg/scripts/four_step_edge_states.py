#!/usr/bin/env python3
"""Edge states of the garnished four-step walk under gentle and reflection cuts.

Prints both splitting tables and the localization of each edge state, and
writes the edge report and eigenfunction dump through the CLI.
"""

import argparse
import json
import sys
from pathlib import Path

from qwalk_index.cli import main as cli_main

ENTRIES = ("si_plus_left", "si_plus_right", "si_minus_left", "si_minus_right")


def main(argv=None) -> int:
    here = Path(__file__).resolve().parents[1]
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, default=here / "configs" / "default.ini")
    p.add_argument("--out", type=Path, default=Path("results"))
    args = p.parse_args(argv)
    code = cli_main(["edge-states", "--config", str(args.config), "--out", str(args.out)])
    if code:
        return code
    report = json.loads((args.out / "edge_states.json").read_text(encoding="utf-8"))
    for kind, rep in report["reports"].items():
        t = rep["table"]
        print(f"{kind:10s} entries {[t[k] for k in ENTRIES]}  si_left {t['si_left']}  si_right {t['si_right']}")
        for s in rep["states"]:
            print(
                f"    {s['block']:11s} at {s['target']:+d}  center {s['center']:7.2f}"
                f"  chirality {s['chirality']:+.3f}  middle mass {s['mass_middle_third']:.1e}"
            )
    c = report["comparison"]
    print(f"columns agree: {c['columns_agree']}, entries differ: {c['entries_differ']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
