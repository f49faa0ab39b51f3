#!/usr/bin/env python3
"""Regenerate the bound-sweep CSVs (radius sweep, capacity/saturation sweep,
and the full bound table) into a target directory by driving the CLI, so the
files carry the same schema headers as any user-generated run.

    python3 scripts/regen_figure_data.py --outdir data/
"""

import argparse
import pathlib
import sys

from isicap.cli import main as cli_main

SWEEPS = (
    ("figure1.csv", "figure1", None),
    ("figure2.csv", "figure2", None),
    ("bounds.csv", "bounds", "0:60:121"),
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="data", help="directory for the CSVs")
    ap.add_argument("--config", default=None, help="JSON config forwarded to the CLI")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for filename, command, grid in SWEEPS:
        argv = [command, "--out", str(outdir / filename),
                "--seed", str(args.seed), "--threads", str(args.threads)]
        if args.config:
            argv += ["--config", args.config]
        if grid:
            argv += ["--grid", grid]
        rc = cli_main(argv)
        if rc != 0:
            print(f"{command} exited with {rc}", file=sys.stderr)
            return rc
        print(f"wrote {outdir / filename}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
