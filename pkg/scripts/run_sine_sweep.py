"""Drive every pipeline stage for one config and print the report.

Stages run in dependency order through the same entry point as the
console script, so artifacts and the run ledger match a manual session.
"""

import argparse
import sys

from shellwave.cli import main as shellwave_main

STAGES = ("ground", "spectrum", "mpot", "scan", "solve",
          "continue", "normalize", "report")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/sine_n2.json")
    ap.add_argument("--out", default=None, help="override the config outdir")
    ap.add_argument("--eps", type=float, default=None,
                    help="single-eps stages use this instead of schedule[0]")
    args = ap.parse_args()
    for stage in STAGES:
        argv = [stage, "--config", args.config]
        if args.out is not None:
            argv += ["--out", args.out]
        if args.eps is not None and stage in ("mpot", "scan", "solve"):
            argv += ["--eps", str(args.eps)]
        print(f"== {stage}", flush=True)
        rc = shellwave_main(argv)
        if rc != 0:
            print(f"{stage} exited with {rc}", file=sys.stderr)
            return rc
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
