"""Landscape metrics for many anchors of one instance.

Anchors are the archived optimum plus ``--local`` fresh 3-Opt local optima;
the output has one row per (anchor cost, lambda), which shows how the
quality of the anchor shapes the smoothed landscape.

    python scripts/multi_anchor.py --instance berlin52 --local 10
"""

import argparse
import sys

from hctsp import bench


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instance", default="berlin52")
    ap.add_argument("--local", type=int, default=10, help="number of local-optimum anchors")
    ap.add_argument("--runs", type=int, default=30)
    ap.add_argument("--cap", type=float, default=2e5, help="evaluation cap per run")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="multi_anchor_out")
    args = ap.parse_args(argv)

    cfg = bench.make_config({"instances": args.instance, "runs": args.runs,
                             "seed": args.seed, "budget_evals": args.cap,
                             "anchor": f"optimum,local:{args.local}", "out": args.out})
    for cost, rep in bench.cmd_analyze(cfg):
        print(f"anchor {cost:8g} ({rep.anchor_kind})  lambda {rep.lam:4.2f}  "
              f"density {rep.lo_density:6.3f}  escaping {rep.escaping_rate:5.3f}  "
              f"fdc {rep.fdc:6.3f}")
    print(f"landscape.csv and landscape_summary.csv in {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
