"""Anytime comparison of ILS, LSILS, GH and SSA on one instance.

Writes the mean-excess curves and AUC table through ``hctsp compare`` and
then prints per-algorithm mean AUC with a one-sided rank test of each
algorithm against ILS.

    python scripts/compare_benchmark.py --instance rd400 --budget 1e7 --runs 20
"""

import argparse
import sys

import numpy as np

from hctsp import bench
from hctsp.landscape import rank_test_less


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instance", default="rd400")
    ap.add_argument("--algos", default="ils,lsils:setting5,gh,ssa")
    ap.add_argument("--budget", type=float, default=1e6, help="evaluations per run")
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="compare_out")
    args = ap.parse_args(argv)

    cfg = bench.make_config({"instances": args.instance, "algorithms": args.algos,
                             "runs": args.runs, "seed": args.seed,
                             "budget_evals": args.budget, "jobs": args.jobs,
                             "out": args.out})
    summary = bench.cmd_compare(cfg)
    base = summary.get((next(iter(summary))[0], "ils"))
    for (inst, label), s in summary.items():
        line = (f"{inst} {label:18s} mean AUC {np.mean(s['run_aucs']):12.5g}  "
                f"mean best {np.mean(s['best']):.1f}")
        if base is not None and label != "ils":
            line += f"  p(< ils) = {rank_test_less(s['run_aucs'], base['run_aucs']):.3g}"
        print(line)
    print(f"curves and AUC table in {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
