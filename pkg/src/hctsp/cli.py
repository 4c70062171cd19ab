"""``hctsp`` command line: solve, compare, analyze, gen.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import bench
from .tsp_model import TsplibError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

log = logging.getLogger("hctsp")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _strings(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _add_common(p: argparse.ArgumentParser):
    # every default is None so that config-file values survive unless a flag is given
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--instance", type=_strings,
                   help="comma list of TSPLIB paths, bundled names or rand:<n>:<seed>[:<side>]")
    p.add_argument("--runs", type=int, help="independent runs (seeds seed .. seed+runs-1)")
    p.add_argument("--seed", type=int, help="first seed")
    p.add_argument("--budget-evals", type=float, help="evaluations per run (n lookups each)")
    p.add_argument("--budget-seconds", type=float, help="wall-clock seconds per run")
    p.add_argument("--neighbor-k", type=int, help="candidate list length (default 20)")
    p.add_argument("--perturb-strength", type=int, help="double bridges per kick")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hctsp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one algorithm over seeds, write tours and results")
    _add_common(p)
    p.add_argument("--algo", type=_strings, help="ils, lsils, gh, ssa (or lsils:<schedule>)")
    p.add_argument("--schedule", help="setting1..setting5, constant:<lam> or frac:lam,...")
    p.add_argument("--trace", action="store_const", const=True, help="write per-run traces")

    p = sub.add_parser("compare", help="mean excess curves and AUC of several algorithms")
    _add_common(p)
    p.add_argument("--algo", type=_strings)
    p.add_argument("--schedule")
    p.add_argument("--opt-cost", type=float, help="reference optimum for excess")
    p.add_argument("--no-fallback", dest="fallback_reference", action="store_const",
                   const=False, help="fail instead of using best found x 0.99")
    p.add_argument("--curve-points", type=int)

    p = sub.add_parser("analyze", help="landscape metrics of the HC transform over a lambda grid")
    _add_common(p)
    p.add_argument("--lambda-grid", type=_floats, help="comma list, default 0,0.01,...,0.1")
    p.add_argument("--anchor", help="optimum | local[:k] | tour file (comma list allowed)")

    p = sub.add_parser("gen", help="write a random uniform EUC_2D instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--side", type=float, default=1_000_000.0)
    p.add_argument("--out", required=True, help="output file (or directory)")
    return parser


_NOT_CONFIG = {"command", "config", "verbose"}


def config_from_args(args: argparse.Namespace) -> bench.ExperimentConfig:
    layers = []
    if args.config:
        layers.append(bench.read_config_file(args.config))
    flags = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    layers.append(flags)
    return bench.make_config(*layers)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "gen":
            path = bench.cmd_gen(args.n, args.seed, args.side, args.out)
            print(path)
            return EXIT_OK
        cfg = config_from_args(args)
        log.info("config: %s", cfg)
        if args.command == "solve":
            for res in bench.cmd_solve(cfg):
                print(f"{res.algorithm} seed={res.seed} best={res.best_cost:g} "
                      f"evals={res.evaluations_used:.0f} status={res.status}")
        elif args.command == "compare":
            summary = bench.cmd_compare(cfg)
            for (inst, label), s in summary.items():
                print(f"{inst} {label} auc={s['auc']:.6g}")
        elif args.command == "analyze":
            for cost, rep in bench.cmd_analyze(cfg):
                print(f"{rep.instance} anchor={cost:g} lambda={rep.lam:g} "
                      f"density={rep.lo_density:.4f} escaping={rep.escaping_rate:.4f} "
                      f"fdc={rep.fdc:.4f}")
        return EXIT_OK
    except (bench.ConfigError, TsplibError) as exc:
        print(f"hctsp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"hctsp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
