"""Command-line driver: ``generate``, ``solve``, ``sweep`` and ``oracle``.

Exit codes: 0 success, 1 usage or input error, 2 oracle guard or
infeasible provision cap.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .datagen import GenConfig, generate
from .model import ProblemInstance
from .oracle import InfeasibleCapError, OracleGuardError, brute_force_best
from .pipeline import MODES, RunConfig, solve, sweep

EXIT_USAGE = 1
EXIT_GUARD = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from err


def _gen_args(p: argparse.ArgumentParser, required: bool) -> None:
    g = p.add_argument_group("instance generation")
    g.add_argument("--n-loanees", type=int, required=required)
    g.add_argument("--n-actions", type=int, default=5)
    g.add_argument("--poisson-mean", type=float, default=0.7)
    g.add_argument("--mean-degree", type=float, default=2.0)


def _gen_config(args) -> GenConfig:
    return GenConfig(n_loanees=args.n_loanees, n_actions=args.n_actions, poisson_mean=args.poisson_mean,
                     mean_degree=args.mean_degree, seed=args.seed)


def _run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", help="instance JSON; omit to generate one from --n-loanees")
    _gen_args(p, required=False)
    p.add_argument("--nu", type=int, default=7, help="maximum group size")
    p.add_argument("--cycles", type=int, default=2, help="QAOA driving cycles T")
    p.add_argument("--opt-iters", type=int, default=200, help="COBYLA iterations per restart")
    p.add_argument("--gpr-iters", type=int, default=None, help="GPR step budget (default N*M)")
    p.add_argument("--lambda", dest="lam", type=int, default=10, help="candidates kept per merge")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--epsilon", type=float, default=None, help="override the instance epsilon")
    p.add_argument("--provision-cap", type=float, default=None)
    p.add_argument("--mode", choices=MODES, default="hybrid")
    p.add_argument("--order", choices=("mixer_first", "cost_first"), default="mixer_first")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")


def _run_config(args, **extra) -> RunConfig:
    if args.instance is None and args.n_loanees is None:
        raise UsageError("give --instance or --n-loanees")
    return RunConfig(
        instance=args.instance,
        gen=None if args.instance is not None else _gen_config(args),
        nu=args.nu, cycles=args.cycles, qaoa_iters=args.opt_iters, gpr_iters=args.gpr_iters,
        lam=args.lam, restarts=args.restarts, epsilon=args.epsilon, provision_cap=args.provision_cap,
        mode=args.mode, seed=args.seed, out=args.out, order=args.order, **extra,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="loanqaoa", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic instance")
    _gen_args(p, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--provision-cap", type=float, default=None)
    p.add_argument("--out", required=True, help="instance JSON path")

    p = sub.add_parser("solve", help="run the hybrid pipeline or the GPR baseline")
    _run_args(p)

    p = sub.add_parser("sweep", help="solve over a grid of epsilon values in both modes")
    _run_args(p)
    p.add_argument("--epsilon-grid", type=_floats, required=True, help="e.g. 0,0.25,0.5")

    p = sub.add_parser("oracle", help="exhaustive best assignment for a small instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--provision-cap", type=float, default=None)
    p.add_argument("--out", required=True, help="result JSON path")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "generate":
            instance = generate(_gen_config(args), epsilon=args.epsilon, provision_cap=args.provision_cap)
            instance.save(args.out)
        elif args.command == "solve":
            manifest = solve(_run_config(args))
            print(json.dumps({k: manifest[k] for k in ("mode", "Y", "provision", "dpo_count", "bank_profit")}))
            if manifest["flags"]["cap_infeasible"]:
                print("provision cap not reached", file=sys.stderr)
                return EXIT_GUARD
        elif args.command == "sweep":
            rows = sweep(_run_config(args, epsilon_grid=args.epsilon_grid))
            print(f"wrote {len(rows)} rows to {Path(args.out) / 'sweep.csv'}")
        elif args.command == "oracle":
            instance = ProblemInstance.load(args.instance)
            cap = args.provision_cap if args.provision_cap is not None else instance.provision_cap
            result = brute_force_best(instance, cap)
            Path(args.out).write_text(json.dumps(result.to_dict(), indent=1, sort_keys=True) + "\n")
    except (OracleGuardError, InfeasibleCapError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_GUARD
    except (UsageError, ValueError, FileNotFoundError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
