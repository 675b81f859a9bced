"""
Command line: gridflow {converge, complexity, evolve} [--config FILE] [overrides].

Exit codes: 0 success, 1 configuration or parameter error, 2 solver failure.
"""
import argparse
import logging
import os
import sys

from . import __version__
from .errors import ConfigError, GridflowError, SolverError
from .experiments.complexity import complexity_study, write_traces
from .experiments.config import load_config, save_config
from .experiments.convergence import cauchy_convergence, write_rate_table
from .experiments.evolution import evolve

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
EVOLVE_KINDS = {"thin-film": "evolve-thin-film", "spfc": "evolve-spfc"}
CONVERGE_KINDS = {"p4": 4.0, "p6": 6.0}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file (flat keys mirroring these flags)")
    common.add_argument("--n", type=int, help="cells per axis")
    common.add_argument("--L", type=float, help="domain edge length")
    common.add_argument("--p", type=float, help="p-Laplacian exponent")
    common.add_argument("--eps", type=float, help="surface diffusion coefficient")
    common.add_argument("--s", type=float, help="time step")
    common.add_argument("--seed", type=int, help="initial data seed")
    common.add_argument("--tmax", type=float, help="final time of an evolution")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--tol", type=float, help="relative PSD residual tolerance")
    common.add_argument("--max-iter", dest="max_iter", type=int, help="PSD iteration cap")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log every PSD iteration")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    parser = _Parser(prog="gridflow", description="PSD solvers for p-Laplacian gradient flows on periodic grids.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("converge", parents=[common], help="Cauchy convergence table of the thin-film scheme")
    conv.add_argument("--kind", choices=sorted(CONVERGE_KINDS), help="p4 or p6")
    conv.add_argument("--levels", type=_int_list, help="doubling grid sizes, e.g. 16,32,64")
    conv.add_argument("--T", type=float, help="final time")

    comp = sub.add_parser("complexity", parents=[common], help="PSD iteration traces on a manufactured solution")
    comp.add_argument("--h-list", dest="h_list", type=_float_list)
    comp.add_argument("--eps-list", dest="eps_list", type=_float_list)
    comp.add_argument("--s-list", dest="s_list", type=_float_list)
    comp.add_argument("--p-list", dest="p_list", type=_float_list)
    comp.add_argument("--tau", type=float, help="stop once ||u^k - u~||_inf <= tau")
    comp.add_argument("--workers", type=int, help="parallel combinations")

    evo = sub.add_parser("evolve", parents=[common], help="long-time thin-film or SPFC evolution")
    evo.add_argument("--kind", choices=sorted(EVOLVE_KINDS), help="thin-film or spfc")
    evo.add_argument("--render-png", dest="render_png", action="store_true", default=None,
                     help="also write PNG snapshots and a GIF movie")
    evo.add_argument("--log-every", dest="log_every", type=int)
    return parser


_OVERRIDE_KEYS = (
    "n", "L", "p", "eps", "s", "seed", "tmax", "out", "tol", "max_iter", "levels", "T",
    "h_list", "eps_list", "s_list", "p_list", "tau", "workers", "render_png", "log_every",
)


def config_from_args(args):
    overrides = {key: getattr(args, key, None) for key in _OVERRIDE_KEYS}
    if args.command == "converge":
        overrides["kind"] = "converge"
        if args.kind is not None:
            overrides["p"] = CONVERGE_KINDS[args.kind]
    elif args.command == "complexity":
        overrides["kind"] = "complexity"
    elif args.kind is not None:
        overrides["kind"] = EVOLVE_KINDS[args.kind]
    default_kind = "evolve-thin-film" if args.command == "evolve" else args.command
    cfg = load_config(args.config, overrides, kind=default_kind)
    if args.command == "evolve" and not cfg.kind.startswith("evolve-"):
        raise ConfigError(f"evolve cannot run a config of kind {cfg.kind!r}")
    if args.command != "evolve" and cfg.kind != args.command:
        raise ConfigError(f"{args.command} cannot run a config of kind {cfg.kind!r}")
    return cfg


def run_converge(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    save_config(os.path.join(cfg.out, "config.json"), cfg)
    rows = cauchy_convergence(cfg.p, cfg.levels, L=cfg.L, eps=cfg.eps, T=cfg.T, cfg=cfg.psd_config())
    write_rate_table(os.path.join(cfg.out, "rates.csv"), rows)
    return 0


def run_complexity(cfg):
    h_list = cfg.h_list or (cfg.L / cfg.n,)
    traces = complexity_study(
        h_list, cfg.eps_list or (cfg.eps,), cfg.s_list or (cfg.s,), cfg.p_list or (cfg.p,),
        L=cfg.L, tau=cfg.tau, max_iter=cfg.max_iter, workers=cfg.workers,
    )
    os.makedirs(cfg.out, exist_ok=True)
    save_config(os.path.join(cfg.out, "config.json"), cfg)
    write_traces(cfg.out, traces)
    return 0


def run_evolve(cfg):
    evolve(cfg)
    return 0


COMMANDS = {"converge": run_converge, "complexity": run_complexity, "evolve": run_evolve}


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        # --help and --version
        return exc.code if isinstance(exc.code, int) else 0

    configure_logging(args.verbose, args.quiet)
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg)
    except SolverError:
        logger.exception("solver failure")
        return 2
    except (GridflowError, ValueError) as exc:
        logger.error("%s", exc)
        return 1
