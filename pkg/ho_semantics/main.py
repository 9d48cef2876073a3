"""
HO Semantics Workbench - Main Entry Point

This module is the command-line front end of the workbench:

- ``check-spec``: parse, desugar and validate a specification file
- ``run``: trace a term under a specification or a builtin lambda calculus
- ``bisim``: bounded bisimilarity of two terms, with a replayable witness
- ``congruence``: check a pair inside seeded random contexts
- ``enumerate``: list the closed terms up to a size

Specifications are file paths or builtin names (``xcl``, ``xcl_nd``,
``lambda_cbn``, ``lambda_cbv``). With ``--format machine`` every command writes
one JSON document on stdout; human text goes to stdout in text mode and
diagnostics always go to stderr.

Exit codes: 0 valid / no counterexample, 1 invalid specification,
2 input or configuration error, 3 distinguished.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass

import pandas as pd

from .bisim import CheckConfig, Verdict, check_any, congruence_search, replay
from .config import load_workbench_config
from .engine import OperationalModel, trace, trace_document, trace_frame, trace_records
from .errors import CongruenceRefusedError, SpecError, WorkbenchError
from .lambda_calculus import (
    LambdaModel, OMEGA, app_bisim_open, coalg_bisim, enumerate_lambda, render_lambda, weaken,
)
from .rules import BUILTIN_SPECS, builtin_path, desugar, load_builtin, load_spec, parse_spec, render_spec
from .term import enumerate_closed, render_sugared, term_size
from .utils import banner, dump_document, read_document, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SPEC = 1
EXIT_INPUT = 2
EXIT_DISTINGUISHED = 3

LAMBDA_BUILTINS = {"lambda_cbn": "cbn", "lambda_cbv": "cbv"}
BUILTINS = tuple(BUILTIN_SPECS) + tuple(LAMBDA_BUILTINS)


@dataclass(frozen=True)
class Workbench:
    """A loaded model with the name it was requested under."""

    name: str
    model: object

    @property
    def is_lambda(self):
        return isinstance(self.model, LambdaModel)

    @property
    def nondeterministic(self):
        return getattr(self.model, "nondeterministic", False)

    def render(self, t, text=False):
        if self.is_lambda:
            return render_lambda(t, named=text)
        return render_sugared(t) if text else self.model.render(t)

    def parse(self, src):
        return self.model.parse(src)


def open_workbench(name, asset_dir):
    """Resolve a specification argument: builtin name or path to a ``.hos`` file."""
    if name in LAMBDA_BUILTINS:
        return Workbench(name, LambdaModel(LAMBDA_BUILTINS[name]))
    if name in BUILTIN_SPECS:
        return Workbench(name, OperationalModel(load_builtin(name, asset_dir)))
    return Workbench(name, OperationalModel(load_spec(name)))


def _spec_path(name, asset_dir):
    if name in BUILTIN_SPECS:
        return builtin_path(name, asset_dir)
    return name


def default_pool(bench, args):
    """The closed arguments function behaviors are applied to."""
    if bench.is_lambda:
        size = args.pool_size if args.pool_size is not None else args.settings["lambda_pool_size"]
        pool = list(enumerate_lambda(0, size))
        if args.include_omega:
            pool.append(OMEGA)
        return pool
    size = args.pool_size if args.pool_size is not None else args.settings["pool_size"]
    return enumerate_closed(bench.model.sig, size)


def _emit(args, document, text):
    # both formats write the report to stdout; diagnostics only reach stderr through the logger
    if args.format == "machine":
        print(dump_document(document))
    else:
        print(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_check_spec(args):
    """Validate a specification file; list every issue when it is invalid."""
    path = _spec_path(args.spec, args.settings["asset_dir"])
    with open(path, "r", encoding="utf-8") as f:
        src = f.read()
    name = os.path.basename(path)
    try:
        spec = desugar(parse_spec(src))
    except SpecError as exc:
        for issue in exc.issues:
            logger.error("❌ %s", issue.describe())
        document = {"spec": name, "valid": False, "issues": [issue.describe() for issue in exc.issues]}
        _emit(args, document, f"❌ {name}: {len(exc.issues)} issue(s)")
        return EXIT_SPEC
    summary = f"{spec.rule_count} rules, {spec.mode}, complete"
    document = {"spec": name, "valid": True, "rules": spec.rule_count, "mode": spec.mode}
    if args.strict:
        document["strict"] = render_spec(spec)
        _emit(args, document, f"✅ {name}: {summary}\n\n{render_spec(spec)}")
    else:
        _emit(args, document, f"✅ {name}: {summary}")
    return EXIT_OK


def cmd_run(args):
    """Trace a term and print the trace."""
    bench = open_workbench(args.spec, args.settings["asset_dir"])
    steps = args.steps if args.steps is not None else args.settings["max_steps"]
    term = bench.parse(args.term)
    result = trace(bench.model, term, steps)
    if args.format == "machine":
        if args.records:
            print(trace_records(result, bench.model.render))
        else:
            print(dump_document(trace_document(result, bench.model.render)))
        return EXIT_OK
    frame = trace_frame(result, lambda t: bench.render(t, text=True))
    print(banner(f"Trace of {args.term} under {bench.name}"))
    print(frame.to_string(index=False) if not frame.empty else "(no events)")
    print(f"\nterminal: {result.terminal}")
    return EXIT_OK


def _common_context(left, right, open_context):
    # free names are numbered per term; both terms share the larger context
    n = max(left.ctx, right.ctx, open_context or 0)
    return weaken(left, n), weaken(right, n)


def _check_config(bench, args):
    depth = args.depth if args.depth is not None else args.settings["depth"]
    extra = tuple(bench.parse(src) for src in args.extra)
    return CheckConfig(depth, default_pool(bench, args), extra)


def run_bisim(bench, left, right, args):
    """Dispatch to the check matching the model and the terms."""
    cfg = _check_config(bench, args)
    if not bench.is_lambda:
        return check_any(bench.model, left, right, cfg)
    if args.coalgebraic:
        return coalg_bisim(left, right, bench.model, cfg, cfg.arguments, args.settings["renaming_budget"])
    return app_bisim_open(left, right, bench.model, cfg, cfg.arguments, args.settings["closing_limit"])


def cmd_bisim(args):
    """Bounded bisimilarity of two terms; exit 3 when they are distinguished."""
    bench = open_workbench(args.spec, args.settings["asset_dir"])
    if args.replay:
        return cmd_replay(bench, args)
    if args.left is None or args.right is None:
        raise WorkbenchError("bisim needs two terms")
    left, right = bench.parse(args.left), bench.parse(args.right)
    if bench.is_lambda:
        left, right = _common_context(left, right, args.open_context)
    verdict = run_bisim(bench, left, right, args)
    document = verdict.to_document(bench.model.render)
    document.update({"spec": bench.name, "left": bench.model.render(left), "right": bench.model.render(right)})
    if args.coalgebraic and bench.is_lambda:
        document["coalgebraic"] = True
    _emit(args, document, f"{banner(f'Bisimilarity under {bench.name}')}\n"
                          f"{args.left}  vs  {args.right}\n{verdict.describe(bench.model.render)}")
    return EXIT_DISTINGUISHED if verdict.distinguished else EXIT_OK


def cmd_replay(bench, args):
    """Re-execute the witness of a verdict document written by ``bisim --format machine``."""
    document = read_document(args.replay)
    left, right = bench.parse(document["left"]), bench.parse(document["right"])
    verdict = Verdict.from_document(document, bench.parse, bench.nondeterministic)
    ok = replay(bench.model, left, right, verdict)
    text = "✅ witness replays" if ok else "❌ witness does not replay"
    _emit(args, {"replayed": ok, "spec": bench.name}, text)
    return EXIT_OK if ok else EXIT_INPUT


def cmd_congruence(args):
    """Check a pair inside seeded contexts; exit 0 iff no context separates it."""
    bench = open_workbench(args.spec, args.settings["asset_dir"])
    left, right = bench.parse(args.left), bench.parse(args.right)
    cfg = _check_config(bench, args)
    n_contexts = args.contexts if args.contexts is not None else args.settings["n_contexts"]
    ctx_size = args.ctx_size if args.ctx_size is not None else args.settings["ctx_size"]
    try:
        report = congruence_search(bench.model, left, right, n_contexts, ctx_size, cfg, args.seed)
    except CongruenceRefusedError as exc:
        logger.error("❌ %s", exc)
        document = {"refused": True, "verdict": exc.verdict.to_document(bench.model.render)}
        _emit(args, document, exc.verdict.describe(bench.model.render))
        return EXIT_DISTINGUISHED
    document = report.to_document(bench.model.render)
    lines = [banner(f"Congruence search under {bench.name}"),
             f"{len(report.anomalies)} anomal{'y' if len(report.anomalies) == 1 else 'ies'} "
             f"in {report.contexts_tried} context(s), seed {report.seed}"]
    frame = report.frame(lambda t: bench.render(t, text=True))
    if not frame.empty:
        lines.append(frame.to_string(index=False))
    _emit(args, document, "\n".join(lines))
    return EXIT_OK if report.clean else EXIT_DISTINGUISHED


def cmd_enumerate(args):
    """List closed terms (or terms in a lambda context) up to a size."""
    bench = open_workbench(args.spec, args.settings["asset_dir"])
    if bench.is_lambda:
        terms = enumerate_lambda(args.context, args.max_size)
        sizes = [t.size for t in terms]
    else:
        terms = enumerate_closed(bench.model.sig, args.max_size)
        sizes = [term_size(t) for t in terms]
    frame = pd.DataFrame({"size": sizes, "term": [bench.render(t, text=True) for t in terms]})
    document = {"spec": bench.name, "max_size": args.max_size, "count": len(terms),
                "terms": [bench.model.render(t) for t in terms]}
    counts = frame.groupby("size").size().to_string() if not frame.empty else "(none)"
    text = f"{banner(f'Terms of {bench.name} up to size {args.max_size}')}\n" \
           f"{frame.to_string(index=False) if not frame.empty else ''}\n\ncount by size:\n{counts}"
    _emit(args, document, text)
    return EXIT_OK


COMMANDS = {
    "check-spec": cmd_check_spec,
    "run": cmd_run,
    "bisim": cmd_bisim,
    "congruence": cmd_congruence,
    "enumerate": cmd_enumerate,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _non_negative(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _global_options(parser, config, suppress):
    default = (lambda value: argparse.SUPPRESS) if suppress else (lambda value: value)
    parser.add_argument("--format", choices=("text", "machine"), default=default(config["format"]),
                        help="text report or one JSON document on stdout")
    parser.add_argument("--seed", type=_non_negative, default=default(config["seed"]),
                        help="seed of every random choice")
    parser.add_argument("-v", "--verbose", action="store_true", default=default(False),
                        help="debug logging on stderr")


def build_parser(config):
    """
    Build the argument parser; configuration values are the defaults.

    Global options are accepted before or after the command name.
    """
    parser = argparse.ArgumentParser(prog="ho_workbench",
                                     description="HO structural operational semantics workbench")
    parser.add_argument("--config", help="configuration file (default: config/workbench_config.json)")
    _global_options(parser, config, suppress=False)
    shared = argparse.ArgumentParser(add_help=False)
    _global_options(shared, config, suppress=True)

    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("check-spec", parents=[shared], help="validate a specification file")
    p.add_argument("spec", help="path to a .hos file or a builtin name")
    p.add_argument("--strict", action="store_true", help="also print the strict form")

    p = commands.add_parser("run", parents=[shared], help="trace a term")
    p.add_argument("spec", help=f"path to a .hos file or one of {', '.join(BUILTINS)}")
    p.add_argument("term")
    p.add_argument("--steps", type=_non_negative, default=None, help="maximum number of events")
    p.add_argument("--records", action="store_true", help="machine format: one JSON record per event")

    p = commands.add_parser("bisim", parents=[shared], help="bounded bisimilarity check")
    p.add_argument("spec")
    p.add_argument("left", nargs="?")
    p.add_argument("right", nargs="?")
    _check_options(p)
    p.add_argument("--coalgebraic", action="store_true",
                   help="lambda calculi: check the coalgebraic clauses on open terms")
    p.add_argument("--open-context", type=_non_negative, default=None, metavar="N",
                   help="lambda calculi: read both terms in a context of N free variables")
    p.add_argument("--replay", metavar="FILE", help=argparse.SUPPRESS)

    p = commands.add_parser("congruence", parents=[shared], help="check a pair in random contexts")
    p.add_argument("spec")
    p.add_argument("left")
    p.add_argument("right")
    _check_options(p)
    p.add_argument("--contexts", type=_positive, default=None, help="number of contexts")
    p.add_argument("--ctx-size", type=_positive, default=None, help="maximum context size")

    p = commands.add_parser("enumerate", parents=[shared], help="list terms up to a size")
    p.add_argument("spec")
    p.add_argument("--max-size", type=_positive, default=3)
    p.add_argument("--context", type=_non_negative, default=0, help="lambda calculi: free variables")
    return parser


def _check_options(p):
    p.add_argument("--depth", type=_positive, default=None, help="maximum number of moves")
    p.add_argument("--pool-size", type=_positive, default=None,
                   help="arguments are all closed terms up to this size")
    p.add_argument("--include-omega", action="store_true", help="lambda calculi: add OMEGA to the pool")
    p.add_argument("--extra", action="append", default=[], metavar="ARG",
                   help="additional argument term (repeatable)")


def _exit_code(exc):
    if isinstance(exc, SpecError):
        return EXIT_SPEC
    return EXIT_INPUT


def main(argv=None):
    """
    Run one workbench command.

    Parameters:
    -----------
    argv : list of str, optional
        Arguments without the program name; defaults to ``sys.argv[1:]``

    Returns:
    --------
    int
        The exit code
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    setup_logging()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        config = load_workbench_config(known.config)
    except WorkbenchError as exc:
        logger.error("❌ %s", exc)
        return EXIT_INPUT
    args = build_parser(config).parse_args(argv)
    args.settings = config
    setup_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except (WorkbenchError, OSError, KeyError, ValueError) as exc:
        logger.error("❌ %s", exc)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
