"""Command line entry point: ``nondecomp run | compare | drift``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields

from . import __version__
from .errors import ConfigurationError, ParseError, UsageError
from .harness import ExperimentConfig, compare, drift_study, load_config, run
from .harness import _bool
from .optimizers import TrainingAborted

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_config_flags(p):
    g = p.add_argument_group("config keys (override the TOML file)")
    for f in fields(ExperimentConfig):
        flags = ["--" + f.name.replace("_", "-")]
        if "_" in f.name:
            flags.append("--" + f.name)
        if f.name == "x_axis":
            flags.append("--x")
        kw = {"dest": f.name, "default": argparse.SUPPRESS, "help": f.metadata["help"]}
        if f.metadata["conv"] is _bool:
            kw["action"] = argparse.BooleanOptionalAction
        else:
            kw["metavar"] = f.name.upper()
        g.add_argument(*flags, **kw)


def build_parser():
    parser = _Parser(prog="nondecomp",
                     description="Train networks on non-decomposable measures and log the runs.")
    parser.add_argument("--version", action="version", version=f"nondecomp {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("run", help="train one configuration")
    p.add_argument("--config", help="TOML experiment file")
    _add_config_flags(p)

    p = sub.add_parser("compare", help="train several configurations on one dataset")
    p.add_argument("--config", action="append", default=[], help="TOML file; repeat per run")
    _add_config_flags(p)

    p = sub.add_parser("drift", help="KLD of trained models under test prior drift")
    p.add_argument("--config", action="append", default=[], help="TOML file; repeat per model")
    _add_config_flags(p)
    return parser


def _overrides(ns):
    skip = {"command", "config", "verbose"}
    return {k: v for k, v in vars(ns).items() if k not in skip}


def _configs(ns):
    over = _overrides(ns)
    paths = ns.config if isinstance(ns.config, list) else [ns.config] if ns.config else []
    if not paths:
        return [ExperimentConfig.from_mapping(over)]
    # a shared --out names the parent directory, not each run
    per_run = {k: v for k, v in over.items() if k != "out"} if len(paths) > 1 else over
    return [load_config(path, per_run) for path in paths]


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if ns.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        cfgs = _configs(ns)
        out = _overrides(ns).get("out", cfgs[0].out)
        if ns.command == "run":
            s = run(cfgs[0])
            print(f"{s.algorithm} {s.metric}: train {s.final_train_metric} "
                  f"test {s.final_test_metric} -> {cfgs[0].out}")
        elif ns.command == "compare":
            for s in compare(cfgs, out):
                print(f"{s.algorithm} {s.metric}: test {s.final_test_metric}")
        else:
            for label, klds in drift_study(cfgs, out).items():
                print(label, " ".join(f"{k:.5g}" for k in klds))
    except (UsageError, ConfigurationError, ParseError, OSError) as exc:
        print(f"nondecomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingAborted as exc:
        print(f"nondecomp: aborted: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
