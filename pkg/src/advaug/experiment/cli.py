"""``advaug`` command line.

    advaug gen-data --out corpus.bin [--config CFG] [--seed N]
    advaug train    --recipe advex --epsilon 0.3 --seed 0,1,2 --out runs/advex
    advaug distill  --alpha 0.5 --out runs/ts
    advaug sweep    --epsilon 0.05,0.1,0.2,0.3,0.5,0.8 --out runs/sweep
    advaug eval     --out runs/advex --split dev

Without ``--config`` the bundled reference config is used. ``--corpus``
points at a file written by ``gen-data``; otherwise the corpus is generated
in memory from the config. For ``gen-data``, ``--seed`` sets the corpus seed.

Exit status: 0 on success, 1 for configuration errors, 2 for runtime or
numeric errors (missing files, corrupt inputs, non-finite values).
"""

from __future__ import annotations

import argparse
import sys

from ..container import FormatError
from ..corpus import CorpusError
from ..numerics import NonFiniteError
from .config import REFERENCE, ConfigError, load_config
from .runner import cmd_distill, cmd_eval, cmd_gen_data, cmd_sweep, cmd_train

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="advaug", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("gen-data", "train", "eval", "sweep", "distill"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file (default: bundled reference config)")
        p.add_argument("--out", help="output directory (output file for gen-data)")
        p.add_argument("--seed", type=_int_list, help="comma-separated seeds")
        p.add_argument("--corpus", help="corpus file from gen-data")
        if name != "gen-data":
            p.add_argument("--recipe", help="baseline, advex, random, ts, ts-advex or ts-random")
            p.add_argument("--epsilon", type=_float_list, help="perturbation weight(s); a list for sweep")
            p.add_argument("--alpha", type=float, help="teacher-student hard-label weight")
            p.add_argument("--teacher", help="teacher checkpoint for the ts recipes")
        if name == "eval":
            p.add_argument("--split", default="test", choices=("dev", "test"))
    return parser


def _overrides(args) -> dict:
    ov = {}
    if args.out:
        ov["out"] = args.out
    if args.corpus:
        ov["corpus_file"] = args.corpus
    if args.seed is not None:
        if args.command == "gen-data":
            if len(args.seed) != 1:
                raise ConfigError("gen-data takes a single --seed")
        else:
            ov["seeds"] = args.seed
    if getattr(args, "recipe", None):
        ov["recipe"] = args.recipe
    if getattr(args, "alpha", None) is not None:
        ov["ts"] = {"alpha": args.alpha}
    if getattr(args, "teacher", None):
        ov["teacher_checkpoint"] = args.teacher
    eps = getattr(args, "epsilon", None)
    if eps is not None:
        if args.command == "sweep":
            ov["sweep_epsilons"] = eps
        elif len(eps) != 1:
            raise ConfigError("--epsilon takes a single value outside sweep")
        else:
            ov["epsilon"] = eps[0]
    return ov


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ov = _overrides(args)
        cfg = load_config(args.config or REFERENCE, ov)
        if args.command == "gen-data" and args.seed is not None:
            cfg["corpus"]["seed"] = args.seed[0]
            cfg = load_config(None, {k: v for k, v in cfg.items() if k != "format"})
        if args.command == "gen-data":
            path = cmd_gen_data(cfg)
        elif args.command == "train":
            path = cmd_train(cfg)
        elif args.command == "distill":
            path = cmd_distill(cfg)
        elif args.command == "sweep":
            path = cmd_sweep(cfg)
        else:
            path = cmd_eval(cfg, split=args.split)
    except ConfigError as exc:
        print(f"advaug: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, FormatError, CorpusError, NonFiniteError, FloatingPointError) as exc:
        print(f"advaug: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
