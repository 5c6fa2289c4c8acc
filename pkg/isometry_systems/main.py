import argparse
import logging
import sys

from pydantic import ValidationError

from isometry_systems.cli.handlers import (
    EXIT_ERROR,
    handle_diagonal,
    handle_gamma,
    handle_iet,
    handle_index,
    handle_induct,
    handle_minimality,
    handle_rips,
    handle_split,
    handle_turns,
    handle_validate,
    handle_whitehead,
)
from isometry_systems.core.errors import IsometryError, UsageError
from isometry_systems.core.schemas import Budgets, Depths, RunConfig

logging.basicConfig(
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

HANDLERS = {
    "validate": handle_validate,
    "gamma": handle_gamma,
    "rips": handle_rips,
    "split": handle_split,
    "induct": handle_induct,
    "turns": handle_turns,
    "whitehead": handle_whitehead,
    "minimality": handle_minimality,
    "diagonal": handle_diagonal,
    "index": handle_index,
    "iet": handle_iet,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _field(text: str) -> int:
    if text == "rational":
        return 0
    if text.startswith("quad:") and text[5:].isdigit():
        return int(text[5:])
    raise argparse.ArgumentTypeError(f"expected 'rational' or 'quad:<d>', got '{text}'")


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("document", help="system document (or IET document for 'iet')")
    common.add_argument("--depth-n", dest="depth_n", type=int)
    common.add_argument("--legality-L", "--depth", dest="legality_L", type=int)
    common.add_argument("--recurrence-R", dest="recurrence_R", type=int)
    common.add_argument("--radius-r", dest="radius_r", type=int)
    common.add_argument("--max-steps", dest="max_steps", type=int)
    common.add_argument("--max-words", dest="max_words", type=int)
    common.add_argument("--field", type=_field)
    common.add_argument("--out", default=".")
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--quiet", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isometry-systems", description="Systems of isometries on finite forests.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()
    for name in ("validate", "gamma", "turns", "whitehead", "minimality"):
        sub.add_parser(name, parents=[common])
    sub.add_parser("rips", parents=[common]).add_argument("--run", action="store_true")
    sub.add_parser("split", parents=[common]).add_argument("--apply", action="store_true")
    sub.add_parser("induct", parents=[common]).add_argument("--policy", choices=["all", "rauzy"], default="all")
    sub.add_parser("diagonal", parents=[common]).add_argument("--point", required=True)
    index = sub.add_parser("index", parents=[common])
    index.add_argument("--points", nargs="*", default=[])
    index.add_argument("--rank", type=int)
    iet = sub.add_parser("iet").add_subparsers(dest="iet_command", required=True, parser_class=_Parser)
    iet.add_parser("import", parents=[common])
    iet.add_parser("rauzy", parents=[common]).add_argument("--k", type=int, default=10)
    compare = iet.add_parser("compare", parents=[common])
    compare.add_argument("--k", type=int, default=10)
    compare.add_argument("--policy", choices=["all", "rauzy"], default="all")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    budgets = {key: getattr(args, key) for key in ("max_steps", "max_words") if getattr(args, key) is not None}
    depth_map = {"depth_n": "language_n", "legality_L": "legality_L", "recurrence_R": "recurrence_R", "radius_r": "radius_r"}
    depths = {field: getattr(args, flag) for flag, field in depth_map.items() if getattr(args, flag) is not None}
    return RunConfig(budgets=Budgets(**budgets), depths=Depths(**depths), out=args.out)


def run_command(argv: list[str]) -> int:
    """Runs one subcommand; 0 on success, 1 on a negative verdict, 2 when it could not run."""
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.DEBUG)
        elif args.quiet:
            logging.getLogger().setLevel(logging.WARNING)
        config = _config(args)
        return HANDLERS[args.command](args, config)
    except SystemExit as e:
        # --help exits through argparse
        return e.code if isinstance(e.code, int) else EXIT_ERROR
    except (IsometryError, ValidationError, ValueError, OSError) as e:
        logger.error(f"Could not run: {e}")
        return EXIT_ERROR
    except Exception as e:
        logger.error(f"Unexpected failure: {e}", exc_info=True)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
