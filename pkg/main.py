"""
Structured real radius of controllability - command-line entry point.

Commands are auto-discovered from the commands package:

    python main.py radius problems/example1.json --omega 1e13
    python main.py check problems/example1.json
    python main.py sweep problems/example2.json --param delta --values 1,0.6,0.4
    python main.py benchmark --n 10 --m 2

Reports and tables go to stdout; logs go to stderr.
"""

import logging
import sys

from pydantic import ValidationError

from commands.registry import build_parser, get_command_func
from config.constants import EXIT_INPUT_ERROR
from config.settings import settings
from services.errors import ControllabilityError, InputError
from utils.problem_io import format_validation_error

logger = logging.getLogger(__name__)


def configure_logging(verbose: bool = False) -> None:
    """Log to stderr; --verbose switches to DEBUG."""
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True
    )


def main(argv: list[str] | None = None) -> int:
    """Parse arguments, dispatch to the command, map errors to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INPUT_ERROR

    configure_logging(args.verbose)
    params = {k: v for k, v in vars(args).items() if k not in ("command", "verbose")}
    func = get_command_func(args.command)

    try:
        return func(**params)
    except ValidationError as e:
        print(f"error: invalid input\n{format_validation_error(e)}", file=sys.stderr)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
    except OSError as e:
        print(f"error: cannot read input: {e}", file=sys.stderr)
    except ControllabilityError as e:
        logger.error(f"[CLI] {type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
    return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
