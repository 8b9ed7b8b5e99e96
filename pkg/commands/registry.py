"""
Command registry with auto-discovery.

Discovers CLI commands from modules in this package.

Each command file should export:
- COMMAND_CONFIG: dict with name, description, params
- A function with the same name as COMMAND_CONFIG["name"], taking the
  params as keyword arguments and returning an exit code
"""

import argparse
import importlib
import logging
import pkgutil
from pathlib import Path
from typing import Callable

from config.constants import EXIT_INPUT_ERROR

logger = logging.getLogger(__name__)

_SKIP_MODULES = {"registry"}

_TYPES = {"string": str, "float": float, "integer": int}


def _discover_commands() -> dict[str, dict]:
    """
    Discover commands from sibling modules.

    Returns:
        Dict mapping command_name -> {config, func}.
    """
    commands = {}
    package_path = Path(__file__).parent

    for _, module_name, _ in pkgutil.iter_modules([str(package_path)]):
        if module_name.startswith("_") or module_name in _SKIP_MODULES:
            continue

        try:
            module = importlib.import_module(f"commands.{module_name}")
        except ImportError as e:
            logger.error(f"[REGISTRY] Error loading commands/{module_name}: {e}")
            continue

        if not hasattr(module, "COMMAND_CONFIG"):
            continue
        config = module.COMMAND_CONFIG
        command_name = config["name"]

        if hasattr(module, command_name):
            commands[command_name] = {"config": config, "func": getattr(module, command_name)}
            logger.debug(f"[REGISTRY] Discovered {command_name}")
        else:
            logger.warning(f"[REGISTRY] {module_name} has COMMAND_CONFIG but no function '{command_name}'")

    return dict(sorted(commands.items()))


ALL_COMMANDS = _discover_commands()


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the input-error code."""

    def error(self, message: str):
        self.print_usage()
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


def _add_param(parser: argparse.ArgumentParser, pname: str, pinfo: dict) -> None:
    ptype = pinfo.get("type", "string")
    kwargs = {"help": pinfo.get("description", "")}

    if pinfo.get("positional", False):
        parser.add_argument(pname, type=_TYPES[ptype], **kwargs)
        return

    flag = "--" + pname.replace("_", "-")
    if ptype == "boolean":
        parser.add_argument(flag, dest=pname, action="store_true", **kwargs)
        return

    parser.add_argument(
        flag,
        dest=pname,
        type=_TYPES[ptype],
        required=pinfo.get("required", False),
        default=pinfo.get("default"),
        **kwargs
    )


def get_commands_description() -> str:
    """Listing of the available commands and their params, shown after --help."""
    lines = []

    for i, (name, command) in enumerate(ALL_COMMANDS.items(), 1):
        config = command["config"]
        lines.append(f"{i}. {name} - {config['description']}")

        params = config.get("params", {})
        for pname, pinfo in params.items():
            ptype = pinfo.get("type", "string")
            req_marker = " [REQUIRED]" if pinfo.get("required") or pinfo.get("positional") else ""
            lines.append(f"   - {pname} ({ptype}){req_marker}: {pinfo.get('description', '')}")

    return "\n".join(lines)


def build_parser() -> CommandParser:
    """Top-level parser with one subcommand per discovered command."""
    parser = CommandParser(
        prog="ctrl-radius",
        description="Structured real radius of controllability for descriptor and higher-order systems.",
        epilog="commands:\n" + get_commands_description(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CommandParser)

    for name, command in ALL_COMMANDS.items():
        config = command["config"]
        cmd_parser = sub.add_parser(name, help=config["description"], description=config["description"])
        for pname, pinfo in config.get("params", {}).items():
            _add_param(cmd_parser, pname, pinfo)

    return parser


def get_command_func(name: str) -> Callable | None:
    """Get a command function by name."""
    if name in ALL_COMMANDS:
        return ALL_COMMANDS[name]["func"]
    return None
