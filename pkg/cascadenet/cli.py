"""
cascadenet CLI entrypoint.

Exposes `cascadenet <command>`; `manage.py` forwards here as well.
Commands are discovered from `cascadenet.commands`.

Exit codes: 0 success, 1 verification or internal invariant failure,
2 invalid input or configuration.
"""
from __future__ import annotations

import asyncio
import importlib
import pkgutil
import sys
from typing import Any, Dict, List, Optional

from cascadenet.exceptions import ImproperlyConfigured, InvariantError, ValidationError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _discover_commands_from(prefix: str) -> Dict[str, Any]:
    commands: Dict[str, Any] = {}
    pkg = importlib.import_module(f"{prefix}.commands")
    for _, name, ispkg in pkgutil.iter_modules(pkg.__path__):
        if ispkg or name == 'base':
            continue
        module = importlib.import_module(f"{prefix}.commands.{name}")
        if hasattr(module, 'Command'):
            commands[name] = module.Command()
    return commands


def discover_commands() -> Dict[str, Any]:
    """Discover the built-in commands."""
    return _discover_commands_from("cascadenet")


def _print_commands(commands: Dict[str, Any]) -> None:
    print("Available commands:")
    for name in sorted(commands):
        help_text = getattr(commands[name], 'help', 'No description available')
        print(f"  {name:<15} {help_text}")
    print("\nUse 'cascadenet <command> --help' for detailed usage")


async def _dispatch(command: Any, name: str, args: List[str]) -> int:
    handle = getattr(command, 'handle', None)
    if handle is None or not asyncio.iscoroutinefunction(handle):
        raise RuntimeError(f"Command {name} handle() must be async")
    try:
        result = await handle(args)
        return result if isinstance(result, int) else EXIT_OK
    except (ValidationError, ImproperlyConfigured) as e:
        print(f"Error: {e.message}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as e:
        print(f"Internal invariant failed: {e.message}", file=sys.stderr)
        return EXIT_FAILURE
    except KeyboardInterrupt:
        print("\nOperation cancelled by user.", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        print(f"\nAn error occurred while running command '{name}': {e}", file=sys.stderr)
        return EXIT_FAILURE
    finally:
        sys.stdout.flush()
        sys.stderr.flush()


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    commands = discover_commands()

    if not argv or argv[0] in ("--help", "-h"):
        _print_commands(commands)
        return EXIT_OK

    name, args = argv[0], argv[1:]
    if name not in commands:
        print(f"Unknown command: {name}", file=sys.stderr)
        print("Available commands:", ", ".join(sorted(commands)), file=sys.stderr)
        return EXIT_USAGE

    return asyncio.run(_dispatch(commands[name], name, args))


if __name__ == "__main__":
    sys.exit(main())
