"""
Base command class for cascadenet CLI commands.

Commands receive the raw argument list in ``handle(args)``; flags are
parsed by ``parse_flags`` and merged with an optional config file into a
``RunConfig``. The numerical work runs in an executor so ``handle`` stays
a coroutine.
"""
from __future__ import annotations

import asyncio
import csv
import io
import logging
import os
import sys
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from cascadenet.conf import RunConfig, settings
from cascadenet.cpwl import CPwL, hat, special_hat
from cascadenet.exceptions import ImproperlyConfigured
from cascadenet.masks import Mask

LOG_FORMAT = '%(levelname)s %(name)s: %(message)s'
LOG_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG}

# flag -> (RunConfig field, converter)
VALUE_FLAGS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    '--mask': ('mask', str),
    '--seed': ('seed', str),
    '--n': ('n', int),
    '--nmax': ('nmax', int),
    '--grid-step': ('grid_step', float),
    '--tol': ('tol', float),
    '--out': ('out', str),
    '--net': ('net', str),
    '--ref-extra': ('ref_extra', int),
}
BOOL_FLAGS: Dict[str, str] = {
    '--tight-M': 'tight_m',
    '--depth-heavy': 'depth_heavy',
}


def configure_logging(verbosity: int) -> None:
    level = LOG_LEVELS.get(max(0, min(int(verbosity), 2)))
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def load_seed(spec: str, N: int) -> Tuple[CPwL, str]:
    """Builtin seed name or CPwL JSON path -> (seed, label)."""
    if spec == 'H':
        return special_hat(0.125), 'H'
    if spec == 'hat':
        return hat(0.0, 2.0), 'hat'
    if spec == 'hatN':
        return hat(0.0, float(N)), 'hatN'
    return CPwL.load(spec), os.path.basename(spec)


def output_stem(path: str) -> str:
    return os.path.splitext(path)[0]


class BaseCommand:
    """
    Base class for all cascadenet commands.
    """

    help = "A cascadenet command."
    usage = ""

    def parse_flags(self, args: List[str]
                    ) -> Tuple[Dict[str, Any], Dict[str, Optional[str]], int]:
        """Parse ``args`` into RunConfig field values, file paths and a verbosity.

        The paths dict holds ``config`` (run parameters) and ``settings``
        (library settings overlay).
        """
        flags: Dict[str, Any] = {}
        paths: Dict[str, Optional[str]] = {'config': None, 'settings': None}
        verbosity = 0
        i = 0
        while i < len(args):
            arg = args[i]
            if arg in VALUE_FLAGS or arg in ('--config', '--settings', '-v', '--verbosity'):
                if i + 1 >= len(args):
                    raise ImproperlyConfigured(f"Flag {arg} needs a value.")
                value = args[i + 1]
                if arg in ('--config', '--settings'):
                    paths[arg[2:]] = value
                elif arg in ('-v', '--verbosity'):
                    verbosity = self._convert(arg, value, int)
                else:
                    name, convert = VALUE_FLAGS[arg]
                    flags[name] = self._convert(arg, value, convert)
                i += 2
                continue
            if arg in BOOL_FLAGS:
                flags[BOOL_FLAGS[arg]] = True
            else:
                raise ImproperlyConfigured(f"Unknown argument '{arg}'.")
            i += 1
        return flags, paths, verbosity

    @staticmethod
    def _convert(flag: str, value: str, convert: Callable[[str], Any]) -> Any:
        try:
            return convert(value)
        except ValueError:
            raise ImproperlyConfigured(f"Invalid value '{value}' for {flag}.")

    def resolve(self, command: str, args: List[str]) -> RunConfig:
        flags, paths, verbosity = self.parse_flags(args)
        configure_logging(verbosity)
        settings.configure(paths['settings'])
        return RunConfig.resolve(command, flags, paths['config'])

    def load_inputs(self, config: RunConfig) -> Tuple[Mask, CPwL, str]:
        mask = Mask.load(config.mask)
        seed, label = load_seed(config.seed, mask.N)
        return mask, seed, label

    async def run_blocking(self, func: Callable[..., Any], *args: Any) -> Any:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, func, *args)

    def wants_help(self, args: List[str]) -> bool:
        if args and args[0] in ('--help', '-h', 'help'):
            self.print_help()
            return True
        return False

    async def handle(self, args: List[str]) -> Optional[int]:
        raise NotImplementedError("Subclasses must implement the handle() method")

    def print_help(self) -> None:
        print(self.help)
        if self.usage:
            print(self.usage)

    def success(self, message: str) -> None:
        print(message)

    def warning(self, message: str) -> None:
        print(f"Warning: {message}", file=sys.stderr)

    def error(self, message: str) -> None:
        print(f"Error: {message}", file=sys.stderr)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()
