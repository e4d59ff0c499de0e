"""
Settings configuration for cascadenet.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from typing import Any, Dict, Optional

from cascadenet.exceptions import ImproperlyConfigured


DEFAULTS: Dict[str, Any] = {
    # Verification tolerance for compiled networks against the oracle.
    'TOL': 1e-9,
    # Default verification grid step is 2^(-n-GRID_OFFSET).
    'GRID_OFFSET': 6,
    # Extra oracle iterations used as the refinable-function reference.
    'REF_EXTRA': 4,
    # Largest n the exact oracle is asked for at desk scale.
    'MAX_ORACLE_N': 14,
    # Increments below this are treated as floating-point noise by rate fits.
    'FIT_FLOOR': 1e-13,
    # Abscissae closer than this are merged after breakpoint unions.
    'MERGE_TOL': 1e-12,
    # Merged abscissae must agree in value within this tolerance.
    'VALUE_TOL': 1e-9,
    # The n-term demo samples on a grid of step 2^(-NTERM_GRID_EXP).
    'NTERM_GRID_EXP': 12,
}


class Settings:
    """
    Settings object holding library defaults, optionally overlaid from a
    JSON file. Values are reachable as attributes or through ``get``.
    """

    # Required settings that must be defined
    REQUIRED_SETTINGS = ['TOL', 'GRID_OFFSET', 'REF_EXTRA']

    def __init__(self, path: Optional[str] = None, **overrides: Any):
        self.configure(path, **overrides)

    def configure(self, path: Optional[str] = None, **overrides: Any) -> None:
        """Reset to the defaults, then apply a JSON overlay and keyword overrides."""
        self._path = path
        self._settings: Dict[str, Any] = dict(DEFAULTS)
        if path is not None:
            self._settings.update(self._load(path))
        self._settings.update(overrides)
        self._validate_required_settings()

    @staticmethod
    def _load(path: str) -> Dict[str, Any]:
        """Load a settings overlay from a JSON object file."""
        try:
            with open(path, 'r', encoding='utf-8') as fh:
                data = json.load(fh)
        except (OSError, ValueError) as e:
            raise ImproperlyConfigured(f"Could not read settings file '{path}': {e}")
        if not isinstance(data, dict):
            raise ImproperlyConfigured(f"Settings file '{path}' must contain a JSON object.")
        unknown = sorted(k for k in data if k not in DEFAULTS)
        if unknown:
            raise ImproperlyConfigured(f"Unknown settings: {', '.join(unknown)}")
        return data

    def _validate_required_settings(self):
        """Validate that all required settings are present and sane."""
        missing_settings = [
            name for name in self.REQUIRED_SETTINGS
            if self._settings.get(name) is None
        ]
        if missing_settings:
            raise ImproperlyConfigured(
                f"Missing required settings: {', '.join(missing_settings)}."
            )
        if self._settings['TOL'] <= 0:
            raise ImproperlyConfigured("TOL must be positive.")
        if int(self._settings['REF_EXTRA']) < 0:
            raise ImproperlyConfigured("REF_EXTRA must be non-negative.")

    def __getattr__(self, name: str) -> Any:
        """Get a setting value."""
        if name.startswith('_'):
            raise AttributeError(name)
        if name in self._settings:
            return self._settings[name]
        raise AttributeError(f"'{self.__class__.__name__}' object has no attribute '{name}'")

    def get(self, name: str, default: Any = None) -> Any:
        """Get a setting value with a default fallback."""
        try:
            return getattr(self, name)
        except AttributeError:
            return default


@dataclass
class RunConfig:
    """Resolved parameters of one CLI invocation."""

    command: str
    mask: str = 'hat'
    seed: str = 'hat'
    n: int = 1
    nmax: int = 6
    grid_step: Optional[float] = None
    tol: float = DEFAULTS['TOL']
    out: Optional[str] = None
    net: Optional[str] = None
    tight_m: bool = False
    depth_heavy: bool = False
    ref_extra: int = DEFAULTS['REF_EXTRA']

    @classmethod
    def resolve(cls, command: str, flags: Dict[str, Any],
                config_path: Optional[str] = None) -> 'RunConfig':
        """Merge defaults < config JSON < explicit flags, then validate.

        ``flags`` maps field names to parsed flag values; ``None`` means the
        flag was not given on the command line.
        """
        known = {f.name for f in fields(cls)} - {'command'}
        values: Dict[str, Any] = {}
        if config_path is not None:
            data = _read_run_config(config_path)
            unknown = sorted(k for k in data if k not in known)
            if unknown:
                raise ImproperlyConfigured(f"Unknown config keys: {', '.join(unknown)}")
            values.update(data)
        for key, value in flags.items():
            if key in known and value is not None:
                values[key] = value
        values.setdefault('tol', settings.TOL)
        values.setdefault('ref_extra', settings.REF_EXTRA)
        config = cls(command=command, **values)
        config.validate()
        return config

    def validate(self) -> None:
        if self.tol is None or self.tol <= 0:
            raise ImproperlyConfigured("tol must be positive.")
        if self.grid_step is not None and self.grid_step <= 0:
            raise ImproperlyConfigured("grid-step must be positive.")
        if int(self.n) < 1:
            raise ImproperlyConfigured("n must be at least 1.")
        if int(self.nmax) < 1:
            raise ImproperlyConfigured("nmax must be at least 1.")
        if self.out:
            parent = os.path.dirname(os.path.abspath(self.out))
            if not os.path.isdir(parent):
                raise ImproperlyConfigured(f"Output directory does not exist: {parent}")

    def grid_step_for(self, n: int, grid_offset: Optional[int] = None) -> float:
        """The configured grid step, or the default 2^(-n-GRID_OFFSET)."""
        if self.grid_step is not None:
            return float(self.grid_step)
        offset = settings.GRID_OFFSET if grid_offset is None else int(grid_offset)
        return 2.0 ** (-n - offset)


def _read_run_config(path: str) -> Dict[str, Any]:
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            data = json.load(fh)
    except (OSError, ValueError) as e:
        raise ImproperlyConfigured(f"Could not read config file '{path}': {e}")
    if not isinstance(data, dict):
        raise ImproperlyConfigured(f"Config file '{path}' must contain a JSON object.")
    return {key.replace('-', '_'): value for key, value in data.items()}


# Global settings instance
settings = Settings()
