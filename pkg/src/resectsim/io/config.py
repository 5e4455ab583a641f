"""TOML configuration: simulation parameter ranges and scheme overrides.

Every key is validated; unknown tables or keys are rejected by name, so a
typo cannot silently fall back to a default.
"""

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from resectsim.errors import ConfigError
from resectsim.parcellation import ParcellationScheme
from resectsim.simulate import ResectionParams

__all__ = ["SimulationConfig", "load_config", "parse_scheme_toml"]

# config key -> ResectionParams field, grouped by table
_TABLES = {
    "cavity": {
        "shape": "shape",
        "volume_range": "volume_range",
        "lambda_range": "lambda_range",
        "rotation_range": "rotation_range",
        "icosphere_frequency": "frequency",
        "amplitude": "amplitude",
        "exact_volume": "exact_volume",
    },
    "noise": {
        "octaves": "octaves",
        "persistence": "persistence",
        "zeta_range": "zeta_range",
        "mu_range": "mu_range",
    },
    "texture": {
        "blur_sigma_range": "blur_sigma_range",
    },
    "smoothing": {
        "closing_radius": "closing_radius",
        "opening_radius": "opening_radius",
    },
}


@dataclass(frozen=True)
class SimulationConfig:
    params: ResectionParams
    scheme: Optional[ParcellationScheme] = None


def parse_scheme_toml(text: str) -> ParcellationScheme:
    try:
        mapping = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid scheme file: {exc}") from None
    return ParcellationScheme.from_mapping(mapping)


def parse_config(text: str) -> SimulationConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config: {exc}") from None

    unknown_tables = set(doc) - set(_TABLES) - {"scheme"}
    if unknown_tables:
        raise ConfigError(f"unknown config tables: {sorted(unknown_tables)}")

    kwargs = {}
    for table, keys in _TABLES.items():
        section = doc.get(table, {})
        if not isinstance(section, dict):
            raise ConfigError(f"config table [{table}] must be a table")
        unknown = set(section) - set(keys)
        if unknown:
            raise ConfigError(
                f"unknown keys in [{table}]: {sorted(unknown)}")
        for key, field in keys.items():
            if key in section:
                kwargs[field] = section[key]

    params = ResectionParams(**kwargs)
    scheme = None
    if "scheme" in doc:
        if not isinstance(doc["scheme"], dict):
            raise ConfigError("config table [scheme] must be a table")
        scheme = ParcellationScheme.from_mapping(doc["scheme"])
    return SimulationConfig(params, scheme)


def load_config(path) -> SimulationConfig:
    """Parse a config file into validated parameters (+ scheme override)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config(path.read_text())
