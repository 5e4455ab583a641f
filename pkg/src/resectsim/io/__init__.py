"""Volume, configuration and manifest I/O."""

from resectsim.io.config import SimulationConfig, load_config, parse_scheme_toml
from resectsim.io.manifest import Manifest, ManifestRow, load_manifest
from resectsim.io.nifti import read_labels, read_scalar, read_volume, write_volume

__all__ = [
    "Manifest", "ManifestRow", "SimulationConfig", "load_config",
    "load_manifest", "parse_scheme_toml", "read_labels", "read_scalar",
    "read_volume", "write_volume",
]
