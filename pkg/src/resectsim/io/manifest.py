"""Batch manifest: a CSV of subjects with image and parcellation paths."""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from resectsim.errors import InputDataError

__all__ = ["Manifest", "ManifestRow", "load_manifest"]

_REQUIRED = ("subject_id", "image", "parcellation")


@dataclass(frozen=True)
class ManifestRow:
    subject_id: str
    image: Path
    parcellation: Path
    seed: Optional[int] = None


@dataclass(frozen=True)
class Manifest:
    rows: tuple[ManifestRow, ...]

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def load_manifest(path) -> Manifest:
    """Load and validate a manifest CSV.

    Columns: subject_id,image,parcellation[,seed].  Relative paths are
    resolved against the manifest's directory; referenced files must exist.
    """
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"manifest {path} does not exist")
    base = path.parent
    rows = []
    seen = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fieldnames = reader.fieldnames or []
        missing = [c for c in _REQUIRED if c not in fieldnames]
        if missing:
            raise InputDataError(
                f"manifest is missing columns: {', '.join(missing)}")
        unknown = [c for c in fieldnames if c not in _REQUIRED + ("seed",)]
        if unknown:
            raise InputDataError(
                f"manifest has unknown columns: {', '.join(unknown)}")
        for line_no, record in enumerate(reader, start=2):
            subject = (record["subject_id"] or "").strip()
            if not subject:
                raise InputDataError(f"manifest row {line_no}: empty subject_id")
            if subject in seen:
                raise InputDataError(
                    f"manifest row {line_no}: duplicate subject_id "
                    f"{subject!r} (first seen at row {seen[subject]})")
            seen[subject] = line_no
            paths = {}
            for column in ("image", "parcellation"):
                value = (record[column] or "").strip()
                if not value:
                    raise InputDataError(
                        f"manifest row {line_no}: missing {column} path")
                resolved = (base / value).resolve() if not Path(value).is_absolute() \
                    else Path(value)
                if not resolved.exists():
                    raise InputDataError(
                        f"manifest row {line_no}: {column} file not found: "
                        f"{resolved}")
                paths[column] = resolved
            seed = None
            raw_seed = (record.get("seed") or "").strip()
            if raw_seed:
                try:
                    seed = int(raw_seed)
                except ValueError:
                    raise InputDataError(
                        f"manifest row {line_no}: seed must be an integer, "
                        f"got {raw_seed!r}") from None
            rows.append(ManifestRow(subject, paths["image"],
                                    paths["parcellation"], seed))
    return Manifest(tuple(rows))
