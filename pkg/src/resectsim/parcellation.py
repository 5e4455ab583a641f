"""Anatomical masks derived from a brain parcellation.

A :class:`ParcellationScheme` maps anatomical roles to parcellation label
IDs.  From it we derive the per-hemisphere cortical gray matter mask (seed
candidates), the smoothed "resectable hemisphere" mask that constrains the
cavity, and the ventricle mask used to fit CSF intensity statistics.
"""

from dataclasses import dataclass
from importlib import resources

import numpy as np

from resectsim.errors import ConfigError, InputDataError
from resectsim.volume import BinaryMask, LabelVolume, morphology

__all__ = [
    "ParcellationScheme", "SmoothingRecipe", "gif_scheme",
    "gray_matter_mask", "resectable_mask", "ventricle_mask",
]

ROLES = ("background", "brainstem", "cerebellum", "left_hemisphere",
         "right_hemisphere", "left_cortical_gm", "right_cortical_gm",
         "ventricles")


@dataclass(frozen=True)
class SmoothingRecipe:
    """Morphological smoothing applied to the raw resectable mask:
    binary closing then opening, with a ball structuring element.
    A radius of 0 skips that step."""

    closing_radius: int = 3
    opening_radius: int = 2

    def __post_init__(self):
        for name in ("closing_radius", "opening_radius"):
            value = int(getattr(self, name))
            if value < 0:
                raise ConfigError(f"smoothing.{name} must be >= 0, got {value}")
            object.__setattr__(self, name, value)

    @property
    def reach(self) -> int:
        """Dependency radius: how far a voxel's smoothed value can see."""
        return 2 * self.closing_radius + 2 * self.opening_radius

    def apply(self, mask: BinaryMask) -> BinaryMask:
        out = mask
        if self.closing_radius:
            out = morphology(out, "close", self.closing_radius)
        if self.opening_radius:
            out = morphology(out, "open", self.opening_radius)
        return out


@dataclass(frozen=True)
class ParcellationScheme:
    """Role -> set of parcellation label IDs.

    Role sets must be pairwise disjoint, except that each cortical GM set
    must be a subset of its hemisphere.  Labels listed nowhere (e.g.
    midline CSF) are treated as resectable from either hemisphere.
    """

    background: frozenset[int]
    brainstem: frozenset[int]
    cerebellum: frozenset[int]
    left_hemisphere: frozenset[int]
    right_hemisphere: frozenset[int]
    left_cortical_gm: frozenset[int]
    right_cortical_gm: frozenset[int]
    ventricles: frozenset[int]

    def __post_init__(self):
        for role in ROLES:
            ids = frozenset(int(i) for i in getattr(self, role))
            if any(i < 0 for i in ids):
                raise ConfigError(f"scheme.{role} has negative label IDs")
            object.__setattr__(self, role, ids)
        if not self.left_cortical_gm <= self.left_hemisphere:
            raise ConfigError(
                "scheme.left_cortical_gm must be a subset of left_hemisphere")
        if not self.right_cortical_gm <= self.right_hemisphere:
            raise ConfigError(
                "scheme.right_cortical_gm must be a subset of right_hemisphere")
        disjoint_roles = ("background", "brainstem", "cerebellum",
                          "left_hemisphere", "right_hemisphere", "ventricles")
        for i, a in enumerate(disjoint_roles):
            for b in disjoint_roles[i + 1:]:
                overlap = getattr(self, a) & getattr(self, b)
                if overlap:
                    raise ConfigError(
                        f"scheme roles {a} and {b} overlap on labels "
                        f"{sorted(overlap)}")

    def hemisphere(self, h: str) -> frozenset[int]:
        return self._pick(h, self.left_hemisphere, self.right_hemisphere)

    def cortical_gm(self, h: str) -> frozenset[int]:
        return self._pick(h, self.left_cortical_gm, self.right_cortical_gm)

    @staticmethod
    def _pick(h, left, right):
        if h == "left":
            return left
        if h == "right":
            return right
        raise ValueError(f"hemisphere must be 'left' or 'right', got {h!r}")

    @classmethod
    def from_mapping(cls, mapping) -> "ParcellationScheme":
        unknown = set(mapping) - set(ROLES)
        if unknown:
            raise ConfigError(f"unknown scheme roles: {sorted(unknown)}")
        missing = set(ROLES) - set(mapping)
        if missing:
            raise ConfigError(f"scheme is missing roles: {sorted(missing)}")
        kwargs = {}
        for role in ROLES:
            ids = mapping[role]
            if not isinstance(ids, (list, tuple, set, frozenset)) or \
                    not all(isinstance(i, int) and not isinstance(i, bool)
                            for i in ids):
                raise ConfigError(f"scheme.{role} must be a list of integers")
            kwargs[role] = frozenset(ids)
        return cls(**kwargs)


def gif_scheme() -> ParcellationScheme:
    """Best-effort scheme for GIF (Neuromorphometrics-style) label IDs.

    The mapping ships as a data file and is user-overridable through the
    config; label conventions vary between parcellation versions.
    """
    import resectsim.io.config as config
    text = resources.files("resectsim").joinpath("data/gif_scheme.toml") \
        .read_text()
    return config.parse_scheme_toml(text)


def gray_matter_mask(p: LabelVolume, scheme: ParcellationScheme,
                     h: str) -> BinaryMask:
    """Cortical gray matter of hemisphere ``h`` (cavity seed candidates)."""
    ids = scheme.cortical_gm(h)
    if not ids:
        raise ConfigError(f"scheme has no cortical GM labels for {h!r}")
    return BinaryMask(p.grid, p.label_mask(ids).astype(np.uint8))


def raw_resectable_mask(p: LabelVolume, scheme: ParcellationScheme,
                        h: str) -> BinaryMask:
    """Unsmoothed resectable mask: everything except background, brainstem,
    cerebellum and the contralateral hemisphere."""
    contralateral = "right" if h == "left" else "left"
    excluded = (scheme.background | scheme.brainstem | scheme.cerebellum
                | scheme.hemisphere(contralateral))
    data = ~p.label_mask(excluded)
    return BinaryMask(p.grid, data.astype(np.uint8))


def resectable_mask(p: LabelVolume, scheme: ParcellationScheme, h: str,
                    smoothing: SmoothingRecipe = SmoothingRecipe()
                    ) -> BinaryMask:
    """Smoothed resectable hemisphere mask constraining the cavity label."""
    return smoothing.apply(raw_resectable_mask(p, scheme, h))


def ventricle_mask(p: LabelVolume, scheme: ParcellationScheme) -> BinaryMask:
    """Mask of the ventricles, used to fit the CSF intensity model."""
    mask = BinaryMask(p.grid, p.label_mask(scheme.ventricles).astype(np.uint8))
    if mask.is_empty:
        raise InputDataError(
            "no ventricle voxels - cannot fit CSF statistics")
    return mask
