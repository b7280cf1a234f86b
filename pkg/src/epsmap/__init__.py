"""Thickness maps on polygons and triangle meshes.

The package grows neutral disks/balls from every boundary element of a
constrained simplicial complex, records the first contact that breaks
neutrality (the antipodean event), and derives per-element thickness
values in the material direction, the complement direction, or both.
A thickening driver displaces thin regions until a requested thickness
is met, and an independent oracle verifies values by brute force.
"""

from .geom import TolerancePolicy
from .values import (
    AntipodeanEvent,
    AntipodeanKind,
    Direction,
    EpsilonMap,
    EpsilonValue,
    MapEntry,
    ValueKind,
)

__all__ = [
    "TolerancePolicy",
    "Direction",
    "ValueKind",
    "EpsilonValue",
    "AntipodeanKind",
    "AntipodeanEvent",
    "MapEntry",
    "EpsilonMap",
]

__version__ = "0.1.0"
