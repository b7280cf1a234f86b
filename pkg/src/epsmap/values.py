"""Domain types for thickness maps: directions, values, events, entries.

A map assigns an EpsilonValue to every boundary element (vertex, edge,
in 3D also triangle).  Values form a total order:

    Zero < Finite(r) < ThickBeyond(t) < Unbounded

with Finite values ordered by radius.  ThickBeyond only appears in
partial maps computed under a threshold and means "the complete value
is Finite(r >= t) or Unbounded".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

__all__ = [
    "Direction",
    "CellClass",
    "matching_class",
    "ValueKind",
    "EpsilonValue",
    "AntipodeanKind",
    "AntipodeanEvent",
    "MapEntry",
    "EpsilonMap",
]


class Direction(str, Enum):
    """Which side of the boundary the growing ball samples.

    POSITIVE measures the material itself, NEGATIVE the complement
    (gaps and holes), BIDIRECTIONAL the pointwise minimum of the two.
    """

    POSITIVE = "positive"
    NEGATIVE = "negative"
    BIDIRECTIONAL = "bidirectional"


class CellClass(str, Enum):
    """Which side of the constrained boundary a cell lies on."""

    INTERIOR = "interior"
    EXTERIOR = "exterior"


def matching_class(direction: Direction) -> CellClass:
    """The cell class a directional analysis grows through."""
    if direction == Direction.POSITIVE:
        return CellClass.INTERIOR
    if direction == Direction.NEGATIVE:
        return CellClass.EXTERIOR
    raise ValueError(f"no single growth class for direction {direction}")


class ValueKind(IntEnum):
    ZERO = 0
    FINITE = 1
    THICK_BEYOND = 2
    UNBOUNDED = 3


@dataclass(frozen=True)
class EpsilonValue:
    """One thickness value; ``radius`` is meaningful for FINITE (the
    contact distance) and THICK_BEYOND (the threshold)."""

    kind: ValueKind
    radius: float = 0.0

    @staticmethod
    def zero() -> "EpsilonValue":
        return EpsilonValue(ValueKind.ZERO)

    @staticmethod
    def finite(radius: float) -> "EpsilonValue":
        if not radius > 0.0:
            raise ValueError(f"finite thickness must be positive, got {radius}")
        return EpsilonValue(ValueKind.FINITE, radius)

    @staticmethod
    def thick_beyond(threshold: float) -> "EpsilonValue":
        if not threshold > 0.0:
            raise ValueError(f"threshold must be positive, got {threshold}")
        return EpsilonValue(ValueKind.THICK_BEYOND, threshold)

    @staticmethod
    def unbounded() -> "EpsilonValue":
        return EpsilonValue(ValueKind.UNBOUNDED)

    def sort_key(self) -> tuple[int, float]:
        return (int(self.kind), self.radius)

    def __lt__(self, other: "EpsilonValue") -> bool:
        return self.sort_key() < other.sort_key()

    def __le__(self, other: "EpsilonValue") -> bool:
        return self.sort_key() <= other.sort_key()

    def is_finite(self) -> bool:
        return self.kind == ValueKind.FINITE

    def as_number(self) -> float:
        """Scalar for reports and colouring: -1 encodes Unbounded."""
        if self.kind == ValueKind.ZERO:
            return 0.0
        if self.kind == ValueKind.UNBOUNDED:
            return -1.0
        return self.radius

    def __str__(self) -> str:
        if self.kind == ValueKind.FINITE:
            return f"Finite({self.radius:.12g})"
        if self.kind == ValueKind.THICK_BEYOND:
            return f"ThickBeyond({self.radius:.12g})"
        return self.kind.name.title().replace("_", "")


class AntipodeanKind(str, Enum):
    """How the growing ball first stopped being neutral.

    EDGE_MIDDLE: tangency in the interior of a facing edge (in 3D an
    interior edge contact whose two incident surface triangles agree).
    VERTEX_BOTH_INTERNAL / VERTEX_BOTH_EXTERNAL: contact at a vertex
    whose incident constrained elements are all covered / all uncovered
    at the contact radius.
    ORTHOGONAL_FOOT: perpendicular contact in the interior of an
    element (3D face interiors; orthogonal terminations of moving-
    centre analyses).
    SWITCH_COUNT: 3D vertex contact whose incident fan alternates
    covered/uncovered 2n times around the vertex.
    """

    EDGE_MIDDLE = "edge_middle"
    VERTEX_BOTH_INTERNAL = "vertex_both_internal"
    VERTEX_BOTH_EXTERNAL = "vertex_both_external"
    ORTHOGONAL_FOOT = "orthogonal_foot"
    SWITCH_COUNT = "switch_count"


@dataclass(frozen=True)
class AntipodeanEvent:
    """The breaking contact: where the ball met the far boundary."""

    kind: AntipodeanKind
    contact: tuple[float, ...]
    center: tuple[float, ...]
    host_kind: str = "vertex"  # vertex | edge | triangle
    host_id: int = -1
    switches: int = 0

    def __post_init__(self) -> None:
        if self.kind == AntipodeanKind.SWITCH_COUNT:
            if self.switches < 4 or self.switches % 2 != 0:
                raise ValueError("switch count events carry an even count >= 4")


@dataclass
class MapEntry:
    """Value attached to one boundary element, with its witness event."""

    value: EpsilonValue
    event: AntipodeanEvent | None = None
    source: str = ""  # vertex_analysis | edge_analysis | triangle_analysis | acute_zero | materialized

    def copy(self) -> "MapEntry":
        return MapEntry(self.value, self.event, self.source)


@dataclass
class EpsilonMap:
    """Thickness values per boundary element of one complex.

    ``threshold`` is None for complete maps.  For bidirectional maps
    the per-direction components are kept alongside the minimum.
    """

    direction: Direction
    threshold: float | None = None
    vertices: dict[int, MapEntry] = field(default_factory=dict)
    edges: dict[int, MapEntry] = field(default_factory=dict)
    triangles: dict[int, MapEntry] = field(default_factory=dict)
    positive: "EpsilonMap | None" = None
    negative: "EpsilonMap | None" = None
    diagnostics: list[str] = field(default_factory=list)

    def all_entries(self):
        yield from self.vertices.values()
        yield from self.edges.values()
        yield from self.triangles.values()

    def min_finite(self) -> float | None:
        values = [e.value.radius for e in self.all_entries() if e.value.is_finite()]
        return min(values) if values else None

    def min_value(self) -> EpsilonValue | None:
        entries = list(self.all_entries())
        if not entries:
            return None
        return min((e.value for e in entries), key=EpsilonValue.sort_key)

    def kind_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for e in self.all_entries():
            name = e.value.kind.name.lower()
            counts[name] = counts.get(name, 0) + 1
        return counts
