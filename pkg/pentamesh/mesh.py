"""Indexed tetrahedral and pentatope meshes: adjacency, measures and conformity."""

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import factorial
from typing import ClassVar, Literal, Optional

import numpy as np
import pandas as pd
from loguru import logger

from . import GeneralDefinitions
from .general_utils import (
    DegenerateCellError,
    InvalidCellError,
    NonManifoldError,
    sorted_key,
)
from .reports import CheckReport

MEASURE_TOLERANCE = GeneralDefinitions.MEASURE_TOLERANCE


def _read_only(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def simplex_measure(points) -> float:
    """Return the unsigned measure of the simplex spanned by `points` (rows)."""
    points = np.asarray(points, dtype=float)
    dim = points.shape[1]
    return abs(float(np.linalg.det(points[1:] - points[0]))) / factorial(dim)


def _signed_determinants(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    if len(cells) == 0:
        return np.zeros(0)
    corners = vertices[cells]
    return np.linalg.det(corners[:, 1:, :] - corners[:, :1, :])


class SimplexMesh:
    """Indexed mesh of `dim`-simplices.

    Vertices are an (n, dim) float array and cells an (m, dim + 1) int array of vertex
    ids. Both are read-only: meshes are values, and every operation that changes a
    mesh builds a new one.
    """

    dim: ClassVar[int] = 0
    facet_name: ClassVar[str] = "facet"

    def __init__(self, vertices, cells, validate: bool = True):
        """Build the mesh and, unless `validate` is False, check its invariants."""
        self.vertices = _read_only(np.array(vertices, dtype=float).reshape(-1, self.dim))
        self.cells = _read_only(np.array(cells, dtype=np.int64).reshape(-1, self.dim + 1))
        if validate:
            self.validate()

    def validate(self):
        """Check finiteness, id ranges and non-degeneracy of every cell.

        Raises:
            InvalidCellError: If coordinates are not finite or ids are out of range.
            DegenerateCellError: If a cell's measure is below the tolerance. Cells with
                a repeated vertex id fall in this category.
        """
        if not np.all(np.isfinite(self.vertices)):
            bad_vertex = int(np.flatnonzero(~np.isfinite(self.vertices).all(axis=1))[0])
            raise InvalidCellError(f"Vertex {bad_vertex} has non-finite coordinates")
        if self.n_cells == 0:
            return
        out_of_range = (self.cells < 0) | (self.cells >= self.n_vertices)
        if out_of_range.any():
            bad_cell = int(np.flatnonzero(out_of_range.any(axis=1))[0])
            raise InvalidCellError(
                f"Cell {bad_cell} references vertex ids {self.cells[bad_cell].tolist()} "
                + f"outside [0, {self.n_vertices})"
            )
        degenerate = np.flatnonzero(self.measures <= MEASURE_TOLERANCE)
        if degenerate.size:
            cell = int(degenerate[0])
            raise DegenerateCellError(cell, float(self.measures[cell]), MEASURE_TOLERANCE)

    @property
    def n_vertices(self) -> int:
        """Return the number of vertices."""
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        """Return the number of cells."""
        return len(self.cells)

    def __len__(self):
        return self.n_cells

    @cached_property
    def signed_determinants(self) -> np.ndarray:
        """Determinants of the edge matrices of all cells (orientation-carrying)."""
        return _read_only(_signed_determinants(self.vertices, self.cells))

    @cached_property
    def measures(self) -> np.ndarray:
        """Unsigned measures of all cells."""
        return _read_only(np.abs(self.signed_determinants) / factorial(self.dim))

    @property
    def total_measure(self) -> float:
        """Return the sum of all cell measures."""
        return float(self.measures.sum())

    def measure(self, cell: int) -> float:
        """Return the measure of `cell`.

        Raises:
            InvalidCellError: If `cell` is not a valid cell id.
            DegenerateCellError: If the measure is below the degeneracy tolerance.
        """
        if not 0 <= cell < self.n_cells:
            raise InvalidCellError(f"Cell id {cell} outside [0, {self.n_cells})")
        value = simplex_measure(self.vertices[self.cells[cell]])
        if value <= MEASURE_TOLERANCE:
            raise DegenerateCellError(cell, value, MEASURE_TOLERANCE)
        return value

    @cached_property
    def facet_incidence(self) -> dict[tuple[int, ...], list[int]]:
        """Sorted facet key -> incident cells, for every facet, without any checks."""
        incidence: dict[tuple[int, ...], list[int]] = {}
        for cell_id, cell in enumerate(self.cells.tolist()):
            for facet in itertools.combinations(sorted(cell), self.dim):
                incidence.setdefault(facet, []).append(cell_id)
        return dict(sorted(incidence.items()))

    def facet_adjacency(self) -> dict[tuple[int, ...], list[int]]:
        """Return the facet incidence map, checking that the mesh is a manifold.

        Raises:
            NonManifoldError: If a facet is shared by three or more cells.
        """
        for key, cells in self.facet_incidence.items():
            if len(cells) > 2:  # noqa: PLR2004
                raise NonManifoldError(
                    f"{self.facet_name.capitalize()} {key} is shared by "
                    + f"{len(cells)} cells: {cells}"
                )
        return self.facet_incidence

    @property
    def boundary_facets(self) -> list[tuple[int, ...]]:
        """Return the keys of facets with a single incident cell."""
        return [key for key, cells in self.facet_incidence.items() if len(cells) == 1]

    @cached_property
    def edge_incidence(self) -> dict[tuple[int, int], list[int]]:
        """Sorted edge -> incident cells."""
        incidence: dict[tuple[int, int], list[int]] = {}
        for cell_id, cell in enumerate(self.cells.tolist()):
            for edge in itertools.combinations(sorted(cell), 2):
                incidence.setdefault(edge, []).append(cell_id)
        return dict(sorted(incidence.items()))

    @cached_property
    def vertex_cells(self) -> dict[int, list[int]]:
        """Vertex -> incident cells, for vertices used by at least one cell."""
        incidence: dict[int, list[int]] = {}
        for cell_id, cell in enumerate(self.cells.tolist()):
            for vertex in cell:
                incidence.setdefault(vertex, []).append(cell_id)
        return dict(sorted(incidence.items()))

    def _same_extras(self, other) -> bool:  # noqa: ARG002
        return True

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.cells, other.cells)
            and self._same_extras(other)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"{type(self).__name__}(n_vertices={self.n_vertices}, n_cells={self.n_cells})"
        )


class TetMesh(SimplexMesh):
    """Indexed tetrahedral mesh in three space dimensions."""

    dim = 3
    facet_name = "face"

    @property
    def boundary_faces(self) -> list[tuple[int, int, int]]:
        """Return the keys of faces with a single incident tetrahedron."""
        return self.boundary_facets


@dataclass(frozen=True, eq=False)
class CellProvenance:
    """Where every cell of a pentatope mesh comes from.

    Generation-0 cells come straight out of the extrusion: `source_tet`, `slab` and
    `tau` (1..4) say which prism and which of its four pentatopes they are, with
    `parent = -1` and `child_ordinal = 0`. Bisection children inherit `source_tet`,
    `slab` and `tau`; `parent` is the id, in the mesh passed to `refine`, of the cell
    they descend from, and `child_ordinal` is the heap-style path from that cell
    (2/3 for its first/second child, 4..7 for grandchildren and so on).
    """

    source_tet: np.ndarray
    slab: np.ndarray
    tau: np.ndarray
    parent: np.ndarray
    child_ordinal: np.ndarray
    generation: np.ndarray

    COLUMNS: ClassVar[tuple[str, ...]] = (
        "source_tet",
        "slab",
        "tau",
        "parent",
        "child_ordinal",
        "generation",
    )

    def __post_init__(self):
        lengths = set()
        for column in self.COLUMNS:
            values = _read_only(np.array(getattr(self, column), dtype=np.int64).ravel())
            object.__setattr__(self, column, values)
            lengths.add(len(values))
        if len(lengths) > 1:
            raise InvalidCellError(f"Provenance columns have different lengths {lengths}")

    @classmethod
    def unknown(cls, n_cells: int):
        """Provenance for cells that were not produced by the extrusion."""
        minus_ones = np.full(n_cells, -1)
        zeros = np.zeros(n_cells)
        return cls(minus_ones, minus_ones, zeros, minus_ones, zeros, zeros)

    def __len__(self):
        return len(self.source_tet)

    def __eq__(self, other):
        if not isinstance(other, CellProvenance):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, column), getattr(other, column))
            for column in self.COLUMNS
        )

    __hash__ = None

    def row(self, cell: int) -> dict[str, int]:
        """Return the provenance of `cell` as a dict."""
        return {column: int(getattr(self, column)[cell]) for column in self.COLUMNS}

    def to_dataframe(self) -> pd.DataFrame:
        """Return the provenance table, one row per cell."""
        return pd.DataFrame({column: getattr(self, column) for column in self.COLUMNS})


@dataclass(frozen=True, eq=False)
class ExtrusionInfo:
    """How a pentatope mesh was extruded: spatial vertex count, colors and slices."""

    n_spatial_vertices: int
    colors: np.ndarray
    slice_values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "colors", _read_only(np.array(self.colors, dtype=np.int64).ravel())
        )
        slice_values = tuple(float(s) for s in self.slice_values)
        object.__setattr__(self, "slice_values", slice_values)

    def __eq__(self, other):
        if not isinstance(other, ExtrusionInfo):
            return NotImplemented
        return (
            self.n_spatial_vertices == other.n_spatial_vertices
            and np.array_equal(self.colors, other.colors)
            and self.slice_values == other.slice_values
        )

    __hash__ = None


class PentMesh(SimplexMesh):
    """Indexed pentatope mesh in space-time.

    Row `i` of `cells` is the vertex order (x0, ..., x4) of cell `i`'s tag and
    `types[i]` its type. Every cell carries provenance; extruded meshes also carry
    their `ExtrusionInfo`, and refined meshes the record of every bisected edge.
    """

    dim = 4
    facet_name = "hyperface"

    def __init__(
        self,
        vertices,
        cells,
        types=None,
        provenance: Optional[CellProvenance] = None,
        extrusion: Optional[ExtrusionInfo] = None,
        midpoints: Optional[dict] = None,
        validate: bool = True,
    ):
        """Build the mesh and, unless `validate` is False, check its invariants."""
        super().__init__(vertices, cells, validate=False)
        if types is None:
            types = np.zeros(self.n_cells)
        self.types = _read_only(np.array(types, dtype=np.int64).ravel())
        self.provenance = (
            CellProvenance.unknown(self.n_cells) if provenance is None else provenance
        )
        self.extrusion = extrusion
        self.midpoints = {
            sorted_key(edge): int(mid) for edge, mid in sorted((midpoints or {}).items())
        }
        if validate:
            self.validate()

    def validate(self):
        """Check the simplex invariants plus types, provenance and midpoint ids."""
        super().validate()
        if len(self.types) != self.n_cells or len(self.provenance) != self.n_cells:
            raise InvalidCellError(
                f"{self.n_cells} cells but {len(self.types)} types and "
                + f"{len(self.provenance)} provenance rows"
            )
        if not np.isin(self.types, range(4)).all():
            raise InvalidCellError("Cell types must lie in {0, 1, 2, 3}")
        for edge, mid in self.midpoints.items():
            if not all(0 <= v < self.n_vertices for v in (*edge, mid)):
                raise InvalidCellError(f"Midpoint record {edge} -> {mid} is out of range")

    @property
    def hyperface_incidence(self):
        """Alias of `facet_incidence`."""
        return self.facet_incidence

    def replace(self, **changes) -> "PentMesh":
        """Return a copy of the mesh with some of its constructor arguments replaced."""
        arguments = {
            "vertices": self.vertices,
            "cells": self.cells,
            "types": self.types,
            "provenance": self.provenance,
            "extrusion": self.extrusion,
            "midpoints": self.midpoints,
            "validate": False,
        }
        arguments.update(changes)
        return PentMesh(**arguments)

    def _same_extras(self, other) -> bool:
        return (
            np.array_equal(self.types, other.types)
            and self.provenance == other.provenance
            and self.extrusion == other.extrusion
            and self.midpoints == other.midpoints
        )


def build_face_adjacency(mesh: TetMesh) -> dict[tuple[int, int, int], list[int]]:
    """Return the face -> incident tetrahedra map of `mesh`.

    Raises:
        NonManifoldError: If a face is shared by three or more tetrahedra.
    """
    return mesh.facet_adjacency()


def build_hyperface_adjacency(mesh: PentMesh) -> dict[tuple[int, ...], list[int]]:
    """Return the hyperface -> incident pentatopes map of `mesh`.

    Raises:
        NonManifoldError: If a hyperface is shared by three or more pentatopes.
    """
    return mesh.facet_adjacency()


def tet_volume(mesh: TetMesh, cell: int) -> float:
    """Return the volume of tetrahedron `cell`, |det[v1-v0, v2-v0, v3-v0]| / 6."""
    return mesh.measure(cell)


def pent_measure(mesh: PentMesh, cell: int) -> float:
    """Return the 4-measure of pentatope `cell`, |det of its edge vectors| / 24."""
    return mesh.measure(cell)


ViolationKind = Literal[
    "over-incident-facet", "duplicate-cell", "hanging-vertex", "folded-facet"
]


@dataclass(frozen=True, order=True)
class ConformityViolation:
    """A pair of cells that do not meet properly."""

    cells: tuple[int, int]
    kind: ViolationKind
    key: tuple[int, ...]


@dataclass
class ConformityReport:
    """Outcome of `check_conforming`."""

    n_cells: int
    violations: list[ConformityViolation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Whether the mesh is conforming."""
        return not self.violations

    @property
    def pairs(self) -> list[tuple[int, int]]:
        """Sorted distinct cell pairs involved in violations."""
        return sorted({violation.cells for violation in self.violations})

    def to_dataframe(self) -> pd.DataFrame:
        """Return one row per violation."""
        return pd.DataFrame(
            [
                {"Cell A": v.cells[0], "Cell B": v.cells[1], "Kind": v.kind, "Key": v.key}
                for v in self.violations
            ],
            columns=["Cell A", "Cell B", "Kind", "Key"],
        )

    def to_check_report(self) -> CheckReport:
        """Convert to the machine-readable report model."""
        return CheckReport(
            name="conformity",
            passed=self.passed,
            n_violations=len(self.violations),
            violations=[
                {"cells": list(v.cells), "kind": v.kind, "key": list(v.key)}
                for v in self.violations
            ],
            summary={"n_cells": self.n_cells},
        )


def _folded_facets(mesh: SimplexMesh, interior: list) -> list[ConformityViolation]:
    """Return neighbors lying on the same side of their shared facet."""
    if not interior:
        return []
    keys = np.array([key for key, _ in interior], dtype=np.int64)
    pairs = np.array([cells for _, cells in interior], dtype=np.int64)
    base = mesh.vertices[keys]
    spans = base[:, 1:, :] - base[:, :1, :]

    sides = []
    for column in range(2):
        members = mesh.cells[pairs[:, column]]
        in_key = (members[:, :, None] == keys[:, None, :]).any(axis=2)
        opposite = members[~in_key]
        apex = mesh.vertices[opposite] - base[:, 0, :]
        sides.append(np.linalg.det(np.concatenate([spans, apex[:, None, :]], axis=1)))

    folded = np.flatnonzero(sides[0] * sides[1] > 0)
    return [
        ConformityViolation(
            cells=(int(pairs[i, 0]), int(pairs[i, 1])),
            kind="folded-facet",
            key=tuple(keys[i].tolist()),
        )
        for i in folded
    ]


def check_conforming(mesh: SimplexMesh) -> ConformityReport:
    """Check that every pair of cells meets in a common sub-simplex of both.

    Combinatorial checks: no facet has three or more incident cells, no two cells
    span the same vertex set, and (for refined pentatope meshes) no cell still
    contains an edge whose midpoint exists. The one geometric check is that two cells
    sharing a facet lie on opposite sides of it.

    Args:
        mesh (SimplexMesh): A TetMesh or a PentMesh.

    Returns:
        ConformityReport: The violations found, empty when the mesh conforms.
    """
    violations: list[ConformityViolation] = []
    interior = []
    for key, cells in mesh.facet_incidence.items():
        if len(cells) == 2:  # noqa: PLR2004
            interior.append((key, cells))
        elif len(cells) > 2:  # noqa: PLR2004
            violations.extend(
                ConformityViolation(cells=pair, kind="over-incident-facet", key=key)
                for pair in itertools.combinations(cells, 2)
            )

    first_with_vertex_set: dict[tuple[int, ...], int] = {}
    for cell_id, cell in enumerate(mesh.cells.tolist()):
        key = tuple(sorted(cell))
        if key in first_with_vertex_set:
            violations.append(
                ConformityViolation(
                    cells=(first_with_vertex_set[key], cell_id),
                    kind="duplicate-cell",
                    key=key,
                )
            )
        else:
            first_with_vertex_set[key] = cell_id

    midpoints = getattr(mesh, "midpoints", {})
    if midpoints:
        vertex_cells = mesh.vertex_cells
        for edge, mid in midpoints.items():
            for cell_id in mesh.edge_incidence.get(edge, []):
                near_edge = set(vertex_cells[edge[0]]) | set(vertex_cells[edge[1]])
                partners = sorted(near_edge & set(vertex_cells.get(mid, []))) or [cell_id]
                violations.extend(
                    ConformityViolation(
                        cells=sorted_key((cell_id, partner)),
                        kind="hanging-vertex",
                        key=(*edge, mid),
                    )
                    for partner in partners
                )

    violations.extend(_folded_facets(mesh, interior))
    violations.sort()
    if violations:
        logger.debug("Conformity check found {} violations", len(violations))
    return ConformityReport(n_cells=mesh.n_cells, violations=violations)


def barycentric_coordinates(
    mesh: SimplexMesh, points, chunk_size: int = 100_000
) -> np.ndarray:
    """Return the (n_points, n_cells, dim + 1) barycentric coordinates of `points`."""
    points = np.asarray(points, dtype=float).reshape(-1, mesh.dim)
    corners = mesh.vertices[mesh.cells]
    homogeneous = np.concatenate(
        [corners.transpose(0, 2, 1), np.ones((mesh.n_cells, 1, mesh.dim + 1))], axis=1
    )
    inverses = np.linalg.inv(homogeneous)
    coordinates = np.empty((len(points), mesh.n_cells, mesh.dim + 1))
    for start in range(0, len(points), chunk_size):
        chunk = points[start : start + chunk_size]
        rhs = np.concatenate([chunk, np.ones((len(chunk), 1))], axis=1)
        coordinates[start : start + chunk_size] = np.einsum("cij,pj->pci", inverses, rhs)
    return coordinates


def locate_points(mesh: SimplexMesh, points, tolerance: float = 1e-9) -> np.ndarray:
    """Return a (n_points, n_cells) bool matrix: which cells contain which points.

    A point is in a cell when all its barycentric coordinates are >= -`tolerance`.
    """
    return np.all(barycentric_coordinates(mesh, points) >= -tolerance, axis=2)
