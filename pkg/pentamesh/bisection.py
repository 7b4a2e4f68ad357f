"""Tagged pentatopes: newest-vertex style bisection, consistency checks and refinement.

A tagged pentatope is an ordered vertex tuple (x0, ..., x4) with a type in {0, 1, 2, 3}.
Its refinement edge is x0-x4. Bisection replaces it by two children of type
(type + 1) mod 4 that share the midpoint of the refinement edge. Two neighbors are
consistently tagged when they bisect compatibly; a consistently tagged mesh can be
refined conformingly by bisecting whole edge patches.
"""

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
import pandas as pd
from loguru import logger

from .general_utils import (
    DegenerateCellError,
    InvalidCellError,
    InvalidTagError,
    RefinementPreconditionError,
    StructuralError,
    log_elapsed_time,
    sorted_key,
)
from .mesh import MEASURE_TOLERANCE, CellProvenance, PentMesh, simplex_measure
from .reports import CheckReport

N_TYPES = 4

# Positions of the parent's vertices in the reflected tag, per type
_REFLECTIONS = {
    0: (4, 3, 2, 1, 0),
    1: (4, 1, 3, 2, 0),
    2: (4, 1, 2, 3, 0),
    3: (4, 1, 2, 3, 0),
}
# Positions of x1, x2, x3 after x4 and the midpoint in the second child, per type
_SECOND_CHILD = {0: (3, 2, 1), 1: (1, 3, 2), 2: (1, 2, 3), 3: (1, 2, 3)}


@dataclass(frozen=True)
class TaggedPentatope:
    """A pentatope with its vertex order and type.

    Raises:
        InvalidTagError: If the vertices are not 5 distinct ids or the type is not in
            0..3.
    """

    vertices: tuple[int, int, int, int, int]
    gamma: int = 0

    def __post_init__(self):
        vertices = tuple(int(vertex) for vertex in self.vertices)
        object.__setattr__(self, "vertices", vertices)
        if len(vertices) != 5 or len(set(vertices)) != 5:  # noqa: PLR2004
            raise InvalidTagError(f"A tag needs 5 distinct vertex ids, got {vertices}")
        if int(self.gamma) not in range(N_TYPES):
            raise InvalidTagError(f"Tag type must be in 0..3, got {self.gamma}")
        object.__setattr__(self, "gamma", int(self.gamma))

    @property
    def refinement_edge(self) -> tuple[int, int]:
        """Sorted key of the edge x0-x4."""
        return sorted_key((self.vertices[0], self.vertices[4]))

    @property
    def vertex_set(self) -> frozenset[int]:
        """The vertex ids, unordered."""
        return frozenset(self.vertices)

    def __str__(self):
        return f"({', '.join(map(str, self.vertices))})_{self.gamma}"


class MidpointTable:
    """Edge -> midpoint vertex id, shared by every cell bisecting that edge.

    New ids are handed out consecutively from `first_new_id`. When the table knows
    the mesh coordinates, it also computes the coordinates of new midpoints.
    """

    def __init__(
        self,
        first_new_id: int,
        vertices: Optional[np.ndarray] = None,
        existing: Optional[dict] = None,
    ):
        self.first_new_id = int(first_new_id)
        self._base = None if vertices is None else np.asarray(vertices, dtype=float)
        self._new_coordinates: list[np.ndarray] = []
        self._ids = {sorted_key(edge): int(mid) for edge, mid in (existing or {}).items()}
        self._next_id = self.first_new_id

    @classmethod
    def for_mesh(cls, mesh: PentMesh):
        """Table continuing the vertex numbering and midpoint record of `mesh`."""
        return cls(mesh.n_vertices, vertices=mesh.vertices, existing=mesh.midpoints)

    @property
    def has_coordinates(self) -> bool:
        """Whether midpoint coordinates are tracked."""
        return self._base is not None

    def midpoint(self, a: int, b: int) -> int:
        """Return the midpoint id of edge a-b, creating it on first request."""
        key = sorted_key((a, b))
        if key not in self._ids:
            self._ids[key] = self._next_id
            self._next_id += 1
            if self.has_coordinates:
                ends = self.coordinates_of(key)
                self._new_coordinates.append(ends.mean(axis=0))
        return self._ids[key]

    def coordinates_of(self, ids: Iterable[int]) -> np.ndarray:
        """Return the coordinates of existing and new vertices, one row per id."""
        n_base = len(self._base)
        new = self._new_coordinates
        return np.array(
            [self._base[i] if i < n_base else new[i - self.first_new_id] for i in ids]
        )

    @property
    def new_vertices(self) -> np.ndarray:
        """Coordinates of the midpoints created through this table."""
        if self._base is None:
            return np.zeros((0, 0))
        dim = self._base.shape[1]
        return np.array(self._new_coordinates, dtype=float).reshape(-1, dim)

    def as_dict(self) -> dict[tuple[int, int], int]:
        """Every edge -> midpoint record, old and new."""
        return dict(self._ids)

    def __contains__(self, edge) -> bool:
        return sorted_key(edge) in self._ids

    def __len__(self):
        return len(self._ids)


def reflect(tag: TaggedPentatope) -> TaggedPentatope:
    """Return the reflected order of `tag`, same vertices and type.

    Type 0 reverses the order; type 1 gives (x4, x1, x3, x2, x0); types 2 and 3 give
    (x4, x1, x2, x3, x0).
    """
    return TaggedPentatope(
        tuple(tag.vertices[i] for i in _REFLECTIONS[tag.gamma]), tag.gamma
    )


def bisect(
    tag: TaggedPentatope, midpoints: MidpointTable
) -> tuple[TaggedPentatope, TaggedPentatope]:
    """Split `tag` at the midpoint x' of its refinement edge.

    The children have type (gamma + 1) mod 4. The first is (x0, x', x1, x2, x3); the
    second is (x4, x', x3, x2, x1) for type 0, (x4, x', x1, x3, x2) for type 1 and
    (x4, x', x1, x2, x3) for types 2 and 3.

    Raises:
        DegenerateCellError: If the table tracks coordinates and a child's measure
            falls below the tolerance.
    """
    x = tag.vertices
    mid = midpoints.midpoint(x[0], x[4])
    gamma = (tag.gamma + 1) % N_TYPES
    children = (
        TaggedPentatope((x[0], mid, x[1], x[2], x[3]), gamma),
        TaggedPentatope((x[4], mid, *(x[i] for i in _SECOND_CHILD[tag.gamma])), gamma),
    )
    if midpoints.has_coordinates:
        for child in children:
            measure = simplex_measure(midpoints.coordinates_of(child.vertices))
            if measure <= MEASURE_TOLERANCE:
                raise DegenerateCellError(None, measure, MEASURE_TOLERANCE)
    return children


def _n_differences(first: tuple[int, ...], second: tuple[int, ...]) -> int:
    return sum(a != b for a, b in zip(first, second))


def reflected_neighbors(tag: TaggedPentatope, other: TaggedPentatope) -> bool:
    """Whether the two tags share a hyperface, have equal types, and `other` differs
    from `tag` or from its reflection in at most one position.
    """
    if tag.gamma != other.gamma:
        return False
    if len(tag.vertex_set & other.vertex_set) != 4:  # noqa: PLR2004
        return False
    return (
        min(
            _n_differences(other.vertices, tag.vertices),
            _n_differences(other.vertices, reflect(tag).vertices),
        )
        <= 1
    )


def check_pair_consistent(
    tag: TaggedPentatope, other: TaggedPentatope, shared: Iterable[int]
) -> bool:
    """Decide whether two neighbors sharing the hyperface `shared` are consistent.

    If either refinement edge lies in `shared`, the neighbors themselves must be
    reflected neighbors. Otherwise the children of each containing `shared` must be.

    Raises:
        StructuralError: If `shared` is not a common hyperface or no unique child of
            each side contains it.
    """
    shared = frozenset(int(vertex) for vertex in shared)
    on_both = shared <= tag.vertex_set and shared <= other.vertex_set
    if len(shared) != 4 or not on_both:  # noqa: PLR2004
        raise StructuralError(
            f"{tag} and {other} do not share hyperface {sorted(shared)}"
        )
    if set(tag.refinement_edge) <= shared or set(other.refinement_edge) <= shared:
        return reflected_neighbors(tag, other)

    scratch = MidpointTable(max(tag.vertex_set | other.vertex_set) + 1)
    children = [
        [child for child in bisect(parent, scratch) if shared <= child.vertex_set]
        for parent in (tag, other)
    ]
    if any(len(candidates) != 1 for candidates in children):
        raise StructuralError(
            f"No unique children of {tag} and {other} share hyperface {sorted(shared)}"
        )
    return reflected_neighbors(children[0][0], children[1][0])


def tagged_cells(mesh: PentMesh) -> list[TaggedPentatope]:
    """Return the tags of all cells of `mesh`."""
    return [
        TaggedPentatope(tuple(cell), gamma)
        for cell, gamma in zip(mesh.cells.tolist(), mesh.types.tolist())
    ]


def with_tags(mesh: PentMesh, tags: list[TaggedPentatope]) -> PentMesh:
    """Return `mesh` with its cell tags replaced by `tags` (same vertex sets expected)."""
    return mesh.replace(
        cells=np.array([tag.vertices for tag in tags], dtype=np.int64).reshape(-1, 5),
        types=np.array([tag.gamma for tag in tags], dtype=np.int64),
    )


@dataclass(frozen=True, order=True)
class TaggingViolation:
    """A pair of neighbors that are not consistently tagged."""

    cells: tuple[int, int]
    hyperface: tuple[int, ...]
    reason: str


@dataclass
class TaggingReport:
    """Outcome of `check_consistent_tagging`."""

    n_pairs: int = 0
    n_direct_pairs: int = 0
    violations: list[TaggingViolation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Whether every neighbor pair is consistently tagged."""
        return not self.violations

    @property
    def pairs(self) -> list[tuple[int, int]]:
        """Sorted offending cell pairs."""
        return sorted({violation.cells for violation in self.violations})

    def to_dataframe(self) -> pd.DataFrame:
        """Return one row per violation."""
        return pd.DataFrame(
            [
                {
                    "Cell A": v.cells[0],
                    "Cell B": v.cells[1],
                    "Hyperface": v.hyperface,
                    "Reason": v.reason,
                }
                for v in self.violations
            ],
            columns=["Cell A", "Cell B", "Hyperface", "Reason"],
        )

    def to_check_report(self) -> CheckReport:
        """Convert to the machine-readable report model."""
        return CheckReport(
            name="consistent-tagging",
            passed=self.passed,
            n_violations=len(self.violations),
            violations=[
                {
                    "cells": list(v.cells),
                    "hyperface": list(v.hyperface),
                    "reason": v.reason,
                }
                for v in self.violations
            ],
            summary={
                "n_pairs": self.n_pairs,
                "n_pairs_sharing_refinement_edge": self.n_direct_pairs,
                "n_pairs_checked_through_children": self.n_pairs - self.n_direct_pairs,
            },
        )


@log_elapsed_time()
def check_consistent_tagging(mesh: PentMesh) -> TaggingReport:
    """Check every pair of cells sharing a hyperface with `check_pair_consistent`.

    Hyperfaces with three or more cells are reported with reason `non-manifold`, pairs
    without a unique pair of children across the hyperface with reason `structural`.
    """
    tags = tagged_cells(mesh)
    report = TaggingReport()
    for key, cells in mesh.facet_incidence.items():
        if len(cells) == 1:
            continue
        if len(cells) > 2:  # noqa: PLR2004
            report.violations.extend(
                TaggingViolation(pair, key, "non-manifold")
                for pair in itertools.combinations(cells, 2)
            )
            continue

        first, second = (tags[cell] for cell in cells)
        report.n_pairs += 1
        direct = any(set(tag.refinement_edge) <= set(key) for tag in (first, second))
        report.n_direct_pairs += direct
        try:
            consistent = check_pair_consistent(first, second, key)
        except StructuralError as error:
            logger.debug("Cells {}: {}", cells, error)
            report.violations.append(TaggingViolation(tuple(cells), key, "structural"))
            continue
        if not consistent:
            reason = "neighbors not reflected" if direct else "children not reflected"
            report.violations.append(TaggingViolation(tuple(cells), key, reason))

    report.violations.sort()
    logger.debug(
        "Checked {} neighbor pairs, {} inconsistent",
        report.n_pairs,
        len(report.violations),
    )
    return report


class _RefinementState:
    """Live cells of a mesh under refinement, indexed by the edges they contain."""

    def __init__(self, mesh: PentMesh):
        self.mesh = mesh
        self.tags: dict[int, TaggedPentatope] = dict(enumerate(tagged_cells(mesh)))
        columns = np.column_stack(
            [getattr(mesh.provenance, column) for column in CellProvenance.COLUMNS]
        ).reshape(-1, len(CellProvenance.COLUMNS))
        self.rows: dict[int, tuple[int, ...]] = {
            cell: tuple(row) for cell, row in enumerate(columns.tolist())
        }
        # cell -> (input cell it descends from, heap code of the path from there)
        self.lineage: dict[int, tuple[int, int]] = {cell: (cell, 1) for cell in self.tags}
        self.edge_cells: dict[tuple[int, int], set[int]] = {}
        for cell, tag in self.tags.items():
            self._index(cell, tag)

        self.next_id = mesh.n_cells
        self.midpoints = MidpointTable.for_mesh(mesh)
        generations = mesh.provenance.generation
        oldest = int(generations.min()) if mesh.n_cells else 0
        newest = int(generations.max()) if mesh.n_cells else 0
        self.depth_limit = N_TYPES * (newest - oldest + 2)
        self.generation_limit = newest + self.depth_limit
        self.n_bisections = 0

    def _index(self, cell: int, tag: TaggedPentatope):
        for edge in itertools.combinations(sorted(tag.vertices), 2):
            self.edge_cells.setdefault(edge, set()).add(cell)

    def _unindex(self, cell: int, tag: TaggedPentatope):
        for edge in itertools.combinations(sorted(tag.vertices), 2):
            cells = self.edge_cells[edge]
            cells.discard(cell)
            if not cells:
                del self.edge_cells[edge]

    def refine_edge_of(self, cell: int, depth: int = 0):
        """Bisect every live cell containing the refinement edge of `cell`.

        Cells of the patch whose own refinement edge differs are first refined
        recursively until the whole patch shares that edge.
        """
        if depth > self.depth_limit:
            raise RefinementPreconditionError(
                f"Closure recursion deeper than {self.depth_limit} at cell {cell}: "
                + "the mesh is not consistently tagged"
            )
        edge = self.tags[cell].refinement_edge
        while True:
            patch = sorted(self.edge_cells.get(edge, ()))
            pending = [
                other for other in patch if self.tags[other].refinement_edge != edge
            ]
            if not pending:
                break
            self.refine_edge_of(pending[0], depth + 1)
        for other in patch:
            self._bisect(other)

    def _bisect(self, cell: int):
        tag = self.tags.pop(cell)
        self._unindex(cell, tag)
        source_tet, slab, tau, *_, generation = self.rows.pop(cell)
        ancestor, code = self.lineage.pop(cell)
        if generation + 1 > self.generation_limit:
            raise RefinementPreconditionError(
                f"Bisecting cell {cell} would exceed generation {self.generation_limit}: "
                + "the mesh is not consistently tagged"
            )
        for ordinal, child in enumerate(bisect(tag, self.midpoints)):
            child_id = self.next_id
            self.next_id += 1
            self.tags[child_id] = child
            self._index(child_id, child)
            child_code = 2 * code + ordinal
            self.lineage[child_id] = (ancestor, child_code)
            self.rows[child_id] = (
                source_tet, slab, tau, ancestor, child_code, generation + 1
            )
        self.n_bisections += 1

    def to_mesh(self) -> PentMesh:
        """Survivors in their original order, then new cells in creation order."""
        order = sorted(self.tags)
        rows = np.array([self.rows[cell] for cell in order], dtype=np.int64).reshape(
            -1, len(CellProvenance.COLUMNS)
        )
        return PentMesh(
            np.concatenate([self.mesh.vertices, self.midpoints.new_vertices]),
            [self.tags[cell].vertices for cell in order],
            types=[self.tags[cell].gamma for cell in order],
            provenance=CellProvenance(*rows.T),
            extrusion=self.mesh.extrusion,
            midpoints=self.midpoints.as_dict(),
        )


@log_elapsed_time()
def refine(mesh: PentMesh, marked: Iterable[int]) -> PentMesh:
    """Bisect the marked cells and whatever else keeps the mesh conforming.

    Marked cells are handled in increasing id order; each one has its whole
    refinement-edge patch bisected, after recursively bringing every cell of the
    patch to the same refinement edge. Cells bisected along the way are skipped when
    their turn comes.

    Args:
        mesh (PentMesh): A consistently tagged, conforming mesh.
        marked: Ids of the cells to refine.

    Returns:
        PentMesh: The refined mesh. Unchanged cells keep their relative order and come
        first, followed by new cells in creation order. Midpoints are appended to the
        vertices and recorded in `midpoints`.

    Raises:
        InvalidCellError: If a marked id is not a cell of `mesh`.
        RefinementPreconditionError: If the closure recursion does not terminate
            within the depth the tagging guarantees, which means the mesh is not
            consistently tagged.
    """
    marked = sorted({int(cell) for cell in marked})
    if not marked:
        return mesh
    unknown = [cell for cell in marked if not 0 <= cell < mesh.n_cells]
    if unknown:
        raise InvalidCellError(f"Marked cells {unknown[:5]} outside [0, {mesh.n_cells})")

    state = _RefinementState(mesh)
    for cell in marked:
        if cell in state.tags:
            state.refine_edge_of(cell)
    refined = state.to_mesh()
    logger.debug(
        "Refined {} marked cells with {} bisections: {} -> {} cells",
        len(marked),
        state.n_bisections,
        mesh.n_cells,
        refined.n_cells,
    )
    return refined


def refine_uniformly(mesh: PentMesh) -> PentMesh:
    """Bisect every cell once; the result has twice as many cells."""
    return refine(mesh, range(mesh.n_cells))


_EDGE_PAIRS = np.array(list(itertools.combinations(range(5), 2)))


def congruence_signatures(mesh: PentMesh) -> np.ndarray:
    """Return one scale-free shape signature per cell.

    The signature is the sorted list of edge lengths divided by measure**(1/4);
    congruent and similar cells share it.
    """
    corners = mesh.vertices[mesh.cells]
    lengths = np.linalg.norm(
        corners[:, _EDGE_PAIRS[:, 0]] - corners[:, _EDGE_PAIRS[:, 1]], axis=2
    )
    return np.sort(lengths, axis=1) / mesh.measures[:, None] ** 0.25


def congruence_signature(points) -> np.ndarray:
    """Return the shape signature of the pentatope with the given 5 corners."""
    points = np.asarray(points, dtype=float)
    edges = points[_EDGE_PAIRS[:, 0]] - points[_EDGE_PAIRS[:, 1]]
    lengths = np.linalg.norm(edges, axis=1)
    return np.sort(lengths) / simplex_measure(points) ** 0.25


def congruence_class_labels(
    signatures: np.ndarray, tolerance: float = 1e-8
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster `signatures` greedily: a row joins the first representative within
    `tolerance` (max norm, relative to the representative's scale).

    Returns:
        tuple: The (n_classes, 10) representatives and one class label per row.
    """
    representatives: list[np.ndarray] = []
    labels = np.empty(len(signatures), dtype=np.int64)
    for row, signature in enumerate(signatures):
        if representatives:
            stacked = np.array(representatives)
            scale = np.maximum(np.abs(stacked).max(axis=1), 1.0)
            deviation = np.abs(stacked - signature).max(axis=1)
            close = np.flatnonzero(deviation <= tolerance * scale)
            if close.size:
                labels[row] = close[0]
                continue
        labels[row] = len(representatives)
        representatives.append(signature)
    return np.array(representatives).reshape(-1, 10), labels


def count_congruence_classes(mesh: PentMesh, tolerance: float = 1e-8) -> int:
    """Return the number of distinct cell shapes, up to similarity, in `mesh`."""
    representatives, _ = congruence_class_labels(congruence_signatures(mesh), tolerance)
    return len(representatives)
