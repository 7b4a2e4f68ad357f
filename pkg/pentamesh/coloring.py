"""Vertex 4-colorings of tetrahedral meshes: search, verification and construction."""

import itertools
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Literal, Optional

import numpy as np
import pandas as pd
from loguru import logger
from scipy import sparse

from .general_utils import ColoringError, IncompleteColoringError, log_elapsed_time
from .mesh import TetMesh
from .reports import CheckReport

N_COLORS = 4


class ColorLabel(IntEnum):
    """The four vertex labels. Serialized as 0, 1, 2, 3."""

    A = 0
    B = 1
    C = 2
    D = 3


def as_color_array(mesh: TetMesh, colors) -> np.ndarray:
    """Return `colors` as an int array with one label per vertex of `mesh`.

    Args:
        mesh (TetMesh): The mesh the coloring refers to.
        colors: A mapping vertex -> label or a sequence indexed by vertex. Missing
            vertices, `None` and negative entries count as uncolored.

    Raises:
        IncompleteColoringError: If some vertex has no label.
        ColoringError: If a label is not one of 0..3.
    """
    if isinstance(colors, Mapping):
        colors = [colors.get(vertex) for vertex in range(mesh.n_vertices)]
    values = np.array(
        [np.nan if color is None else float(color) for color in np.ravel(colors)]
        if not isinstance(colors, np.ndarray)
        else colors.astype(float).ravel()
    )
    if len(values) != mesh.n_vertices:
        raise IncompleteColoringError(
            f"Coloring has {len(values)} entries for {mesh.n_vertices} vertices"
        )
    uncolored = np.flatnonzero(np.isnan(values) | (values < 0))
    if uncolored.size:
        raise IncompleteColoringError(
            f"{uncolored.size} vertices have no color, starting with "
            + f"{uncolored[:5].tolist()}"
        )
    if np.any(values >= N_COLORS) or np.any(values != np.round(values)):
        raise ColoringError(f"Color labels must be integers in [0, {N_COLORS})")
    return values.astype(np.int64)


def vertex_graph(mesh: TetMesh) -> dict[int, list[int]]:
    """Return vertex -> sorted neighbor ids, over the edges of all cells."""
    n_vertices = mesh.n_vertices
    pairs = np.array(list(itertools.combinations(range(mesh.dim + 1), 2)))
    rows = mesh.cells[:, pairs[:, 0]].ravel()
    cols = mesh.cells[:, pairs[:, 1]].ravel()
    adjacency = sparse.coo_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n_vertices, n_vertices)
    ).tocsr()
    adjacency = ((adjacency + adjacency.T) > 0).tocsr()
    adjacency.sort_indices()
    return {
        vertex: adjacency.indices[adjacency.indptr[vertex] : adjacency.indptr[vertex + 1]]
        .astype(int)
        .tolist()
        for vertex in range(n_vertices)
    }


@dataclass
class ColoringReport:
    """Outcome of `verify_coloring`: the monochromatic edges, if any."""

    n_edges: int
    violations: list[tuple[int, int]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Whether the coloring is proper."""
        return not self.violations

    def to_check_report(self) -> CheckReport:
        """Convert to the machine-readable report model."""
        return CheckReport(
            name="coloring",
            passed=self.passed,
            n_violations=len(self.violations),
            violations=[{"edge": list(edge)} for edge in self.violations],
            summary={"n_edges": self.n_edges},
        )


def verify_coloring(mesh: TetMesh, colors) -> ColoringReport:
    """Check that no edge of `mesh` joins two vertices with the same label.

    Raises:
        IncompleteColoringError: If some vertex has no label.
    """
    colors = as_color_array(mesh, colors)
    edges = np.array(list(mesh.edge_incidence), dtype=np.int64).reshape(-1, 2)
    same = colors[edges[:, 0]] == colors[edges[:, 1]]
    return ColoringReport(
        n_edges=len(edges), violations=[tuple(edge) for edge in edges[same].tolist()]
    )


ColoringStatus = Literal["found", "not-found", "uncolorable"]


@dataclass(frozen=True)
class ColoringResult:
    """Outcome of `find_four_coloring`.

    `not-found` means the expansion budget ran out; `uncolorable` means the whole
    search space was explored, which proves no 4-coloring exists.
    """

    status: ColoringStatus
    colors: Optional[np.ndarray]
    expansions: int

    @property
    def found(self) -> bool:
        """Whether a coloring was found."""
        return self.status == "found"

    def to_check_report(self) -> CheckReport:
        """Convert to the machine-readable report model."""
        return CheckReport(
            name="four-coloring",
            passed=self.found,
            n_violations=0 if self.found else 1,
            violations=[] if self.found else [{"status": self.status}],
            summary={"status": self.status, "expansions": self.expansions},
        )


class _DsaturSearch:
    """Backtracking DSATUR state: labels, per-vertex neighbor label counts."""

    def __init__(self, graph: dict[int, list[int]]):
        self.graph = graph
        self.degree = [len(graph[v]) for v in range(len(graph))]
        self.colors = [-1] * len(graph)
        self.neighbor_label_counts = [[0] * N_COLORS for _ in graph]
        self.saturation = [0] * len(graph)
        self.label_use = [0] * N_COLORS
        self.uncolored = set(graph)

    def assign(self, vertex: int, label: int):
        self.colors[vertex] = label
        self.label_use[label] += 1
        for neighbor in self.graph[vertex]:
            counts = self.neighbor_label_counts[neighbor]
            counts[label] += 1
            if counts[label] == 1:
                self.saturation[neighbor] += 1

    def unassign(self, vertex: int):
        label = self.colors[vertex]
        self.colors[vertex] = -1
        self.label_use[label] -= 1
        for neighbor in self.graph[vertex]:
            counts = self.neighbor_label_counts[neighbor]
            counts[label] -= 1
            if counts[label] == 0:
                self.saturation[neighbor] -= 1

    def select(self) -> int:
        """Most saturated uncolored vertex; ties go to higher degree, then lower id."""
        return min(
            self.uncolored, key=lambda v: (-self.saturation[v], -self.degree[v], v)
        )

    def candidates(self, vertex: int) -> list[int]:
        """Free labels for `vertex`, at most one of them not used anywhere yet."""
        highest_used = max(
            (label for label in range(N_COLORS) if self.label_use[label]), default=-1
        )
        return [
            label
            for label in range(min(highest_used + 2, N_COLORS))
            if not self.neighbor_label_counts[vertex][label]
        ]


@log_elapsed_time()
def find_four_coloring(
    mesh: TetMesh, budget: int = 1_000_000, exhaustive_threshold: int = 64
) -> ColoringResult:
    """Search for a proper 4-coloring of the vertices of `mesh`.

    DSATUR-ordered backtracking, lowest label first. Labels are only tried up to one
    more than the highest label in use, which removes label-permutation symmetry
    without losing completeness.

    Args:
        mesh (TetMesh): The mesh to color.
        budget (int): Maximum number of label assignments (node expansions) tried.
        exhaustive_threshold (int): Meshes with fewer vertices than this are searched
            to completion regardless of `budget`.

    Returns:
        ColoringResult: `found` with the colors, `not-found` when the budget ran out,
        or `uncolorable` when the search space was exhausted.
    """
    search = _DsaturSearch(vertex_graph(mesh))
    limit = None if mesh.n_vertices < exhaustive_threshold else budget
    stack: list[list] = []
    expansions = 0

    while search.uncolored:
        vertex = search.select()
        search.uncolored.remove(vertex)
        stack.append([vertex, search.candidates(vertex), 0])

        while stack:
            frame = stack[-1]
            vertex, candidates, index = frame
            if search.colors[vertex] >= 0:
                search.unassign(vertex)
            if index < len(candidates):
                if limit is not None and expansions >= limit:
                    logger.info("Coloring budget of {} expansions exhausted", limit)
                    return ColoringResult("not-found", None, expansions)
                frame[2] += 1
                expansions += 1
                search.assign(vertex, candidates[index])
                break
            stack.pop()
            search.uncolored.add(vertex)
        else:
            logger.info("Search space exhausted: mesh admits no 4-coloring")
            return ColoringResult("uncolorable", None, expansions)

    logger.debug("Found 4-coloring after {} expansions", expansions)
    return ColoringResult("found", np.array(search.colors, dtype=np.int64), expansions)


@dataclass
class EdgeParityReport:
    """Per-edge incident cell counts, split into interior and boundary edges.

    Only interior edges with an odd count are flagged. Boundary edges are listed for
    information.
    """

    interior_counts: dict[tuple[int, int], int] = field(default_factory=dict)
    boundary_counts: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def odd_edges(self) -> list[tuple[int, int]]:
        """Interior edges with an odd number of incident cells."""
        return [edge for edge, count in self.interior_counts.items() if count % 2]

    @property
    def odd_boundary_edges(self) -> list[tuple[int, int]]:
        """Boundary edges with an odd number of incident cells (not flagged)."""
        return [edge for edge, count in self.boundary_counts.items() if count % 2]

    @property
    def passed(self) -> bool:
        """Whether every interior edge has an even count."""
        return not self.odd_edges

    def to_dataframe(self) -> pd.DataFrame:
        """Return one row per edge."""
        groups = ((True, self.interior_counts), (False, self.boundary_counts))
        rows = [
            {"Edge": edge, "Cells": count, "Interior": interior, "Odd": bool(count % 2)}
            for interior, counts in groups
            for edge, count in counts.items()
        ]
        return pd.DataFrame(rows, columns=["Edge", "Cells", "Interior", "Odd"])

    def to_check_report(self) -> CheckReport:
        """Convert to the machine-readable report model."""
        return CheckReport(
            name="edge-parity",
            passed=self.passed,
            n_violations=len(self.odd_edges),
            violations=[
                {"edge": list(edge), "n_cells": self.interior_counts[edge]}
                for edge in self.odd_edges
            ],
            summary={
                "n_interior_edges": len(self.interior_counts),
                "n_boundary_edges": len(self.boundary_counts),
                "n_odd_boundary_edges": len(self.odd_boundary_edges),
            },
        )


def edge_parity_check(mesh: TetMesh) -> EdgeParityReport:
    """Count incident tetrahedra per edge and flag interior edges with odd counts."""
    boundary_edges = {
        edge for face in mesh.boundary_faces for edge in itertools.combinations(face, 2)
    }
    report = EdgeParityReport()
    for edge, cells in mesh.edge_incidence.items():
        if edge in boundary_edges:
            target = report.boundary_counts
        else:
            target = report.interior_counts
        target[edge] = len(cells)
    logger.debug(
        "{} interior edges, {} with odd incidence",
        len(report.interior_counts),
        len(report.odd_edges),
    )
    return report


def barycentric_subdivide(mesh: TetMesh) -> tuple[TetMesh, np.ndarray]:
    """Split every tetrahedron into the 24 tetrahedra of its barycentric subdivision.

    New vertices sit at the centroids of edges, faces and cells; a centroid shared by
    neighboring cells gets one id, keyed by the sorted vertex ids of its sub-simplex.
    Original vertices keep their ids and are followed by edge, face and cell centers,
    each group in sorted key order.

    Returns:
        tuple[TetMesh, np.ndarray]: The subdivided mesh and its canonical coloring:
        original vertices A, edge centers B, face centers C, cell centers D.

    Raises:
        DegenerateCellError: If a child falls below the measure tolerance.
    """
    cell_keys = [tuple(sorted(cell)) for cell in mesh.cells.tolist()]
    ids: dict[tuple[int, ...], int] = {(v,): v for v in range(mesh.n_vertices)}
    coordinates = [mesh.vertices]
    colors = [np.full(mesh.n_vertices, ColorLabel.A)]

    for label, size in ((ColorLabel.B, 2), (ColorLabel.C, 3), (ColorLabel.D, 4)):
        keys = sorted(
            {sub for cell in cell_keys for sub in itertools.combinations(cell, size)}
        )
        for key in keys:
            ids[key] = len(ids)
        key_array = np.array(keys, dtype=np.int64).reshape(-1, size)
        coordinates.append(mesh.vertices[key_array].mean(axis=1))
        colors.append(np.full(len(keys), label))

    cells = [
        [ids[tuple(sorted(flag[:k]))] for k in range(1, 5)]
        for cell in cell_keys
        for flag in itertools.permutations(cell)
    ]
    subdivided = TetMesh(np.concatenate(coordinates), cells)
    logger.debug(
        "Barycentric subdivision: {} -> {} cells, {} -> {} vertices",
        mesh.n_cells,
        subdivided.n_cells,
        mesh.n_vertices,
        subdivided.n_vertices,
    )
    return subdivided, np.concatenate(colors).astype(np.int64)
