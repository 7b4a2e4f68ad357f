"""Extrusion of a 4-colored tetrahedral mesh into a tagged pentatope mesh.

Every tetrahedron T with vertices colored A, B, C, D is embedded at two consecutive
time slices, giving bottom vertices A..D and top vertices A'..D' of a space-time
prism. The prism is cut into four pentatopes, each tagged (type 0) so that the whole
mesh is consistently tagged for bisection:

    tau_1 = conv(A, B, C, D, D')    tag (D, C, B, A, D')
    tau_2 = conv(A, B, C, C', D')   tag (C, B, A, D', C')
    tau_3 = conv(A, B, B', C', D')  tag (B, A, D', C', B')
    tau_4 = conv(A, A', B', C', D') tag (A, D', C', B', A')

The cut depends only on the colors, so neighboring prisms are cut compatibly.
"""

import math
from typing import Literal, NamedTuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, field_validator

from .coloring import as_color_array, verify_coloring
from .general_utils import (
    ColoringError,
    MeshError,
    NonConformingMeshError,
    UnsupportedOperationError,
    log_elapsed_time,
)
from .mesh import CellProvenance, ExtrusionInfo, PentMesh, TetMesh, check_conforming

# Tag of tau_k as (level, color) pairs: level 0 is the bottom slice, 1 the top one
TAG_TEMPLATES: dict[int, tuple[tuple[int, int], ...]] = {
    1: ((0, 3), (0, 2), (0, 1), (0, 0), (1, 3)),
    2: ((0, 2), (0, 1), (0, 0), (1, 3), (1, 2)),
    3: ((0, 1), (0, 0), (1, 3), (1, 2), (1, 1)),
    4: ((0, 0), (1, 3), (1, 2), (1, 1), (1, 0)),
}

NeighborKind = Literal["same-prism", "cross-slab", "same-slab-cross-prism", "other"]
NEIGHBOR_KINDS: tuple[NeighborKind, ...] = (
    "same-prism",
    "cross-slab",
    "same-slab-cross-prism",
    "other",
)


def split_comma_separated(values):
    """Turn "0,0.5,1" into ("0", "0.5", "1"); other values pass through."""
    if isinstance(values, str):
        return tuple(value for value in values.replace(" ", "").split(",") if value)
    return values


def check_slice_values(values: tuple[float, ...]) -> tuple[float, ...]:
    """Return `values` if they are at least 2 finite, strictly increasing times.

    Raises:
        ValueError: Otherwise.
    """
    if len(values) < 2:  # noqa: PLR2004
        raise ValueError(f"Need at least 2 time slices, got {len(values)}")
    if not all(math.isfinite(value) for value in values):
        raise ValueError(f"Time slices must be finite: {values}")
    if any(later <= earlier for earlier, later in zip(values, values[1:])):
        raise ValueError(f"Time slices must be strictly increasing: {values}")
    return values


class TimeSlices(BaseModel, frozen=True):
    """Strictly increasing time values s_0 < ... < s_M, M >= 1, bounding the slabs."""

    values: tuple[float, ...] = Field(description="Time values of the slices")

    split_values = field_validator("values", mode="before")(split_comma_separated)
    check_values = field_validator("values")(check_slice_values)

    @classmethod
    def uniform(cls, t0: float, t1: float, num_slabs: int):
        """Return `num_slabs` slabs of equal height between `t0` and `t1`."""
        return cls(values=tuple(np.linspace(t0, t1, num_slabs + 1).tolist()))

    @property
    def num_slabs(self) -> int:
        """Number of slabs M."""
        return len(self.values) - 1

    @property
    def first(self) -> float:
        """Return s_0."""
        return self.values[0]

    @property
    def last(self) -> float:
        """Return s_M."""
        return self.values[-1]

    @property
    def span(self) -> float:
        """Return s_M - s_0."""
        return self.last - self.first

    def slab_of(self, t: float) -> int:
        """Return the slab containing `t`; slice values belong to the slab above."""
        if not self.first <= t <= self.last:
            raise ValueError(f"t={t} outside [{self.first}, {self.last}]")
        slab = int(np.searchsorted(self.values, t, side="right")) - 1
        return min(slab, self.num_slabs - 1)


class PrismId(NamedTuple):
    """A space-time prism: source tetrahedron and slab index."""

    tet: int
    slab: int


def embed_at_time(point, r: float) -> np.ndarray:
    """Return the space-time point (p0, p1, p2, r)."""
    return np.append(np.asarray(point, dtype=float), float(r))


def _as_time_slices(slices) -> TimeSlices:
    if isinstance(slices, TimeSlices):
        return slices
    if isinstance(slices, str):
        return TimeSlices(values=slices)
    return TimeSlices(values=tuple(slices))


@log_elapsed_time()
def extrude_subdivide(
    mesh: TetMesh, colors, slices, check_input: bool = True
) -> PentMesh:
    """Extrude every tetrahedron over every slab and cut each prism into 4 pentatopes.

    Vertex `v` at slice `j` gets id `j * mesh.n_vertices + v`, so prisms sharing a
    spatial vertex share its space-time copies. Cells are ordered by (slab, tet, tau).

    Args:
        mesh (TetMesh): Conforming spatial mesh.
        colors: Proper 4-coloring of `mesh` (array or mapping).
        slices: `TimeSlices`, a sequence of times or a comma-separated string.
        check_input (bool): Verify the coloring and the conformity of `mesh` first.

    Returns:
        PentMesh: 4 * n_tets * M pentatopes carrying their tags (all type 0),
        provenance and the extrusion info.

    Raises:
        ColoringError: If the coloring is not proper.
        NonConformingMeshError: If `mesh` is not conforming.
    """
    slices = _as_time_slices(slices)
    colors = as_color_array(mesh, colors)
    if check_input:
        coloring = verify_coloring(mesh, colors)
        if not coloring.passed:
            raise ColoringError(
                f"Coloring is not proper: {len(coloring.violations)} monochromatic "
                + f"edges, e.g. {coloring.violations[:3]}"
            )
        conformity = check_conforming(mesh)
        if not conformity.passed:
            raise NonConformingMeshError(
                "Spatial mesh is not conforming: offending cell pairs "
                + f"{conformity.pairs[:5]}"
            )

    n_vertices, n_tets, n_slabs = mesh.n_vertices, mesh.n_cells, slices.num_slabs
    vertices = np.concatenate(
        [
            np.column_stack([mesh.vertices, np.full(n_vertices, value)])
            for value in slices.values
        ]
    )

    order = np.argsort(colors[mesh.cells], axis=1)
    by_color = np.take_along_axis(mesh.cells, order, axis=1)
    levels = np.stack([by_color, by_color + n_vertices])
    templates = np.array([TAG_TEMPLATES[tau] for tau in range(1, 5)])
    first_slab = levels[templates[..., 0], :, templates[..., 1]].transpose(2, 0, 1)
    cells = np.concatenate(
        [(first_slab + slab * n_vertices).reshape(-1, 5) for slab in range(n_slabs)]
    ).reshape(-1, 5)

    n_cells = 4 * n_tets * n_slabs
    provenance = CellProvenance(
        source_tet=np.tile(np.repeat(np.arange(n_tets), 4), n_slabs),
        slab=np.repeat(np.arange(n_slabs), 4 * n_tets),
        tau=np.tile(np.arange(1, 5), n_tets * n_slabs),
        parent=np.full(n_cells, -1),
        child_ordinal=np.zeros(n_cells),
        generation=np.zeros(n_cells),
    )
    pents = PentMesh(
        vertices,
        cells,
        types=np.zeros(n_cells),
        provenance=provenance,
        extrusion=ExtrusionInfo(n_vertices, colors, slices.values),
    )
    logger.debug(
        "Extruded {} tets over {} slabs into {} pentatopes", n_tets, n_slabs, n_cells
    )
    return pents


@log_elapsed_time()
def tag_mesh(pents: PentMesh) -> PentMesh:
    """Recompute the tag of every cell from its vertices, provenance and colors.

    Constant work per cell in a single pass over the mesh.

    Raises:
        UnsupportedOperationError: If the mesh was not extruded or holds bisection
            children, whose tags come from bisection instead.
        MeshError: If a cell's vertices do not match its provenance.
    """
    if pents.extrusion is None:
        raise UnsupportedOperationError("Only extruded meshes can be tagged")
    if pents.n_cells and pents.provenance.generation.max() > 0:
        raise UnsupportedOperationError(
            "Mesh contains bisection children; their tags come from bisection"
        )

    n_spatial = pents.extrusion.n_spatial_vertices
    colors = pents.extrusion.colors.tolist()
    slabs = pents.provenance.slab.tolist()
    taus = pents.provenance.tau.tolist()
    tags = []
    for cell_id, (cell, slab, tau) in enumerate(zip(pents.cells.tolist(), slabs, taus)):
        by_level_and_color = {
            (vertex // n_spatial - slab, colors[vertex % n_spatial]): vertex
            for vertex in cell
        }
        try:
            tags.append([by_level_and_color[key] for key in TAG_TEMPLATES[tau]])
        except KeyError as error:
            raise MeshError(
                f"Cell {cell_id} with vertices {cell} does not match its provenance "
                + f"(slab {slab}, tau {tau})"
            ) from error

    return pents.replace(
        cells=np.array(tags, dtype=np.int64).reshape(-1, 5),
        types=np.zeros(pents.n_cells),
    )


def prism_of(mesh: PentMesh, cell: int) -> PrismId:
    """Return the prism `cell` belongs to."""
    return PrismId(
        int(mesh.provenance.source_tet[cell]), int(mesh.provenance.slab[cell])
    )


def classify_neighbor_pairs(mesh: PentMesh) -> dict[NeighborKind, list[tuple[int, int]]]:
    """Group hyperface-adjacent cell pairs by how their prisms relate.

    Returns:
        dict: `same-prism` pairs, `cross-slab` pairs (same tet, different slabs),
        `same-slab-cross-prism` pairs and, for completeness, `other` pairs.
    """
    classes: dict[NeighborKind, list[tuple[int, int]]] = {
        kind: [] for kind in NEIGHBOR_KINDS
    }
    for cells in mesh.facet_adjacency().values():
        if len(cells) != 2:  # noqa: PLR2004
            continue
        first, second = (prism_of(mesh, cell) for cell in cells)
        if first == second:
            kind = "same-prism"
        elif first.tet == second.tet:
            kind = "cross-slab"
        elif first.slab == second.slab:
            kind = "same-slab-cross-prism"
        else:
            kind = "other"
        classes[kind].append(tuple(cells))
    return classes
