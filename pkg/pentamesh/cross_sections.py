"""Cross-sections of pentatope meshes at fixed times, exported for external viewers."""

import itertools
from pathlib import Path
from typing import Optional

import numpy as np
from loguru import logger

from .general_utils import TimeOutOfRangeError, log_elapsed_time
from .mesh import MEASURE_TOLERANCE, PentMesh, TetMesh, simplex_measure
from .mesh_io import export_tet_mesh_vtk

PointKey = tuple[int, ...]


def time_span(mesh: PentMesh) -> tuple[float, float]:
    """Return (s_0, s_M) for extruded meshes, else the range of vertex times."""
    if mesh.extrusion is not None:
        return mesh.extrusion.slice_values[0], mesh.extrusion.slice_values[-1]
    if mesh.n_vertices == 0:
        return 0.0, 0.0
    times = mesh.vertices[:, 3]
    return float(times.min()), float(times.max())


def _staircase(lower: list[int], upper: list[int]) -> list[list[PointKey]]:
    """Triangulate the product of the simplices `lower` x `upper` (both sorted).

    Each monotone lattice path through the (lower, upper) grid gives one simplex
    whose vertices are the edges lower[i]-upper[j] visited by the path.
    """
    n_steps = len(lower) + len(upper) - 2
    simplices = []
    for lower_steps in itertools.combinations(range(n_steps), len(lower) - 1):
        i = j = 0
        path = [(lower[0], upper[0])]
        for step in range(n_steps):
            if step in lower_steps:
                i += 1
            else:
                j += 1
            path.append((lower[i], upper[j]))
        simplices.append(path)
    return simplices


class _SectionBuilder:
    """Collects section points (keyed by edge or vertex) and deduplicated tets."""

    def __init__(self, mesh: PentMesh, t: float):
        self.mesh = mesh
        self.t = t
        self.times = mesh.vertices[:, 3]
        self.point_ids: dict[PointKey, int] = {}
        self.points: list[np.ndarray] = []
        self.tets: dict[PointKey, tuple[list[int], int]] = {}

    def point_key(self, lower: int, upper: int) -> PointKey:
        if self.times[lower] == self.t:
            return (lower,)
        if self.times[upper] == self.t:
            return (upper,)
        return (lower, upper)

    def point_id(self, key: PointKey) -> int:
        if key not in self.point_ids:
            if len(key) == 1:
                point = self.mesh.vertices[key[0], :3]
            else:
                lower, upper = (self.mesh.vertices[v] for v in key)
                weight = (self.t - lower[3]) / (upper[3] - lower[3])
                point = lower[:3] + weight * (upper[:3] - lower[:3])
            self.point_ids[key] = len(self.points)
            self.points.append(point)
        return self.point_ids[key]

    def add_cell(self, cell_id: int, cell: list[int]):
        above = sorted(v for v in cell if self.times[v] > self.t)
        level = sorted(v for v in cell if self.times[v] <= self.t)
        if above:
            lower, upper = level, above
        else:
            # Cells touching t from below only contribute their face lying at t
            lower = sorted(v for v in cell if self.times[v] < self.t)
            upper = sorted(v for v in cell if self.times[v] == self.t)
        if not lower or not upper:
            return

        for path in _staircase(lower, upper):
            keys = list(dict.fromkeys(self.point_key(a, b) for a, b in path))
            if len(keys) < 4:  # noqa: PLR2004
                continue
            tet_key = tuple(sorted(keys))
            if tet_key in self.tets:
                continue
            ids = [self.point_id(key) for key in keys]
            corners = np.array([self.points[i] for i in ids])
            if simplex_measure(corners) <= MEASURE_TOLERANCE:
                continue
            self.tets[tet_key] = (ids, cell_id)


@log_elapsed_time()
def time_slice(mesh: PentMesh, t: float) -> tuple[TetMesh, np.ndarray]:
    """Intersect `mesh` with the hyperplane at time `t`.

    Each cell crossing `t` is cut along its edges; the cut, a product of two
    simplices, is split with the staircase rule over the cell's vertices sorted by
    id, so neighboring cells cut their shared hyperface the same way. Vertices lying
    exactly at `t` count as below, except in cells having no vertex above `t`.

    Returns:
        tuple[TetMesh, np.ndarray]: The section (time coordinate dropped) and, per
        section tet, the id of the pentatope it comes from.

    Raises:
        TimeOutOfRangeError: If `t` lies outside the mesh's time span.
    """
    first, last = time_span(mesh)
    if not first <= t <= last:
        raise TimeOutOfRangeError(
            f"Time {t} outside the mesh's time span [{first}, {last}]"
        )

    builder = _SectionBuilder(mesh, float(t))
    times = builder.times
    for cell_id, cell in enumerate(mesh.cells.tolist()):
        cell_times = times[cell]
        if cell_times.min() <= t <= cell_times.max():
            builder.add_cell(cell_id, cell)

    tets = list(builder.tets.values())
    section = TetMesh(
        np.array(builder.points, dtype=float).reshape(-1, 3),
        [ids for ids, _ in tets],
    )
    sources = np.array([cell_id for _, cell_id in tets], dtype=np.int64)
    logger.debug(
        "Section at t={}: {} tets, volume {}", t, section.n_cells, section.total_measure
    )
    return section, sources


def export_time_slice(mesh: PentMesh, t: float, path: Optional[Path] = None) -> TetMesh:
    """Compute the section of `mesh` at time `t` and write it as a VTK file.

    Args:
        mesh (PentMesh): The space-time mesh.
        t (float): Time of the section, within [s_0, s_M].
        path (Path, optional): Output file. Nothing is written if omitted.

    Returns:
        TetMesh: The section. The VTK file carries the source pentatope of every
        section tet as cell data `source_cell`.
    """
    section, sources = time_slice(mesh, t)
    if path is not None:
        export_tet_mesh_vtk(section, path, cell_data={"source_cell": sources})
        logger.info("Wrote section at t={} ({} tets) to <{}>", t, section.n_cells, path)
    return section
