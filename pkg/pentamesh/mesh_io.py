"""Reading and writing meshes: the native text format, TetGen node/ele pairs and VTK.

The native format is described in `docs/mesh_format.md`. It stores every float with
`repr`, so reading back a written mesh gives an identical mesh.
"""

from pathlib import Path
from typing import Iterator, Optional, Union

import meshio
import numpy as np
from loguru import logger

from . import GeneralDefinitions
from .general_utils import MeshError, MeshFileError, MeshReferenceError
from .mesh import CellProvenance, ExtrusionInfo, PentMesh, SimplexMesh, TetMesh

HEADER = "pentamesh-mesh"
FORMAT_VERSION = GeneralDefinitions.NATIVE_FORMAT_VERSION
TETGEN_SUFFIXES = (".node", ".ele")

AnyMesh = Union[TetMesh, PentMesh]


def _format_float(value: float) -> str:
    return repr(float(value))


def _format_row(values) -> str:
    return " ".join(str(int(value)) for value in values)


def serialize(mesh: AnyMesh, path: Path, colors=None) -> Path:
    """Write `mesh`, and optionally a per-vertex coloring, in the native format.

    Args:
        mesh (TetMesh | PentMesh): The mesh to write. Pentatope meshes are written
            with their types, provenance, extrusion info and midpoint record.
        path (Path): Output file; parent directories are created.
        colors: Optional coloring written in the `colors` section.

    Returns:
        Path: The written file.
    """
    path = Path(path)
    lines = [f"{HEADER} {FORMAT_VERSION}", f"dimension {mesh.dim}"]

    lines.append(f"vertices {mesh.n_vertices}")
    lines.extend(" ".join(map(_format_float, row)) for row in mesh.vertices.tolist())

    lines.append(f"cells {mesh.n_cells}")
    if isinstance(mesh, PentMesh):
        rows = np.column_stack([mesh.cells, mesh.types]).reshape(-1, mesh.dim + 2)
    else:
        rows = mesh.cells
    lines.extend(_format_row(row) for row in rows.tolist())

    if colors is not None:
        colors = np.asarray(colors, dtype=np.int64).ravel()
        lines.append(f"colors {len(colors)}")
        lines.extend(str(int(color)) for color in colors)

    if isinstance(mesh, PentMesh):
        lines.append(f"provenance {mesh.n_cells}")
        provenance = np.column_stack(
            [getattr(mesh.provenance, column) for column in CellProvenance.COLUMNS]
        ).reshape(-1, len(CellProvenance.COLUMNS))
        lines.extend(_format_row(row) for row in provenance.tolist())
        if mesh.extrusion is not None:
            lines.append(f"extrusion {mesh.extrusion.n_spatial_vertices}")
            lines.extend(str(int(color)) for color in mesh.extrusion.colors)
            lines.append(f"slices {len(mesh.extrusion.slice_values)}")
            lines.extend(map(_format_float, mesh.extrusion.slice_values))
        if mesh.midpoints:
            lines.append(f"midpoints {len(mesh.midpoints)}")
            lines.extend(
                f"{a} {b} {mid}" for (a, b), mid in sorted(mesh.midpoints.items())
            )

    lines.append("end")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as mesh_file:
        mesh_file.write("\n".join(lines) + "\n")
    logger.debug("Wrote {!r} to <{}>", mesh, path)
    return path


class _LineReader:
    """Iterates over the significant lines of a file, skipping blanks and comments."""

    def __init__(self, path: Path):
        self.path = path
        with open(path, "r") as mesh_file:
            self._lines = mesh_file.read().splitlines()
        self._iterator = self._significant_lines()
        self.line_number = 0

    def _significant_lines(self) -> Iterator[tuple[int, list[str]]]:
        for number, line in enumerate(self._lines, start=1):
            tokens = line.split("#", 1)[0].split()
            if tokens:
                yield number, tokens

    def next(self, what: str) -> list[str]:
        """Return the tokens of the next significant line."""
        try:
            self.line_number, tokens = next(self._iterator)
        except StopIteration:
            raise self.error(f"unexpected end of file, expected {what}") from None
        return tokens

    def error(self, message: str, line: Optional[int] = None) -> MeshFileError:
        """Build a MeshFileError located at `line` (default: the current line)."""
        return MeshFileError(message, path=self.path, line=line or self.line_number)

    def numbers(self, what: str, count: Optional[int], kind=float) -> list:
        """Read a line of `count` numbers (any count if None) of type `kind`."""
        tokens = self.next(what)
        if count is not None and len(tokens) != count:
            raise self.error(f"expected {count} values for {what}, got {len(tokens)}")
        try:
            return [kind(token) for token in tokens]
        except ValueError:
            raise self.error(f"malformed {what}: {' '.join(tokens)}") from None

    def section(self, tokens: list[str]) -> tuple[str, int]:
        """Parse a `<name> <count>` section header."""
        if len(tokens) != 2:  # noqa: PLR2004
            raise self.error(f"malformed section header: {' '.join(tokens)}")
        try:
            count = int(tokens[1])
        except ValueError:
            raise self.error(f"malformed count in section header: {tokens[1]}") from None
        if count < 0:
            raise self.error(f"negative count in section header: {count}")
        return tokens[0], count


def _read_rows(reader: _LineReader, name: str, count: int, width: int, kind=float):
    rows, lines = [], []
    for _ in range(count):
        rows.append(reader.numbers(f"{name} row", width, kind))
        lines.append(reader.line_number)
    return rows, lines


def _check_references(reader, cells, lines, n_vertices, first_id: int = 0):
    for cell, (row, line) in enumerate(zip(cells, lines)):
        for vertex in row:
            if not first_id <= vertex < n_vertices + first_id:
                raise MeshReferenceError(cell, vertex, n_vertices, reader.path, line)


def _parse_native(path: Path) -> tuple[AnyMesh, Optional[np.ndarray]]:
    reader = _LineReader(path)
    header = reader.next("header")
    if len(header) != 2 or header[0] != HEADER:  # noqa: PLR2004
        raise reader.error(f"expected header '{HEADER} <version>'")
    if header[1] != str(FORMAT_VERSION):
        raise reader.error(f"unsupported format version {header[1]}")

    name, dim = reader.section(reader.next("dimension"))
    if name != "dimension" or dim not in (3, 4):
        raise reader.error("expected 'dimension 3' or 'dimension 4'")

    sections: dict[str, object] = {}
    n_vertices = None
    while True:
        tokens = reader.next("a section or 'end'")
        if tokens == ["end"]:
            break
        name, count = reader.section(tokens)
        if name in sections:
            raise reader.error(f"duplicate section '{name}'")
        if name == "vertices":
            sections[name], _ = _read_rows(reader, name, count, dim)
            n_vertices = count
        elif name == "cells":
            if n_vertices is None:
                raise reader.error("'cells' must come after 'vertices'")
            rows, lines = _read_rows(reader, name, count, dim + 1 + (dim == 4), int)
            _check_references(reader, [row[: dim + 1] for row in rows], lines, n_vertices)
            sections[name] = rows
        elif name in ("colors", "extrusion"):
            rows, _ = _read_rows(reader, name, count, 1, int)
            sections[name] = [row[0] for row in rows]
        elif name == "slices":
            sections[name] = [row[0] for row in _read_rows(reader, name, count, 1)[0]]
        elif name == "provenance":
            sections[name], _ = _read_rows(
                reader, name, count, len(CellProvenance.COLUMNS), int
            )
        elif name == "midpoints":
            sections[name], _ = _read_rows(reader, name, count, 3, int)
        else:
            raise reader.error(f"unknown section '{name}'")

    for required in ("vertices", "cells"):
        if required not in sections:
            raise reader.error(f"missing '{required}' section")
    vertices = np.array(sections["vertices"], dtype=float).reshape(-1, dim)
    cells = np.array(sections["cells"], dtype=np.int64).reshape(-1, dim + 1 + (dim == 4))
    colors = None
    if "colors" in sections:
        colors = np.array(sections["colors"], dtype=np.int64)

    if dim == 3:  # noqa: PLR2004
        return TetMesh(vertices, cells), colors

    provenance = None
    if "provenance" in sections:
        rows = np.array(sections["provenance"], dtype=np.int64).reshape(
            -1, len(CellProvenance.COLUMNS)
        )
        provenance = CellProvenance(*rows.T)
    extrusion = None
    if "extrusion" in sections:
        if "slices" not in sections:
            raise reader.error("'extrusion' section without 'slices'")
        extrusion_colors = sections["extrusion"]
        extrusion = ExtrusionInfo(
            len(extrusion_colors), extrusion_colors, sections["slices"]
        )
    midpoints = {(a, b): mid for a, b, mid in sections.get("midpoints", [])}
    mesh = PentMesh(
        vertices,
        cells[:, :5],
        types=cells[:, 5],
        provenance=provenance,
        extrusion=extrusion,
        midpoints=midpoints,
    )
    return mesh, colors


def _parse_tetgen(path: Path) -> TetMesh:
    node_path, ele_path = (path.with_suffix(suffix) for suffix in TETGEN_SUFFIXES)

    reader = _LineReader(node_path)
    n_nodes, node_dim, n_attributes, n_markers = (
        reader.numbers("node header", None, int) + [0, 0, 0, 0]
    )[:4]
    if node_dim != 3:  # noqa: PLR2004
        raise reader.error(f"only 3D node files are supported, got dimension {node_dim}")
    width = 1 + 3 + n_attributes + (1 if n_markers else 0)
    rows, _ = _read_rows(reader, "node", n_nodes, width)
    first_id = int(rows[0][0]) if rows else 0
    if first_id not in (0, 1):
        raise reader.error(f"node ids must start at 0 or 1, got {first_id}")
    ids = [int(row[0]) for row in rows]
    if ids != list(range(first_id, first_id + n_nodes)):
        raise reader.error("node ids must be consecutive")
    vertices = np.array([row[1:4] for row in rows], dtype=float).reshape(-1, 3)

    reader = _LineReader(ele_path)
    n_tets, nodes_per_tet, n_tet_attributes = (
        reader.numbers("element header", None, int) + [0, 0, 0]
    )[:3]
    if nodes_per_tet not in (4, 10):
        raise reader.error(f"expected 4 or 10 nodes per tetrahedron, got {nodes_per_tet}")
    rows, lines = _read_rows(
        reader, "element", n_tets, 1 + nodes_per_tet + n_tet_attributes, int
    )
    corners = [row[1:5] for row in rows]
    _check_references(reader, corners, lines, n_nodes, first_id)
    cells = np.array(corners, dtype=np.int64).reshape(-1, 4) - first_id
    logger.debug("Read {} nodes ({}-based) and {} tets", n_nodes, first_id, n_tets)
    return TetMesh(vertices, cells)


def parse_mesh(path: Path) -> tuple[AnyMesh, Optional[np.ndarray]]:
    """Read a native mesh file or a TetGen `.node`/`.ele` pair.

    Args:
        path (Path): A native mesh file, or either file of a TetGen pair.

    Returns:
        tuple: The mesh (TetMesh or PentMesh) and its coloring, if the file has one.

    Raises:
        MeshFileError: For malformed lines, with the line number.
        MeshReferenceError: For cells referencing undefined vertices.
        MeshError: If the mesh read violates a mesh invariant.
    """
    path = Path(path)
    if path.suffix in TETGEN_SUFFIXES:
        mesh, colors = _parse_tetgen(path), None
    else:
        mesh, colors = _parse_native(path)
    if colors is not None and len(colors) != mesh.n_vertices:
        raise MeshFileError(
            f"{len(colors)} colors for {mesh.n_vertices} vertices", path=path
        )
    logger.debug("Read {!r} from <{}>", mesh, path)
    return mesh, colors


def parse_tet_mesh(path: Path) -> TetMesh:
    """Read a tetrahedral mesh.

    Raises:
        MeshFileError: If the file is malformed or holds a pentatope mesh.
    """
    mesh, _ = parse_mesh(path)
    if not isinstance(mesh, TetMesh):
        raise MeshFileError("expected a tetrahedral mesh (dimension 3)", path=Path(path))
    return mesh


def export_tet_mesh_vtk(
    mesh: TetMesh, path: Path, colors=None, cell_data: Optional[dict] = None
) -> Path:
    """Write `mesh` as an ASCII legacy VTK unstructured grid.

    Args:
        mesh (TetMesh): The mesh to write.
        path (Path): Output file; parent directories are created.
        colors: Optional per-vertex colors, written as point data `color`.
        cell_data (dict, optional): Name -> one value per cell.
    """
    if mesh.dim != 3:  # noqa: PLR2004
        raise MeshError(f"VTK export takes tetrahedral meshes, got dimension {mesh.dim}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    point_data = {}
    if colors is not None:
        point_data["color"] = np.asarray(colors, dtype=np.int64).ravel()
    meshio.write(
        path,
        meshio.Mesh(
            np.asarray(mesh.vertices),
            [("tetra", np.asarray(mesh.cells))],
            point_data=point_data,
            cell_data={
                name: [np.asarray(values)] for name, values in (cell_data or {}).items()
            },
        ),
        file_format="vtk",
        binary=False,
    )
    logger.debug("Wrote VTK file <{}>", path)
    return path


def write_mesh(mesh: SimplexMesh, path: Path, colors=None) -> Path:
    """Write `mesh` in the format given by the suffix of `path` (`.vtk` or native)."""
    if Path(path).suffix == ".vtk":
        return export_tet_mesh_vtk(mesh, path, colors=colors)
    return serialize(mesh, path, colors=colors)
