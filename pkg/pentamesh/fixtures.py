"""Built-in tetrahedral meshes used as inputs and in tests."""

import itertools
import re
from typing import Optional

import numpy as np

from .general_utils import UnknownFixtureError
from .mesh import TetMesh

FIXTURE_NAMES = ("single-tet", "kuhn-cube", "kuhn-grid", "odd-fan")

# Unit steps along x, y, z in the cube-corner numbering x + 2y + 4z
_KUHN_STEPS = (1, 2, 4)


def single_tet() -> TetMesh:
    """Return the reference tetrahedron (0,0,0), (1,0,0), (0,1,0), (0,0,1)."""
    return TetMesh(np.vstack([np.zeros(3), np.eye(3)]), [[0, 1, 2, 3]])


def kuhn_grid(n: int) -> TetMesh:
    """Return the n x n x n cube grid, each cube split into 6 tets along its diagonal.

    Vertex (i, j, k) has id i + (n + 1) j + (n + 1)^2 k. Cubes are visited with x
    varying fastest; inside a cube, tets follow the permutations of the x, y, z steps
    in lexicographic order.
    """
    if n < 1:
        raise UnknownFixtureError(f"kuhn-grid needs n >= 1, got {n}")
    side = n + 1
    grid = np.stack(
        np.meshgrid(np.arange(side), np.arange(side), np.arange(side), indexing="ij"),
        axis=-1,
    )
    vertices = grid.transpose(2, 1, 0, 3).reshape(-1, 3).astype(float)

    def vertex_id(corner: np.ndarray) -> int:
        return int(corner[0] + side * corner[1] + side**2 * corner[2])

    cells = []
    for z, y, x in itertools.product(range(n), repeat=3):
        origin = np.array([x, y, z])
        for steps in itertools.permutations(_KUHN_STEPS):
            corner_bits = np.cumsum((0, *steps))
            corners = [
                origin + [(bits >> axis) & 1 for axis in range(3)] for bits in corner_bits
            ]
            cells.append([vertex_id(corner) for corner in corners])
    return TetMesh(vertices, cells)


def kuhn_cube() -> TetMesh:
    """Return the unit cube split into 6 tetrahedra sharing the main diagonal."""
    return kuhn_grid(1)


def odd_fan() -> TetMesh:
    """Return 3 tetrahedra around the edge (0,0,0)-(0,0,1); that edge has 3 cells."""
    angles = 2 * np.pi * np.arange(3) / 3
    rim = np.column_stack([np.cos(angles), np.sin(angles), np.full(3, 0.5)])
    vertices = np.vstack([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], rim])
    return TetMesh(vertices, [[0, 1, 2, 3], [0, 1, 3, 4], [0, 1, 4, 2]])


def parse_fixture_name(name: str) -> tuple[str, Optional[int]]:
    """Split `kuhn-grid(3)` or `kuhn-grid:3` into ("kuhn-grid", 3).

    Raises:
        UnknownFixtureError: If the name does not match any fixture.
    """
    match = re.fullmatch(r"\s*([a-z-]+?)\s*(?:[(:]\s*(\d+)\s*\)?)?\s*", name)
    if match is None or match.group(1) not in FIXTURE_NAMES:
        raise UnknownFixtureError(
            f"Unknown fixture '{name}'. Choose from: {', '.join(FIXTURE_NAMES)}"
        )
    parameter = match.group(2)
    return match.group(1), None if parameter is None else int(parameter)


def generate_fixture(name: str, n: Optional[int] = None) -> TetMesh:
    """Return the fixture mesh called `name`.

    Args:
        name (str): One of `single-tet`, `kuhn-cube`, `kuhn-grid` and `odd-fan`. The
            grid size may be given inline as `kuhn-grid(n)` or `kuhn-grid:n`.
        n (int, optional): Grid size for `kuhn-grid` (default 2).

    Raises:
        UnknownFixtureError: For unknown names or a size given to another fixture.
    """
    base_name, inline_n = parse_fixture_name(name)
    size = inline_n if inline_n is not None else n
    if base_name == "kuhn-grid":
        return kuhn_grid(2 if size is None else size)
    if size is not None:
        raise UnknownFixtureError(f"Fixture '{base_name}' takes no size parameter")
    return {"single-tet": single_tet, "kuhn-cube": kuhn_cube, "odd-fan": odd_fan}[
        base_name
    ]()
