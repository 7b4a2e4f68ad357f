import numpy as np
import pytest

from pentamesh.coloring import (
    ColorLabel,
    as_color_array,
    barycentric_subdivide,
    edge_parity_check,
    find_four_coloring,
    verify_coloring,
)
from pentamesh.fixtures import generate_fixture
from pentamesh.general_utils import ColoringError, IncompleteColoringError
from pentamesh.mesh import TetMesh, check_conforming


def test_single_tet_gets_abcd(single_tet):
    result = find_four_coloring(single_tet)
    assert result.found
    assert [ColorLabel(c).name for c in result.colors] == ["A", "B", "C", "D"]


@pytest.mark.parametrize("name", ["kuhn-cube", "kuhn-grid(2)", "kuhn-grid(3)"])
def test_kuhn_meshes_are_colorable(name):
    mesh = generate_fixture(name)
    result = find_four_coloring(mesh)
    assert result.found
    assert verify_coloring(mesh, result.colors).passed
    assert result.to_check_report().passed


def test_coloring_is_deterministic(kuhn_cube):
    first = find_four_coloring(kuhn_cube)
    second = find_four_coloring(kuhn_cube)
    assert np.array_equal(first.colors, second.colors)
    assert first.expansions == second.expansions


def test_odd_fan_is_uncolorable(odd_fan):
    result = find_four_coloring(odd_fan)
    assert result.status == "uncolorable"
    assert result.colors is None
    assert not result.to_check_report().passed


def test_budget_exhaustion_is_not_a_proof(kuhn_cube):
    result = find_four_coloring(kuhn_cube, budget=1, exhaustive_threshold=0)
    assert result.status == "not-found"
    assert result.expansions == 1


def test_small_meshes_ignore_the_budget(kuhn_cube):
    result = find_four_coloring(kuhn_cube, budget=1, exhaustive_threshold=64)
    assert result.found


def test_verify_coloring_lists_monochromatic_edges(single_tet):
    report = verify_coloring(single_tet, [0, 1, 2, 0])
    assert not report.passed
    assert report.violations == [(0, 3)]
    assert report.n_edges == 6
    assert report.to_check_report().violations == [{"edge": [0, 3]}]


def test_coloring_from_mapping(single_tet):
    colors = as_color_array(single_tet, {0: 3, 1: 2, 2: 1, 3: 0})
    assert colors.tolist() == [3, 2, 1, 0]


@pytest.mark.parametrize(
    ("colors", "error"),
    [
        ([0, 1, 2], IncompleteColoringError),
        ({0: 0, 1: 1, 2: 2}, IncompleteColoringError),
        ([0, 1, 2, None], IncompleteColoringError),
        ([0, 1, 2, 4], ColoringError),
        ([0, 1, 2, 2.5], ColoringError),
    ],
    ids=["too-short", "missing-key", "none-label", "label-out-of-range", "non-integer"],
)
def test_bad_colorings_raise(single_tet, colors, error):
    with pytest.raises(error):
        as_color_array(single_tet, colors)


def test_odd_fan_parity_flags_the_axis(odd_fan):
    report = edge_parity_check(odd_fan)
    assert not report.passed
    assert report.odd_edges == [(0, 1)]
    assert report.interior_counts[(0, 1)] == 3
    check = report.to_check_report()
    assert check.violations == [{"edge": [0, 1], "n_cells": 3}]


def test_kuhn_cube_parity_passes(kuhn_cube):
    report = edge_parity_check(kuhn_cube)
    assert report.passed
    assert report.interior_counts == {(0, 7): 6}
    assert len(report.boundary_counts) == 18


@pytest.mark.parametrize("name", ["single-tet", "kuhn-cube", "kuhn-grid(2)", "odd-fan"])
def test_barycentric_subdivision(name):
    mesh = generate_fixture(name)
    subdivided, colors = barycentric_subdivide(mesh)
    assert subdivided.n_cells == 24 * mesh.n_cells
    assert subdivided.total_measure == pytest.approx(mesh.total_measure, rel=1e-12)
    assert verify_coloring(subdivided, colors).passed
    assert check_conforming(subdivided).passed
    # Original vertices keep their ids and are labeled A
    assert np.array_equal(subdivided.vertices[: mesh.n_vertices], mesh.vertices)
    assert set(colors[: mesh.n_vertices].tolist()) == {ColorLabel.A}


def test_barycentric_subdivision_of_two_tets_shares_centers():
    vertices = np.vstack([np.zeros(3), np.eye(3), [1.0, 1.0, 1.0]])
    mesh = TetMesh(vertices, [[0, 1, 2, 3], [1, 2, 3, 4]])
    subdivided, colors = barycentric_subdivide(mesh)
    # 5 vertices, 9 edge centers, 7 face centers and 2 cell centers
    assert subdivided.n_vertices == 23
    assert np.bincount(colors).tolist() == [5, 9, 7, 2]
    assert subdivided.n_cells == 48


def test_odd_fan_subdivision_is_colorable_and_even(odd_fan):
    subdivided, colors = barycentric_subdivide(odd_fan)
    assert verify_coloring(subdivided, colors).passed
    assert edge_parity_check(subdivided).passed


def test_vertex_graphs(single_tet, kuhn_cube):
    from pentamesh.coloring import vertex_graph

    assert vertex_graph(single_tet) == {
        0: [1, 2, 3],
        1: [0, 2, 3],
        2: [0, 1, 3],
        3: [0, 1, 2],
    }
    two_tets = TetMesh(
        np.vstack([np.zeros(3), np.eye(3), [1.0, 1.0, 1.0]]), [[0, 1, 2, 3], [1, 2, 3, 4]]
    )
    graph = vertex_graph(two_tets)
    assert len(graph) == 5
    assert sum(map(len, graph.values())) == 2 * 9
    graph = vertex_graph(kuhn_cube)
    assert sum(map(len, graph.values())) == 2 * 19
    assert all(vertex not in neighbors for vertex, neighbors in graph.items())


@pytest.mark.parametrize("name", ["single-tet", "kuhn-grid(2)"])
def test_colorable_fixtures_have_even_interior_edges(name):
    assert edge_parity_check(generate_fixture(name)).passed


def test_barycentric_subdivision_of_one_tet_has_15_vertices(single_tet):
    subdivided, _ = barycentric_subdivide(single_tet)
    assert subdivided.n_vertices == 15
