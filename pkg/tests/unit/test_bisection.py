import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pentamesh.bisection import (
    MidpointTable,
    TaggedPentatope,
    bisect,
    check_consistent_tagging,
    check_pair_consistent,
    reflect,
    reflected_neighbors,
    tagged_cells,
    with_tags,
)
from pentamesh.extrusion import extrude_subdivide
from pentamesh.general_utils import InvalidTagError, StructuralError
from pentamesh.mesh import PentMesh, simplex_measure

# Colors A..D of the reference tet; primes are the copies one slice up
A, B, C, D = 0, 1, 2, 3
A1, B1, C1, D1 = 4, 5, 6, 7
D2 = 11

tags = st.builds(
    TaggedPentatope, st.permutations(range(5)).map(tuple), st.integers(0, 3)
)


def test_tag_validation():
    assert str(TaggedPentatope((4, 3, 2, 1, 0), 2)) == "(4, 3, 2, 1, 0)_2"
    assert TaggedPentatope((0, 1, 2, 3, 9)).refinement_edge == (0, 9)
    with pytest.raises(InvalidTagError):
        TaggedPentatope((0, 1, 2, 3, 3))
    with pytest.raises(InvalidTagError):
        TaggedPentatope((0, 1, 2, 3))
    with pytest.raises(InvalidTagError):
        TaggedPentatope((0, 1, 2, 3, 4), 4)


@pytest.mark.parametrize(
    ("gamma", "expected"),
    [
        (0, (4, 3, 2, 1, 0)),
        (1, (4, 1, 3, 2, 0)),
        (2, (4, 1, 2, 3, 0)),
        (3, (4, 1, 2, 3, 0)),
    ],
)
def test_reflect(gamma, expected):
    tag = TaggedPentatope((0, 1, 2, 3, 4), gamma)
    assert reflect(tag) == TaggedPentatope(expected, gamma)


@given(tags)
def test_reflection_is_an_involution(tag):
    assert reflect(reflect(tag)) == tag


@given(tags)
def test_reflected_tags_have_the_same_children(tag):
    midpoints = MidpointTable(5)
    assert set(bisect(tag, midpoints)) == set(bisect(reflect(tag), midpoints))
    assert len(midpoints) == 1


@given(tags)
def test_children_structure(tag):
    first, second = bisect(tag, MidpointTable(5))
    x = tag.vertices
    assert first.vertices[:2] == (x[0], 5)
    assert second.vertices[:2] == (x[4], 5)
    assert first.gamma == second.gamma == (tag.gamma + 1) % 4
    assert first.vertex_set | second.vertex_set == tag.vertex_set | {5}
    assert first.vertex_set & second.vertex_set == (tag.vertex_set - {x[0], x[4]}) | {5}


@pytest.mark.parametrize("gamma", range(4))
def test_children_halve_the_measure(gamma, rng):
    reference = np.vstack([np.zeros(4), np.eye(4)])
    for _ in range(1000):
        points = reference + 0.1 * rng.uniform(-1.0, 1.0, size=(5, 4))
        tag = TaggedPentatope(tuple(rng.permutation(5)), gamma)
        midpoints = MidpointTable(5, vertices=points)
        parent = simplex_measure(points)
        for child in bisect(tag, midpoints):
            child_measure = simplex_measure(midpoints.coordinates_of(child.vertices))
            assert child_measure == pytest.approx(parent / 2, rel=1e-12)
        assert np.allclose(
            midpoints.new_vertices[0], points[list(tag.refinement_edge)].mean(axis=0)
        )


def test_types_cycle_back_after_four_generations():
    midpoints = MidpointTable(5)
    generation = [TaggedPentatope((0, 1, 2, 3, 4), 0)]
    for expected_gamma in [1, 2, 3, 0]:
        generation = [child for tag in generation for child in bisect(tag, midpoints)]
        assert {tag.gamma for tag in generation} == {expected_gamma}
    assert len(generation) == 16


def test_midpoint_table():
    table = MidpointTable(10)
    assert table.midpoint(3, 1) == 10
    assert table.midpoint(1, 3) == 10
    assert table.midpoint(0, 10) == 11
    assert (3, 1) in table
    assert (0, 1) not in table
    assert len(table) == 2
    assert table.as_dict() == {(1, 3): 10, (0, 10): 11}
    assert not table.has_coordinates


def test_midpoint_table_continues_a_mesh(single_prism):
    from pentamesh.bisection import refine

    refined = refine(single_prism, [0])
    table = MidpointTable.for_mesh(refined)
    edge, mid = next(iter(refined.midpoints.items()))
    assert table.midpoint(*edge) == mid
    assert table.midpoint(0, 1) == refined.n_vertices


def test_bisect_type_0_prism_cell():
    midpoints = MidpointTable(8)
    first, second = bisect(TaggedPentatope((D, C, B, A, D1), 0), midpoints)
    z = midpoints.midpoint(D, D1)
    assert first == TaggedPentatope((D, z, C, B, A), 1)
    assert second == TaggedPentatope((D1, z, A, B, C), 1)


def test_cross_slab_neighbors_are_checked_through_children():
    lower = TaggedPentatope((A, D1, C1, B1, A1), 0)
    upper = TaggedPentatope((D1, C1, B1, A1, D2), 0)
    shared = {A1, B1, C1, D1}

    midpoints = MidpointTable(12)
    z, w = midpoints.midpoint(A, A1), midpoints.midpoint(D1, D2)
    assert bisect(lower, midpoints)[1] == TaggedPentatope((A1, z, B1, C1, D1), 1)
    assert bisect(upper, midpoints)[0] == TaggedPentatope((D1, w, C1, B1, A1), 1)
    assert reflect(bisect(lower, midpoints)[1]) == TaggedPentatope((D1, z, C1, B1, A1), 1)

    assert check_pair_consistent(lower, upper, shared)
    assert check_pair_consistent(upper, lower, shared)


@pytest.mark.parametrize(
    ("tag", "other", "expected"),
    [
        ((0, 1, 2, 3, 4), (5, 0, 1, 2, 3), False),
        ((0, 5, 1, 2, 3), (3, 4, 2, 1, 0), True),
        ((0, 5, 1, 2, 3), (0, 5, 1, 2, 4), True),
        ((0, 5, 1, 2, 3), (6, 7, 1, 2, 3), False),
    ],
    ids=["shifted", "reflected", "one-swap", "two-vertices-apart"],
)
def test_reflected_neighbors(tag, other, expected):
    tag, other = TaggedPentatope(tag, 1), TaggedPentatope(other, 1)
    assert reflected_neighbors(tag, other) is expected
    assert reflected_neighbors(other, tag) is expected


def test_reflected_neighbors_need_equal_types():
    assert not reflected_neighbors(
        TaggedPentatope((0, 5, 1, 2, 3), 1), TaggedPentatope((3, 4, 2, 1, 0), 2)
    )


@pytest.mark.parametrize(
    "shared",
    [[0, 1, 2], [0, 1, 2, 3, 4], [0, 1, 2, 9]],
    ids=["too-small", "too-large", "not-common"],
)
def test_pair_check_needs_a_common_hyperface(shared):
    tag = TaggedPentatope((0, 1, 2, 3, 4))
    other = TaggedPentatope((0, 1, 2, 3, 9))
    with pytest.raises(StructuralError):
        check_pair_consistent(tag, other, shared)


def test_prism_is_consistently_tagged(single_prism):
    report = check_consistent_tagging(single_prism)
    assert report.passed
    assert report.n_pairs == 3
    check = report.to_check_report()
    assert check.name == "consistent-tagging"
    assert check.summary["n_pairs"] == 3


def test_perturbed_tag_is_detected(single_prism):
    tags = tagged_cells(single_prism)
    x = tags[0].vertices
    tags[0] = TaggedPentatope((x[1], x[0], *x[2:]), tags[0].gamma)
    report = check_consistent_tagging(with_tags(single_prism, tags))
    assert not report.passed
    assert report.pairs == [(0, 1)]
    assert report.violations[0].reason == "neighbors not reflected"
    assert report.to_dataframe()["Cell A"].tolist() == [0]


@pytest.mark.parametrize("n_slabs", [1, 3])
def test_perturbed_grid_is_detected(colored, n_slabs):
    mesh, colors = colored("kuhn-grid(2)")
    pents = extrude_subdivide(mesh, colors, np.linspace(0.0, 1.0, n_slabs + 1))
    assert check_consistent_tagging(pents).passed
    tags = tagged_cells(pents)
    x = tags[0].vertices
    tags[0] = TaggedPentatope((x[1], x[0], *x[2:]), 0)
    report = check_consistent_tagging(with_tags(pents, tags))
    assert (0, 1) in report.pairs


def test_non_manifold_hyperfaces_are_reported():
    vertices = np.vstack(
        [np.zeros(4), np.eye(4), [0.2, 0.2, 0.2, -1.0], [0.2, 0.2, 0.2, 2.0]]
    )
    mesh = PentMesh(vertices, [[0, 1, 2, 3, 4], [0, 1, 2, 3, 5], [0, 1, 2, 3, 6]])
    report = check_consistent_tagging(mesh)
    non_manifold = [v for v in report.violations if v.reason == "non-manifold"]
    assert [v.cells for v in non_manifold] == [(0, 1), (0, 2), (1, 2)]
