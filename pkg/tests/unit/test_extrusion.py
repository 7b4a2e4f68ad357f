import time

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from pentamesh.bisection import check_consistent_tagging, tagged_cells
from pentamesh.extrusion import (
    NEIGHBOR_KINDS,
    TAG_TEMPLATES,
    PrismId,
    TimeSlices,
    classify_neighbor_pairs,
    embed_at_time,
    extrude_subdivide,
    prism_of,
    tag_mesh,
)
from pentamesh.fixtures import kuhn_grid
from pentamesh.general_utils import (
    ColoringError,
    MeshError,
    NonConformingMeshError,
    UnsupportedOperationError,
)
from pentamesh.mesh import (
    CellProvenance,
    PentMesh,
    TetMesh,
    check_conforming,
    locate_points,
)


def grid_coloring(mesh: TetMesh) -> np.ndarray:
    return mesh.vertices.sum(axis=1).astype(int) % 4


@pytest.mark.parametrize("slices", [[0.0, 1.0], [0.0, 0.5, 1.0], [0.0, 0.1, 0.7, 3.0]])
def test_cell_and_vertex_counts(colored_mesh, slices):
    mesh, colors = colored_mesh
    pents = extrude_subdivide(mesh, colors, slices)
    n_slabs = len(slices) - 1
    assert pents.n_cells == 4 * mesh.n_cells * n_slabs
    assert pents.n_vertices == mesh.n_vertices * len(slices)
    assert np.all(pents.types == 0)
    assert pents.provenance.parent.tolist() == [-1] * pents.n_cells


def test_single_prism_tags(single_prism):
    # Reference tet colored A..D by vertex id; top copies are 4..7
    assert single_prism.cells.tolist() == [
        [3, 2, 1, 0, 7],
        [2, 1, 0, 7, 6],
        [1, 0, 7, 6, 5],
        [0, 7, 6, 5, 4],
    ]
    assert single_prism.provenance.tau.tolist() == [1, 2, 3, 4]


def test_space_time_coordinates(single_prism):
    assert np.array_equal(single_prism.vertices[:4, :3], single_prism.vertices[4:, :3])
    assert single_prism.vertices[:, 3].tolist() == [0.0] * 4 + [1.0] * 4
    assert embed_at_time([1, 2, 3], 0.5).tolist() == [1.0, 2.0, 3.0, 0.5]


def test_prism_pentatopes_share_the_prism_measure(colored_mesh):
    mesh, colors = colored_mesh
    height = 0.25
    pents = extrude_subdivide(mesh, colors, [1.0, 1.0 + height])
    expected = np.repeat(mesh.measures * height / 4, 4)
    assert np.allclose(pents.measures, expected, rtol=1e-12)
    assert pents.total_measure == pytest.approx(mesh.total_measure * height, rel=1e-12)


def test_cells_are_ordered_by_slab_tet_and_tau(kuhn_cube_two_slabs):
    provenance = kuhn_cube_two_slabs.provenance
    keys = list(
        zip(
            provenance.slab.tolist(),
            provenance.source_tet.tolist(),
            provenance.tau.tolist(),
        )
    )
    assert keys == sorted(keys)
    assert prism_of(kuhn_cube_two_slabs, 30) == PrismId(tet=1, slab=1)


def test_extrusion_info_is_attached(kuhn_cube_two_slabs):
    info = kuhn_cube_two_slabs.extrusion
    assert info.n_spatial_vertices == 8
    assert info.slice_values == (0.0, 0.5, 1.0)


def test_extruded_mesh_fills_the_space_time_box(colored, rng):
    mesh, colors = colored("kuhn-cube")
    pents = extrude_subdivide(mesh, colors, "0,0.3,1")
    points = rng.uniform(0.0, 1.0, size=(10_000, 4))
    # Interiors are disjoint and cover the box
    assert np.all(locate_points(pents, points).sum(axis=1) == 1)


def test_extrusion_conforms_for_every_color_permutation(kuhn_cube):
    base = grid_coloring(kuhn_cube)
    for shift in range(4):
        pents = extrude_subdivide(kuhn_cube, (base + shift) % 4, [0.0, 1.0, 2.0])
        assert check_conforming(pents).passed
        assert check_consistent_tagging(pents).passed


@pytest.mark.parametrize(
    "name", ["single-tet", "kuhn-cube", "kuhn-grid(2)", "kuhn-grid(3)"]
)
@pytest.mark.parametrize("n_slabs", [1, 3])
def test_extruded_meshes_are_consistently_tagged(colored, name, n_slabs):
    mesh, colors = colored(name)
    pents = extrude_subdivide(mesh, colors, TimeSlices.uniform(0.0, 1.0, n_slabs))
    report = check_consistent_tagging(pents)
    assert report.passed, report.to_dataframe()
    assert report.n_pairs > 0


def test_improper_coloring_is_rejected(single_tet):
    with pytest.raises(ColoringError, match="not proper"):
        extrude_subdivide(single_tet, [0, 1, 2, 2], [0.0, 1.0])


def test_non_conforming_input_is_rejected():
    vertices = np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0.1, 0.1, 2.0]], dtype=float
    )
    # Both apexes on the same side of the shared face
    folded = TetMesh(vertices, [[0, 1, 2, 3], [0, 1, 2, 4]])
    with pytest.raises(NonConformingMeshError):
        extrude_subdivide(folded, [0, 1, 2, 3, 3], [0.0, 1.0])


@pytest.mark.parametrize(
    "values",
    [[0.0], [0.0, 0.0], [1.0, 0.0], [0.0, float("inf")], [0.0, float("nan"), 1.0]],
    ids=["single", "repeated", "decreasing", "infinite", "nan"],
)
def test_bad_time_slices_are_rejected(single_tet, values):
    with pytest.raises(ValidationError):
        TimeSlices(values=values)
    with pytest.raises(ValidationError):
        extrude_subdivide(single_tet, [0, 1, 2, 3], values)


def test_time_slices():
    slices = TimeSlices(values=" 0, 0.25,1 ")
    assert slices.values == (0.0, 0.25, 1.0)
    assert slices.num_slabs == 2
    assert slices.span == 1.0
    assert [slices.slab_of(t) for t in (0.0, 0.1, 0.25, 1.0)] == [0, 0, 1, 1]
    with pytest.raises(ValueError, match="outside"):
        slices.slab_of(1.5)
    assert TimeSlices.uniform(0.0, 1.0, 4).values == (0.0, 0.25, 0.5, 0.75, 1.0)


def test_tag_mesh_is_a_fixed_point_on_extruded_meshes(colored_mesh):
    mesh, colors = colored_mesh
    pents = extrude_subdivide(mesh, colors, [0.0, 0.5, 1.0])
    assert tag_mesh(pents) == pents


def test_tag_mesh_restores_scrambled_vertex_orders(kuhn_cube_two_slabs, rng):
    scrambled = kuhn_cube_two_slabs.replace(
        cells=rng.permuted(kuhn_cube_two_slabs.cells, axis=1),
        types=rng.integers(0, 4, kuhn_cube_two_slabs.n_cells),
    )
    assert scrambled != kuhn_cube_two_slabs
    assert tag_mesh(scrambled) == kuhn_cube_two_slabs


def test_tag_mesh_follows_the_templates(single_prism):
    retagged = tag_mesh(single_prism)
    level_and_color = [
        [(vertex // 4, vertex % 4) for vertex in cell] for cell in retagged.cells.tolist()
    ]
    assert level_and_color == [list(TAG_TEMPLATES[tau]) for tau in range(1, 5)]


def test_tag_mesh_rejects_meshes_without_extrusion(single_prism):
    with pytest.raises(UnsupportedOperationError):
        tag_mesh(PentMesh(single_prism.vertices, single_prism.cells))


def test_tag_mesh_rejects_refined_meshes(single_prism):
    from pentamesh.bisection import refine

    with pytest.raises(UnsupportedOperationError, match="bisection"):
        tag_mesh(refine(single_prism, [0]))


def test_tag_mesh_rejects_cells_outside_their_prism(kuhn_cube_two_slabs):
    slabs = kuhn_cube_two_slabs.provenance.slab.copy()
    slabs[0] = 1
    provenance = kuhn_cube_two_slabs.provenance
    moved = kuhn_cube_two_slabs.replace(
        provenance=CellProvenance(
            provenance.source_tet,
            slabs,
            provenance.tau,
            provenance.parent,
            provenance.child_ordinal,
            provenance.generation,
        )
    )
    with pytest.raises(MeshError, match="Cell 0"):
        tag_mesh(moved)


def test_neighbor_classes_on_a_grid():
    mesh = kuhn_grid(2)
    pents = extrude_subdivide(mesh, grid_coloring(mesh), TimeSlices.uniform(0, 1, 3))
    classes = classify_neighbor_pairs(pents)
    assert set(classes) == set(NEIGHBOR_KINDS)
    n_interior_faces = sum(len(cells) == 2 for cells in mesh.facet_incidence.values())
    assert len(classes["same-prism"]) == 3 * mesh.n_cells * 3
    assert len(classes["cross-slab"]) == mesh.n_cells * 2
    assert len(classes["same-slab-cross-prism"]) == 3 * n_interior_faces * 3
    assert classes["other"] == []
    assert check_consistent_tagging(pents).passed


def test_cross_prism_neighbors_share_their_refinement_edge():
    mesh = kuhn_grid(2)
    pents = extrude_subdivide(mesh, grid_coloring(mesh), TimeSlices.uniform(0, 1, 2))
    tags = tagged_cells(pents)
    pairs = classify_neighbor_pairs(pents)["same-slab-cross-prism"]
    assert pairs
    for first, second in pairs:
        shared = tags[first].vertex_set & tags[second].vertex_set
        assert len(shared) == 4
        assert set(tags[first].refinement_edge) <= shared
        assert tags[first].refinement_edge == tags[second].refinement_edge
        # Vertical: both ends are copies of the same spatial vertex
        bottom, top = tags[first].refinement_edge
        assert bottom % mesh.n_vertices == top % mesh.n_vertices


def _min_tagging_time(n: int, n_slabs: int, repeats: int = 3) -> tuple[int, float]:
    mesh = kuhn_grid(n)
    pents = extrude_subdivide(
        mesh, grid_coloring(mesh), TimeSlices.uniform(0, 1, n_slabs), check_input=False
    )
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        tag_mesh(pents)
        timings.append(time.perf_counter() - start)
    return pents.n_cells, min(timings)


@pytest.mark.slow()
def test_tagging_time_is_linear_in_the_number_of_cells():
    grids = [(3, 6), (6, 8), (10, 17)]
    sizes, timings = zip(*(_min_tagging_time(n, n_slabs) for n, n_slabs in grids))
    fit = stats.linregress(np.log(sizes), np.log(timings))
    assert fit.slope == pytest.approx(1.0, abs=0.15)
