import pytest

from pentamesh.bisection import refine, refine_uniformly
from pentamesh.mesh_stats import mesh_statistics, print_table, refinement_history


def test_statistics_of_an_extruded_mesh(kuhn_cube_two_slabs):
    stats_df = mesh_statistics(kuhn_cube_two_slabs)
    assert stats_df.index.tolist() == [0, "Total"]
    assert stats_df.loc[0, ("Cells", "Count")] == 48
    assert stats_df.loc["Total", ("Measure", "Total")] == pytest.approx(1.0)
    assert stats_df.loc[0, ("Measure", "Min")] == pytest.approx(1 / 48)
    assert "generation" in stats_df.attrs["description"]


def test_statistics_per_generation(single_prism):
    refined = refine(refine(single_prism, [0]), [3])
    stats_df = mesh_statistics(refined)
    assert stats_df.index.tolist() == [0, 1, 2, "Total"]
    counts = stats_df[("Cells", "Count")].tolist()
    assert counts == [3, 1, 2, 6]
    assert stats_df.loc["Total", ("Measure", "Total")] == pytest.approx(1 / 6)
    cumulative = stats_df[("Shapes", "Cumulative")].tolist()
    assert cumulative[:3] == sorted(cumulative[:3])
    assert stats_df.loc["Total", ("Shapes", "Classes")] == cumulative[2]


def test_refinement_history(kuhn_cube_two_slabs):
    meshes = [kuhn_cube_two_slabs]
    for _ in range(2):
        meshes.append(refine_uniformly(meshes[-1]))
    history = refinement_history(meshes)
    assert history.index.name == "Round"
    assert history[("Mesh", "Cells")].tolist() == [48, 96, 192]
    assert history[("Mesh", "Measure")].tolist() == pytest.approx([1.0] * 3)
    cumulative = history[("Shapes", "Cumulative")].tolist()
    assert cumulative == sorted(cumulative)
    assert all(
        classes <= total
        for classes, total in zip(history[("Shapes", "Classes")], cumulative)
    )


def test_print_table(capsys, single_prism):
    print_table(mesh_statistics(single_prism), title="single prism")
    printed = capsys.readouterr().out
    assert "Cells per bisection generation: single prism" in printed
    assert printed.splitlines()[0] == "=" * len(printed.splitlines()[1])
    assert "tolerance" in printed
