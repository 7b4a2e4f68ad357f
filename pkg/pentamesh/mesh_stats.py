"""Summary tables of pentatope meshes and of refinement histories."""

from typing import Iterable

import numpy as np
import pandas as pd

from .bisection import congruence_class_labels, congruence_signatures
from .mesh import PentMesh


def _group_columns_by_prefix(dataframe: pd.DataFrame):
    dataframe = dataframe.copy()
    col_tuples_for_multiindex = dataframe.columns.str.split(": ", expand=True).to_numpy()
    dataframe.columns = pd.MultiIndex.from_tuples(
        [("", x[0]) if pd.isna(x[1]) else x for x in col_tuples_for_multiindex]
    )
    return dataframe


def _add_totals_row(stats_df: pd.DataFrame, aggregations: dict[str, str]):
    dtypes = stats_df.dtypes
    totals = stats_df.agg(aggregations).rename("Total").to_frame().T
    return pd.concat([stats_df, totals]).astype(dtypes).fillna(" ")


def mesh_statistics(mesh: PentMesh, tolerance: float = 1e-8) -> pd.DataFrame:
    """Return per-generation cell counts, measures and shape classes of `mesh`.

    Shape classes are counted up to similarity (see `congruence_signatures`); the
    `Cumulative` column counts the classes met in all generations so far.
    """
    _, labels = congruence_class_labels(congruence_signatures(mesh), tolerance)
    generations = mesh.provenance.generation
    rows = []
    seen: set[int] = set()
    for generation in np.unique(generations).tolist():
        in_generation = generations == generation
        measures = mesh.measures[in_generation]
        classes = set(labels[in_generation].tolist())
        seen |= classes
        rows.append(
            {
                "Generation": generation,
                "Cells: Count": int(in_generation.sum()),
                "Measure: Total": float(measures.sum()),
                "Measure: Min": float(measures.min()),
                "Measure: Max": float(measures.max()),
                "Shapes: Classes": len(classes),
                "Shapes: Cumulative": len(seen),
            }
        )
    stats_df = pd.DataFrame(
        rows,
        columns=[
            "Generation",
            "Cells: Count",
            "Measure: Total",
            "Measure: Min",
            "Measure: Max",
            "Shapes: Classes",
            "Shapes: Cumulative",
        ],
    ).set_index("Generation")
    if len(stats_df):
        stats_df = _add_totals_row(
            stats_df,
            {
                "Cells: Count": "sum",
                "Measure: Total": "sum",
                "Measure: Min": "min",
                "Measure: Max": "max",
                "Shapes: Classes": "max",
                "Shapes: Cumulative": "max",
            },
        )
        stats_df.loc["Total", "Shapes: Classes"] = len(seen)
    stats_df = _group_columns_by_prefix(stats_df)

    stats_df.attrs["description"] = "Cells per bisection generation"
    stats_df.attrs["disclaimer"] = (
        "Shapes are counted up to similarity, with a relative tolerance of "
        + f"{tolerance:.0e} on the scaled edge lengths."
    )
    return stats_df


def refinement_history(
    meshes: Iterable[PentMesh], tolerance: float = 1e-8
) -> pd.DataFrame:
    """Return one row per refinement round: sizes, measure and shape classes.

    `Shapes: Cumulative` counts the classes met in all rounds so far; it stops
    growing once refinement produces no new shapes.
    """
    representatives = np.zeros((0, 10))
    rows = []
    for round_number, mesh in enumerate(meshes):
        signatures = np.concatenate([representatives, congruence_signatures(mesh)])
        representatives, labels = congruence_class_labels(signatures, tolerance)
        mesh_labels = labels[len(signatures) - mesh.n_cells :]
        rows.append(
            {
                "Round": round_number,
                "Mesh: Cells": mesh.n_cells,
                "Mesh: Vertices": mesh.n_vertices,
                "Mesh: Measure": mesh.total_measure,
                "Shapes: Classes": len(np.unique(mesh_labels)),
                "Shapes: Cumulative": len(representatives),
            }
        )
    history_df = _group_columns_by_prefix(pd.DataFrame(rows).set_index("Round"))
    history_df.attrs["description"] = "Mesh size and cell shapes per refinement round"
    history_df.attrs["disclaimer"] = (
        "Shapes are counted up to similarity, with a relative tolerance of "
        + f"{tolerance:.0e} on the scaled edge lengths."
    )
    return history_df


def print_table(stats_df: pd.DataFrame, title: str = ""):
    """Print a statistics table under a banner holding its description."""
    header = stats_df.attrs.get("description", "")
    if title:
        header = f"{header}: {title}"
    table_separator = "=" * (len(header) + 4)
    print(table_separator)
    print(f"  {header}  ")
    print(table_separator)
    print(stats_df)
    print()
    if "disclaimer" in stats_df.attrs:
        print(stats_df.attrs["disclaimer"])
