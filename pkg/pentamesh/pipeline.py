#!/usr/bin/env python3
"""Implementation of the Pipeline class: the stages shared by all commands."""
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
from loguru import logger

from . import GeneralDefinitions
from .bisection import TaggingReport, check_consistent_tagging, refine
from .coloring import (
    EdgeParityReport,
    barycentric_subdivide,
    edge_parity_check,
    find_four_coloring,
    verify_coloring,
)
from .extrusion import extrude_subdivide
from .general_utils import (
    AlternativeConstructors,
    InvalidCellError,
    UnsupportedOperationError,
)
from .mesh import PentMesh, TetMesh, check_conforming
from .mesh_configs import RefinementOptions, RunConfig
from .mesh_io import AnyMesh, write_mesh
from .reports import CheckReport, RunReport

MEASURE_RTOL = 1e-10


def measure_check(name: str, expected: float, actual: float) -> CheckReport:
    """Compare two total measures to a relative tolerance of 1e-10."""
    passed = bool(np.isclose(actual, expected, rtol=MEASURE_RTOL, atol=0.0))
    return CheckReport(
        name=name,
        passed=passed,
        n_violations=0 if passed else 1,
        violations=[] if passed else [{"expected": expected, "actual": actual}],
        summary={"expected": expected, "actual": actual},
    )


def select_marked_cells(
    mesh: PentMesh, options: RefinementOptions, rng: np.random.Generator
) -> list[int]:
    """Return the cells to bisect in one refinement round.

    Raises:
        InvalidCellError: If a cell id given in `options.mark_ids` does not exist.
    """
    if options.uniform:
        return list(range(mesh.n_cells))
    if options.mark_ids is not None:
        unknown = [cell for cell in options.mark_ids if not 0 <= cell < mesh.n_cells]
        if unknown:
            raise InvalidCellError(
                f"Marked cells {unknown} outside [0, {mesh.n_cells})"
            )
        return sorted(set(options.mark_ids))
    if options.mark_frac is None or mesh.n_cells == 0:
        return []
    count = max(1, round(options.mark_frac * mesh.n_cells))
    return sorted(rng.choice(mesh.n_cells, size=count, replace=False).tolist())


def require_pentatope_mesh(mesh: AnyMesh) -> PentMesh:
    """Return `mesh` if it is a pentatope mesh.

    Raises:
        UnsupportedOperationError: Otherwise.
    """
    if not isinstance(mesh, PentMesh):
        raise UnsupportedOperationError(
            f"This command takes a pentatope mesh (dimension 4), got {mesh!r}"
        )
    return mesh


def require_tet_mesh(mesh: AnyMesh) -> TetMesh:
    """Return `mesh` if it is a tetrahedral mesh.

    Raises:
        UnsupportedOperationError: Otherwise.
    """
    if not isinstance(mesh, TetMesh):
        raise UnsupportedOperationError(
            f"This command takes a tetrahedral mesh (dimension 3), got {mesh!r}"
        )
    return mesh


class Pipeline(AlternativeConstructors):
    """Builds and checks space-time meshes stage by stage.

    Each stage records the outcome of its checks in `run_report`. `run` chains all
    stages: coloring (with the barycentric fallback), extrusion, tagging check,
    refinement rounds and final verification, writing every stage's mesh.
    """

    default_configs = RunConfig()

    def __init__(self, configs: RunConfig = default_configs, command: str = "pipeline"):
        """Initializes a pipeline.

        Args:
            configs (RunConfig, optional): The options of the run.
            command (str, optional): Name of the command, recorded in the report.
        """
        self._passed_configs = configs
        for field in self._passed_configs.model_fields:
            setattr(self, field, self._passed_configs[field])
        self.run_report = RunReport(command=command, version=GeneralDefinitions.VERSION)

    @property
    def configs(self) -> RunConfig:
        """The options the pipeline was created with."""
        return self._passed_configs

    def load_input(self) -> tuple[AnyMesh, Optional[np.ndarray]]:
        """Return the input mesh and its coloring, if known."""
        mesh, colors = self.configs.load()
        logger.info("Input: {!r}", mesh)
        self.run_report.summary["input"] = {
            "n_vertices": mesh.n_vertices,
            "n_cells": mesh.n_cells,
            "dimension": mesh.dim,
        }
        return mesh, colors

    def write(self, name: str, mesh: AnyMesh, path: Optional[Path] = None, colors=None):
        """Write `mesh` to `path` (default: `<output_dir>/<name>.mesh`)."""
        path = Path(path) if path is not None else Path(self.output_dir) / f"{name}.mesh"
        write_mesh(mesh, path, colors=colors)
        self.run_report.artifacts[name] = path.as_posix()
        return path

    def color(
        self, mesh: TetMesh, colors=None
    ) -> Optional[tuple[TetMesh, np.ndarray]]:
        """Return `mesh` with a proper 4-coloring, or None if there is none.

        Given colors are verified. Otherwise a coloring is searched for; if none is
        found and `auto_barycentric` is set, the barycentric subdivision and its
        canonical coloring are returned instead.
        """
        if colors is not None:
            check = verify_coloring(mesh, colors).to_check_report()
            self.run_report.add_check(check)
            return (mesh, np.asarray(colors)) if check.passed else None

        result = find_four_coloring(
            mesh, budget=self.budget, exhaustive_threshold=self.exhaustive_threshold
        )
        if result.found:
            self.run_report.add_check(result.to_check_report())
            logger.info("Found a 4-coloring after {} expansions", result.expansions)
            return mesh, result.colors

        if self.auto_barycentric:
            logger.info(
                "No 4-coloring ({}), using the barycentric subdivision", result.status
            )
            self.run_report.messages.append(
                f"coloring search: {result.status}; fell back to barycentric subdivision"
            )
            subdivided, colors = barycentric_subdivide(mesh)
            check = verify_coloring(subdivided, colors).to_check_report()
            self.run_report.add_check(check)
            return subdivided, colors

        self.run_report.add_check(result.to_check_report())
        hint = "rerun with --auto-barycentric to color the barycentric subdivision"
        logger.error("No 4-coloring found ({}); {}", result.status, hint)
        self.run_report.messages.append(f"no 4-coloring ({result.status}): {hint}")
        return None

    def parity(self, mesh: TetMesh) -> EdgeParityReport:
        """Run the edge parity diagnostic and record it."""
        parity = edge_parity_check(mesh)
        self.run_report.add_check(parity.to_check_report())
        return parity

    def extrude(self, mesh: TetMesh, colors) -> PentMesh:
        """Extrude the colored mesh over the configured time slices."""
        slices = self.configs.time_slices()
        pents = extrude_subdivide(mesh, colors, slices)
        logger.info(
            "Extruded {} tets over {} slabs: {} pentatopes",
            mesh.n_cells,
            slices.num_slabs,
            pents.n_cells,
        )
        self.run_report.summary["extruded"] = {
            "n_tets": mesh.n_cells,
            "n_slabs": slices.num_slabs,
            "n_cells": pents.n_cells,
            "expected_n_cells": 4 * mesh.n_cells * slices.num_slabs,
        }
        self.run_report.add_check(
            measure_check(
                "extrusion-measure",
                mesh.total_measure * (slices.last - slices.first),
                pents.total_measure,
            )
        )
        return pents

    def check_tagging(self, pents: PentMesh) -> TaggingReport:
        """Check consistent tagging and record it."""
        tagging = check_consistent_tagging(pents)
        self.run_report.add_check(tagging.to_check_report())
        return tagging

    def refinement_rounds(self, pents: PentMesh) -> Iterator[PentMesh]:
        """Yield the mesh after each refinement round, checking every one of them.

        Every round is checked for conformity and measure conservation; rounds
        whose cells all share a generation are also checked for consistent tagging.
        """
        rng = np.random.default_rng(self.seed)
        expected_measure = pents.total_measure
        for round_number in range(1, self.refine_rounds + 1):
            marked = select_marked_cells(pents, self.configs, rng)
            pents = refine(pents, marked)
            logger.info(
                "Round {}: {} marked, {} cells", round_number, len(marked), pents.n_cells
            )
            conformity = check_conforming(pents).to_check_report()
            self.run_report.add_check(self._named(conformity, round_number))
            self.run_report.add_check(
                measure_check(
                    f"refinement-measure-round-{round_number}",
                    expected_measure,
                    pents.total_measure,
                )
            )
            if len(np.unique(pents.provenance.generation)) == 1:
                tagging = check_consistent_tagging(pents).to_check_report()
                self.run_report.add_check(self._named(tagging, round_number))
            self.run_report.summary[f"round_{round_number}"] = {
                "n_marked": len(marked),
                "n_cells": pents.n_cells,
                "n_vertices": pents.n_vertices,
            }
            yield pents

    @staticmethod
    def _named(check: CheckReport, round_number: int) -> CheckReport:
        return check.model_copy(update={"name": f"{check.name}-round-{round_number}"})

    def verify(self, mesh: AnyMesh, colors=None):
        """Record conformity, and coloring or tagging checks as they apply."""
        self.run_report.add_check(check_conforming(mesh).to_check_report())
        if isinstance(mesh, TetMesh) and colors is not None:
            self.run_report.add_check(verify_coloring(mesh, colors).to_check_report())
        if isinstance(mesh, PentMesh):
            if len(np.unique(mesh.provenance.generation)) > 1:
                self.run_report.messages.append(
                    "cells of several generations: consistent tagging not checked"
                )
            else:
                self.check_tagging(mesh)

    def finish(self) -> int:
        """Print the report, write it if asked, and return the exit code."""
        if self.report is not None:
            self.run_report.export(self.report)
        print(self.run_report.render())
        return self.run_report.exit_code

    def run(self) -> RunReport:
        """Run every stage, writing the stage meshes and `report.json`."""
        output_dir = Path(self.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        mesh, colors = self.load_input()
        mesh = require_tet_mesh(mesh)
        self.write("input", mesh, colors=colors)
        parity = edge_parity_check(mesh)
        self.run_report.summary["edge_parity"] = {
            "n_interior_edges": len(parity.interior_counts),
            "n_odd_interior_edges": len(parity.odd_edges),
        }

        colored = self.color(mesh, colors)
        if colored is None:
            self.run_report.export(output_dir / "report.json")
            return self.run_report
        mesh, colors = colored
        self.write("colored", mesh, colors=colors)

        pents = self.extrude(mesh, colors)
        self.write("extruded", pents)
        self.run_report.add_check(check_conforming(pents).to_check_report())
        self.check_tagging(pents)

        for round_number, pents in enumerate(self.refinement_rounds(pents), start=1):
            self.write(f"refined_{round_number}", pents)

        self.run_report.summary["final"] = {
            "n_cells": pents.n_cells,
            "n_vertices": pents.n_vertices,
            "total_measure": pents.total_measure,
        }
        self.run_report.export(output_dir / "report.json")
        return self.run_report
