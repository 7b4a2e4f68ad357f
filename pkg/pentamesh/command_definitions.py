#!/usr/bin/env python3
"""Commands supported by the package's script."""
from pathlib import Path

from loguru import logger

from .coloring import barycentric_subdivide, verify_coloring
from .cross_sections import export_time_slice
from .mesh_configs import RunConfig, SliceExportOptions
from .mesh_stats import mesh_statistics, print_table, refinement_history
from .pipeline import Pipeline, require_pentatope_mesh, require_tet_mesh


def _pipeline(args) -> Pipeline:
    return Pipeline.from_cli_args(cli_args=args, command=args.command)


def color(args):
    """Search a 4-coloring of the input mesh and write the colored mesh."""
    pipeline = _pipeline(args)
    mesh, _ = pipeline.load_input()
    colored = pipeline.color(require_tet_mesh(mesh))
    if colored is not None and pipeline.output is not None:
        colored_mesh, colors = colored
        pipeline.write("colored", colored_mesh, path=pipeline.output, colors=colors)
    return pipeline.finish()


def parity(args):
    """Report interior edges with an odd number of incident tetrahedra."""
    pipeline = _pipeline(args)
    mesh, _ = pipeline.load_input()
    report = pipeline.parity(require_tet_mesh(mesh))
    if not report.passed:
        print(report.to_dataframe().query("Odd and Interior").to_string(index=False))
    return pipeline.finish()


def barycentric(args):
    """Write the barycentric subdivision of the input mesh with its coloring."""
    pipeline = _pipeline(args)
    mesh, _ = pipeline.load_input()
    subdivided, colors = barycentric_subdivide(require_tet_mesh(mesh))
    pipeline.run_report.add_check(verify_coloring(subdivided, colors).to_check_report())
    pipeline.run_report.summary["barycentric"] = {
        "n_cells": subdivided.n_cells,
        "n_vertices": subdivided.n_vertices,
    }
    if pipeline.output is not None:
        pipeline.write("barycentric", subdivided, path=pipeline.output, colors=colors)
    return pipeline.finish()


def extrude(args):
    """Color (if needed) and extrude the input mesh into tagged pentatopes."""
    pipeline = _pipeline(args)
    mesh, colors = pipeline.load_input()
    colored = pipeline.color(require_tet_mesh(mesh), colors)
    if colored is not None:
        pents = pipeline.extrude(*colored)
        if pipeline.output is not None:
            pipeline.write("extruded", pents, path=pipeline.output)
    return pipeline.finish()


def tag_check(args):
    """Check that neighboring pentatopes are consistently tagged."""
    pipeline = _pipeline(args)
    mesh, _ = pipeline.load_input()
    tagging = pipeline.check_tagging(require_pentatope_mesh(mesh))
    if not tagging.passed:
        print(tagging.to_dataframe().to_string(index=False))
    return pipeline.finish()


def bisect(args):
    """Refine the input pentatope mesh for the requested rounds."""
    pipeline = _pipeline(args)
    mesh, _ = pipeline.load_input()
    pents = require_pentatope_mesh(mesh)
    for pents in pipeline.refinement_rounds(pents):  # noqa: B007
        pass
    pipeline.run_report.summary["final"] = {"n_cells": pents.n_cells}
    if pipeline.output is not None:
        pipeline.write("refined", pents, path=pipeline.output)
    return pipeline.finish()


def verify(args):
    """Check conformity, and coloring or tagging, of the input mesh."""
    pipeline = _pipeline(args)
    mesh, colors = pipeline.load_input()
    pipeline.verify(mesh, colors)
    return pipeline.finish()


def stats(args):
    """Print per-generation statistics and, when refining, per-round shape counts."""
    pipeline = _pipeline(args)
    mesh, colors = pipeline.load_input()
    if mesh.dim == 3:  # noqa: PLR2004
        colored = pipeline.color(mesh, colors)
        if colored is None:
            return pipeline.finish()
        mesh = pipeline.extrude(*colored)

    meshes = [mesh, *pipeline.refinement_rounds(mesh)]
    print_table(mesh_statistics(meshes[-1]))
    if len(meshes) > 1:
        print_table(refinement_history(meshes))
    return pipeline.finish()


def time_slice(args):
    """Export the cross-section of a pentatope mesh at a given time as VTK."""
    pipeline = _pipeline(args)
    options = SliceExportOptions.from_cli_args(args)
    mesh, _ = pipeline.load_input()
    path = pipeline.output or Path(pipeline.output_dir) / f"slice_t{options.time}.vtk"
    section = export_time_slice(require_pentatope_mesh(mesh), options.time, path)
    pipeline.run_report.artifacts["slice"] = Path(path).as_posix()
    pipeline.run_report.summary["slice"] = {
        "time": options.time,
        "n_tets": section.n_cells,
        "volume": section.total_measure,
    }
    return pipeline.finish()


def run_pipeline(args):
    """Run all stages, writing every stage's mesh and a report to the output dir."""
    if args.config is not None:
        configs = RunConfig.from_file(args.config)
        cli_configs = {
            field: value
            for field, value in vars(args).items()
            if field in RunConfig.model_fields
            and value is not None
            and value != RunConfig.get_default(field)
        }
        configs = RunConfig.model_validate(configs.model_dump() | cli_configs)
        logger.debug("Loaded run configs from <{}>", args.config)
        run = Pipeline(configs=configs, command="pipeline")
    else:
        run = _pipeline(args)
    run.run()
    return run.finish()
