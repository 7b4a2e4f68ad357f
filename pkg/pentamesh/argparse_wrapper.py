#!/usr/bin/env python3
"""Wrappers for argparse functionality."""
import argparse
import contextlib
import sys
from pathlib import Path

from pydantic import BaseModel

from . import GeneralDefinitions
from .command_definitions import (
    barycentric,
    bisect,
    color,
    extrude,
    parity,
    run_pipeline,
    stats,
    tag_check,
    time_slice,
    verify,
)
from .mesh_configs import (
    ColoringOptions,
    InputOptions,
    OutputOptions,
    RefinementOptions,
    SliceExportOptions,
    SliceOptions,
)


def _populate_parser_from_pydantic_model(parser, model: BaseModel):
    _argarse2pydantic = {
        "type": model.get_type,
        "default": model.get_default,
        "choices": model.get_allowed_values,
        "help": model.get_description,
    }

    for field_name, field in model.model_fields.items():
        with contextlib.suppress(AttributeError):
            if not field.json_schema_extra.get("changeable", True):
                continue

        args_opts = {
            key: _argarse2pydantic[key](field_name)
            for key in _argarse2pydantic
            if _argarse2pydantic[key](field_name) is not None
        }

        if args_opts.get("type") == bool:
            if args_opts.get("default") is True:
                args_opts["action"] = "store_false"
            else:
                args_opts["action"] = "store_true"
            args_opts.pop("default", None)
            args_opts.pop("type", None)

        args_opts["required"] = field.is_required()
        if "help" in args_opts:
            args_opts["help"] = f"{args_opts['help']} (default: %(default)s)"
        if "default" in args_opts and isinstance(args_opts["default"], (list, tuple)):
            args_opts.pop("type", None)
            args_opts["nargs"] = "*"

        parser.add_argument(f"--{field_name.replace('_', '-')}", **args_opts)

    return parser


def _options_parser(model: BaseModel):
    return _populate_parser_from_pydantic_model(
        parser=argparse.ArgumentParser(
            formatter_class=argparse.ArgumentDefaultsHelpFormatter, add_help=False
        ),
        model=model,
    )


def get_parsed_args(argv=None, default_command="pipeline"):
    """Get parsed command line arguments.

    Args:
        argv (list): A list of passed command line args.
        default_command (str, optional): The command run when only options are given.

    Returns:
        argparse.Namespace: Parsed command line arguments.

    """
    if argv is None:
        argv = sys.argv[1:]
    first_argv = next(iter(argv), "'")
    info_flags = ["--version", "-v", "-h", "--help"]
    if argv and first_argv.startswith("-") and first_argv not in info_flags:
        argv = [default_command, *argv]

    # Main parser that will handle the script's commands
    main_parser = argparse.ArgumentParser(
        prog=GeneralDefinitions.PACKAGE_NAME,
        description=GeneralDefinitions.PACKAGE_DESCRIPTION,
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    main_parser.add_argument(
        "--version",
        "-v",
        action="version",
        version=f"{GeneralDefinitions.PACKAGE_NAME} v" + GeneralDefinitions.VERSION,
    )
    subparsers = main_parser.add_subparsers(
        title="commands",
        dest="command",
        required=True,
        description=(
            "Valid commands (note that commands also accept their "
            + "own arguments, in particular [-h]):"
        ),
        help="command description",
    )

    # Option groups shared by the commands
    input_parser = _options_parser(InputOptions)
    output_parser = _options_parser(OutputOptions)
    coloring_parser = _options_parser(ColoringOptions)
    slices_parser = _options_parser(SliceOptions)
    refinement_parser = _options_parser(RefinementOptions)
    # Own copy: parents share their actions, so defaults set here stay out of the others
    bisect_refinement_parser = _options_parser(RefinementOptions)
    bisect_refinement_parser.set_defaults(refine_rounds=1)
    io_parsers = [input_parser, output_parser]

    commands = [
        ("color", color, [coloring_parser], "Search a 4-coloring of a tet mesh."),
        ("parity", parity, [], "Flag interior edges with an odd number of tets."),
        (
            "barycentric",
            barycentric,
            [],
            "Write the barycentric subdivision of a tet mesh, with its 4-coloring.",
        ),
        (
            "extrude",
            extrude,
            [coloring_parser, slices_parser],
            "Extrude a 4-colored tet mesh into tagged space-time pentatopes.",
        ),
        ("tag-check", tag_check, [], "Check consistent tagging of a pentatope mesh."),
        (
            "bisect",
            bisect,
            [bisect_refinement_parser],
            "Refine a pentatope mesh by conforming bisection.",
        ),
        ("verify", verify, [], "Check conformity and coloring or tagging of a mesh."),
        (
            "stats",
            stats,
            [coloring_parser, slices_parser, refinement_parser],
            "Print cell counts, measures and shape classes per generation.",
        ),
        (
            "slice",
            time_slice,
            [_options_parser(SliceExportOptions)],
            "Export the cross-section of a pentatope mesh at a given time as VTK.",
        ),
    ]
    for name, run_command, parents, help_message in commands:
        command_parser = subparsers.add_parser(
            name, parents=[*io_parsers, *parents], help=help_message
        )
        command_parser.set_defaults(run_command=run_command)

    # Whole pipeline
    parser_pipeline = subparsers.add_parser(
        "pipeline",
        aliases=["run"],
        parents=[*io_parsers, coloring_parser, slices_parser, refinement_parser],
        help="Color, extrude, check, refine and verify, writing every stage.",
    )
    parser_pipeline.add_argument(
        "--config",
        type=Path,
        default=None,
        help="JSON file with the run options; options given here override it.",
    )
    parser_pipeline.set_defaults(run_command=run_pipeline)

    return main_parser.parse_args(argv)
