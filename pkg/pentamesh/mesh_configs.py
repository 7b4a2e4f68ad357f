#!/usr/bin/env python3
"""Registration and validation of options."""
import argparse
import json
import types
import typing
from pathlib import Path
from typing import Literal, Optional, Union, get_args, get_origin

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from .extrusion import TimeSlices, check_slice_values, split_comma_separated
from .fixtures import generate_fixture
from .general_utils import MissingInputError
from .mesh_io import AnyMesh, parse_mesh


class BaseConfigModel(BaseModel, extra="forbid"):
    """Base model for configuring options."""

    @classmethod
    def get_allowed_values(cls, field: str):
        """Return a tuple of allowed values for `field`."""
        annotation = cls._get_field_param(field=field, param="annotation")
        if isinstance(annotation, type(Literal[""])):
            return get_args(annotation)
        return None

    @classmethod
    def get_type(cls, field: str):
        """Return the plain type of `field`, unwrapping Optional; None for containers."""
        type_hint = typing.get_type_hints(cls)[field]
        if get_origin(type_hint) in (Union, types.UnionType):
            args = [arg for arg in get_args(type_hint) if arg is not type(None)]
            type_hint = args[0] if len(args) == 1 else None
        if isinstance(type_hint, type) and get_origin(type_hint) is None:
            return type_hint
        return None

    @classmethod
    def get_default(cls, field: str):
        """Return allowed value(s) for `field`."""
        return cls.model_fields[field].get_default()

    @classmethod
    def get_description(cls, field: str):
        """Return description of `field`."""
        return cls._get_field_param(field=field, param="description")

    @classmethod
    def from_cli_args(cls, cli_args: argparse.Namespace):
        """Return an instance of the class from CLI args."""
        relevant_args = {
            k: v
            for k, v in vars(cli_args).items()
            if k in cls.model_fields and v is not None
        }
        return cls.model_validate(relevant_args)

    @classmethod
    def _get_field_param(cls, field: str, param: str):
        """Return param `param` of field `field`."""
        return getattr(cls.model_fields[field], param, None)

    def __getitem__(self, item):
        """Make possible to retrieve values as in a dict."""
        try:
            return getattr(self, item)
        except AttributeError as error:
            raise KeyError(item) from error

    def export(self, fpath: Path):
        """Export the model's data to a file."""
        fpath = Path(fpath)
        fpath.parent.mkdir(parents=True, exist_ok=True)
        with open(fpath, "w") as configs_file:
            configs_file.write(self.model_dump_json(indent=2, exclude_unset=True))

    @classmethod
    def from_file(cls, fpath: Path):
        """Return an instance of the class given configs stored in a json file."""
        with open(fpath, "r") as configs_file:
            return cls.model_validate(json.load(configs_file))


class InputOptions(BaseConfigModel):
    """Where the input mesh comes from."""

    input: Optional[Path] = Field(
        default=None,
        description="Mesh file, native or either file of a TetGen .node/.ele pair",
    )
    fixture: Optional[str] = Field(
        default=None,
        description="Built-in mesh: single-tet, kuhn-cube, kuhn-grid(n) or odd-fan",
    )

    @model_validator(mode="after")
    def check_single_source(self):
        """Refuse both an input file and a fixture."""
        if self.input is not None and self.fixture is not None:
            raise ValueError("Pass either an input file or a fixture, not both")
        return self

    def load(self) -> tuple[AnyMesh, Optional[np.ndarray]]:
        """Read or generate the input mesh, with its coloring if the file has one.

        Raises:
            MissingInputError: If neither a file nor a fixture was given.
        """
        if self.fixture is not None:
            return generate_fixture(self.fixture), None
        if self.input is None:
            raise MissingInputError("No input mesh: pass --input FILE or --fixture NAME")
        return parse_mesh(self.input)


class OutputOptions(BaseConfigModel):
    """Where results go."""

    output: Optional[Path] = Field(
        default=None,
        description="Output mesh file (native format; .vtk for a VTK file)",
    )
    output_dir: Path = Field(
        default=Path("pentamesh_output"),
        description="Directory for the stage meshes and report of the pipeline",
    )
    report: Optional[Path] = Field(
        default=None, description="Write a machine-readable JSON report to this file"
    )


class ColoringOptions(BaseConfigModel):
    """Options of the 4-coloring search."""

    budget: int = Field(
        default=1_000_000, gt=0, description="Maximum node expansions of the search"
    )
    exhaustive_threshold: int = Field(
        default=64,
        ge=0,
        description="Meshes with fewer vertices are searched without budget",
    )
    auto_barycentric: bool = Field(
        default=False,
        description="Fall back to the barycentric subdivision if no coloring is found",
    )


class SliceOptions(BaseConfigModel):
    """Time slices of the extrusion."""

    slices: Optional[tuple[float, ...]] = Field(
        default=None,
        description="Comma-separated, strictly increasing times; overrides --t0/--t1",
    )
    t0: float = Field(default=0.0, description="First slice time")
    t1: float = Field(default=1.0, description="Last slice time")
    num_slabs: int = Field(default=1, ge=1, description="Number of equal slabs")

    @field_validator("slices", mode="before")
    @classmethod
    def split_slices(cls, slices):
        """Accept "0,0.5,1" as well as a sequence."""
        return split_comma_separated(slices)

    @field_validator("slices")
    @classmethod
    def check_slices(cls, slices):
        """Check the slice times are finite and strictly increasing."""
        return None if slices is None else check_slice_values(slices)

    @model_validator(mode="after")
    def check_time_span(self):
        """Require t0 < t1."""
        if not self.t0 < self.t1:
            raise ValueError(f"t0 must be smaller than t1, got {self.t0} and {self.t1}")
        return self

    def time_slices(self) -> TimeSlices:
        """Return the slices, explicit or uniform."""
        if self.slices is not None:
            return TimeSlices(values=self.slices)
        return TimeSlices.uniform(self.t0, self.t1, self.num_slabs)


class RefinementOptions(BaseConfigModel):
    """Which cells to bisect, and for how many rounds."""

    refine_rounds: int = Field(default=0, ge=0, description="Number of refinement rounds")
    uniform: bool = Field(default=False, description="Mark every cell in every round")
    mark_ids: Optional[tuple[int, ...]] = Field(
        default=None, description="Comma-separated ids of cells marked in every round"
    )
    mark_frac: Optional[float] = Field(
        default=None,
        gt=0.0,
        le=1.0,
        description="Fraction of cells marked at random in every round",
    )
    seed: int = Field(default=0, description="Seed of the random marking")

    @field_validator("mark_ids", mode="before")
    @classmethod
    def split_mark_ids(cls, mark_ids):
        """Accept "0,3,7" as well as a sequence."""
        return split_comma_separated(mark_ids)

    @model_validator(mode="after")
    def check_single_marking(self):
        """Allow at most one marking strategy, and require one when refining."""
        strategies = [self.uniform, self.mark_ids is not None, self.mark_frac is not None]
        if sum(strategies) > 1:
            raise ValueError("Choose one of --uniform, --mark-ids and --mark-frac")
        if self.refine_rounds and not any(strategies):
            raise ValueError(
                "Refinement needs a marking: --uniform, --mark-ids or --mark-frac"
            )
        return self


class SliceExportOptions(BaseConfigModel):
    """Cross-section export."""

    time: float = Field(description="Time of the cross-section")


class RunConfig(
    InputOptions, OutputOptions, ColoringOptions, SliceOptions, RefinementOptions
):
    """All options of a pipeline run."""
