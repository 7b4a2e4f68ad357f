"""General utility functions and classes."""

import inspect
import json
import time
from functools import wraps
from pathlib import Path
from typing import Optional

from loguru import logger


class MeshError(Exception):
    """Base class for errors raised by the package."""


class InvalidCellError(MeshError):
    """Error raised when a cell references bad ids or coordinates are not finite."""


class DegenerateCellError(MeshError):
    """Error raised when a cell's measure falls below the degeneracy tolerance."""

    def __init__(self, cell: Optional[int], measure: float, tolerance: float):
        """Initialise with the offending cell id (if known) and its measure."""
        self.cell = cell
        self.measure = measure
        where = "Cell" if cell is None else f"Cell {cell}"
        super().__init__(
            f"{where} is degenerate: measure {measure:.3e} <= tolerance {tolerance:.0e}"
        )


class NonManifoldError(MeshError):
    """Error raised when a facet is shared by three or more cells."""


class NonConformingMeshError(MeshError):
    """Error raised when an operation requires a conforming mesh and gets another."""


class ColoringError(MeshError):
    """Error raised for colorings that are not proper or carry invalid labels."""


class IncompleteColoringError(ColoringError):
    """Error raised when a coloring does not cover every vertex of the mesh."""


class InvalidTagError(MeshError):
    """Error raised for tagged pentatopes with repeated vertices or a bad type."""


class StructuralError(MeshError):
    """Error raised when two neighbors have no children sharing their common facet."""


class UnsupportedOperationError(MeshError):
    """Error raised when an operation is not defined for the given mesh."""


class RefinementPreconditionError(MeshError):
    """Error raised when the closure recursion shows the tagging is not consistent."""


class UnknownFixtureError(MeshError):
    """Error raised when asking for a fixture that does not exist."""


class MissingInputError(MeshError):
    """Error raised when a command gets neither an input file nor a fixture."""


class TimeOutOfRangeError(MeshError):
    """Error raised when a time value lies outside the mesh's time span."""


class MeshFileError(MeshError):
    """Error raised when a mesh file cannot be parsed."""

    def __init__(self, message: str, path: Optional[Path] = None, line: int = 0):
        """Initialise with the file path and 1-based line number of the problem."""
        self.path = path
        self.line = line
        location = f"{path}:{line}" if path is not None else f"line {line}"
        super().__init__(f"{location}: {message}")


class MeshReferenceError(MeshFileError):
    """Error raised when a cell references a vertex that does not exist."""

    def __init__(
        self, cell: int, vertex: int, n_vertices: int, path: Optional[Path], line: int
    ):
        """Initialise with the offending cell, vertex id and location."""
        self.cell = cell
        self.vertex = vertex
        super().__init__(
            f"cell {cell} references vertex {vertex}, but only {n_vertices} "
            + "vertices are defined",
            path=path,
            line=line,
        )


def sorted_key(ids) -> tuple[int, ...]:
    """Return the sorted tuple of int ids used as adjacency and midpoint keys."""
    return tuple(sorted(int(i) for i in ids))


def log_elapsed_time(level: str = "DEBUG"):
    """Log the wall-clock time spent in the decorated function/generator."""

    def log_decorator(function):
        """Wrap `function`."""

        @wraps(function)
        def wrapper_f(*args, **kwargs):
            start = time.perf_counter()
            try:
                return function(*args, **kwargs)
            finally:
                elapsed = time.perf_counter() - start
                logger.log(level, "{} took {:.3f}s", function.__name__, elapsed)

        @wraps(function)
        def wrapper_generator_f(*args, **kwargs):
            start = time.perf_counter()
            try:
                yield from function(*args, **kwargs)
            finally:
                elapsed = time.perf_counter() - start
                logger.log(level, "{} took {:.3f}s", function.__name__, elapsed)

        return wrapper_generator_f if inspect.isgeneratorfunction(function) else wrapper_f

    return log_decorator


class AlternativeConstructors:
    """Mixin class for alternative constructors."""

    @classmethod
    def from_dict(cls, configs: dict, **kwargs):
        """Creates an instance from a configuration dictionary.

        Args:
            configs (dict): The configuration options as a dictionary.
            **kwargs: Additional keyword arguments to pass to the class constructor.

        Returns:
            cls: An instance of the class initialized with the given configurations.
        """
        return cls(configs=cls.default_configs.model_validate(configs), **kwargs)

    @classmethod
    def from_cli_args(cls, cli_args, **kwargs):
        """Creates an instance from CLI arguments.

        Extracts relevant options from the CLI arguments and initializes a class instance
        with them.

        Args:
            cli_args: The command line arguments.
            **kwargs: Additional keyword arguments to pass to the class constructor.

        Returns:
            cls: An instance of the class initialized with CLI-specified configurations.
        """
        opts = {
            k: v
            for k, v in vars(cli_args).items()
            if k in cls.default_configs.model_fields and v is not None
        }
        return cls.from_dict(opts, **kwargs)

    @classmethod
    def from_file(cls, fpath: Path, **kwargs):
        """Creates an instance from configs stored in a json file.

        Args:
            fpath (Path): Path to a json file written by `BaseConfigModel.export`.
            **kwargs: Additional keyword arguments to pass to the class constructor.

        Returns:
            cls: An instance of the class initialized with the stored configurations.
        """
        with open(fpath, "r") as configs_file:
            configs = json.load(configs_file)
        logger.debug("Loaded {} configs from <{}>", cls.__name__, fpath)
        return cls.from_dict(configs, **kwargs)
