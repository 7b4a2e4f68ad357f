#!/usr/bin/env python3
"""Space-time pentatope meshes by extrusion-subdivision, with bisection refinement."""
import os
import sys
from dataclasses import dataclass
from importlib.metadata import metadata, version

from loguru import logger

logger.remove()
logger.add(
    sys.stderr,
    level=os.environ.get("LOGLEVEL", os.environ.get("LOGURU_LEVEL", "INFO")),
)


@dataclass
class GeneralDefinitions:
    """General definitions for the package."""

    # Main package info
    PACKAGE_NAME = __name__
    VERSION = version(__name__)
    PACKAGE_DESCRIPTION = metadata(__name__)["Summary"]

    # Numerical constants
    MEASURE_TOLERANCE = 1e-14
    NATIVE_FORMAT_VERSION = 1
