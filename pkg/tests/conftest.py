from pathlib import Path

import numpy as np
import pytest
from _pytest.logging import LogCaptureFixture
from loguru import logger

from pentamesh.coloring import find_four_coloring
from pentamesh.extrusion import extrude_subdivide
from pentamesh.fixtures import generate_fixture


@pytest.fixture()
def caplog(caplog: LogCaptureFixture):
    """Override the default `caplog` fixture to propagate Loguru to the caplog handler."""
    # Source: <https://loguru.readthedocs.io/en/stable/resources/migration.html
    #          #replacing-caplog-fixture-from-pytest-library>
    handler_id = logger.add(
        caplog.handler,
        format="{message}",
        level=0,
        filter=lambda record: record["level"].no >= caplog.handler.level,
        enqueue=False,  # Set to 'True' if your test is spawning child processes.
    )
    yield caplog
    logger.remove(handler_id)


# Register markers and constants
def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: timing measurements and large meshes"
    )
    pytest.original_working_directory = Path.cwd()


@pytest.fixture(autouse=True)
def _run_in_tmp_path(tmp_path, monkeypatch):
    # Commands write to the working directory by default
    monkeypatch.chdir(tmp_path)


COLORABLE_FIXTURES = ["single-tet", "kuhn-cube", "kuhn-grid(2)"]


def colored_fixture(name: str):
    """Return a fixture mesh and a 4-coloring of it."""
    mesh = generate_fixture(name)
    result = find_four_coloring(mesh)
    assert result.found, f"{name} should be 4-colorable"
    return mesh, result.colors


@pytest.fixture()
def single_tet():
    return generate_fixture("single-tet")


@pytest.fixture()
def kuhn_cube():
    return generate_fixture("kuhn-cube")


@pytest.fixture()
def odd_fan():
    return generate_fixture("odd-fan")


@pytest.fixture(params=COLORABLE_FIXTURES)
def colored_mesh(request):
    return colored_fixture(request.param)


@pytest.fixture()
def single_prism():
    """The reference tetrahedron extruded over [0, 1]."""
    mesh, colors = colored_fixture("single-tet")
    return extrude_subdivide(mesh, colors, [0.0, 1.0])


@pytest.fixture()
def kuhn_cube_two_slabs():
    mesh, colors = colored_fixture("kuhn-cube")
    return extrude_subdivide(mesh, colors, [0.0, 0.5, 1.0])


@pytest.fixture()
def rng():
    return np.random.default_rng(20240229)


@pytest.fixture()
def colored():
    """Factory: fixture name -> (mesh, coloring)."""
    return colored_fixture
