import json
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from polyriesz import config  # noqa: E402
from polyriesz.geometry import Polygon, regular_ngon  # noqa: E402


@pytest.fixture
def unit_square():
    return Polygon(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))


@pytest.fixture
def regular_hexagon():
    return regular_ngon(6, area=math.pi)


@pytest.fixture
def irregular_pentagon():
    return Polygon(np.array([[0.0, 0.0], [1.3, -0.2], [1.7, 0.9], [0.6, 1.5], [-0.4, 0.8]]))


@pytest.fixture
def polygon_file(tmp_path):
    """Write vertices to a polygon JSON file and return its path."""

    def write(vertices, name="polygon.json"):
        path = tmp_path / name
        path.write_text(json.dumps({"vertices": [list(map(float, v)) for v in vertices]}))
        return str(path)

    return write


@pytest.fixture(autouse=True)
def single_thread():
    previous = config.thread_override()
    config.set_threads(1)
    yield
    config.set_threads(previous)
