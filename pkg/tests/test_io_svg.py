import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from conftest import quad, quad_grad, sampled
from convexpolar import io
from convexpolar.legendre import SampledFunction
from convexpolar.svg import LinePlot


def test_sampled_function_csv_round_trip(tmp_path):
    f = sampled(quad, -1.0, 1.0, 7, quad_grad)
    path = tmp_path / "f.csv"
    io.write_sampled_function(path, f)
    g = io.read_sampled_function(path)
    np.testing.assert_array_equal(g.grid, f.grid)
    np.testing.assert_array_equal(g.values, f.values)
    np.testing.assert_array_equal(g.gradients, f.gradients)


def test_csv_with_infinite_mask_and_prefix(tmp_path):
    f = SampledFunction([0.0, 1.0, 2.0], [1.0, np.inf, 3.0])
    path = tmp_path / "f.csv"
    io.write_sampled_function(path, f, prefix="eta")
    text = path.read_text()
    assert text.splitlines()[0] == "eta_1,value,infinite"
    g = io.read_sampled_function(path, prefix="eta")
    assert list(g.infinite) == [False, True, False]


def test_csv_unsorted_rows_and_two_dimensional_grid(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("theta_1,value\n2,4\n0,0\n1,1\n")
    g = io.read_sampled_function(path)
    np.testing.assert_array_equal(g.grid[:, 0], [0, 1, 2])
    np.testing.assert_array_equal(g.values, [0, 1, 4])
    path.write_text("theta_2,theta_1,value\n1,0,1\n0,0,0\n1,1,2\n0,1,1\n")
    g = io.read_sampled_function(path)
    assert g.shape == (2, 2)
    np.testing.assert_array_equal(g.values, g.grid.sum(axis=1))


@pytest.mark.parametrize(
    "text",
    ["", "theta_1,value\n", "x,value\n1,2\n", "theta_1,value\n1,abc\n", "theta_1,value\n1,2\n1,3\n"],
)
def test_malformed_csv_is_input_error(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(io.InputError):
        io.read_sampled_function(path)


def test_missing_files_are_input_errors(tmp_path):
    with pytest.raises(io.InputError):
        io.read_sampled_function(tmp_path / "nope.csv")
    with pytest.raises(io.InputError):
        io.read_json(tmp_path / "nope.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(io.InputError):
        io.read_json(tmp_path / "bad.json")


def test_json_is_stable_and_atomic(tmp_path):
    path = tmp_path / "sub" / "out.json"
    io.write_json(path, {"b": 1, "a": [1.5, 2]})
    assert path.read_text() == io.dumps_json({"b": 1, "a": [1.5, 2]})
    assert json.loads(path.read_text()) == {"b": 1, "a": [1.5, 2]}
    assert [p.name for p in path.parent.iterdir()] == ["out.json"]


def test_csv_floats_round_trip_exactly():
    text = io.csv_text(["x"], [[0.1 + 0.2]])
    assert float(text.splitlines()[1]) == 0.1 + 0.2


def test_svg_is_well_formed():
    plot = LinePlot(title="a < b")
    x = np.linspace(-1, 1, 50)
    plot.polyline(x, x**2)
    plot.polyline(x, np.where(x > 0.5, np.nan, -x), color="#000000", width=0.5, opacity=0.4)
    root = ET.fromstring(plot.render())
    lines = root.findall(".//{http://www.w3.org/2000/svg}polyline")
    assert len(lines) == 2
    assert lines[1].get("stroke") == "#000000"
    assert len(lines[1].get("points").split()) == np.count_nonzero(x <= 0.5)


def test_svg_skips_short_lines_and_handles_flat_ranges():
    plot = LinePlot()
    plot.polyline([1.0], [1.0])
    plot.polyline([0.0, 1.0], [2.0, 2.0])
    root = ET.fromstring(plot.render())
    assert len(root.findall(".//{http://www.w3.org/2000/svg}polyline")) == 1
