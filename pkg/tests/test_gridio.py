import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdii.field_core import BoundaryTrace, Grid2D, ScalarField
from cdii.gridio import (
    GridFormatError,
    format_grid_text,
    parse_grid_text,
    read_grid_text,
    read_trace_csv,
    write_grid_text,
    write_trace_csv,
)


def test_grid_text_layout():
    g = Grid2D(3, 3, 0.5, 1.0, -1.0, 2.0)
    u = ScalarField(g, [[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    text = format_grid_text(u)
    lines = text.splitlines()
    assert lines[0] == "3 3 0.5 1 -1 2"
    assert lines[1] == "1 2 3"  # bottom row first
    assert lines[2] == "4 5 6"


@given(st.lists(st.floats(-1e300, 1e300, allow_nan=False), min_size=12, max_size=12))
def test_grid_text_round_trip_is_exact(vals):
    g = Grid2D(4, 3, 0.1, 1 / 3, 0.0, 0.0)
    u = ScalarField(g, np.array(vals).reshape(3, 4))
    back = parse_grid_text(format_grid_text(u))
    assert back.grid.same_as(g) and back.grid.hy == g.hy
    np.testing.assert_array_equal(back.values, u.values)


def test_file_round_trip(tmp_path):
    g = Grid2D.square(5)
    u = ScalarField.from_function(g, lambda x, y: np.exp(x) * y)
    write_grid_text(tmp_path / "u.txt", u)
    np.testing.assert_array_equal(read_grid_text(tmp_path / "u.txt").values, u.values)


@pytest.mark.parametrize(
    "text, line",
    [
        ("", 1),
        ("3 3 0.5 0.5 0\n", 1),
        ("3 3 0.5 0.5 0 zero\n", 1),
        ("3 3 0.5 0.5 0 0\n1 2 3\n4 oops 6\n7 8 9\n", 3),
        ("3 3 0.5 0.5 0 0\n1 2 3\n4 5 6\n7 8 nan\n", 4),
        ("3 3 0.5 0.5 0 0\n1 2 3\n4 5 6\n7 8\n", 4),
        ("1 3 0.5 0.5 0 0\n1 2 3\n", 1),
    ],
)
def test_malformed_grid_text_names_the_line(text, line):
    with pytest.raises(GridFormatError) as exc:
        parse_grid_text(text, "f.txt")
    assert exc.value.line == line
    assert f"f.txt:{line}" in str(exc.value)


def test_missing_file_is_format_error(tmp_path):
    with pytest.raises(GridFormatError):
        read_grid_text(tmp_path / "absent.txt")


def test_trace_csv_round_trip(tmp_path):
    g = Grid2D.square(6)
    f = BoundaryTrace.from_function(g, lambda x, y: x - 2 * y)
    write_trace_csv(tmp_path / "f.csv", f)
    back = read_trace_csv(tmp_path / "f.csv", g)
    np.testing.assert_array_equal(back.indices, f.indices)
    np.testing.assert_array_equal(back.values, f.values)


def test_trace_csv_errors(tmp_path):
    g = Grid2D.square(4)
    p = tmp_path / "f.csv"
    p.write_text("index,value\n0,1.0\n1,abc\n")
    with pytest.raises(GridFormatError) as exc:
        read_trace_csv(p, g)
    assert exc.value.line == 3
    p.write_text("index,value\n0,1.0\n")
    with pytest.raises(GridFormatError, match="every boundary node"):
        read_trace_csv(p, g)
