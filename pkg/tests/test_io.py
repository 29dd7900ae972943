import json

import numpy as np
import pytest

import splinefield as sf
from splinefield.io import (
    export_field_grid,
    field_grid,
    load_model,
    load_trajectory,
    model_to_dict,
    save_model,
)

from conftest import S_SHAPE_CONTROL, make_random_spline


# -------------------------------------------------------------- trajectories


def test_load_csv_with_timestamps(tmp_path):
    path = tmp_path / "traj.csv"
    path.write_text("t,x1,x2\n0,0,0\n1,1,0\n2,2,0\n")
    traj = load_trajectory(path)
    assert traj.n_samples == 3
    assert traj.dim == 2
    np.testing.assert_array_equal(traj.timestamps, [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(traj.points[:, 0], [0.0, 1.0, 2.0])


def test_load_json_matches_csv(tmp_path):
    csv_path = tmp_path / "traj.csv"
    csv_path.write_text("t,x1,x2\n0,0,0\n1,1,0\n2,2,0\n")
    json_path = tmp_path / "traj.json"
    json_path.write_text(
        json.dumps({"dim": 2, "points": [[0, 0], [1, 0], [2, 0]], "timestamps": [0, 1, 2]})
    )
    a = load_trajectory(csv_path)
    b = load_trajectory(json_path)
    np.testing.assert_array_equal(a.points, b.points)
    np.testing.assert_array_equal(a.timestamps, b.timestamps)


def test_load_csv_nan_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,x2\nnan,0\n1,0\n2,0\n")
    with pytest.raises(sf.FormatError, match="line 2"):
        load_trajectory(path)


def test_load_csv_requires_header(tmp_path):
    path = tmp_path / "noheader.csv"
    path.write_text("0,0\n1,0\n2,0\n")
    with pytest.raises(sf.FormatError, match="header"):
        load_trajectory(path)


def test_load_csv_column_count_mismatch(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("x1,x2\n0,0\n1\n2,0\n")
    with pytest.raises(sf.FormatError, match="line 3"):
        load_trajectory(path)


def test_load_json_dim_mismatch(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dim": 3, "points": [[0, 0], [1, 0], [2, 0]]}))
    with pytest.raises(sf.FormatError, match="dim"):
        load_trajectory(path)


def test_load_too_few_rows(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("x1,x2\n0,0\n1,0\n")
    with pytest.raises(sf.DomainError):
        load_trajectory(path)


# ------------------------------------------------------------------- models


def test_model_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    spline = make_random_spline(rng, 5, 3, terminal_zero_velocity=True)
    spline.metadata = {"source": "unit-test", "fit_residual": 0.125}
    path = tmp_path / "model.json"
    save_model(spline, path)
    loaded = load_model(path)
    np.testing.assert_array_equal(loaded.control_points, spline.control_points)
    assert loaded.terminal_zero_velocity
    assert loaded.metadata == spline.metadata


def test_model_save_load_save_is_byte_identical(tmp_path):
    rng = np.random.default_rng(1)
    spline = make_random_spline(rng, 4, 2)
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    save_model(spline, first)
    save_model(load_model(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_union_model_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    field = sf.UnionField([make_random_spline(rng, 3, 2) for _ in range(3)])
    field.metadata = {"source": "three demos"}
    path = tmp_path / "union.json"
    save_model(field, path)
    loaded = load_model(path)
    assert isinstance(loaded, sf.UnionField)
    assert len(loaded.members) == 3
    for a, b in zip(loaded.members, field.members):
        np.testing.assert_array_equal(a.control_points, b.control_points)
    other = tmp_path / "union2.json"
    save_model(loaded, other)
    assert path.read_bytes() == other.read_bytes()


def test_unknown_version_rejected(tmp_path):
    spline = make_random_spline(np.random.default_rng(3), 2, 2)
    obj = model_to_dict(spline)
    obj["format_version"] = 99
    path = tmp_path / "future.json"
    path.write_text(json.dumps(obj))
    with pytest.raises(sf.VersionError, match="upgrade"):
        load_model(path)


def test_truncated_model_fails_cleanly(tmp_path):
    spline = make_random_spline(np.random.default_rng(4), 2, 2)
    path = tmp_path / "model.json"
    save_model(spline, path)
    path.write_text(path.read_text()[: len(path.read_text()) // 2])
    with pytest.raises(sf.FormatError, match="invalid JSON"):
        load_model(path)


def test_hand_edited_continuity_violation_warns(tmp_path):
    spline = sf.QuadraticSpline.from_control_points(S_SHAPE_CONTROL)
    obj = model_to_dict(spline)
    obj["segments"][1][0][1] += 1e-3  # break positional continuity
    path = tmp_path / "edited.json"
    path.write_text(json.dumps(obj))
    with pytest.warns(RuntimeWarning, match="continuity by up to 0.001"):
        load_model(path)


# -------------------------------------------------------------------- grids


def straight_line_spline():
    return sf.QuadraticSpline.from_control_points(
        np.array([[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]])
    )


def test_grid_two_by_two_hand_checked(tmp_path):
    path = tmp_path / "grid.csv"
    export_field_grid(straight_line_spline(), (0, 2, 1, 2), (2, 2), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,distance,grad_x,grad_y,phase"
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 4
    # Row-major: y slowest. Distances to the x-axis segment are just |y|.
    expected = [(0.0, 1.0, 1.0), (2.0, 1.0, 1.0), (0.0, 2.0, 2.0), (2.0, 2.0, 2.0)]
    for row, (x, y, d) in zip(rows, expected):
        assert (float(row[0]), float(row[1]), float(row[2])) == (x, y, d)
        assert (float(row[3]), float(row[4])) == (0.0, 1.0)
    assert float(rows[0][5]) == 0.0  # phase at the start endpoint
    assert float(rows[1][5]) == 1.0  # and at the end


def test_grid_resolution_row_count(tmp_path):
    path = tmp_path / "grid.csv"
    export_field_grid(straight_line_spline(), (-1, 3, -1, 1), (50, 50), path)
    assert len(path.read_text().splitlines()) == 2501


def test_grid_deterministic(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    spline = make_random_spline(np.random.default_rng(5), 3, 2)
    export_field_grid(spline, (-1, 1, -1, 1), (10, 10), a)
    export_field_grid(spline, (-1, 1, -1, 1), (10, 10), b)
    assert a.read_bytes() == b.read_bytes()


def test_grid_high_dim_requires_slice(tmp_path):
    spline = make_random_spline(np.random.default_rng(6), 2, 4)
    with pytest.raises(sf.DomainError, match="fixed"):
        export_field_grid(spline, (0, 1, 0, 1), (4, 4), tmp_path / "x.csv")
    export_field_grid(
        spline,
        (0, 1, 0, 1),
        (4, 4),
        tmp_path / "sliced.csv",
        axes=(0, 2),
        fixed=[0.0, 0.1, 0.0, -0.2],
    )
    assert (tmp_path / "sliced.csv").exists()


def test_grid_union_field(tmp_path):
    rng = np.random.default_rng(7)
    field = sf.UnionField([make_random_spline(rng, 2, 2) for _ in range(2)])
    rows = field_grid(field, (-1, 1, -1, 1), (5, 5))
    assert len(rows) == 25
    for row in rows:
        d0 = sf.query(field.members[0], [row["x"], row["y"]]).distance
        d1 = sf.query(field.members[1], [row["x"], row["y"]]).distance
        assert row["distance"] == min(d0, d1)


def test_grid_json_format(tmp_path):
    path = tmp_path / "grid.json"
    export_field_grid(straight_line_spline(), (0, 2, 1, 2), (2, 2), path)
    rows = json.loads(path.read_text())
    assert len(rows) == 4
    assert rows[0]["distance"] == 1.0
