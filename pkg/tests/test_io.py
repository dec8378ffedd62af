"""Round-trip and error-path tests for the file formats."""
import numpy as np
import pytest

from fcls.constraints import Box, BoxSchedule
from fcls.errors import ParseError, ValidationError
from fcls.io import (
    TRACE_COLUMNS,
    read_box_schedule,
    read_config,
    read_matrix,
    read_trace_csv,
    read_vector,
    write_box_schedule,
    write_matrix,
    write_summary,
    write_trace_csv,
    write_vector,
)
from fcls.operators import build_kaczmarz
from fcls.solver import LLSInstance, SolverConfig, run_fca


class TestMatrixFiles:
    def test_round_trip_is_bit_identical(self, tmp_path):
        a = np.random.default_rng(3).standard_normal((5, 4))
        path = tmp_path / "a.mtx"
        write_matrix(path, a)
        assert np.array_equal(read_matrix(path), a)

    def test_coordinate_format_read(self, tmp_path):
        path = tmp_path / "coo.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real general\n2 3 2\n1 1 2.5\n2 3 -1.0\n"
        )
        a = read_matrix(path)
        expected = np.array([[2.5, 0.0, 0.0], [0.0, 0.0, -1.0]])
        assert np.array_equal(a, expected)

    def test_missing_file_names_path(self, tmp_path):
        path = tmp_path / "absent.mtx"
        with pytest.raises(ParseError, match="absent.mtx"):
            read_matrix(path)

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "noise.mtx"
        path.write_text("this is not a matrix\n")
        with pytest.raises(ParseError, match="noise.mtx"):
            read_matrix(path)


class TestVectorFiles:
    def test_round_trip_is_bit_identical(self, tmp_path):
        x = np.random.default_rng(4).standard_normal(9)
        path = tmp_path / "x.txt"
        write_vector(path, x)
        assert np.array_equal(read_vector(path), x)

    def test_comments_and_blanks_skipped(self, tmp_path):
        path = tmp_path / "x.txt"
        path.write_text("# header\n1.5\n\n-2.0\n")
        assert np.array_equal(read_vector(path), [1.5, -2.0])

    def test_bad_line_reports_file_and_line(self, tmp_path):
        path = tmp_path / "x.txt"
        path.write_text("1.0\nnot-a-number\n")
        with pytest.raises(ParseError, match=r"x\.txt:2"):
            read_vector(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "x.txt"
        path.write_text("# only a comment\n")
        with pytest.raises(ParseError, match="no values"):
            read_vector(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError, match="gone.txt"):
            read_vector(tmp_path / "gone.txt")


class TestBoxScheduleFiles:
    def test_round_trip(self, tmp_path):
        big = Box(lower=np.array([-1.0, -1.0]), upper=np.array([1.0, 1.0]))
        small = Box(lower=np.array([0.0, 0.25]), upper=np.array([0.5, 1.0]))
        schedule = BoxSchedule(boxes=(big, big, small), terminal=small)
        path = tmp_path / "schedule.json"
        write_box_schedule(path, schedule)
        loaded = read_box_schedule(path)
        assert len(loaded.boxes) == 3
        assert loaded.terminal.same_as(small)
        for original, read in zip(schedule.boxes, loaded.boxes):
            assert original.same_as(read)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "schedule.json"
        path.write_text('{\n  "terminal": [broken\n}\n')
        with pytest.raises(ParseError, match=r"schedule\.json:2"):
            read_box_schedule(path)

    def test_missing_terminal_rejected(self, tmp_path):
        path = tmp_path / "schedule.json"
        path.write_text('{"boxes": []}\n')
        with pytest.raises(ParseError, match="terminal"):
            read_box_schedule(path)

    def test_invalid_bounds_surface_as_validation_error(self, tmp_path):
        path = tmp_path / "schedule.json"
        path.write_text('{"boxes": [], "terminal": {"lower": [1.0], "upper": [0.0]}}\n')
        with pytest.raises(ValidationError):
            read_box_schedule(path)


class TestConfigFiles:
    def test_reads_object(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text('{"method": "kaczmarz", "relaxation": 1.5}\n')
        assert read_config(path) == {"method": "kaczmarz", "relaxation": 1.5}

    def test_non_object_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("[1, 2]\n")
        with pytest.raises(ParseError, match="object"):
            read_config(path)


class TestTraceCsv:
    def make_trace(self, with_monitors: bool):
        inst = LLSInstance([[1.0], [1.0]], [1.0, 0.0])
        config = SolverConfig()
        if with_monitors:
            config = SolverConfig(reference_point=np.array([0.0]), condition1_probes=(0,))
        return run_fca(build_kaczmarz(inst.a), inst, x0=np.array([2.0]), config=config)

    def test_header_and_row_count(self, tmp_path):
        trace = self.make_trace(with_monitors=False)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, trace)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(TRACE_COLUMNS)
        assert len(lines) == trace.iterations + 2

    def test_inactive_monitors_leave_empty_cells(self, tmp_path):
        trace = self.make_trace(with_monitors=False)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, trace)
        first_row = path.read_text().splitlines()[1].split(",")
        assert first_row[3] == "" and first_row[4] == "" and first_row[5] == ""
        assert first_row[2] == ""  # step norm undefined at the start point

    def test_round_trip_values(self, tmp_path):
        trace = self.make_trace(with_monitors=True)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, trace)
        data = read_trace_csv(path)
        assert data["k"] == list(range(trace.iterations + 1))
        assert data["residual"][0] == trace.residuals[0]
        assert data["fejer_distance"][0] == trace.fejer_distances[0]

    def test_write_is_deterministic(self, tmp_path):
        trace = self.make_trace(with_monitors=True)
        first = tmp_path / "one.csv"
        second = tmp_path / "two.csv"
        write_trace_csv(first, trace)
        write_trace_csv(second, trace)
        assert first.read_bytes() == second.read_bytes()

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("wrong,header\n")
        with pytest.raises(ParseError, match="header"):
            read_trace_csv(path)

    def test_bad_cell_reports_line(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text(",".join(TRACE_COLUMNS) + "\n0,x,,,,\n")
        with pytest.raises(ParseError, match=r"trace\.csv:2"):
            read_trace_csv(path)


class TestSummary:
    def test_written_verbatim(self, tmp_path):
        path = tmp_path / "summary.txt"
        write_summary(path, "status: converged\n")
        assert path.read_text() == "status: converged\n"
