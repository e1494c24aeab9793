"""Test the records.py module"""

from pathlib import Path

import pytest

from mapnet.config import MapnetConfig
from mapnet.errors import EmptyRecordError, RecordFormatError
from mapnet.records import read_records, record_header, records_frame, write_records


ROWS = [
    {"arm": "federated", "episode": 1, "t": 0, "sum_rate": 4.0, "thetas": {"1": 1}},
    {"arm": "codebook", "episode": 0, "t": 1, "sum_rate": 2.0, "thetas": {}},
    {"arm": "codebook", "episode": 0, "t": 0, "sum_rate": 1.0, "thetas": {}},
    {"arm": "federated", "episode": 0, "t": 0, "sum_rate": 3.0, "thetas": {}},
]


class TestRecordFiles:
    """Test write_records and read_records"""

    @staticmethod
    def test_header() -> None:
        """test the header carries the resolved config and its hash"""

        config = MapnetConfig()
        header = record_header(config, "eval", arms=["codebook"])
        assert header["record_format"] == 1
        assert header["kind"] == "eval"
        assert header["config_hash"] == config.config_hash()
        assert header["config"] == config.resolved()
        assert header["arms"] == ["codebook"]

    @staticmethod
    def test_rows_sorted(tmp_path: Path) -> None:
        """test rows are written by arm, episode and slot"""

        path = write_records(tmp_path / "records" / "eval.ndjson", {"record_format": 1, "kind": "eval"}, ROWS)
        header, rows = read_records(path)
        assert header["kind"] == "eval"
        assert [(r["arm"], r["episode"], r["t"]) for r in rows] == [
            ("codebook", 0, 0),
            ("codebook", 0, 1),
            ("federated", 0, 0),
            ("federated", 1, 0),
        ]

        kept = write_records(tmp_path / "kept.ndjson", {"record_format": 1}, ROWS, order=None)
        assert read_records(kept)[1] == ROWS

    @staticmethod
    def test_deterministic_bytes(tmp_path: Path) -> None:
        """test the same rows give the same file in any input order"""

        header = record_header(MapnetConfig(), "compare")
        first = write_records(tmp_path / "a.ndjson", header, ROWS)
        second = write_records(tmp_path / "b.ndjson", header, list(reversed(ROWS)))
        assert first.read_bytes() == second.read_bytes()

    @staticmethod
    def test_missing_and_empty(tmp_path: Path) -> None:
        """test nothing to read"""

        with pytest.raises(EmptyRecordError):
            read_records(tmp_path / "absent.ndjson")

        empty = tmp_path / "empty.ndjson"
        empty.write_text("\n")
        with pytest.raises(EmptyRecordError):
            read_records(empty)

    @staticmethod
    def test_bad_lines(tmp_path: Path) -> None:
        """test broken json and files without a header"""

        broken = tmp_path / "broken.ndjson"
        broken.write_text('{"record_format": 1}\n{"arm": \n')
        with pytest.raises(RecordFormatError):
            read_records(broken)

        headless = tmp_path / "headless.ndjson"
        headless.write_text('{"arm": "codebook"}\n')
        with pytest.raises(RecordFormatError):
            read_records(headless)


class TestRecordsFrame:
    """Test records_frame"""

    @staticmethod
    def test_frame() -> None:
        """test nested columns are dropped"""

        frame = records_frame(ROWS)
        assert "thetas" not in frame.columns
        assert frame["sum_rate"].sum() == pytest.approx(10.0)
        assert len(frame) == 4

    @staticmethod
    def test_empty() -> None:
        """test no rows"""

        with pytest.raises(EmptyRecordError):
            records_frame([])
