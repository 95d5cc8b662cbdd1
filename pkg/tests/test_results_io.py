# ============================================================================
# FILE: tests/test_results_io.py
# ============================================================================

"""
Tests for CSV and resolved-config writers
"""

import pandas as pd
import pytest

from phy.harness import ComparisonReport, PairDelta, SnrPoint, SweepResult, run_sweep
from phy.impairments import BackoffPoint
from phy.linkconfig import load_config
from utils.executor import reset_executor
from utils.results_io import (
    NA,
    SWEEP_COLUMNS,
    summary_frame,
    sweep_frame,
    write_backoff,
    write_comparison,
    write_summary,
    write_sweep,
    write_table,
)

pytestmark = pytest.mark.unit


@pytest.fixture
def result(link_config):
    points = [
        SnrPoint(0.0, blocks=8, errors=8),
        SnrPoint(2.0, blocks=8, errors=2),
        SnrPoint(4.0, blocks=8, errors=0, isi_drops=3),
    ]
    return SweepResult(config_id=link_config.config_id, points=points, required_snr_db=None)


def _read(path):
    return pd.read_csv(path, dtype=str, keep_default_na=False)


class TestFrames:
    def test_sweep_columns_and_formats(self, result, link_config):
        frame = sweep_frame(result, link_config)
        assert list(frame.columns) == SWEEP_COLUMNS
        assert frame["snr_db"].tolist() == ["0.00", "2.00", "4.00"]
        assert frame["bler"].tolist() == ["1.000000", "0.250000", "0.000000"]
        assert set(frame["waveform"]) == {"ofdm"}
        assert set(frame["ptrs_scheme"]) == {"none"}
        assert frame["isi_drops"].tolist() == [0, 0, 3]

    def test_missing_required_snr_is_na(self, result):
        assert summary_frame([result])["required_snr_db"].tolist() == [NA]

    def test_required_snr_rounded(self, result):
        result.required_snr_db = 3.14159
        assert summary_frame([result])["required_snr_db"].tolist() == ["3.14"]


class TestWriters:
    def test_write_sweep_files(self, result, link_config, tmp_path):
        paths = write_sweep(result, link_config, tmp_path / "out")
        assert {p.name for p in paths.values()} == {"sweep.csv", "summary.csv", "resolved_config.toml"}
        assert load_config(paths["config"]) == link_config
        sweep = _read(paths["sweep"])
        assert sweep["errors"].tolist() == ["8", "2", "0"]

    def test_unix_line_endings(self, result, link_config, tmp_path):
        paths = write_sweep(result, link_config, tmp_path)
        assert b"\r\n" not in paths["sweep"].read_bytes()

    def test_write_summary_multiple(self, result, tmp_path):
        other = SweepResult(config_id="other", points=[], required_snr_db=7.0)
        frame = _read(write_summary([result, other], tmp_path / "summary.csv"))
        assert frame.values.tolist() == [[result.config_id, NA], ["other", "7.00"]]

    def test_write_comparison(self, tmp_path):
        report = ComparisonReport(
            required_snr_db={"a": 1.0, "b": None},
            deltas=[PairDelta("a", "b", None)],
            orderings=[],
        )
        frame = _read(write_comparison(report, tmp_path / "comparison.csv"))
        assert frame.values.tolist() == [["a", "b", NA]]

    def test_write_backoff(self, tmp_path):
        points = [BackoffPoint(0.0, 18.25, 4.1234, False), BackoffPoint(0.5, 21.0, 3.0, True)]
        frame = _read(write_backoff(points, tmp_path / "backoff.csv"))
        assert list(frame.columns) == ["backoff_db", "aclr_db", "evm_pct", "passes"]
        assert frame.values.tolist() == [["0.00", "18.250", "4.123", "0"], ["0.50", "21.000", "3.000", "1"]]

    def test_write_table_formats_floats_only(self, tmp_path):
        rows = [{"name": "x", "count": 3, "value": 0.5}, {"name": "y", "count": 4, "value": float("nan")}]
        frame = _read(write_table(rows, ["name", "count", "value"], tmp_path / "t.csv", digits=2))
        assert frame.values.tolist() == [["x", "3", "0.50"], ["y", "4", NA]]


@pytest.mark.integration
class TestReproducibility:
    def test_csv_identical_across_thread_counts(self, link_config, tmp_path):
        write_sweep(run_sweep(link_config, threads=1), link_config, tmp_path / "serial")
        write_sweep(run_sweep(link_config, threads=2), link_config, tmp_path / "parallel")
        reset_executor()
        for name in ("sweep.csv", "summary.csv", "resolved_config.toml"):
            assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()

    def test_rerun_from_resolved_config(self, link_config, tmp_path):
        first = write_sweep(run_sweep(link_config), link_config, tmp_path / "first")
        reloaded = load_config(first["config"])
        second = write_sweep(run_sweep(reloaded), reloaded, tmp_path / "second")
        assert first["sweep"].read_bytes() == second["sweep"].read_bytes()
