# ============================================================================
# FILE: tests/test_cli.py
# ============================================================================

"""
Tests for the sublink command line: outputs, reproducibility and exit codes
"""

import pandas as pd
import pytest

import cli as cli_module
from cli import main
from phy import harness
from phy.harness import ComparisonReport, DropResult, OrderingCheck, PairDelta
from phy.linkconfig import dump_config, load_config
from tests.link_configs import small_config
from utils.error_codes import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ERROR, EXIT_OK
from utils.exceptions import NumericalError
from utils.executor import reset_executor

pytestmark = pytest.mark.integration

HIGH_SNR_SWEEP = {"snr_start_db": 20.0, "snr_stop_db": 25.0, "snr_step_db": 5.0}


@pytest.fixture(autouse=True)
def _shutdown_pool():
    yield
    reset_executor()


def _write_config(path, **sections):
    path.write_text(dump_config(small_config(**sections)))
    return str(path)


@pytest.fixture
def config_file(tmp_path):
    return _write_config(tmp_path / "link.toml")


def _run(*args):
    return main(["--no-log-file", *args])


def _read(path):
    return pd.read_csv(path, dtype=str, keep_default_na=False)


class TestValidateConfig:
    def test_prints_resolved_config(self, config_file, capsys):
        assert _run("validate-config", "--config", config_file) == EXIT_OK
        out = capsys.readouterr().out
        assert f"# config_id: {small_config().config_id}" in out
        assert "[numerology]" in out

    def test_missing_file(self, tmp_path):
        assert _run("validate-config", "--config", str(tmp_path / "absent.toml")) == EXIT_CONFIG_ERROR

    def test_invalid_value(self, config_file):
        assert _run("validate-config", "--config", config_file, "--set", "waveform.rank=5") == EXIT_CONFIG_ERROR

    def test_malformed_override(self, config_file):
        assert _run("validate-config", "--config", config_file, "--set", "rank") == EXIT_CONFIG_ERROR

    def test_unknown_command(self):
        assert _run("simulate") == EXIT_CONFIG_ERROR

    def test_missing_required_option(self):
        assert _run("validate-config") == EXIT_CONFIG_ERROR


class TestSimulation:
    def test_run_writes_drops(self, config_file, tmp_path):
        out = tmp_path / "run"
        assert _run("run", "--config", config_file, "--out", str(out), "--snr-db", "30", "--drops", "3", "--threads", "1") == EXIT_OK
        drops = _read(out / "drops.csv")
        assert drops["drop_index"].tolist() == ["0", "1", "2"]
        assert drops["block_error"].tolist() == ["0", "0", "0"]
        assert (out / "resolved_config.toml").is_file()

    def test_sweep_rerun_is_byte_identical(self, config_file, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        assert _run("sweep", "--config", config_file, "--out", str(first), "--threads", "1") == EXIT_OK
        resolved = str(first / "resolved_config.toml")
        assert _run("sweep", "--config", resolved, "--out", str(second), "--threads", "2") == EXIT_OK
        for name in ("sweep.csv", "summary.csv", "resolved_config.toml"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_seed_option_lands_in_snapshot(self, config_file, tmp_path):
        out = tmp_path / "seeded"
        assert _run("sweep", "--config", config_file, "--out", str(out), "--seed", "42", "--threads", "1") == EXIT_OK
        assert load_config(out / "resolved_config.toml").sweep.master_seed == 42

    def test_numerical_failure_exit_code(self, config_file, tmp_path, monkeypatch):
        def fail(*args, **kwargs):
            raise NumericalError("singular equalizer")

        monkeypatch.setattr(cli_module, "run_sweep", fail)
        assert _run("sweep", "--config", config_file, "--out", str(tmp_path)) == EXIT_NUMERICAL_ERROR

    def test_all_drops_failing_exits_3(self, config_file, tmp_path, monkeypatch):
        def broken(cfg, snr_db, drop_index, snr_index=0):
            return DropResult(snr_db, drop_index, True, numerical_failure=True)

        monkeypatch.setattr(harness, "run_drop", broken)
        assert _run("sweep", "--config", config_file, "--out", str(tmp_path), "--threads", "1") == EXIT_NUMERICAL_ERROR

    def test_sweep_reports_isi_drops(self, tmp_path):
        single_point = {"snr_start_db": 30.0, "snr_stop_db": 30.0}
        config = _write_config(tmp_path / "cdl.toml", channel={"channel": "cdl-e"}, sweep=single_point)
        out = tmp_path / "isi"
        assert _run("sweep", "--config", config, "--out", str(out), "--threads", "1") == EXIT_OK
        sweep = _read(out / "sweep.csv")
        assert sweep["isi_drops"].tolist() == sweep["blocks"].tolist()

    def test_compare(self, tmp_path, capsys):
        ofdm = _write_config(tmp_path / "ofdm.toml", sweep={**HIGH_SNR_SWEEP, "config_id": "ofdm"})
        sc = _write_config(tmp_path / "sc.toml", waveform={"waveform": "sc-fdma"}, sweep={**HIGH_SNR_SWEEP, "config_id": "sc"})
        out = tmp_path / "cmp"
        code = _run("compare", "--config", ofdm, "--config", sc, "--out", str(out), "--expect", "sc:ofdm", "--threads", "1")
        assert code == EXIT_OK
        assert "sc <= ofdm: ok" in capsys.readouterr().out
        assert _read(out / "comparison.csv").values.tolist() == [["ofdm", "sc", "0.00"]]
        assert _read(out / "summary.csv")["config_id"].tolist() == ["ofdm", "sc"]
        assert (out / "resolved_sc.toml").is_file()

    def test_compare_violated_ordering_exits_3(self, config_file, tmp_path, monkeypatch, capsys):
        report = ComparisonReport(
            {"ofdm": 3.0, "sc": 5.0},
            [PairDelta("ofdm", "sc", 2.0)],
            [OrderingCheck("sc", "ofdm", False)],
        )
        monkeypatch.setattr(cli_module, "compare_schemes", lambda *args, **kwargs: report)
        code = _run("compare", "--config", config_file, "--out", str(tmp_path), "--expect", "sc:ofdm")
        assert code == EXIT_NUMERICAL_ERROR
        assert "sc <= ofdm: VIOLATED" in capsys.readouterr().out
        assert (tmp_path / "comparison.csv").is_file()

    def test_compare_bad_expectation(self, config_file, tmp_path):
        code = _run("compare", "--config", config_file, "--out", str(tmp_path), "--expect", "only-one-id")
        assert code == EXIT_CONFIG_ERROR


class TestAnalyzers:
    def test_backoff_with_ideal_amplifier(self, tmp_path):
        config = _write_config(tmp_path / "ideal.toml", pa={"kind": "ideal"})
        out = tmp_path / "bo"
        assert _run("backoff", "--config", config, "--out", str(out)) == EXIT_OK
        table = _read(out / "backoff.csv")
        assert len(table) == 8
        assert set(table["backoff_db"]) == {"0.00"}

    def test_backoff_trace_files(self, tmp_path):
        config = _write_config(tmp_path / "rapp.toml", pa={"kind": "rapp", "step_db": 5.0, "max_backoff_db": 10.0, "slots": 1})
        out = tmp_path / "trace"
        assert _run("backoff", "--config", config, "--out", str(out), "--trace") == EXIT_OK
        trace = _read(out / "backoff_trace_ofdm_qpsk.csv")
        assert trace["backoff_db"].tolist() == ["0.00", "5.00", "10.00"]

    def test_papr(self, config_file, tmp_path):
        out = tmp_path / "papr"
        assert _run("papr", "--config", config_file, "--out", str(out), "--set", "analysis.papr_slots=2") == EXIT_OK
        summary = _read(out / "papr_summary.csv")
        assert len(summary) == 8
        assert list(summary.columns) == ["waveform", "modulation", "probability", "papr_db"]
        assert (out / "papr_ccdf.csv").is_file()

    def test_pn_psd(self, config_file, tmp_path):
        out = tmp_path / "pn"
        args = ["pn-psd", "--config", config_file, "--out", str(out), "--carrier-ghz", "60", "--set", "analysis.pn_realizations=5"]
        assert _run(*args) == EXIT_OK
        psd = _read(out / "pn_psd.csv")
        assert set(psd["profile"]) == {"bs", "ue"}
        assert set(psd["carrier_ghz"]) == {"60.0000"}
