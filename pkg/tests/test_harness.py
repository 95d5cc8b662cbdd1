# ============================================================================
# FILE: tests/test_harness.py
# ============================================================================

"""
End-to-end tests of drops, SNR sweeps, required-SNR extraction and scheme comparison
"""

import dataclasses
from pathlib import Path

import pytest

from phy import harness
from phy.harness import (
    ORDERING_RESOLUTION_DB,
    DropResult,
    SnrPoint,
    SweepResult,
    check_monotonicity,
    compare_results,
    compare_schemes,
    drop_streams,
    prepare_link,
    required_snr,
    required_snr_gap,
    run_drop,
    run_point,
    run_sweep,
)
from phy.linkconfig import load_config
from tests.link_configs import small_config
from utils.exceptions import ConfigError, NumericalError
from utils.executor import reset_executor

pytestmark = pytest.mark.integration

HIGH_SNR_DB = 35.0
EXPERIMENTS = Path(__file__).resolve().parent.parent / "experiments"


@pytest.fixture(autouse=True)
def _shutdown_pool():
    yield
    reset_executor()


def _point(snr_db, errors, blocks):
    return SnrPoint(snr_db, blocks=blocks, errors=errors)


def _result(config_id, required):
    return SweepResult(config_id=config_id, points=[], required_snr_db=required)


class TestDropStreams:
    def test_deterministic(self):
        a = drop_streams(1, 2, 3)
        b = drop_streams(1, 2, 3)
        for name in a:
            assert a[name].integers(0, 1 << 30) == b[name].integers(0, 1 << 30)

    def test_streams_differ(self):
        streams = drop_streams(1, 0, 0)
        draws = {name: g.integers(0, 1 << 62) for name, g in streams.items()}
        assert len(set(draws.values())) == len(draws)

    def test_indices_change_draws(self):
        base = drop_streams(1, 0, 0)["noise"].standard_normal()
        assert drop_streams(1, 0, 1)["noise"].standard_normal() != base
        assert drop_streams(1, 1, 0)["noise"].standard_normal() != base
        assert drop_streams(2, 0, 0)["noise"].standard_normal() != base


class TestRunDrop:
    def test_deterministic(self, link_config):
        assert run_drop(link_config, 2.0, 5) == run_drop(link_config, 2.0, 5)

    def test_high_snr_awgn_decodes(self, link_config):
        result = run_drop(link_config, HIGH_SNR_DB, 0)
        assert not result.block_error
        assert not result.numerical_failure
        assert not result.isi

    def test_low_snr_fails(self, link_config):
        assert run_drop(link_config, -10.0, 0).block_error

    def test_rank2_high_snr(self):
        assert not run_drop(small_config(waveform={"rank": 2}), HIGH_SNR_DB, 0).block_error

    def test_sc_fdma_with_phase_noise_and_td_ptrs(self, sc_link_config):
        for drop in range(3):
            assert not run_drop(sc_link_config, HIGH_SNR_DB, drop).block_error

    @pytest.mark.parametrize("ptrs", [{"scheme": "distributed"}, {"scheme": "block", "block_prbs": 4}])
    def test_ofdm_with_phase_noise_and_fd_ptrs(self, ptrs):
        cfg = small_config(channel={"channel": "cdl-e", "rms_ds_ns": 2.0}, pn={"enabled": True}, ptrs=ptrs)
        for drop in range(3):
            assert not run_drop(cfg, HIGH_SNR_DB, drop).block_error

    def test_rank2_sc_fdma(self, sc_link_config):
        cfg = sc_link_config.replace(waveform=dataclasses.replace(sc_link_config.waveform, rank=2))
        assert not run_drop(cfg, HIGH_SNR_DB, 0).block_error

    def test_setup_cached_per_config(self, link_config):
        assert prepare_link(link_config) is prepare_link(small_config())


class TestRunPoint:
    def test_stops_at_min_blocks_once_errors_met(self):
        cfg = small_config(sweep={"min_blocks": 20, "max_blocks": 100, "min_errors": 20})
        point = run_point(cfg, -10.0, 0)
        assert (point.blocks, point.errors) == (20, 20)

    def test_stops_at_max_blocks_without_errors(self, link_config):
        point = run_point(link_config, HIGH_SNR_DB, 0)
        assert (point.blocks, point.errors) == (8, 0)
        assert point.bler == 0.0

    def test_thread_count_does_not_change_result(self):
        cfg = small_config(sweep={"min_blocks": 4, "max_blocks": 24, "min_errors": 20})
        assert run_point(cfg, 1.0, 3, threads=1) == run_point(cfg, 1.0, 3, threads=3)

    def test_every_drop_failing_numerically_raises(self, link_config, monkeypatch):
        def broken(cfg, snr_db, drop_index, snr_index=0):
            return DropResult(snr_db, drop_index, True, numerical_failure=True)

        monkeypatch.setattr(harness, "run_drop", broken)
        with pytest.raises(NumericalError, match="failed numerically"):
            run_point(link_config, 10.0, 0)

    def test_some_numerical_failures_are_counted(self, link_config, monkeypatch):
        def flaky(cfg, snr_db, drop_index, snr_index=0):
            return DropResult(snr_db, drop_index, drop_index % 2 == 0, numerical_failure=drop_index % 2 == 0)

        monkeypatch.setattr(harness, "run_drop", flaky)
        point = run_point(link_config, 10.0, 0)
        assert (point.blocks, point.errors, point.numerical_failures) == (8, 4, 4)

    def test_isi_drops_counted(self, link_config, monkeypatch):
        def partly_isi(cfg, snr_db, drop_index, snr_index=0):
            return DropResult(snr_db, drop_index, False, isi=drop_index < 3)

        monkeypatch.setattr(harness, "run_drop", partly_isi)
        assert run_point(link_config, 10.0, 0).isi_drops == 3


class TestRequiredSnr:
    def test_log_interpolation(self):
        points = [_point(0.0, 10, 10), _point(2.0, 1, 100)]
        assert required_snr(points, 0.1) == pytest.approx(1.0)

    def test_zero_error_point_enters_as_half_block(self):
        points = [_point(0.0, 50, 50), _point(1.0, 0, 50)]
        # 1.0 -> 0.01 in log10 space, target 0.1 sits halfway
        assert required_snr(points, 0.1) == pytest.approx(0.5)

    def test_first_point_meets_target(self):
        assert required_snr([_point(3.0, 1, 100), _point(4.0, 0, 100)], 0.1) == 3.0

    def test_never_reached(self):
        assert required_snr([_point(0.0, 10, 10), _point(1.0, 5, 10)], 0.1) is None

    def test_empty(self):
        assert required_snr([]) is None
        assert required_snr([SnrPoint(0.0)]) is None

    def test_exact_hit(self):
        assert required_snr([_point(0.0, 5, 10), _point(1.0, 1, 10)], 0.1) == pytest.approx(1.0)


class TestMonotonicity:
    def test_decreasing_has_no_violations(self):
        assert check_monotonicity([_point(0, 50, 100), _point(1, 20, 100), _point(2, 1, 100)]) == []

    def test_small_rise_tolerated(self):
        violations = check_monotonicity([_point(0, 10, 100), _point(1, 12, 100)])
        assert len(violations) == 1
        assert violations[0].tolerated

    def test_large_rise_flagged(self):
        violations = check_monotonicity([_point(0, 1, 1000), _point(1, 300, 1000)])
        assert not violations[0].tolerated


class TestRunSweep:
    def test_high_snr_exits_early(self):
        cfg = small_config(sweep={"snr_start_db": 20.0, "snr_stop_db": 40.0, "snr_step_db": 5.0})
        result = run_sweep(cfg)
        assert [p.snr_db for p in result.points] == [20.0, 25.0]
        assert result.required_snr_db == 20.0
        assert result.monotonicity_violations == []

    def test_deterministic_across_threads(self, link_config):
        serial = run_sweep(link_config, threads=1)
        parallel = run_sweep(link_config, threads=2)
        assert serial.points == parallel.points
        assert serial.required_snr_db == parallel.required_snr_db

    def test_as_dict(self, link_config):
        data = run_sweep(link_config).as_dict()
        assert data["config_id"] == link_config.config_id
        assert data["metadata"]["code"]["coded_bits"] == link_config.code().coded_bits
        assert {"snr_db", "blocks", "errors", "numerical_failures", "isi_drops", "bler"} <= set(data["points"][0])

    def test_default_channel_at_960_khz_reports_isi(self):
        """The 10 ns CDL-E profile reaches past the 960 kHz cyclic prefix on every drop."""
        cfg = small_config(channel={"channel": "cdl-e"}, sweep={"snr_start_db": 30.0, "snr_stop_db": 30.0})
        result = run_sweep(cfg)
        isi = result.metadata["isi"]
        assert isi["isi_regime"] is True
        assert isi["max_tap_delay_samples"] > isi["cp_samples"] == 9
        assert isi["max_tap_delay_ns"] == pytest.approx(379.06, rel=1e-3)
        (point,) = result.points
        assert point.isi_drops == point.blocks > 0

    def test_awgn_has_no_isi(self, link_config):
        result = run_sweep(link_config)
        assert result.metadata["isi"]["isi_regime"] is False
        assert result.metadata["isi"]["max_tap_delay_samples"] == 0
        assert all(p.isi_drops == 0 for p in result.points)

    def test_bler_falls_with_snr(self, link_config):
        points = run_sweep(link_config).points
        blers = [p.bler for p in points]
        assert blers[0] >= blers[-1]


class TestComparison:
    def test_identical_results_have_zero_delta(self):
        report = compare_results([_result("a", 3.0), _result("b", 3.0)])
        assert report.deltas[0].delta_db == 0.0
        assert report.required_snr_db == {"a": 3.0, "b": 3.0}

    def test_gap_sign(self):
        assert required_snr_gap(_result("a", 1.0), _result("b", 3.5)) == pytest.approx(2.5)
        assert required_snr_gap(_result("a", None), _result("b", 3.5)) is None

    @pytest.mark.parametrize(
        "better, worse, holds",
        [
            (2.0, 3.0, True),
            (3.0 + ORDERING_RESOLUTION_DB / 2, 3.0, True),
            (3.5, 3.0, False),
            (None, None, True),
            (None, 3.0, False),
            (3.0, None, True),
        ],
    )
    def test_ordering(self, better, worse, holds):
        report = compare_results([_result("x", better), _result("y", worse)], [("x", "y")])
        assert report.orderings[0].holds is holds
        assert report.all_hold is holds

    def test_unknown_ordering_id(self):
        with pytest.raises(ConfigError):
            compare_results([_result("x", 1.0)], [("x", "z")])

    def test_schemes_must_share_link_parameters(self):
        a = small_config(sweep={"config_id": "a"})
        b = small_config(waveform={"modulation": "16qam"}, sweep={"config_id": "b"})
        with pytest.raises(ConfigError):
            compare_schemes([a, b])

    def test_schemes_need_distinct_ids(self):
        a = small_config(sweep={"config_id": "same"})
        b = small_config(waveform={"waveform": "sc-fdma"}, sweep={"config_id": "same"})
        with pytest.raises(ConfigError):
            compare_schemes([a, b])

    def test_empty(self):
        with pytest.raises(ConfigError):
            compare_schemes([])

    def test_waveforms_at_high_snr(self):
        sweep = {"snr_start_db": 20.0, "snr_stop_db": 25.0, "snr_step_db": 5.0}
        ofdm = small_config(sweep=sweep)
        sc = small_config(waveform={"waveform": "sc-fdma"}, sweep=sweep)
        report = compare_schemes([ofdm, sc], [(ofdm.config_id, sc.config_id)])
        assert report.deltas[0].delta_db == 0.0
        assert report.all_hold


@pytest.mark.slow
class TestPhaseNoiseAcceptance:
    def test_ptrs_beats_no_ptrs_under_phase_noise(self):
        base = {
            "numerology": {"scs_khz": 120, "prb_count": 16},
            "waveform": {"modulation": "16qam"},
            "channel": {"channel": "cdl-e", "rms_ds_ns": 5.0},
            "pn": {"enabled": True},
            "sweep": {"snr_start_db": 6.0, "snr_stop_db": 24.0, "snr_step_db": 1.0, "min_blocks": 50, "max_blocks": 400},
        }
        plain = small_config(**base, ptrs={"scheme": "none"})
        tracked = small_config(**base, ptrs={"scheme": "distributed"})
        report = compare_schemes([tracked, plain], [(tracked.config_id, plain.config_id)], threads=4)
        assert report.all_hold
        assert report.required_snr_db[tracked.config_id] is not None

    def test_high_snr_error_free_across_all_schemes(self):
        schemes = [
            ({"waveform": "ofdm"}, {"scheme": "distributed"}),
            ({"waveform": "ofdm"}, {"scheme": "block", "block_prbs": 4}),
            ({"waveform": "sc-fdma"}, {"scheme": "td-groups", "groups": 8}),
            ({"waveform": "sc-fdma"}, {"scheme": "td-enhanced", "groups": 12}),
        ]
        for waveform, ptrs in schemes:
            cfg = small_config(waveform=waveform, ptrs=ptrs, pn={"enabled": True}, channel={"channel": "cdl-e", "rms_ds_ns": 2.0})
            errors = sum(run_drop(cfg, HIGH_SNR_DB, d).block_error for d in range(20))
            assert errors == 0, (waveform, ptrs)


def _experiment(name, *overrides):
    """A shipped experiment with fewer blocks per point."""
    reduced = ["sweep.min_blocks=50", "sweep.max_blocks=400", "sweep.min_errors=30"]
    return load_config(EXPERIMENTS / f"{name}.toml", [*reduced, *overrides])


@pytest.mark.slow
class TestAcceptance:
    """Gaps and orderings the shipped experiments are meant to reproduce."""

    @pytest.mark.parametrize("scs_khz", [480, 960, 1920])
    @pytest.mark.parametrize("modulation", ["qpsk", "16qam"])
    def test_rank_gap(self, scs_khz, modulation):
        r1 = run_sweep(_experiment(f"rank_gap_{scs_khz}k_{modulation}_r1"), threads=4)
        r2 = run_sweep(_experiment(f"rank_gap_{scs_khz}k_{modulation}_r2"), threads=4)
        gap = required_snr_gap(r1, r2)
        assert gap is not None
        assert 2.0 <= gap <= 4.1

    def test_256qam_needs_a_large_scs(self):
        for scheme in ("ofdm_block", "ofdm_distributed", "sc_enhanced", "sc_rel15"):
            assert run_sweep(_experiment(f"qam256_120k_{scheme}"), threads=4).required_snr_db is None, scheme
        assert run_sweep(_experiment("qam256_960k_sc_enhanced"), threads=4).required_snr_db is not None

    def test_64qam_scheme_ordering_at_120_khz(self):
        names = ("sc_enhanced", "ofdm_block", "sc_rel15", "ofdm_distributed")
        cfgs = [_experiment(f"ordering_120k_{name}") for name in names]
        ids = [c.config_id for c in cfgs]
        report = compare_schemes(cfgs, list(zip(ids, ids[1:])), threads=4)
        assert report.all_hold, report.orderings
        assert report.required_snr_db["ofdm-dist-120k-64qam"] is None

    @pytest.mark.parametrize(
        "low, high, lo_db, hi_db",
        [
            ("ordering_120k_sc_enhanced", "degradation_3840k_sc_enhanced", 1.5, 4.5),
            ("ordering_120k_ofdm_block", "degradation_960k_ofdm_block", 2.5, 5.5),
        ],
    )
    def test_120_khz_degradation(self, low, high, lo_db, hi_db):
        small_scs = run_sweep(_experiment(low), threads=4)
        large_scs = run_sweep(_experiment(high), threads=4)
        gap = required_snr_gap(large_scs, small_scs)
        assert gap is not None
        assert lo_db <= gap <= hi_db
