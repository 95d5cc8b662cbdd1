# ============================================================================
# FILE: cli.py (Command-Line Front End)
# ============================================================================

"""
sublink command-line interface

Every simulating subcommand writes CSV files plus a resolved_config.toml
snapshot into --out; running again from that snapshot reproduces the CSVs
byte for byte.  Exit codes: 0 success, 2 configuration error, 3 runtime
numerical error.
"""

import logging
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple

import click

from config import Config
from phy.analysis import PAPR_LEVELS_DB, backoff_gaps, backoff_table, papr_table, pn_psd_comparison
from phy.harness import compare_schemes, run_drop, run_sweep
from phy.linkconfig import LinkConfig, dump_config, load_config, resolve_config
from phy.profiles import CDL_E_PROVENANCE
from phy.ptrs import ptrs_overhead
from utils.error_codes import EXIT_OK, exit_code_for
from utils.exceptions import AnalysisError, ConfigError
from utils.executor import map_ordered
from utils.logging_setup import configure_logging
from utils.results_io import (
    write_backoff,
    write_comparison,
    write_resolved_config,
    write_sweep,
    write_table,
)

logger = logging.getLogger(__name__)


def _load(config_path: Optional[str], overrides: Sequence[str], seed: Optional[int] = None) -> LinkConfig:
    overrides = list(overrides)
    if seed is not None:
        overrides.append(f"sweep.master_seed={seed}")
    if config_path is None:
        return resolve_config({}, overrides)
    return load_config(config_path, overrides)


def _out_dir(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


_LINK_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Link configuration TOML file."),
    click.option("--out", default="results", show_default=True, type=click.Path(file_okay=False), help="Output directory."),
    click.option("--seed", type=int, help="Override sweep.master_seed."),
    click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE", help="Override a config value."),
]


def link_options(func: Callable) -> Callable:
    """--config / --out / --seed / --set shared by the simulating subcommands."""
    for option in reversed(_LINK_OPTIONS):
        func = option(func)
    return func


def threads_option(func: Callable) -> Callable:
    return click.option(
        "--threads",
        type=click.IntRange(min=1),
        default=lambda: max(1, Config.SIM_THREADS),
        help="Drop-level worker threads (outputs do not depend on it).",
    )(func)


@click.group()
@click.option("--log-level", default=None, help="Override LOG_LEVEL for this run.")
@click.option("--no-log-file", is_flag=True, help="Log to the console only.")
def cli(log_level: Optional[str], no_log_file: bool) -> None:
    """Sub-THz link-level simulator."""
    configure_logging(
        None if no_log_file else Config.SUBLINK_LOG_DIR,
        log_level or Config.LOG_LEVEL,
        Config.SUBLINK_LOG_MAX_BYTES,
        Config.SUBLINK_LOG_BACKUP_COUNT,
    )


# ----------------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------------


@cli.command("validate-config")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE")
def validate_config_cmd(config_path: str, overrides: Tuple[str, ...]) -> None:
    """Resolve and check a config without simulating; prints the resolved TOML."""
    cfg = _load(config_path, overrides)
    click.echo(dump_config(cfg))
    num = cfg.num()
    overhead = ptrs_overhead(cfg.ptrs_config(), num)
    code = cfg.code()
    click.echo(f"# config_id: {cfg.config_id}")
    click.echo(f"# FFT {num.fft_size}, CP {num.cp_samples} samples, sample rate {num.sample_rate_hz / 1e9:.4g} GHz")
    click.echo(
        f"# PTRS {cfg.ptrs.scheme.value}: {overhead.pilots_per_symbol} pilots/symbol, "
        f"overhead {100 * overhead.overhead_fraction:.2f}%"
    )
    click.echo(f"# code block: K={code.info_bits} E={code.coded_bits} Z={code.lifting_size}")
    click.echo(f"# channel taps: {CDL_E_PROVENANCE}")
    tx, rx = cfg.pn_models()
    for label, model in (("tx", tx), ("rx", rx)):
        if model is not None:
            click.echo(f"# PN {label} '{model.name}': {model.provenance}")


# ----------------------------------------------------------------------------
# Link simulation
# ----------------------------------------------------------------------------


@cli.command("run")
@link_options
@threads_option
@click.option("--snr-db", type=float, required=True, help="SNR of every drop.")
@click.option("--drops", type=click.IntRange(min=1), default=10, show_default=True)
def run_cmd(config_path, out, seed, overrides, threads, snr_db, drops) -> None:
    """Run a fixed number of drops at one SNR and write drops.csv."""
    cfg = _load(config_path, overrides, seed)
    out_dir = _out_dir(out)
    results = map_ordered(lambda d: run_drop(cfg, snr_db, d), range(drops), threads)
    rows = [
        {
            "drop_index": r.drop_index,
            "block_error": int(r.block_error),
            "numerical_failure": int(r.numerical_failure),
            "isi": int(r.isi),
            "iterations": r.iterations,
        }
        for r in results
    ]
    write_table(rows, ["drop_index", "block_error", "numerical_failure", "isi", "iterations"], out_dir / "drops.csv")
    write_resolved_config(cfg, out_dir)
    errors = sum(r["block_error"] for r in rows)
    click.echo(f"{cfg.config_id}: {errors}/{drops} block errors at {snr_db:g} dB")


@cli.command("sweep")
@link_options
@threads_option
def sweep_cmd(config_path, out, seed, overrides, threads) -> None:
    """BLER versus SNR; writes sweep.csv, summary.csv and resolved_config.toml."""
    cfg = _load(config_path, overrides, seed)
    result = run_sweep(cfg, threads)
    write_sweep(result, cfg, _out_dir(out))
    req = result.required_snr_db
    click.echo(f"{cfg.config_id}: required SNR {'NA' if req is None else f'{req:.2f} dB'}")


@cli.command("compare")
@click.option("--config", "config_paths", multiple=True, required=True, type=click.Path(dir_okay=False))
@click.option("--out", default="results", show_default=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int)
@click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE")
@click.option("--expect", "expectations", multiple=True, metavar="BETTER:WORSE", help="Expected ordering of config_ids.")
@threads_option
def compare_cmd(config_paths, out, seed, overrides, expectations, threads) -> None:
    """Sweep configs differing only in waveform/PTRS and report required-SNR deltas."""
    cfgs = [_load(path, overrides, seed) for path in config_paths]
    orderings = []
    for text in expectations:
        better, sep, worse = text.partition(":")
        if not sep:
            raise click.BadParameter(f"'{text}' is not of the form BETTER:WORSE", param_hint="--expect")
        orderings.append((better.strip(), worse.strip()))

    out_dir = _out_dir(out)
    report = compare_schemes(cfgs, orderings, threads)
    for cfg in cfgs:
        write_resolved_config(cfg, out_dir, f"resolved_{cfg.config_id}.toml")
    write_comparison(report, out_dir / "comparison.csv")
    rows = [{"config_id": k, "required_snr_db": v} for k, v in report.required_snr_db.items()]
    write_table(rows, ["config_id", "required_snr_db"], out_dir / "summary.csv", digits=2)
    for check in report.orderings:
        click.echo(f"{check.better} <= {check.worse}: {'ok' if check.holds else 'VIOLATED'}")
    if not report.all_hold:
        raise AnalysisError("Expected scheme ordering violated; see comparison.csv")


# ----------------------------------------------------------------------------
# Analyzers
# ----------------------------------------------------------------------------


@cli.command("backoff")
@link_options
@click.option("--trace", is_flag=True, help="Also write ACLR/EVM for every back-off grid point.")
def backoff_cmd(config_path, out, seed, overrides, trace) -> None:
    """Required PA back-off per waveform and modulation."""
    cfg = _load(config_path, overrides, seed)
    out_dir = _out_dir(out)
    rows = backoff_table(cfg, trace=trace)
    for row in rows:
        if trace:
            write_backoff(row.trace, out_dir / f"backoff_trace_{row.waveform}_{row.modulation}.csv")
        bo = row.backoff_db
        click.echo(f"{row.waveform:8s} {row.modulation:7s} {'NA' if bo is None else f'{bo:.1f} dB'}")
    table = [{"waveform": r.waveform, "modulation": r.modulation, "backoff_db": r.backoff_db} for r in rows]
    write_table(table, ["waveform", "modulation", "backoff_db"], out_dir / "backoff.csv", digits=2)
    for mod, gap in backoff_gaps(rows).items():
        click.echo(f"OFDM - SC-FDMA back-off, {mod}: {'NA' if gap is None else f'{gap:.1f} dB'}")
    write_resolved_config(cfg, out_dir)


@cli.command("papr")
@link_options
def papr_cmd(config_path, out, seed, overrides) -> None:
    """PAPR CCDF of both waveforms for every modulation."""
    cfg = _load(config_path, overrides, seed)
    out_dir = _out_dir(out)
    rows = papr_table(cfg, with_curve=True)
    curve = [
        {"waveform": r.waveform, "modulation": r.modulation, "papr_db": float(level), "ccdf": c}
        for r in rows
        for level, c in zip(PAPR_LEVELS_DB, r.ccdf)
    ]
    summary = [
        {"waveform": r.waveform, "modulation": r.modulation, "probability": r.probability, "papr_db": r.papr_db}
        for r in rows
    ]
    for r in rows:
        click.echo(f"{r.waveform:8s} {r.modulation:7s} PAPR@{r.probability:g} = {r.papr_db:.2f} dB")
    write_table(curve, ["waveform", "modulation", "papr_db", "ccdf"], out_dir / "papr_ccdf.csv", digits=6)
    write_table(summary, ["waveform", "modulation", "probability", "papr_db"], out_dir / "papr_summary.csv")
    write_resolved_config(cfg, out_dir)


@cli.command("pn-psd")
@link_options
@click.option("--carrier-ghz", type=float, help="Carrier frequency (defaults to channel.carrier_ghz).")
def pn_psd_cmd(config_path, out, seed, overrides, carrier_ghz) -> None:
    """Configured phase-noise PSD next to the periodogram of synthesized realizations."""
    cfg = _load(config_path, overrides, seed)
    out_dir = _out_dir(out)
    results = pn_psd_comparison(cfg, carrier_ghz * 1e9 if carrier_ghz else None)
    rows = []
    for res in results:
        click.echo(f"{res.profile}: max band-averaged deviation {res.deviation_db:.2f} dB")
        rows.extend(
            {
                "profile": res.profile,
                "carrier_ghz": res.carrier_hz / 1e9,
                "offset_hz": float(f),
                "model_dbc_hz": float(m),
                "periodogram_dbc_hz": float(p),
            }
            for f, m, p in zip(res.offsets_hz, res.model_dbc_hz, res.periodogram_dbc_hz)
        )
    columns = ["profile", "carrier_ghz", "offset_hz", "model_dbc_hz", "periodogram_dbc_hz"]
    write_table(rows, columns, out_dir / "pn_psd.csv")
    write_resolved_config(cfg, out_dir)


# ----------------------------------------------------------------------------
# Service
# ----------------------------------------------------------------------------


@cli.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True, help="Host address")
@click.option("--port", type=int, default=5000, show_default=True, help="Port number")
@click.option("--debug", is_flag=True, help="Enable debug mode")
def serve_cmd(host: str, port: int, debug: bool) -> None:
    """Serve the REST API (waitress, or the Flask dev server with --debug)."""
    from app import serve

    try:
        serve(host, port, debug)
    except RuntimeError as e:
        raise ConfigError(str(e)) from e


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="sublink", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except Exception as e:
        code = exit_code_for(e)
        logger.error(f"{type(e).__name__}: {getattr(e, 'message', None) or e}")
        click.echo(f"Error: {getattr(e, 'message', None) or e}", err=True)
        return code
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
