# ============================================================================
# FILE: tools/plot_results.py (Result Plotting)
# ============================================================================

"""
Render PNG figures from the CSV files written by the sublink CLI

    python tools/plot_results.py bler results/a/sweep.csv results/b/sweep.csv --out bler.png
    python tools/plot_results.py papr results/papr/papr_ccdf.csv --out papr.png
    python tools/plot_results.py pnpsd results/pn/pn_psd.csv --out pn_psd.png

"NA" cells are read as missing values.
"""

from pathlib import Path
from typing import Sequence

import click
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def _read(path: str) -> pd.DataFrame:
    return pd.read_csv(path, na_values=["NA"])


def _finish(ax, xlabel: str, ylabel: str, out: str) -> None:
    ax.grid(True, which="both", linestyle="--", linewidth=0.5)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize="small")
    ax.figure.tight_layout()
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    ax.figure.savefig(out, dpi=150)
    plt.close(ax.figure)
    click.echo(f"Wrote {out}")


@click.group()
def plot() -> None:
    """Plot sublink CSV outputs."""


@plot.command("bler")
@click.argument("csv_files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="bler.png", show_default=True)
@click.option("--target", default=0.1, show_default=True, help="BLER target drawn as a horizontal line.")
def bler(csv_files: Sequence[str], out: str, target: float) -> None:
    """BLER versus SNR, one curve per config_id."""
    _, ax = plt.subplots(figsize=(7, 5))
    for path in csv_files:
        frame = _read(path)
        for config_id, rows in frame.groupby("config_id", sort=False):
            # zero-error points cannot be drawn on a log axis
            rows = rows[rows["bler"] > 0]
            ax.semilogy(rows["snr_db"], rows["bler"], "o-", markersize=3, label=str(config_id))
    ax.axhline(target, color="k", linewidth=0.8, linestyle=":")
    ax.set_ylim(1e-3, 1.0)
    _finish(ax, "SNR [dB]", "BLER", out)


@plot.command("papr")
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="papr.png", show_default=True)
def papr(csv_file: str, out: str) -> None:
    """PAPR CCDF per waveform and modulation."""
    _, ax = plt.subplots(figsize=(7, 5))
    frame = _read(csv_file)
    for (waveform, modulation), rows in frame.groupby(["waveform", "modulation"], sort=False):
        rows = rows[rows["ccdf"] > 0]
        style = "-" if waveform == "ofdm" else "--"
        ax.semilogy(rows["papr_db"], rows["ccdf"], style, label=f"{waveform} {modulation}")
    ax.set_ylim(1e-4, 1.0)
    _finish(ax, "PAPR [dB]", "P(PAPR > x)", out)


@plot.command("pnpsd")
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="pn_psd.png", show_default=True)
def pnpsd(csv_file: str, out: str) -> None:
    """Model phase-noise PSD next to the synthesized periodogram."""
    _, ax = plt.subplots(figsize=(7, 5))
    frame = _read(csv_file)
    for profile, rows in frame.groupby("profile", sort=False):
        line = ax.semilogx(rows["offset_hz"], rows["model_dbc_hz"], label=f"{profile} model")[0]
        ax.semilogx(rows["offset_hz"], rows["periodogram_dbc_hz"], ".", color=line.get_color(), markersize=2,
                    label=f"{profile} periodogram")
    _finish(ax, "Offset [Hz]", "PSD [dBc/Hz]", out)


if __name__ == "__main__":
    plot()
