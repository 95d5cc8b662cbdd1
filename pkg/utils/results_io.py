# ============================================================================
# FILE: utils/results_io.py (Result Persistence)
# ============================================================================

"""
CSV and TOML writers for simulation outputs

Numbers are rendered with fixed formats before they reach the CSV writer so
identical results always produce byte-identical files.  Wall time and other
run-dependent values are never written to CSV.
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from phy.harness import ComparisonReport, SweepResult
from phy.impairments import BackoffPoint
from phy.linkconfig import LinkConfig, dump_config

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "config_id",
    "waveform",
    "scs_khz",
    "modulation",
    "rank",
    "ptrs_scheme",
    "snr_db",
    "blocks",
    "errors",
    "bler",
    "isi_drops",
]
SUMMARY_COLUMNS = ["config_id", "required_snr_db"]
NA = "NA"

PathLike = Union[str, Path]


def _fmt(value: Optional[float], digits: int) -> str:
    if value is None or not np.isfinite(value):
        return NA
    return f"{value:.{digits}f}"


def _write(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def sweep_frame(result: SweepResult, cfg: LinkConfig) -> pd.DataFrame:
    """One row per SNR point."""
    w = cfg.waveform
    rows = [
        {
            "config_id": result.config_id,
            "waveform": w.waveform.value,
            "scs_khz": cfg.numerology.scs_khz,
            "modulation": w.modulation.value,
            "rank": w.rank,
            "ptrs_scheme": cfg.ptrs.scheme.value,
            "snr_db": _fmt(p.snr_db, 2),
            "blocks": p.blocks,
            "errors": p.errors,
            "bler": _fmt(p.bler, 6),
            "isi_drops": p.isi_drops,
        }
        for p in result.points
    ]
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def summary_frame(results: Iterable[SweepResult]) -> pd.DataFrame:
    rows = [{"config_id": r.config_id, "required_snr_db": _fmt(r.required_snr_db, 2)} for r in results]
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def write_sweep(result: SweepResult, cfg: LinkConfig, out_dir: PathLike) -> Dict[str, Path]:
    """Write sweep.csv, summary.csv and resolved_config.toml for one configuration."""
    out = Path(out_dir)
    return {
        "sweep": _write(sweep_frame(result, cfg), out / "sweep.csv"),
        "summary": _write(summary_frame([result]), out / "summary.csv"),
        "config": write_resolved_config(cfg, out),
    }


def write_summary(results: Sequence[SweepResult], path: PathLike) -> Path:
    return _write(summary_frame(results), Path(path))


def write_resolved_config(cfg: LinkConfig, out_dir: PathLike, name: str = "resolved_config.toml") -> Path:
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_config(cfg), encoding="utf-8", newline="\n")
    return path


def write_comparison(report: ComparisonReport, path: PathLike) -> Path:
    rows = [{"first": d.first, "second": d.second, "delta_db": _fmt(d.delta_db, 2)} for d in report.deltas]
    return _write(pd.DataFrame(rows, columns=["first", "second", "delta_db"]), Path(path))


def write_backoff(points: List[BackoffPoint], path: PathLike) -> Path:
    rows = [
        {
            "backoff_db": _fmt(p.backoff_db, 2),
            "aclr_db": _fmt(p.aclr_db, 3),
            "evm_pct": _fmt(p.evm_pct, 3),
            "passes": int(p.passes),
        }
        for p in points
    ]
    return _write(pd.DataFrame(rows, columns=["backoff_db", "aclr_db", "evm_pct", "passes"]), Path(path))


def write_table(rows: List[Dict], columns: List[str], path: PathLike, digits: int = 4) -> Path:
    """Generic writer for PAPR and PN PSD tables; float cells use `digits` decimals."""
    formatted = [{k: _fmt(v, digits) if isinstance(v, float) else v for k, v in row.items()} for row in rows]
    return _write(pd.DataFrame(formatted, columns=columns), Path(path))
