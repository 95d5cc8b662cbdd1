"""
Analysis runners shared by the CLI and the REST layer

Each runner takes a resolved LinkConfig and returns plain rows ready for CSV
or JSON output.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from phy.impairments import (
    BackoffAnalysis,
    BackoffPoint,
    backoff_curve,
    pn_periodogram,
    pn_psd,
    psd_deviation_db,
    required_backoff,
)
from phy.linkconfig import LinkConfig
from phy.waveform import Modulation, WaveformKind, papr_ccdf, papr_ccdf_curve, random_slots
from utils.exceptions import AnalysisError

logger = logging.getLogger(__name__)

PAPR_LEVELS_DB = np.round(np.arange(0.0, 12.05, 0.1), 2)
PN_PSD_POINTS = 200


@dataclass
class PaprRow:
    waveform: str
    modulation: str
    probability: float
    papr_db: float
    ccdf: Optional[List[float]] = None


def papr_table(
    cfg: LinkConfig,
    waveforms: Sequence[WaveformKind] = tuple(WaveformKind),
    modulations: Sequence[Modulation] = tuple(Modulation),
    with_curve: bool = False,
) -> List[PaprRow]:
    """PAPR exceeded with cfg.analysis.papr_probability, per waveform and modulation."""
    num = cfg.num()
    a = cfg.analysis
    rows = []
    for w_index, waveform in enumerate(WaveformKind):
        if waveform not in waveforms:
            continue
        for m_index, mod in enumerate(Modulation):
            if mod not in modulations:
                continue
            rng = np.random.default_rng([cfg.sweep.master_seed, w_index, m_index])
            sig, _ = random_slots(waveform, mod, num, rng, a.papr_slots, a.oversampling)
            curve = papr_ccdf_curve(sig, PAPR_LEVELS_DB).tolist() if with_curve else None
            rows.append(PaprRow(waveform.value, mod.value, a.papr_probability, papr_ccdf(sig, a.papr_probability), curve))
    return rows


@dataclass
class BackoffRow:
    waveform: str
    modulation: str
    backoff_db: Optional[float]
    trace: List[BackoffPoint] = field(default_factory=list)


def backoff_table(
    cfg: LinkConfig,
    waveforms: Sequence[WaveformKind] = tuple(WaveformKind),
    modulations: Sequence[Modulation] = tuple(Modulation),
    trace: bool = False,
) -> List[BackoffRow]:
    """Required back-off per waveform and modulation; None where no grid point passes."""
    num = cfg.num()
    pa = cfg.pa_model()
    p = cfg.pa
    seed = cfg.sweep.master_seed
    rows = []
    for waveform in waveforms:
        for mod in modulations:
            try:
                bo: Optional[float] = required_backoff(
                    waveform, mod, pa, num, p.aclr_min_db, None, p.slots, seed, p.max_backoff_db, p.step_db
                )
            except AnalysisError as e:
                logger.warning(str(e))
                bo = None
            points: List[BackoffPoint] = []
            if trace:
                analysis = BackoffAnalysis(waveform, mod, pa, num, slots=p.slots, aclr_min_db=p.aclr_min_db, seed=seed)
                grid = np.round(np.arange(0.0, p.max_backoff_db + p.step_db / 2, p.step_db), 6)
                points = backoff_curve(analysis, grid)
            rows.append(BackoffRow(waveform.value, mod.value, bo, points))
    return rows


def backoff_gaps(rows: Sequence[BackoffRow]) -> Dict[str, Optional[float]]:
    """OFDM minus SC-FDMA required back-off per modulation."""
    by_key = {(r.waveform, r.modulation): r.backoff_db for r in rows}
    gaps = {}
    for mod in Modulation:
        ofdm = by_key.get((WaveformKind.OFDM.value, mod.value))
        sc = by_key.get((WaveformKind.SCFDMA.value, mod.value))
        if (WaveformKind.OFDM.value, mod.value) in by_key and (WaveformKind.SCFDMA.value, mod.value) in by_key:
            gaps[mod.value] = None if ofdm is None or sc is None else ofdm - sc
    return gaps


@dataclass
class PnPsdResult:
    profile: str
    carrier_hz: float
    offsets_hz: np.ndarray
    model_dbc_hz: np.ndarray
    periodogram_dbc_hz: np.ndarray
    deviation_db: float


def pn_psd_comparison(cfg: LinkConfig, carrier_hz: Optional[float] = None) -> List[PnPsdResult]:
    """Model PSD next to the averaged periodogram of synthesized PN, for the BS and UE profiles.

    Offsets are restricted to [10 fs/n, fs/4] and thinned to log-spaced bins.
    """
    num = cfg.num()
    a = cfg.analysis
    carrier = carrier_hz or cfg.carrier_hz
    fs = num.sample_rate_hz
    n = num.slot_samples * a.pn_slots
    lo, hi = 10.0 * fs / n, fs / 4.0
    results = []
    for index, name in enumerate((cfg.pn.bs_profile, cfg.pn.ue_profile)):
        model = cfg.pn_model(name)
        rng = np.random.default_rng([cfg.sweep.master_seed, index])
        offsets, measured = pn_periodogram(model, carrier, fs, n, a.pn_realizations, rng)
        expected = pn_psd(model, offsets, carrier)
        deviation = psd_deviation_db(offsets, measured, expected, lo, hi)
        logger.info(f"PN profile '{name}' at {carrier / 1e9:g} GHz: band-averaged deviation {deviation:.2f} dB")

        in_band = np.flatnonzero((offsets >= lo) & (offsets <= hi))
        picks = in_band[np.unique(np.geomspace(1, in_band.size, PN_PSD_POINTS).astype(int) - 1)]
        results.append(PnPsdResult(name, carrier, offsets[picks], expected[picks], measured[picks], deviation))
    return results


def pn_psd_grid(cfg: LinkConfig, profile: str, carrier_hz: float, points: int = 61) -> Dict[str, List[float]]:
    """Model PSD of a named profile on a log grid from 1 kHz to 1 GHz."""
    model = cfg.pn_model(profile)
    offsets = np.logspace(3, 9, points)
    return {"offsets_hz": offsets.tolist(), "psd_dbc_hz": np.asarray(pn_psd(model, offsets, carrier_hz)).tolist()}
