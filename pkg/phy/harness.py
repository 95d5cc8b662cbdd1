"""
Harness - Monte-Carlo link orchestration

One drop sends a single code block through the full chain:

    bits -> CRC -> LDPC -> QAM -> PTRS insertion -> waveform -> TX PN
         -> channel -> RX PN -> AWGN -> demodulate -> genie MMSE
         -> PN compensation -> LLR demap -> decode -> CRC check

A sweep runs drops per SNR point until enough block errors are collected,
then extracts the SNR at which the block error rate reaches the target.
Every drop is seeded from (master_seed, snr_index, drop_index) alone, so
results do not depend on the thread count or on scheduling order.
"""

import dataclasses
import functools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from phy.channel import (
    PORTS,
    ChannelProfile,
    MimoChannelRealization,
    apply_channel,
    frequency_response,
    mmse_equalize,
    realize_channel,
)
from phy.fec import CodeConfig, attach_crc, decode, demap_llr, encode
from phy.impairments import PnModel, apply_awgn, apply_pn, generate_pn, noise_variance
from phy.linkconfig import LinkConfig, PtrsSection, config_summary
from phy.numerology import Numerology, ResourceGrid
from phy.ptrs import (
    PtrsPattern,
    PtrsScheme,
    compensate_ici,
    derotate,
    estimate_cpe,
    estimate_ici,
    interpolate_phase,
    pilot_values,
    ptrs_overhead,
    ptrs_positions,
    track_pn_td,
)
from phy.waveform import TimeSignal, WaveformKind, despread, map_bits, ofdm_demodulate, ofdm_modulate, scfdma_modulate
from utils.exceptions import ConfigError, EstimationError, NumericalError
from utils.executor import map_ordered

logger = logging.getLogger(__name__)

TARGET_BLER = 0.1
ORDERING_RESOLUTION_DB = 0.3
MONOTONICITY_SIGMAS = 2.0
_EARLY_EXIT_POINTS = 2
_BATCH_PER_THREAD = 4
_STREAMS = ("bits", "tx_pn", "rx_pn", "channel", "noise")


# ----------------------------------------------------------------------------
# Per-drop pipeline
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class LinkSetup:
    """Drop-invariant objects derived once per configuration."""

    num: Numerology
    pattern: PtrsPattern
    pilot_grid: np.ndarray
    code: CodeConfig
    profile: ChannelProfile
    tx_pn: Optional[PnModel]
    rx_pn: Optional[PnModel]


@functools.lru_cache(maxsize=32)
def prepare_link(cfg: LinkConfig) -> LinkSetup:
    num = cfg.num()
    ptrs = cfg.ptrs_config()
    ptrs.check_waveform(cfg.waveform.waveform)
    pattern = ptrs_positions(ptrs, num)
    pilot_grid = np.zeros(pattern.mask.shape, dtype=complex)
    pilot_grid[pattern.mask] = pilot_values(pattern)
    tx_pn, rx_pn = cfg.pn_models()
    return LinkSetup(
        num=num,
        pattern=pattern,
        pilot_grid=pilot_grid,
        code=cfg.code(),
        profile=cfg.channel_profile(),
        tx_pn=tx_pn,
        rx_pn=rx_pn,
    )


@dataclass
class DropResult:
    snr_db: float
    drop_index: int
    block_error: bool
    numerical_failure: bool = False
    isi: bool = False
    iterations: int = 0


def drop_streams(master_seed: int, snr_index: int, drop_index: int) -> Dict[str, np.random.Generator]:
    """Independent generators for the bit, PN, channel and noise draws of one drop."""
    seq = np.random.SeedSequence([master_seed, snr_index, drop_index])
    return {name: np.random.default_rng(child) for name, child in zip(_STREAMS, seq.spawn(len(_STREAMS)))}


def _transmit(cfg: LinkConfig, setup: LinkSetup, symbols: np.ndarray) -> List[TimeSignal]:
    """One time signal per transmit port; layer l carries symbols[l::rank]."""
    num = setup.num
    mask = setup.pattern.mask
    rank = cfg.waveform.rank
    scale = 1.0 / math.sqrt(rank)
    ports = []
    for layer in range(PORTS):
        if layer >= rank:
            ports.append(TimeSignal(np.zeros(num.slot_samples, dtype=complex), num.sample_rate_hz))
            continue
        data = symbols[layer::rank] * scale
        # layer 1 stays silent on PTRS resources
        pilots = setup.pilot_grid[mask] * scale if layer == 0 else np.zeros(setup.pattern.pilot_count, dtype=complex)
        if cfg.waveform.waveform is WaveformKind.SCFDMA:
            positions = setup.pattern.positions(0)
            ports.append(scfdma_modulate(data.reshape(num.symbols_per_slot, -1), num, pilots, positions))
        else:
            grid = np.zeros(mask.shape, dtype=complex)
            grid[~mask] = data
            grid[mask] = pilots
            ports.append(ofdm_modulate(ResourceGrid(grid, layer), num))
    return ports


def _propagate(
    setup: LinkSetup,
    ports: List[TimeSignal],
    snr_db: float,
    streams: Dict[str, np.random.Generator],
    carrier_hz: float,
) -> Tuple[List[TimeSignal], MimoChannelRealization]:
    num = setup.num
    n = num.slot_samples
    if setup.tx_pn is not None:
        phase = generate_pn(setup.tx_pn, carrier_hz, num.sample_rate_hz, n, streams["tx_pn"])
        ports = [apply_pn(s, phase) for s in ports]

    real = realize_channel(setup.profile, num.slot_duration_s, num.symbol_duration_s, streams["channel"])
    received = apply_channel(ports, real, num)

    if setup.rx_pn is not None:
        # one local oscillator feeds both receive ports
        phase = generate_pn(setup.rx_pn, carrier_hz, num.sample_rate_hz, n, streams["rx_pn"])
        received = [apply_pn(s, phase) for s in received]
    return [apply_awgn(s, snr_db, streams["noise"]) for s in received], real


def _compensate_fd(cfg: LinkConfig, setup: LinkSetup, layers: np.ndarray) -> np.ndarray:
    """Frequency-domain PTRS compensation of CP-OFDM layers, shape (rank, symbols, subcarriers)."""
    pattern = setup.pattern
    scheme = cfg.ptrs.scheme
    if scheme is PtrsScheme.DISTRIBUTED:
        pilot_symbols = pattern.pilot_symbols()
        cpe = [
            estimate_cpe(layers[0, s, pattern.positions(s)], setup.pilot_grid[s, pattern.positions(s)])
            for s in pilot_symbols
        ]
        phases = interpolate_phase(pilot_symbols, np.array(cpe), setup.num.symbols_per_slot)
        return derotate(layers, phases[None, :, None])

    if scheme is PtrsScheme.BLOCK:
        out = layers.copy()
        q = cfg.ptrs.ici_taps_per_side
        for s in range(setup.num.symbols_per_slot):
            block = pattern.positions(s)
            ici = estimate_ici(layers[0, s, block], setup.pilot_grid[s, block], q)
            for layer in range(layers.shape[0]):
                out[layer, s], _ = compensate_ici(layers[layer, s], ici, setup.num)
        return out
    return layers


def _despread_layers(layers: np.ndarray, bias: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """SC-FDMA sub-symbols from per-subcarrier MMSE outputs.

    The biased MMSE outputs are despread and normalized by the mean bias of the
    symbol; the sub-symbol SINR is mean_bias / (1 - mean_bias).
    """
    mean_bias = bias.mean(axis=-1, keepdims=True)
    sub = despread(layers * bias) / mean_bias
    sinr = mean_bias / np.maximum(1.0 - mean_bias, 1e-30)
    return sub, np.broadcast_to(sinr, sub.shape)


def _compensate_td(setup: LinkSetup, sub: np.ndarray) -> np.ndarray:
    pattern = setup.pattern
    m = setup.num.active_subcarriers
    out = sub.copy()
    for s in range(setup.num.symbols_per_slot):
        pos = pattern.positions(s)
        phase = track_pn_td(sub[0, s, pos], setup.pilot_grid[s, pos], pos, m, pattern.group_size)
        out[:, s] = derotate(sub[:, s], phase[None, :])
    return out


def _receive(
    cfg: LinkConfig,
    setup: LinkSetup,
    received: List[TimeSignal],
    real: MimoChannelRealization,
    snr_db: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Equalize and compensate; returns data symbols and their SINR in codeword order."""
    num = setup.num
    rank = cfg.waveform.rank
    grids = np.stack([ofdm_demodulate(s, num).symbols for s in received])
    h = frequency_response(real, num) / math.sqrt(rank)
    eq = mmse_equalize(grids, h, noise_variance(snr_db), rank)

    if cfg.waveform.waveform is WaveformKind.SCFDMA:
        values, sinr = _despread_layers(eq.layers, eq.bias)
        if cfg.ptrs.scheme.is_time_domain:
            values = _compensate_td(setup, values)
    else:
        values, sinr = eq.layers, eq.sinr
        if cfg.ptrs.scheme.is_frequency_domain:
            values = _compensate_fd(cfg, setup, values)

    data_mask = ~setup.pattern.mask
    n_data = setup.pattern.data_count
    symbols = np.empty(n_data * rank, dtype=complex)
    snrs = np.empty(n_data * rank)
    for layer in range(rank):
        symbols[layer::rank] = values[layer][data_mask]
        snrs[layer::rank] = sinr[layer][data_mask]
    return symbols, snrs


def run_drop(cfg: LinkConfig, snr_db: float, drop_index: int, snr_index: int = 0) -> DropResult:
    """Send one code block at snr_db and report whether it failed its CRC.

    Numerical breakdowns in the receiver count as block errors and are flagged.
    """
    setup = prepare_link(cfg)
    streams = drop_streams(cfg.sweep.master_seed, snr_index, drop_index)
    code = setup.code
    mod = cfg.waveform.modulation

    payload = streams["bits"].integers(0, 2, size=code.payload_bits, dtype=np.uint8)
    codeword = encode(attach_crc(payload), code)
    ports = _transmit(cfg, setup, map_bits(codeword, mod))
    received, real = _propagate(setup, ports, snr_db, streams, cfg.carrier_hz)
    isi = real.exceeds_cp(setup.num)

    try:
        symbols, sinr = _receive(cfg, setup, received, real, snr_db)
        llrs = demap_llr(symbols, mod, sinr)
        if not np.all(np.isfinite(llrs)):
            raise FloatingPointError("non-finite LLRs")
    except (np.linalg.LinAlgError, FloatingPointError, EstimationError) as e:
        logger.debug(f"Drop {drop_index} at {snr_db:g} dB failed numerically: {e}")
        return DropResult(snr_db, drop_index, True, numerical_failure=True, isi=isi)

    result = decode(llrs, code, cfg.fec.max_decoder_iters)
    logger.debug(f"Drop {drop_index} at {snr_db:g} dB: success={result.success} iterations={result.iterations}")
    return DropResult(snr_db, drop_index, not result.success, isi=isi, iterations=result.iterations)


# ----------------------------------------------------------------------------
# SNR sweep
# ----------------------------------------------------------------------------


@dataclass
class SnrPoint:
    snr_db: float
    blocks: int = 0
    errors: int = 0
    numerical_failures: int = 0
    isi_drops: int = 0

    @property
    def bler(self) -> float:
        return self.errors / self.blocks if self.blocks else math.nan

    @property
    def sigma(self) -> float:
        """Binomial standard deviation of the BLER estimate."""
        if not self.blocks:
            return math.nan
        p = self.bler
        return math.sqrt(p * (1.0 - p) / self.blocks)


@dataclass
class MonotonicityViolation:
    snr_low_db: float
    snr_high_db: float
    increase: float
    tolerance: float

    @property
    def tolerated(self) -> bool:
        return self.increase <= self.tolerance


@dataclass
class SweepResult:
    config_id: str
    points: List[SnrPoint]
    required_snr_db: Optional[float]
    monotonicity_violations: List[MonotonicityViolation] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)
    wall_time_s: float = 0.0
    target_bler: float = TARGET_BLER

    def as_dict(self) -> Dict[str, Any]:
        return {
            "config_id": self.config_id,
            "points": [{**dataclasses.asdict(p), "bler": p.bler} for p in self.points],
            "required_snr_db": self.required_snr_db,
            "target_bler": self.target_bler,
            "monotonicity_violations": [
                {**dataclasses.asdict(v), "tolerated": v.tolerated} for v in self.monotonicity_violations
            ],
            "metadata": self.metadata,
            "wall_time_s": self.wall_time_s,
        }


def run_point(cfg: LinkConfig, snr_db: float, snr_index: int, threads: int = 1) -> SnrPoint:
    """Drops at one SNR until min_blocks and min_errors are both met, or max_blocks is reached.

    Drops are evaluated in batches but consumed in index order, so the stop
    position is the same for any thread count.
    """
    s = cfg.sweep
    point = SnrPoint(float(snr_db))
    batch = 1 if threads <= 1 else threads * _BATCH_PER_THREAD

    def one(drop_index: int) -> DropResult:
        return run_drop(cfg, snr_db, drop_index, snr_index)

    while point.blocks < s.max_blocks:
        indices = range(point.blocks, min(point.blocks + batch, s.max_blocks))
        for result in map_ordered(one, indices, threads):
            point.blocks += 1
            point.errors += int(result.block_error)
            point.numerical_failures += int(result.numerical_failure)
            point.isi_drops += int(result.isi)
            if point.blocks >= s.min_blocks and point.errors >= s.min_errors:
                return _checked(cfg, point)
    return _checked(cfg, point)


def _checked(cfg: LinkConfig, point: SnrPoint) -> SnrPoint:
    """A point whose every drop broke down numerically has no BLER to report."""
    if point.blocks and point.numerical_failures == point.blocks:
        raise NumericalError(f"[{cfg.config_id}] all {point.blocks} drops at {point.snr_db:g} dB failed numerically")
    return point


def required_snr(points: Sequence[SnrPoint], target: float = TARGET_BLER) -> Optional[float]:
    """SNR at which BLER reaches target, by interpolating log10(BLER) between bracketing points.

    A point with no errors enters as 0.5 / blocks.  Returns the first SNR when
    it already meets the target and None when no point does.
    """
    pts = [p for p in points if p.blocks]
    if not pts:
        return None
    blers = [max(p.bler, 0.5 / p.blocks) for p in pts]
    if blers[0] <= target:
        return pts[0].snr_db
    for (a, ba), (b, bb) in zip(zip(pts, blers), zip(pts[1:], blers[1:])):
        if ba > target >= bb:
            if ba == bb:
                return b.snr_db
            frac = (math.log10(target) - math.log10(ba)) / (math.log10(bb) - math.log10(ba))
            return a.snr_db + frac * (b.snr_db - a.snr_db)
    return None


def check_monotonicity(points: Sequence[SnrPoint], sigmas: float = MONOTONICITY_SIGMAS) -> List[MonotonicityViolation]:
    """Every BLER increase between neighboring SNR points, with its binomial tolerance."""
    violations = []
    for low, high in zip(points, points[1:]):
        if not (low.blocks and high.blocks):
            continue
        increase = high.bler - low.bler
        if increase > 0:
            tolerance = sigmas * math.sqrt(low.sigma**2 + high.sigma**2)
            violations.append(MonotonicityViolation(low.snr_db, high.snr_db, increase, tolerance))
    return violations


def _isi_summary(setup: LinkSetup) -> Dict[str, Any]:
    """Largest scaled tap delay against the cyclic prefix length."""
    num = setup.num
    max_delay = int(np.rint(np.max(setup.profile.delays_s) * num.sample_rate_hz))
    return {
        "isi_regime": max_delay >= num.cp_samples,
        "max_tap_delay_samples": max_delay,
        "max_tap_delay_ns": float(np.max(setup.profile.delays_s) * 1e9),
        "cp_samples": num.cp_samples,
    }


def _sweep_metadata(cfg: LinkConfig) -> Dict[str, Any]:
    setup = prepare_link(cfg)
    code = setup.code
    return {
        "config": config_summary(cfg),
        "code": {
            "info_bits": code.info_bits,
            "payload_bits": code.payload_bits,
            "coded_bits": code.coded_bits,
            "lifting_size": code.lifting_size,
        },
        "ptrs_overhead": ptrs_overhead(cfg.ptrs_config(), setup.num),
        "isi": _isi_summary(setup),
    }


def run_sweep(cfg: LinkConfig, threads: int = 1) -> SweepResult:
    """BLER versus SNR over the configured grid, with early exit once BLER stays below the floor."""
    start = time.perf_counter()
    s = cfg.sweep
    points: List[SnrPoint] = []
    below = 0
    for snr_index, snr_db in enumerate(cfg.snr_grid()):
        point = run_point(cfg, float(snr_db), snr_index, threads)
        points.append(point)
        logger.info(
            f"[{cfg.config_id}] SNR {point.snr_db:6.2f} dB: {point.errors}/{point.blocks} errors, BLER {point.bler:.4g}"
        )
        if point.numerical_failures:
            logger.warning(f"[{cfg.config_id}] {point.numerical_failures} numerical failures at {point.snr_db:g} dB")
        if point.isi_drops:
            logger.warning(
                f"[{cfg.config_id}] {point.isi_drops}/{point.blocks} drops at {point.snr_db:g} dB "
                "have taps beyond the cyclic prefix"
            )
        below = below + 1 if point.bler < s.early_exit_bler else 0
        if below >= _EARLY_EXIT_POINTS:
            break

    violations = check_monotonicity(points)
    for v in violations:
        if not v.tolerated:
            logger.warning(
                f"[{cfg.config_id}] BLER rises by {v.increase:.3g} from {v.snr_low_db:g} to {v.snr_high_db:g} dB "
                f"(tolerance {v.tolerance:.3g})"
            )

    req = required_snr(points, s.target_bler)
    elapsed = time.perf_counter() - start
    logger.info(
        f"[{cfg.config_id}] required SNR at BLER {s.target_bler:g}: "
        f"{'N/A' if req is None else f'{req:.2f} dB'} ({elapsed:.1f} s)"
    )
    return SweepResult(
        config_id=cfg.config_id,
        points=points,
        required_snr_db=req,
        monotonicity_violations=violations,
        metadata=_sweep_metadata(cfg),
        wall_time_s=elapsed,
        target_bler=s.target_bler,
    )


# ----------------------------------------------------------------------------
# Scheme comparison
# ----------------------------------------------------------------------------


def required_snr_gap(a: SweepResult, b: SweepResult) -> Optional[float]:
    """Required SNR of b minus that of a; None when either is N/A."""
    if a.required_snr_db is None or b.required_snr_db is None:
        return None
    return b.required_snr_db - a.required_snr_db


@dataclass
class PairDelta:
    first: str
    second: str
    delta_db: Optional[float]


@dataclass
class OrderingCheck:
    better: str
    worse: str
    holds: bool


@dataclass
class ComparisonReport:
    required_snr_db: Dict[str, Optional[float]]
    deltas: List[PairDelta]
    orderings: List[OrderingCheck]

    @property
    def all_hold(self) -> bool:
        return all(o.holds for o in self.orderings)


def _comparable_key(cfg: LinkConfig) -> LinkConfig:
    w = dataclasses.replace(cfg.waveform, waveform=WaveformKind.SCFDMA)
    s = dataclasses.replace(cfg.sweep, config_id="")
    return cfg.replace(waveform=w, ptrs=PtrsSection(), sweep=s)


def _as_inf(value: Optional[float]) -> float:
    return math.inf if value is None else value


def compare_results(
    results: Sequence[SweepResult],
    expected_orderings: Sequence[Tuple[str, str]] = (),
) -> ComparisonReport:
    """Pairwise required-SNR deltas and checks of (better, worse) orderings.

    N/A counts as +inf; an ordering holds when the better scheme needs at most
    ORDERING_RESOLUTION_DB more than the worse one.
    """
    required = {r.config_id: r.required_snr_db for r in results}
    deltas = []
    for i, a in enumerate(results):
        for b in results[i + 1 :]:
            deltas.append(PairDelta(a.config_id, b.config_id, required_snr_gap(a, b)))

    orderings = []
    for better, worse in expected_orderings:
        if better not in required or worse not in required:
            raise ConfigError(f"Ordering ({better}, {worse}) names an unknown config_id")
        b, w = _as_inf(required[better]), _as_inf(required[worse])
        holds = (math.isinf(b) and math.isinf(w)) or b <= w + ORDERING_RESOLUTION_DB
        orderings.append(OrderingCheck(better, worse, holds))
        if not holds:
            logger.warning(f"Expected {better} to need no more SNR than {worse}: {b:.2f} dB vs {w:.2f} dB")
    return ComparisonReport(required, deltas, orderings)


def compare_schemes(
    cfgs: Sequence[LinkConfig],
    expected_orderings: Sequence[Tuple[str, str]] = (),
    threads: int = 1,
) -> ComparisonReport:
    """Sweep configurations that differ only in waveform and PTRS scheme, then compare them."""
    if not cfgs:
        raise ConfigError("compare_schemes needs at least one configuration")
    reference = _comparable_key(cfgs[0])
    for cfg in cfgs[1:]:
        if _comparable_key(cfg) != reference:
            raise ConfigError(f"Config '{cfg.config_id}' differs from '{cfgs[0].config_id}' beyond waveform and PTRS")
    ids = [c.config_id for c in cfgs]
    if len(set(ids)) != len(ids):
        raise ConfigError("Compared configurations need distinct config_id values")
    return compare_results([run_sweep(cfg, threads) for cfg in cfgs], expected_orderings)
