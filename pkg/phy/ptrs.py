"""
PTRS - phase-tracking reference patterns and the receiver-side phase-noise
estimators and compensators

Frequency-domain schemes (distributed, block) apply to CP-OFDM; time-domain
group schemes apply to SC-FDMA, where pilots are sub-symbols inserted before
the DFT spread.  Pilots sit on layer 0 only.
"""

import enum
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from phy.numerology import SUBCARRIERS_PER_PRB, Numerology
from phy.waveform import Modulation, WaveformKind, map_bits
from utils.exceptions import ConfigError, EstimationError, InputError

logger = logging.getLogger(__name__)

PILOT_SEED = 0x5054
ICI_TAPS_PER_SIDE = 4
_ICI_COND_LIMIT = 1e10
_ICI_RIDGE = 1e-6
_MIN_FILTER_ENERGY = 1e-12


class PtrsScheme(enum.Enum):
    NONE = "none"
    DISTRIBUTED = "distributed"
    BLOCK = "block"
    TD_GROUPS = "td-groups"
    TD_ENHANCED = "td-enhanced"

    @property
    def is_time_domain(self) -> bool:
        return self in (PtrsScheme.TD_GROUPS, PtrsScheme.TD_ENHANCED)

    @property
    def is_frequency_domain(self) -> bool:
        return self in (PtrsScheme.DISTRIBUTED, PtrsScheme.BLOCK)

    @classmethod
    def parse(cls, name: str) -> "PtrsScheme":
        key = str(name).strip().lower().replace("_", "-")
        for scheme in cls:
            if scheme.value == key:
                return scheme
        raise ConfigError(f"Unknown PTRS scheme '{name}'; expected one of {[s.value for s in cls]}")


@dataclass(frozen=True)
class PtrsConfig:
    scheme: PtrsScheme = PtrsScheme.NONE
    fd_prb_spacing: int = 2
    fd_symbol_spacing: int = 1
    block_prbs: int = 4
    groups: int = 8
    subsymbols_per_group: int = 4
    ici_taps_per_side: int = ICI_TAPS_PER_SIDE

    def __post_init__(self) -> None:
        s = self.scheme
        if s is PtrsScheme.DISTRIBUTED:
            if self.fd_prb_spacing not in (2, 4):
                raise ConfigError(f"ptrs.fd_prb_spacing must be 2 or 4, got {self.fd_prb_spacing}")
            if self.fd_symbol_spacing not in (1, 2, 4):
                raise ConfigError(f"ptrs.fd_symbol_spacing must be 1, 2 or 4, got {self.fd_symbol_spacing}")
        elif s is PtrsScheme.BLOCK:
            if self.block_prbs < 1:
                raise ConfigError(f"ptrs.block_prbs must be at least 1, got {self.block_prbs}")
            if self.ici_taps_per_side < 0:
                raise ConfigError("ptrs.ici_taps_per_side must be non-negative")
        elif s is PtrsScheme.TD_GROUPS and self.groups not in (2, 4, 8):
            raise ConfigError(f"ptrs.groups must be 2, 4 or 8 for td-groups, got {self.groups}")
        elif s is PtrsScheme.TD_ENHANCED and self.groups != 12:
            raise ConfigError(f"ptrs.groups must be 12 for td-enhanced, got {self.groups}")
        if s.is_time_domain and self.subsymbols_per_group not in (2, 4):
            raise ConfigError(f"ptrs.subsymbols_per_group must be 2 or 4, got {self.subsymbols_per_group}")

    def check_waveform(self, waveform: WaveformKind) -> None:
        if self.scheme.is_frequency_domain and waveform is not WaveformKind.OFDM:
            raise ConfigError(f"PTRS scheme '{self.scheme.value}' requires the ofdm waveform")
        if self.scheme.is_time_domain and waveform is not WaveformKind.SCFDMA:
            raise ConfigError(f"PTRS scheme '{self.scheme.value}' requires the sc-fdma waveform")


@dataclass(frozen=True)
class PtrsPattern:
    """Pilot mask of shape (symbols_per_slot, active positions); True marks a pilot."""

    scheme: PtrsScheme
    mask: np.ndarray
    group_size: int = 1

    def indices(self) -> np.ndarray:
        """(symbol, position) pairs of all pilots, row-major."""
        return np.argwhere(self.mask)

    def positions(self, symbol: int) -> np.ndarray:
        return np.flatnonzero(self.mask[symbol])

    def pilot_symbols(self) -> np.ndarray:
        return np.flatnonzero(self.mask.any(axis=1))

    @property
    def pilot_count(self) -> int:
        return int(self.mask.sum())

    @property
    def data_count(self) -> int:
        return int(self.mask.size - self.mask.sum())


def _distributed_mask(cfg: PtrsConfig, num: Numerology) -> np.ndarray:
    mask = np.zeros((num.symbols_per_slot, num.active_subcarriers), dtype=bool)
    subcarriers = np.arange(0, num.prb_count, cfg.fd_prb_spacing) * SUBCARRIERS_PER_PRB
    mask[:: cfg.fd_symbol_spacing, subcarriers] = True
    return mask


def _block_mask(cfg: PtrsConfig, num: Numerology) -> np.ndarray:
    length = cfg.block_prbs * SUBCARRIERS_PER_PRB
    if cfg.block_prbs >= num.prb_count:
        raise ConfigError(f"Block PTRS of {cfg.block_prbs} PRBs leaves no data in a {num.prb_count}-PRB allocation")
    q = cfg.ici_taps_per_side
    if length - 2 * q < 2 * q + 1:
        raise ConfigError(f"Block PTRS of {length} subcarriers cannot estimate {2 * q + 1} ICI taps")
    start = (num.active_subcarriers - length) // 2
    mask = np.zeros((num.symbols_per_slot, num.active_subcarriers), dtype=bool)
    mask[:, start : start + length] = True
    return mask


def group_starts(m: int, groups: int, group_size: int) -> np.ndarray:
    """First sub-symbol of every group; groups are centered at (i + 0.5) * M / groups."""
    centers = (np.arange(groups) + 0.5) * m / groups
    return np.clip(np.rint(centers - group_size / 2).astype(int), 0, m - group_size)


def _td_mask(cfg: PtrsConfig, num: Numerology) -> np.ndarray:
    m = num.active_subcarriers
    k = cfg.subsymbols_per_group
    if cfg.groups * k >= m or m // cfg.groups < k:
        raise ConfigError(f"{cfg.groups} PTRS groups of {k} sub-symbols do not fit M = {m}")
    mask = np.zeros((num.symbols_per_slot, m), dtype=bool)
    for start in group_starts(m, cfg.groups, k):
        mask[:, start : start + k] = True
    return mask


def ptrs_positions(cfg: PtrsConfig, num: Numerology) -> PtrsPattern:
    if cfg.scheme is PtrsScheme.NONE:
        mask = np.zeros((num.symbols_per_slot, num.active_subcarriers), dtype=bool)
        return PtrsPattern(cfg.scheme, mask)
    if cfg.scheme is PtrsScheme.DISTRIBUTED:
        return PtrsPattern(cfg.scheme, _distributed_mask(cfg, num))
    if cfg.scheme is PtrsScheme.BLOCK:
        return PtrsPattern(cfg.scheme, _block_mask(cfg, num), cfg.block_prbs * SUBCARRIERS_PER_PRB)
    return PtrsPattern(cfg.scheme, _td_mask(cfg, num), cfg.subsymbols_per_group)


@dataclass(frozen=True)
class PtrsOverhead:
    pilots_per_symbol: int
    pilot_res: int
    data_res: int
    overhead_fraction: float


def ptrs_overhead(cfg: PtrsConfig, num: Numerology) -> PtrsOverhead:
    pattern = ptrs_positions(cfg, num)
    per_symbol = int(pattern.mask.sum(axis=1).max())
    return PtrsOverhead(
        pilots_per_symbol=per_symbol,
        pilot_res=pattern.pilot_count,
        data_res=pattern.data_count,
        overhead_fraction=pattern.pilot_count / pattern.mask.size,
    )


def pilot_values(pattern: PtrsPattern) -> np.ndarray:
    """Unit-energy QPSK pilots in mask (row-major) order, from a fixed seed."""
    rng = np.random.default_rng(PILOT_SEED)
    bits = rng.integers(0, 2, size=2 * pattern.pilot_count)
    return map_bits(bits, Modulation.QPSK)


# ----------------------------------------------------------------------------
# Estimation and compensation
# ----------------------------------------------------------------------------


def estimate_cpe(rx_pilots: np.ndarray, tx_pilots: np.ndarray) -> float:
    """Angle of the matched correlation sum(rx * conj(tx))."""
    rx = np.asarray(rx_pilots, dtype=complex).ravel()
    tx = np.asarray(tx_pilots, dtype=complex).ravel()
    if rx.shape != tx.shape:
        raise InputError(f"Pilot sequences differ in length: {rx.size} vs {tx.size}")
    corr = np.vdot(tx, rx)
    if rx.size == 0 or abs(corr) == 0.0:
        raise EstimationError("Common phase error is undefined for zero pilot energy")
    return float(np.angle(corr))


def derotate(symbols: np.ndarray, phase) -> np.ndarray:
    return np.asarray(symbols) * np.exp(-1j * np.asarray(phase))


def interpolate_phase(known_index: np.ndarray, phases: np.ndarray, length: int) -> np.ndarray:
    """Linear interpolation of unwrapped phases, held constant beyond the first and last point."""
    known_index = np.asarray(known_index, dtype=float)
    phases = np.unwrap(np.asarray(phases, dtype=float))
    if known_index.size == 1:
        return np.full(length, phases[0])
    return np.interp(np.arange(length), known_index, phases)


@dataclass(frozen=True)
class IciFilterEstimate:
    """ICI filter taps for frequency offsets -Q..+Q; taps[Q] is the DC tap."""

    taps: np.ndarray

    @property
    def q(self) -> int:
        return (self.taps.size - 1) // 2

    @property
    def dc(self) -> complex:
        return complex(self.taps[self.q])

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.taps) ** 2))

    @classmethod
    def identity(cls, q: int = ICI_TAPS_PER_SIDE) -> "IciFilterEstimate":
        taps = np.zeros(2 * q + 1, dtype=complex)
        taps[q] = 1.0
        return cls(taps)


def _ici_system(tx: np.ndarray, q: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rows k in [Q, B-1-Q]; column j holds tx[k - (j - Q)]."""
    interior = np.arange(q, tx.size - q)
    offsets = np.arange(-q, q + 1)
    return tx[interior[:, None] - offsets[None, :]], interior


def estimate_ici(rx_block: np.ndarray, tx_block: np.ndarray, q: int = ICI_TAPS_PER_SIDE) -> IciFilterEstimate:
    """Least-squares fit of rx = tx (*) taps over interior block positions.

    A ridge of 1e-6 * trace is added only when the normal matrix is
    ill-conditioned, so a noiseless well-posed block is recovered exactly.
    """
    rx = np.asarray(rx_block, dtype=complex).ravel()
    tx = np.asarray(tx_block, dtype=complex).ravel()
    if rx.shape != tx.shape:
        raise InputError(f"Block pilot sequences differ in length: {rx.size} vs {tx.size}")
    n_taps = 2 * q + 1
    if tx.size - 2 * q < n_taps:
        raise EstimationError(f"A block of {tx.size} pilots cannot resolve {n_taps} ICI taps")

    a, interior = _ici_system(tx, q)
    y = rx[interior]
    if np.linalg.matrix_rank(a) < n_taps:
        raise EstimationError("ICI least-squares system is rank deficient")
    gram = a.conj().T @ a
    if np.linalg.cond(gram) > _ICI_COND_LIMIT:
        ridge = _ICI_RIDGE * np.real(np.trace(gram))
        taps = np.linalg.solve(gram + ridge * np.eye(n_taps), a.conj().T @ y)
    else:
        taps, *_ = np.linalg.lstsq(a, y, rcond=None)
    return IciFilterEstimate(np.asarray(taps, dtype=complex))


def reconstruct_phase(ici: IciFilterEstimate, fft_size: int) -> np.ndarray:
    """Phase of the PN waveform sum_q taps[q] exp(j 2 pi q n / N) over one symbol body."""
    n = np.arange(fft_size)
    offsets = np.arange(-ici.q, ici.q + 1)
    waveform = np.exp(2j * np.pi * np.outer(n, offsets) / fft_size) @ ici.taps
    return np.angle(waveform)


def compensate_ici(symbol: np.ndarray, ici: IciFilterEstimate, num: Numerology) -> Tuple[np.ndarray, bool]:
    """Undo ICI on one OFDM symbol by time-domain derotation with the reconstructed phase.

    Returns the compensated subcarriers and whether compensation was applied;
    near-zero filter energy skips it.
    """
    symbol = np.asarray(symbol, dtype=complex)
    if symbol.size != num.active_subcarriers:
        raise InputError(f"Symbol has {symbol.size} subcarriers, numerology has {num.active_subcarriers}")
    if ici.energy < _MIN_FILTER_ENERGY:
        logger.debug("ICI filter energy below threshold, compensation skipped")
        return symbol.copy(), False

    bins = num.subcarrier_bins()
    freq = np.zeros(num.fft_size, dtype=complex)
    freq[bins] = symbol
    body = np.fft.ifft(freq, norm="ortho")
    body *= np.exp(-1j * reconstruct_phase(ici, num.fft_size))
    return np.fft.fft(body, norm="ortho")[bins], True


def track_pn_td(
    rx_pilots: np.ndarray,
    tx_pilots: np.ndarray,
    positions: np.ndarray,
    m: int,
    group_size: int,
) -> np.ndarray:
    """Per-sub-symbol phase of one SC-FDMA symbol from its pilot groups.

    Each group contributes its matched-correlation phase at the group center;
    phases are linearly interpolated between centers and held constant at the
    edges.  A single group yields a constant (CPE) estimate.
    """
    rx = np.asarray(rx_pilots, dtype=complex).ravel()
    tx = np.asarray(tx_pilots, dtype=complex).ravel()
    positions = np.asarray(positions, dtype=int).ravel()
    if not (rx.size == tx.size == positions.size):
        raise InputError("Pilot values and positions differ in length")
    if positions.size == 0 or positions.size % group_size:
        raise InputError(f"{positions.size} pilot positions do not form groups of {group_size}")

    order = np.argsort(positions)
    rx, tx, positions = rx[order], tx[order], positions[order]
    n_groups = positions.size // group_size
    centers = positions.reshape(n_groups, group_size).mean(axis=1)
    phases = np.array(
        [estimate_cpe(rx[g * group_size : (g + 1) * group_size], tx[g * group_size : (g + 1) * group_size]) for g in range(n_groups)]
    )
    if n_groups == 1:
        return np.full(m, phases[0])
    return interpolate_phase(centers, phases, m)

