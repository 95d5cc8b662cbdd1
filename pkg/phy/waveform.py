"""
Waveform - QAM mapping and the CP-OFDM / SC-FDMA transmit and receive chains

All DFT stages are unitary (numpy ``norm="ortho"``): time-domain energy equals
frequency-domain energy, so a unit-energy resource element observed in
per-sample noise of variance s2 has per-RE SNR 1/s2.  Subcarriers are mapped
DC-centered with the DC subcarrier in use.
"""

import enum
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from phy.numerology import Numerology, ResourceGrid
from utils.exceptions import ConfigError, DomainError, EstimationError, InputError

logger = logging.getLogger(__name__)


class Modulation(enum.Enum):
    QPSK = "qpsk"
    QAM16 = "16qam"
    QAM64 = "64qam"
    QAM256 = "256qam"

    @property
    def bits_per_symbol(self) -> int:
        return {"qpsk": 2, "16qam": 4, "64qam": 6, "256qam": 8}[self.value]

    @property
    def bits_per_axis(self) -> int:
        return self.bits_per_symbol // 2

    @classmethod
    def parse(cls, name: str) -> "Modulation":
        key = str(name).strip().lower().replace("-", "")
        for mod in cls:
            if mod.value == key:
                return mod
        raise ConfigError(f"Unknown modulation '{name}'; expected one of {[m.value for m in cls]}")


class WaveformKind(enum.Enum):
    OFDM = "ofdm"
    SCFDMA = "sc-fdma"

    @classmethod
    def parse(cls, name: str) -> "WaveformKind":
        key = str(name).strip().lower().replace("_", "-")
        if key in ("scfdma", "dft-s-ofdm"):
            key = "sc-fdma"
        for kind in cls:
            if kind.value == key:
                return kind
        raise ConfigError(f"Unknown waveform '{name}'; expected 'ofdm' or 'sc-fdma'")


@dataclass
class TimeSignal:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=complex)

    def __len__(self) -> int:
        return self.samples.size

    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


# ----------------------------------------------------------------------------
# QAM
# ----------------------------------------------------------------------------


def axis_levels(mod: Modulation) -> np.ndarray:
    """Gray-coded PAM levels of one axis, indexed by the axis bit pattern (MSB first).

    Level for bits (a0, a1, ...) is (1-2a0)(2^(m-1) - (1-2a1)(2^(m-2) - ...)),
    scaled so that the full square constellation has unit average energy.
    """
    m = mod.bits_per_axis
    patterns = np.arange(1 << m)
    bits = (patterns[:, None] >> np.arange(m - 1, -1, -1)) & 1
    signs = 1 - 2 * bits
    level = signs[:, m - 1].astype(float)
    for j in range(m - 2, -1, -1):
        level = signs[:, j] * ((1 << (m - 1 - j)) - level)
    n_levels = 1 << m
    return level / np.sqrt(2 * (n_levels**2 - 1) / 3)


def constellation(mod: Modulation) -> np.ndarray:
    """All constellation points indexed by the full symbol bit pattern (b0 first)."""
    k = mod.bits_per_symbol
    patterns = np.arange(1 << k)
    bits = ((patterns[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)
    return map_bits(bits.ravel(), mod)


def _pack_msb_first(bits: np.ndarray) -> np.ndarray:
    weights = 1 << np.arange(bits.shape[1] - 1, -1, -1)
    return bits @ weights


def map_bits(bits: np.ndarray, mod: Modulation) -> np.ndarray:
    """Map a bit sequence to Gray QAM symbols.

    Even bits of each group drive the in-phase axis and odd bits the
    quadrature axis, so bits 00 map to (+1+j)/sqrt(2) for QPSK.
    """
    bits = np.asarray(bits, dtype=np.int64).ravel()
    k = mod.bits_per_symbol
    if bits.size % k:
        raise InputError(f"Bit count {bits.size} is not a multiple of {k} bits per {mod.value} symbol")
    groups = bits.reshape(-1, k)
    levels = axis_levels(mod)
    return levels[_pack_msb_first(groups[:, 0::2])] + 1j * levels[_pack_msb_first(groups[:, 1::2])]


# ----------------------------------------------------------------------------
# OFDM
# ----------------------------------------------------------------------------


def ofdm_modulate(grid: ResourceGrid, num: Numerology, oversampling: int = 1) -> TimeSignal:
    """Inverse DFT of every symbol of the grid with a cyclic prefix prepended.

    With oversampling > 1 the inverse DFT is zero-padded to oversampling x fft_size.
    """
    grid.check_matches(num)
    n_fft = num.fft_size * oversampling
    cp = num.cp_samples * oversampling
    freq = np.zeros((num.symbols_per_slot, n_fft), dtype=complex)
    freq[:, num.subcarrier_bins(oversampling)] = grid.symbols
    body = np.fft.ifft(freq, axis=1, norm="ortho")
    with_cp = np.concatenate([body[:, n_fft - cp :], body], axis=1)
    return TimeSignal(with_cp.ravel(), num.sample_rate_hz * oversampling)


def _symbol_bodies(sig: TimeSignal, num: Numerology, oversampling: int) -> np.ndarray:
    n_fft = num.fft_size * oversampling
    cp = num.cp_samples * oversampling
    expected = num.symbols_per_slot * (n_fft + cp)
    if len(sig) != expected:
        raise InputError(f"Signal length {len(sig)} does not match one slot of {expected} samples")
    return sig.samples.reshape(num.symbols_per_slot, n_fft + cp)[:, cp:]


def ofdm_demodulate(sig: TimeSignal, num: Numerology, oversampling: int = 1) -> ResourceGrid:
    """Remove the CP of every symbol, apply the DFT and pick the active subcarriers."""
    freq = np.fft.fft(_symbol_bodies(sig, num, oversampling), axis=1, norm="ortho")
    return ResourceGrid(freq[:, num.subcarrier_bins(oversampling)])


# ----------------------------------------------------------------------------
# SC-FDMA
# ----------------------------------------------------------------------------


def spread(subsymbols: np.ndarray) -> np.ndarray:
    """Length-M DFT spread of each row of sub-symbols."""
    return np.fft.fft(subsymbols, axis=-1, norm="ortho")


def despread(subcarriers: np.ndarray) -> np.ndarray:
    """Inverse of spread()."""
    return np.fft.ifft(subcarriers, axis=-1, norm="ortho")


def assemble_subsymbols(
    data: np.ndarray,
    num: Numerology,
    ptrs: Optional[np.ndarray] = None,
    positions: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Interleave data and PTRS sub-symbols into (symbols_per_slot, M) streams."""
    m = num.active_subcarriers
    data = np.asarray(data, dtype=complex)
    positions = np.zeros(0, dtype=int) if positions is None else np.asarray(positions, dtype=int)
    if positions.size and (positions.min() < 0 or positions.max() >= m):
        raise ConfigError(f"PTRS positions exceed the {m} sub-symbols of an SC-FDMA symbol")
    if np.unique(positions).size != positions.size:
        raise ConfigError("PTRS positions overlap")
    data = data.reshape(num.symbols_per_slot, -1)
    if data.shape[1] + positions.size != m:
        raise InputError(f"{data.shape[1]} data + {positions.size} PTRS sub-symbols do not fill M = {m}")

    stream = np.zeros((num.symbols_per_slot, m), dtype=complex)
    pilot_mask = np.zeros(m, dtype=bool)
    pilot_mask[positions] = True
    stream[:, ~pilot_mask] = data
    if positions.size:
        if ptrs is None:
            raise InputError("PTRS positions given without PTRS sub-symbols")
        stream[:, positions] = np.asarray(ptrs, dtype=complex).reshape(num.symbols_per_slot, positions.size)
    return stream


def scfdma_modulate(
    data: np.ndarray,
    num: Numerology,
    ptrs: Optional[np.ndarray] = None,
    positions: Optional[np.ndarray] = None,
    oversampling: int = 1,
) -> TimeSignal:
    """DFT-spread the sub-symbol stream of every symbol, then OFDM-modulate it."""
    stream = assemble_subsymbols(data, num, ptrs, positions)
    return ofdm_modulate(ResourceGrid(spread(stream)), num, oversampling)


def scfdma_demodulate(sig: TimeSignal, num: Numerology, oversampling: int = 1) -> np.ndarray:
    """Recover the (symbols_per_slot, M) sub-symbol stream."""
    return despread(ofdm_demodulate(sig, num, oversampling).symbols)


# ----------------------------------------------------------------------------
# Multi-slot helpers for the PA / PAPR analyzers
# ----------------------------------------------------------------------------


def random_slots(
    waveform: WaveformKind,
    mod: Modulation,
    num: Numerology,
    rng: np.random.Generator,
    slots: int = 1,
    oversampling: int = 1,
) -> Tuple[TimeSignal, np.ndarray]:
    """Random-data signal of several slots and its reference symbols.

    The reference is the subcarrier grid for OFDM and the sub-symbol stream for
    SC-FDMA, stacked to shape (slots * symbols_per_slot, active_subcarriers).
    """
    m = num.active_subcarriers
    pieces = []
    refs = []
    for _ in range(slots):
        bits = rng.integers(0, 2, size=num.symbols_per_slot * m * mod.bits_per_symbol)
        symbols = map_bits(bits, mod).reshape(num.symbols_per_slot, m)
        if waveform is WaveformKind.OFDM:
            pieces.append(ofdm_modulate(ResourceGrid(symbols), num, oversampling).samples)
        else:
            pieces.append(scfdma_modulate(symbols, num, oversampling=oversampling).samples)
        refs.append(symbols)
    return TimeSignal(np.concatenate(pieces), num.sample_rate_hz * oversampling), np.vstack(refs)


def demodulate_slots(waveform: WaveformKind, sig: TimeSignal, num: Numerology, oversampling: int = 1) -> np.ndarray:
    """Receive-side counterpart of random_slots()."""
    slot_len = num.slot_samples * oversampling
    if len(sig) % slot_len:
        raise InputError(f"Signal length {len(sig)} is not a whole number of {slot_len}-sample slots")
    out = []
    for start in range(0, len(sig), slot_len):
        piece = TimeSignal(sig.samples[start : start + slot_len], sig.sample_rate_hz)
        if waveform is WaveformKind.OFDM:
            out.append(ofdm_demodulate(piece, num, oversampling).symbols)
        else:
            out.append(scfdma_demodulate(piece, num, oversampling))
    return np.vstack(out)


# ----------------------------------------------------------------------------
# PAPR
# ----------------------------------------------------------------------------


def _normalized_power(sig: TimeSignal) -> np.ndarray:
    power = np.abs(sig.samples) ** 2
    mean = power.mean() if power.size else 0.0
    if mean <= 0:
        raise EstimationError("PAPR is undefined for a zero-power signal")
    return power / mean


def papr_ccdf(sig: TimeSignal, probability: float) -> float:
    """PAPR level in dB exceeded by the instantaneous power with the given probability."""
    if not 0 < probability < 1:
        raise DomainError(f"CCDF probability must lie in (0, 1), got {probability}")
    if len(sig) < 10 / probability:
        raise EstimationError(
            f"{len(sig)} samples cannot resolve a CCDF probability of {probability:g} (need {int(np.ceil(10 / probability))})"
        )
    level = np.quantile(_normalized_power(sig), 1.0 - probability)
    return float(10 * np.log10(level))


def papr_ccdf_curve(sig: TimeSignal, levels_db: np.ndarray) -> np.ndarray:
    """Empirical CCDF P(PAPR > level) for each level in dB."""
    ratio_db = 10 * np.log10(np.maximum(_normalized_power(sig), np.finfo(float).tiny))
    ratio_db.sort()
    levels_db = np.asarray(levels_db, dtype=float)
    exceed = ratio_db.size - np.searchsorted(ratio_db, levels_db, side="right")
    return exceed / ratio_db.size
