"""
Numerology - subcarrier spacing family, FFT sizing and resource grid

Every SCS in the supported family is 15 kHz scaled by a power of two.  The FFT
size is the smallest power of two keeping the allocation at or below 85%
occupancy, and the cyclic prefix keeps the normal-CP ratio 144/2048 on every
symbol.
"""

import math
from dataclasses import dataclass

import numpy as np

from utils.exceptions import ConfigError, InputError

SUPPORTED_SCS_KHZ = (120, 240, 480, 960, 1920, 3840)
SUBCARRIERS_PER_PRB = 12
SYMBOLS_PER_SLOT = 14
MAX_CHANNEL_BW_HZ = 2.16e9
MAX_FFT_OCCUPANCY = 0.85
CP_RATIO = 144 / 2048

# Largest allocation fitting the 2.16 GHz channel with guard bands.  SCSs below
# 960 kHz are capped at 180 PRBs to keep the transport block size constant.
_MAX_PRBS = {120: 180, 240: 180, 480: 180, 960: 180, 1920: 90, 3840: 45}


def _check_scs(scs_hz: float) -> int:
    scs_khz = scs_hz / 1e3
    for supported in SUPPORTED_SCS_KHZ:
        if math.isclose(scs_khz, supported):
            return supported
    raise ConfigError(f"Unsupported subcarrier spacing {scs_khz:g} kHz; supported: {list(SUPPORTED_SCS_KHZ)}")


def max_prbs(scs_hz: float) -> int:
    """Largest PRB allocation for an SCS within the 2.16 GHz channel, capped at 180."""
    return _MAX_PRBS[_check_scs(scs_hz)]


@dataclass(frozen=True)
class Numerology:
    scs_hz: float
    prb_count: int
    fft_size: int
    cp_samples: int
    symbols_per_slot: int = SYMBOLS_PER_SLOT

    @property
    def active_subcarriers(self) -> int:
        return self.prb_count * SUBCARRIERS_PER_PRB

    @property
    def sample_rate_hz(self) -> float:
        return self.scs_hz * self.fft_size

    @property
    def symbol_samples(self) -> int:
        return self.fft_size + self.cp_samples

    @property
    def slot_samples(self) -> int:
        return self.symbols_per_slot * self.symbol_samples

    @property
    def symbol_duration_s(self) -> float:
        """Duration of one symbol including its cyclic prefix."""
        return self.symbol_samples / self.sample_rate_hz

    @property
    def cp_duration_s(self) -> float:
        return self.cp_samples / self.sample_rate_hz

    @property
    def slot_duration_s(self) -> float:
        return self.symbols_per_slot * self.symbol_duration_s

    @property
    def occupied_bandwidth_hz(self) -> float:
        return self.active_subcarriers * self.scs_hz

    @property
    def scs_khz(self) -> int:
        return int(round(self.scs_hz / 1e3))

    def subcarrier_bins(self, oversampling: int = 1) -> np.ndarray:
        """FFT bin of every active subcarrier, DC-centered with the DC subcarrier in use.

        Active subcarrier i sits at signed frequency index i - N//2.
        """
        n_fft = self.fft_size * oversampling
        offsets = np.arange(self.active_subcarriers) - self.active_subcarriers // 2
        return np.mod(offsets, n_fft)

    def subcarrier_offsets(self) -> np.ndarray:
        """Signed frequency index of every active subcarrier (in units of SCS)."""
        return np.arange(self.active_subcarriers) - self.active_subcarriers // 2


def derive_numerology(scs_hz: float, prb_count: int) -> Numerology:
    """Build the numerology for an SCS and PRB allocation."""
    limit = max_prbs(scs_hz)
    if prb_count < 1 or prb_count > limit:
        raise ConfigError(f"prb_count {prb_count} outside [1, {limit}] for {scs_hz / 1e3:g} kHz SCS")

    min_fft = prb_count * SUBCARRIERS_PER_PRB / MAX_FFT_OCCUPANCY
    fft_size = 1 << max(0, math.ceil(math.log2(min_fft)))
    cp_samples = int(round(fft_size * CP_RATIO))
    return Numerology(scs_hz=float(scs_hz), prb_count=prb_count, fft_size=fft_size, cp_samples=cp_samples)


@dataclass
class ResourceGrid:
    """One slot of modulation symbols for one spatial layer.

    symbols has shape (symbols_per_slot, active_subcarriers).  For SC-FDMA the
    second axis holds sub-symbol positions instead of subcarriers.
    """

    symbols: np.ndarray
    layer: int = 0

    def __post_init__(self) -> None:
        self.symbols = np.asarray(self.symbols, dtype=complex)
        if self.symbols.ndim != 2:
            raise InputError(f"Resource grid must be 2-D, got shape {self.symbols.shape}")
        if self.layer not in (0, 1):
            raise InputError(f"Layer index must be 0 or 1, got {self.layer}")
        if not np.all(np.isfinite(self.symbols)):
            raise InputError("Resource grid contains non-finite resource elements")

    def check_matches(self, num: Numerology) -> None:
        expected = (num.symbols_per_slot, num.active_subcarriers)
        if self.symbols.shape != expected:
            raise InputError(f"Grid shape {self.symbols.shape} does not match numerology {expected}")

    @classmethod
    def empty(cls, num: Numerology, layer: int = 0) -> "ResourceGrid":
        return cls(np.zeros((num.symbols_per_slot, num.active_subcarriers), dtype=complex), layer)
