"""
Channel - effective 2x2 Rician tapped-delay-line fading with Jakes Doppler,
tapped-delay convolution and per-subcarrier linear MMSE equalization

The dual-polarized arrays are collapsed to one effective port per
polarization.  Tap 0 carries the specular LOS component through a unitary
polarization-mixing matrix; the remaining CDL-E clusters are diffuse.  Every
row and every column of the 2x2 matrix summed over taps has unit expected
energy.
"""

import enum
import functools
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from phy.numerology import Numerology
from phy.profiles import CDL_E_TAPS, SPEED_OF_LIGHT_MPS
from phy.waveform import TimeSignal
from utils.exceptions import ConfigError, InputError

logger = logging.getLogger(__name__)

PORTS = 2
SINUSOIDS_PER_PATH = 16
# Keeps the normal matrix invertible when noise_var is zero.
_MMSE_FLOOR = 1e-13


class ChannelKind(enum.Enum):
    CDL_E = "cdl-e"
    AWGN = "awgn"

    @classmethod
    def parse(cls, name: str) -> "ChannelKind":
        key = str(name).strip().lower()
        for kind in cls:
            if kind.value == key:
                return kind
        raise ConfigError(f"Unknown channel '{name}'; expected 'cdl-e' or 'awgn'")


@dataclass(frozen=True)
class ChannelProfile:
    """Scaled tap profile.  taps hold (delay_s, power_db) with linear powers summing to 1."""

    taps: Tuple[Tuple[float, float], ...]
    rician_k_db: float
    rms_delay_spread_s: float
    ue_speed_mps: float
    carrier_hz: float
    xpr_db: float = 8.0
    kind: ChannelKind = ChannelKind.CDL_E

    @property
    def k_linear(self) -> float:
        return 10.0 ** (self.rician_k_db / 10.0)

    @property
    def doppler_hz(self) -> float:
        return self.ue_speed_mps * self.carrier_hz / SPEED_OF_LIGHT_MPS

    @property
    def delays_s(self) -> np.ndarray:
        return np.array([d for d, _ in self.taps])

    @property
    def powers(self) -> np.ndarray:
        return 10.0 ** (np.array([p for _, p in self.taps]) / 10.0)

    def los_matrix(self) -> np.ndarray:
        return los_matrix(self.xpr_db)


def los_matrix(xpr_db: float) -> np.ndarray:
    """Unitary polarization-mixing matrix; co-polar power share x/(1+x) with x the XPR."""
    x = 10.0 ** (xpr_db / 10.0)
    co = math.sqrt(x / (1.0 + x))
    cross = math.sqrt(1.0 / (1.0 + x))
    return np.array([[co, cross], [-cross, co]], dtype=complex)


def rms_delay_spread(delays_s: np.ndarray, powers: np.ndarray) -> float:
    powers = np.asarray(powers, dtype=float)
    weights = powers / powers.sum()
    mean = np.dot(weights, delays_s)
    return float(math.sqrt(max(np.dot(weights, (np.asarray(delays_s) - mean) ** 2), 0.0)))


def cdl_e_profile(
    rms_ds_ns: float = 10.0,
    rician_k_db: float = 15.0,
    ue_speed_kmh: float = 3.0,
    carrier_hz: float = 90e9,
    xpr_db: float = 8.0,
) -> ChannelProfile:
    """CDL-E taps with the K-factor split on tap 0 and delays scaled to the target RMS spread.

    The spread is computed on the final (K-split) powers, so the scaled profile
    reports exactly rms_ds_ns.
    """
    if rms_ds_ns < 0 or ue_speed_kmh < 0 or carrier_hz <= 0:
        raise ConfigError("Channel delay spread, speed and carrier must be non-negative")
    speed_mps = ue_speed_kmh / 3.6
    if math.isinf(rician_k_db) and rician_k_db > 0:
        return ChannelProfile(((0.0, 0.0),), rician_k_db, 0.0, speed_mps, carrier_hz, xpr_db)

    k = 10.0 ** (rician_k_db / 10.0)
    norm_delays = np.array([d for d, _ in CDL_E_TAPS])
    diffuse = 10.0 ** (np.array([p for _, p in CDL_E_TAPS[1:]]) / 10.0)
    powers = np.concatenate([[k / (k + 1.0)], diffuse / diffuse.sum() / (k + 1.0)])

    spread_norm = rms_delay_spread(norm_delays, powers)
    scale = rms_ds_ns * 1e-9 / spread_norm if spread_norm > 0 else 0.0
    taps = tuple((float(d * scale), float(10.0 * np.log10(p))) for d, p in zip(norm_delays, powers))
    return ChannelProfile(taps, rician_k_db, rms_ds_ns * 1e-9, speed_mps, carrier_hz, xpr_db)


def awgn_profile(carrier_hz: float = 90e9) -> ChannelProfile:
    """Single identity tap for calibration runs."""
    return ChannelProfile(((0.0, 0.0),), math.inf, 0.0, 0.0, carrier_hz, math.inf, ChannelKind.AWGN)


@dataclass
class MimoChannelRealization:
    """Per-symbol tap gains.  gains has shape (n_symbols, n_taps, rx, tx)."""

    delays_s: np.ndarray
    gains: np.ndarray
    symbol_period_s: float

    @property
    def n_symbols(self) -> int:
        return self.gains.shape[0]

    def delay_samples(self, sample_rate_hz: float) -> np.ndarray:
        return np.rint(np.asarray(self.delays_s) * sample_rate_hz).astype(int)

    def exceeds_cp(self, num: Numerology) -> bool:
        return bool(np.any(self.delay_samples(num.sample_rate_hz) >= num.cp_samples))

    def is_time_invariant(self) -> bool:
        return bool(np.allclose(self.gains, self.gains[:1], rtol=0, atol=0))


def _jakes_paths(rng: np.random.Generator, times: np.ndarray, doppler_hz: float, shape: Tuple[int, ...]) -> np.ndarray:
    """Unit-power sum-of-sinusoids fading with random arrival angles and phases.

    Returns an array of shape (len(times),) + shape.
    """
    n_paths = int(np.prod(shape))
    alpha = rng.uniform(0.0, 2.0 * np.pi, size=(n_paths, SINUSOIDS_PER_PATH))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=(n_paths, SINUSOIDS_PER_PATH))
    omega = 2.0 * np.pi * doppler_hz * np.cos(alpha)
    arg = omega[None, :, :] * times[:, None, None] + phi[None, :, :]
    fading = np.exp(1j * arg).sum(axis=2) / math.sqrt(SINUSOIDS_PER_PATH)
    return fading.reshape((times.size,) + shape)


def realize_channel(
    profile: ChannelProfile,
    duration_s: float,
    symbol_period_s: float,
    seed: Union[int, np.random.SeedSequence, np.random.Generator, None] = None,
) -> MimoChannelRealization:
    """Draw one fading realization sampled once per symbol (block fading at symbol rate)."""
    if symbol_period_s <= 0 or duration_s <= 0:
        raise InputError("Channel duration and symbol period must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_symbols = max(1, math.ceil(duration_s / symbol_period_s - 1e-9))
    times = np.arange(n_symbols) * symbol_period_s
    delays = profile.delays_s
    n_taps = delays.size

    gains = np.zeros((n_symbols, n_taps, PORTS, PORTS), dtype=complex)
    if profile.kind is ChannelKind.AWGN:
        gains[:, 0] = np.eye(PORTS)
        return MimoChannelRealization(delays, gains, symbol_period_s)

    k = profile.k_linear
    if math.isinf(k):
        gains[:, 0] = profile.los_matrix()
        return MimoChannelRealization(delays, gains, symbol_period_s)

    gains[:, 0] = math.sqrt(k / (k + 1.0)) * profile.los_matrix()
    if n_taps > 1:
        amp = np.sqrt(profile.powers[1:] / PORTS)
        fading = _jakes_paths(rng, times, profile.doppler_hz, (n_taps - 1, PORTS, PORTS))
        gains[:, 1:] = amp[None, :, None, None] * fading
    return MimoChannelRealization(delays, gains, symbol_period_s)


@functools.lru_cache(maxsize=64)
def _warn_isi(max_delay: int, cp_samples: int) -> None:
    logger.warning(
        f"Channel tap delay of {max_delay} samples reaches the {cp_samples}-sample cyclic prefix; "
        f"results include inter-symbol interference"
    )


def apply_channel(signals: Sequence[TimeSignal], real: MimoChannelRealization, num: Numerology) -> List[TimeSignal]:
    """Per receive port, sum delayed and gain-weighted transmit-port signals.

    Delays are rounded to the nearest sample; gains switch at symbol boundaries.
    """
    if len(signals) != PORTS:
        raise InputError(f"Expected {PORTS} transmit-port signals, got {len(signals)}")
    n = len(signals[0])
    if any(len(s) != n for s in signals):
        raise InputError("Transmit-port signals differ in length")
    sym_len = num.symbol_samples
    if n % sym_len:
        raise InputError(f"Signal length {n} is not a whole number of {sym_len}-sample symbols")
    n_sym = n // sym_len
    if real.n_symbols < n_sym:
        raise InputError(f"Realization covers {real.n_symbols} symbols, signal has {n_sym}")

    delays = real.delay_samples(num.sample_rate_hz)
    if real.exceeds_cp(num):
        _warn_isi(int(delays.max()), num.cp_samples)

    x = np.stack([s.samples for s in signals])
    delayed = np.zeros((PORTS, delays.size, n), dtype=complex)
    for i, d in enumerate(delays):
        if d < n:
            delayed[:, i, d:] = x[:, : n - d]
    delayed = delayed.reshape(PORTS, delays.size, n_sym, sym_len)
    y = np.einsum("kirt,tikl->rkl", real.gains[:n_sym], delayed).reshape(PORTS, n)
    return [TimeSignal(y[r], signals[0].sample_rate_hz) for r in range(PORTS)]


def frequency_response(real: MimoChannelRealization, num: Numerology) -> np.ndarray:
    """Genie per-subcarrier channel of every symbol, shape (symbols, subcarriers, rx, tx)."""
    delays = real.delay_samples(num.sample_rate_hz)
    phase = np.exp(-2j * np.pi * np.outer(num.subcarrier_offsets(), delays) / num.fft_size)
    return np.einsum("ni,kirt->knrt", phase, real.gains[: num.symbols_per_slot])


@dataclass
class EqualizerOutput:
    """Unbiased layer estimates with their post-equalization SINR and MMSE bias."""

    layers: np.ndarray
    sinr: np.ndarray
    bias: np.ndarray


def mmse_equalize(rx: np.ndarray, h: np.ndarray, noise_var: float, rank: int) -> EqualizerOutput:
    """Per-subcarrier linear MMSE filter (H^H H + s2 I)^-1 H^H.

    rx: (ports, symbols, subcarriers); h: (symbols, subcarriers, rx, tx) with
    one column per layer.  Rank 1 uses the first column only.
    """
    if rank not in (1, 2):
        raise ConfigError(f"Rank must be 1 or 2, got {rank}")
    rx = np.asarray(rx, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if rx.shape[0] != h.shape[2] or rx.shape[1:] != h.shape[:2]:
        raise InputError(f"Received grid {rx.shape} does not match channel {h.shape}")

    h_eff = h[..., :rank]
    h_herm = np.conj(np.swapaxes(h_eff, -1, -2))
    gram = h_herm @ h_eff + max(noise_var, _MMSE_FLOOR) * np.eye(rank)
    w = np.linalg.solve(gram, h_herm)
    bias = np.real(np.einsum("...ij,...ji->...i", w, h_eff))
    z = np.einsum("...lr,r...->l...", w, rx)
    bias_lk = np.moveaxis(bias, -1, 0)
    layers = z / bias_lk
    sinr = bias_lk / np.maximum(1.0 - bias_lk, 1e-30)
    return EqualizerOutput(layers=layers, sinr=sinr, bias=bias_lk)
