"""
Impairments - oscillator phase noise, PA nonlinearity, AWGN and the spectral
metrics (ACLR, EVM) used by the PA back-off analyzer
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, signal

from phy.numerology import Numerology
from phy.profiles import EVM_LIMITS_PCT, PN_PROFILES
from phy.waveform import Modulation, TimeSignal, WaveformKind, demodulate_slots, random_slots
from utils.exceptions import AnalysisError, ConfigError, DomainError, EstimationError, InputError

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

ACLR_OVERSAMPLING = 4
ACLR_REQUIREMENT_DB = 20.0
BACKOFF_STEP_DB = 0.1
BACKOFF_MAX_DB = 20.0


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ----------------------------------------------------------------------------
# Phase noise
# ----------------------------------------------------------------------------


class OscillatorSide(enum.Enum):
    BS = "bs"
    UE = "ue"


@dataclass(frozen=True)
class PnModel:
    """Multi-pole/zero phase-noise PSD.

    L(f) = psd0 * prod(1 + (f/fz)^az) / prod(1 + (f/fp)^ap), specified at
    ref_carrier_hz.  With equal total zero and pole slopes the PSD flattens to
    a floor at large offsets.
    """

    psd0_dbc_hz: float
    zeros: Tuple[Tuple[float, float], ...]
    poles: Tuple[Tuple[float, float], ...]
    ref_carrier_hz: float
    side: OscillatorSide = OscillatorSide.BS
    name: str = ""
    provenance: str = ""

    @classmethod
    def from_dict(cls, name: str, data: Dict) -> "PnModel":
        try:
            return cls(
                psd0_dbc_hz=float(data["psd0_dbc_hz"]),
                zeros=tuple((float(c), float(s)) for c, s in data.get("zeros", ())),
                poles=tuple((float(c), float(s)) for c, s in data.get("poles", ())),
                ref_carrier_hz=float(data["ref_carrier_hz"]),
                side=OscillatorSide(str(data.get("side", "bs")).lower()),
                name=name,
                provenance=str(data.get("provenance", "")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid phase-noise profile '{name}': {e}") from e

    def __post_init__(self) -> None:
        for corner, slope in self.zeros + self.poles:
            if corner <= 0 or slope < 0:
                raise ConfigError(f"Phase-noise corner {corner} Hz / slope {slope} must be positive")
        if self.ref_carrier_hz <= 0:
            raise ConfigError("Phase-noise reference carrier must be positive")


def named_pn_model(name: str, extra_profiles: Optional[Dict[str, Dict]] = None) -> PnModel:
    """Look up a shipped or configured phase-noise profile by name."""
    profiles = dict(PN_PROFILES)
    profiles.update(extra_profiles or {})
    if name not in profiles:
        raise ConfigError(f"Unknown phase-noise profile '{name}'; available: {sorted(profiles)}")
    return PnModel.from_dict(name, profiles[name])


def pn_psd(model: PnModel, offset_hz: Union[float, np.ndarray], carrier_hz: float) -> Union[float, np.ndarray]:
    """Phase-noise PSD in dBc/Hz at the given offsets, retuned to carrier_hz."""
    f = np.asarray(offset_hz, dtype=float)
    if np.any(f <= 0):
        raise DomainError("Phase-noise PSD is only defined for positive offsets")
    if carrier_hz <= 0:
        raise DomainError(f"Carrier frequency must be positive, got {carrier_hz}")

    shape = np.zeros_like(f)
    for corner, slope in model.zeros:
        shape += np.log10(1.0 + (f / corner) ** slope)
    for corner, slope in model.poles:
        shape -= np.log10(1.0 + (f / corner) ** slope)
    psd = model.psd0_dbc_hz + 10.0 * shape + 20.0 * np.log10(carrier_hz / model.ref_carrier_hz)
    return float(psd) if psd.ndim == 0 else psd


def generate_pn(model: PnModel, carrier_hz: float, sample_rate_hz: float, n: int, seed: SeedLike = None) -> np.ndarray:
    """Synthesize n phase samples (radians) whose two-sided PSD equals pn_psd().

    White complex Gaussian bins are shaped by sqrt(PSD) on the positive-frequency
    half, Hermitian symmetry gives a real process, and the DC bin is zero.
    """
    if n <= 0:
        raise InputError(f"Phase-noise length must be positive, got {n}")
    rng = _rng(seed)
    n_bins = n // 2 + 1
    bins = rng.standard_normal(n_bins) + 1j * rng.standard_normal(n_bins)
    bins /= np.sqrt(2.0)
    if n % 2 == 0:
        bins[-1] = rng.standard_normal()

    freqs = np.arange(1, n_bins) * sample_rate_hz / n
    with np.errstate(divide="ignore", over="ignore"):
        density = 10.0 ** (np.asarray(pn_psd(model, freqs, carrier_hz)) / 10.0)
    shaped = np.zeros(n_bins, dtype=complex)
    shaped[1:] = bins[1:] * np.sqrt(density * sample_rate_hz * n)
    return np.fft.irfft(shaped, n=n)


def apply_pn(sig: TimeSignal, phase: np.ndarray) -> TimeSignal:
    phase = np.asarray(phase, dtype=float)
    if phase.shape != sig.samples.shape:
        raise InputError(f"Phase length {phase.size} does not match signal length {len(sig)}")
    return TimeSignal(sig.samples * np.exp(1j * phase), sig.sample_rate_hz)


def pn_periodogram(
    model: PnModel,
    carrier_hz: float,
    sample_rate_hz: float,
    n: int,
    realizations: int = 100,
    seed: SeedLike = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Welch PSD of synthesized phase noise averaged over realizations.

    Returns positive offsets and the two-sided density in dBc/Hz, directly
    comparable with pn_psd().
    """
    if realizations < 1:
        raise InputError(f"Need at least one realization, got {realizations}")
    rng = _rng(seed)
    total = None
    for _ in range(realizations):
        phase = generate_pn(model, carrier_hz, sample_rate_hz, n, rng)
        f, pxx = signal.welch(
            phase,
            fs=sample_rate_hz,
            window=("kaiser", 7.0),
            nperseg=n,
            detrend=False,
            return_onesided=False,
            scaling="density",
        )
        total = pxx if total is None else total + pxx
    keep = f > 0
    order = np.argsort(f[keep])
    with np.errstate(divide="ignore"):
        return f[keep][order], 10.0 * np.log10(total[keep][order] / realizations)


def psd_deviation_db(
    offsets_hz: np.ndarray,
    measured_db: np.ndarray,
    model_db: np.ndarray,
    lo_hz: float,
    hi_hz: float,
) -> float:
    """Largest per-decade mean dB difference between measured and model PSD over [lo_hz, hi_hz]."""
    if not 0 < lo_hz < hi_hz:
        raise DomainError(f"Offset band [{lo_hz}, {hi_hz}] Hz is empty or non-positive")
    offsets_hz = np.asarray(offsets_hz, dtype=float)
    diff = np.asarray(measured_db, dtype=float) - np.asarray(model_db, dtype=float)
    edges = np.unique(np.clip(10.0 ** np.arange(np.floor(np.log10(lo_hz)), np.ceil(np.log10(hi_hz)) + 1), lo_hz, hi_hz))
    worst = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        band = (offsets_hz >= a) & (offsets_hz < b)
        if band.any():
            worst = max(worst, abs(float(diff[band].mean())))
    if not np.any((offsets_hz >= lo_hz) & (offsets_hz < hi_hz)):
        raise EstimationError(f"No periodogram bins fall in [{lo_hz:g}, {hi_hz:g}] Hz")
    return worst


# ----------------------------------------------------------------------------
# Power amplifier
# ----------------------------------------------------------------------------


class PaKind(enum.Enum):
    IDEAL = "ideal"
    RAPP = "rapp"
    CLIPPER = "clipper"


@dataclass(frozen=True)
class PaModel:
    """Memoryless AM/AM amplifier.  RAPP uses smoothness p; CLIPPER is the p -> inf limit."""

    kind: PaKind = PaKind.RAPP
    backoff_db: float = 0.0
    smoothness: float = 2.0
    saturation_amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.backoff_db < 0:
            raise DomainError(f"PA back-off must be non-negative, got {self.backoff_db} dB")
        if self.smoothness <= 0 or self.saturation_amplitude <= 0:
            raise ConfigError("PA smoothness and saturation amplitude must be positive")

    def with_backoff(self, backoff_db: float) -> "PaModel":
        return PaModel(self.kind, backoff_db, self.smoothness, self.saturation_amplitude)


def _rapp_gain(amplitude: np.ndarray, a_sat: float, p: float) -> np.ndarray:
    # r / (1 + (r/A)^2p)^(1/2p), evaluated in the log domain so large p cannot overflow
    with np.errstate(divide="ignore"):
        log_ratio = np.log(amplitude / a_sat)
    return amplitude * np.exp(-np.logaddexp(0.0, 2.0 * p * log_ratio) / (2.0 * p))


def apply_pa(sig: TimeSignal, pa: PaModel) -> TimeSignal:
    """Scale the input to the configured back-off, then apply the AM/AM curve."""
    if pa.kind is PaKind.IDEAL:
        return sig
    power = sig.mean_power()
    if power <= 0:
        return TimeSignal(sig.samples.copy(), sig.sample_rate_hz)

    target = pa.saturation_amplitude**2 / 10.0 ** (pa.backoff_db / 10.0)
    x = sig.samples * np.sqrt(target / power)
    amplitude = np.abs(x)
    if pa.kind is PaKind.CLIPPER:
        out_amp = np.minimum(amplitude, pa.saturation_amplitude)
    else:
        out_amp = _rapp_gain(amplitude, pa.saturation_amplitude, pa.smoothness)
    unit = np.divide(x, amplitude, out=np.zeros_like(x), where=amplitude > 0)
    return TimeSignal(out_amp * unit, sig.sample_rate_hz)


# ----------------------------------------------------------------------------
# AWGN
# ----------------------------------------------------------------------------


def noise_variance(snr_db: float) -> float:
    """Per-sample noise variance giving per-RE SNR snr_db for unit-energy REs."""
    return float(10.0 ** (-snr_db / 10.0))


def apply_awgn(sig: TimeSignal, snr_db: float, seed: SeedLike = None) -> TimeSignal:
    if np.isposinf(snr_db):
        return TimeSignal(sig.samples.copy(), sig.sample_rate_hz)
    rng = _rng(seed)
    sigma = np.sqrt(noise_variance(snr_db) / 2.0)
    noise = sigma * (rng.standard_normal(len(sig)) + 1j * rng.standard_normal(len(sig)))
    return TimeSignal(sig.samples + noise, sig.sample_rate_hz)


# ----------------------------------------------------------------------------
# Spectral metrics
# ----------------------------------------------------------------------------


def welch_psd(sig: TimeSignal, nperseg: int = 2048, beta: float = 7.0) -> Tuple[np.ndarray, np.ndarray]:
    """Two-sided Welch PSD of a complex baseband signal, sorted by frequency."""
    nperseg = min(nperseg, len(sig))
    f, pxx = signal.welch(
        sig.samples,
        fs=sig.sample_rate_hz,
        window=("kaiser", beta),
        nperseg=nperseg,
        noverlap=nperseg // 2,
        return_onesided=False,
        scaling="density",
    )
    order = np.argsort(f)
    return f[order], pxx[order]


def _band_power(f: np.ndarray, pxx: np.ndarray, lo: float, hi: float) -> float:
    mask = (f >= lo) & (f <= hi)
    if np.count_nonzero(mask) < 2:
        return 0.0
    return float(integrate.trapezoid(pxx[mask], f[mask]))


def measure_aclr(sig: TimeSignal, channel_bw_hz: float) -> float:
    """Worst-side adjacent channel leakage ratio in dB."""
    if channel_bw_hz <= 0:
        raise DomainError("Channel bandwidth must be positive")
    if sig.sample_rate_hz < ACLR_OVERSAMPLING * channel_bw_hz:
        raise EstimationError(
            f"Sample rate {sig.sample_rate_hz:.4g} Hz is below {ACLR_OVERSAMPLING}x the "
            f"{channel_bw_hz:.4g} Hz channel; oversample the signal before measuring ACLR"
        )
    f, pxx = welch_psd(sig)
    half = channel_bw_hz / 2
    main = _band_power(f, pxx, -half, half)
    upper = _band_power(f, pxx, channel_bw_hz - half, channel_bw_hz + half)
    lower = _band_power(f, pxx, -channel_bw_hz - half, -channel_bw_hz + half)
    if main <= 0:
        raise EstimationError("No in-channel power to reference ACLR against")
    worst = max(upper, lower)
    if worst <= 0:
        return float("inf")
    return float(10.0 * np.log10(main / worst))


def measure_evm(reference: np.ndarray, received: np.ndarray) -> float:
    """RMS EVM in percent after the least-squares complex scaling of the reference."""
    ref = np.asarray(reference, dtype=complex).ravel()
    rx = np.asarray(received, dtype=complex).ravel()
    if ref.shape != rx.shape:
        raise InputError(f"EVM grids differ in size: {ref.size} vs {rx.size}")
    if ref.size == 0:
        raise InputError("EVM of an empty grid is undefined")
    ref_energy = np.vdot(ref, ref).real
    if ref_energy <= 0:
        raise EstimationError("EVM reference has zero energy")
    g = np.vdot(ref, rx) / ref_energy
    err = rx - g * ref
    scaled = np.mean(np.abs(g * ref) ** 2)
    if scaled <= 0:
        return float("inf")
    return float(100.0 * np.sqrt(np.mean(np.abs(err) ** 2) / scaled))


# ----------------------------------------------------------------------------
# Back-off analyzer
# ----------------------------------------------------------------------------


@dataclass
class BackoffPoint:
    backoff_db: float
    aclr_db: float
    evm_pct: float
    passes: bool


@dataclass
class BackoffAnalysis:
    """Random-data test signal and the limits a back-off must satisfy."""

    waveform: WaveformKind
    modulation: Modulation
    pa: PaModel
    num: Numerology
    slots: int = 2
    oversampling: int = ACLR_OVERSAMPLING
    aclr_min_db: float = ACLR_REQUIREMENT_DB
    evm_limit_pct: Optional[float] = None
    seed: SeedLike = 0
    _signal: Optional[TimeSignal] = field(default=None, init=False, repr=False)
    _reference: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.evm_limit_pct is None:
            self.evm_limit_pct = EVM_LIMITS_PCT[self.modulation.value]
        self._signal, self._reference = random_slots(
            self.waveform, self.modulation, self.num, _rng(self.seed), self.slots, self.oversampling
        )

    @property
    def signal(self) -> TimeSignal:
        return self._signal

    def evaluate(self, backoff_db: float) -> BackoffPoint:
        out = apply_pa(self._signal, self.pa.with_backoff(backoff_db))
        aclr = measure_aclr(out, self.num.occupied_bandwidth_hz)
        received = demodulate_slots(self.waveform, out, self.num, self.oversampling)
        evm = measure_evm(self._reference, received)
        passes = aclr >= self.aclr_min_db and evm <= self.evm_limit_pct
        return BackoffPoint(round(backoff_db, 6), aclr, evm, bool(passes))


def _backoff_grid(max_db: float, step_db: float) -> np.ndarray:
    return np.round(np.arange(0.0, max_db + step_db / 2, step_db), 6)


def backoff_curve(analysis: BackoffAnalysis, grid_db: Optional[Sequence[float]] = None) -> List[BackoffPoint]:
    """ACLR and EVM at every back-off of the grid (default 0..20 dB in 0.1 dB steps)."""
    grid = _backoff_grid(BACKOFF_MAX_DB, BACKOFF_STEP_DB) if grid_db is None else np.asarray(grid_db, dtype=float)
    return [analysis.evaluate(float(bo)) for bo in grid]


def required_backoff(
    waveform: WaveformKind,
    mod: Modulation,
    pa: PaModel,
    num: Numerology,
    aclr_min_db: float = ACLR_REQUIREMENT_DB,
    evm_limit_pct: Optional[float] = None,
    slots: int = 2,
    seed: SeedLike = 0,
    max_db: float = BACKOFF_MAX_DB,
    step_db: float = BACKOFF_STEP_DB,
) -> float:
    """Smallest back-off on the search grid meeting both the ACLR and the EVM limit."""
    if pa.kind is PaKind.IDEAL:
        return 0.0
    analysis = BackoffAnalysis(
        waveform, mod, pa, num, slots=slots, aclr_min_db=aclr_min_db, evm_limit_pct=evm_limit_pct, seed=seed
    )
    for bo in _backoff_grid(max_db, step_db):
        point = analysis.evaluate(float(bo))
        if point.passes:
            logger.debug(
                f"{waveform.value}/{mod.value}: back-off {point.backoff_db:.1f} dB "
                f"(ACLR {point.aclr_db:.2f} dB, EVM {point.evm_pct:.2f}%)"
            )
            return point.backoff_db
    raise AnalysisError(
        f"No back-off in [0, {max_db:g}] dB meets ACLR >= {aclr_min_db:g} dB and "
        f"EVM <= {analysis.evm_limit_pct:g}% for {waveform.value} {mod.value}"
    )
