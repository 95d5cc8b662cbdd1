"""
Link configuration file ingestion

A link configuration is a TOML document with the sections below; every key has
a default and unknown sections or keys are rejected.  ``--set section.key=value``
overrides are applied after parsing, values being read as TOML literals with a
bare-string fallback.  dump_config() renders the resolved configuration back to
TOML; reading the dump yields an identical LinkConfig.
"""

import dataclasses
import enum
import json
import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from phy.channel import ChannelKind, ChannelProfile, awgn_profile, cdl_e_profile
from phy.fec import DEFAULT_MAX_ITERS, CodeConfig, code_config
from phy.impairments import PaKind, PaModel, PnModel, named_pn_model
from phy.numerology import Numerology, derive_numerology
from phy.profiles import PN_PROFILES
from phy.ptrs import PtrsConfig, PtrsScheme, ptrs_positions
from phy.waveform import Modulation, WaveformKind
from utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

MIN_ERRORS_FLOOR = 20


class PnDirection(enum.Enum):
    DOWNLINK = "downlink"
    UPLINK = "uplink"

    @classmethod
    def parse(cls, name: str) -> "PnDirection":
        try:
            return cls(str(name).strip().lower())
        except ValueError as e:
            raise ConfigError(f"pn.direction must be 'downlink' or 'uplink', got '{name}'") from e


@dataclass(frozen=True)
class NumerologySection:
    scs_khz: int = 960
    prb_count: int = 180


@dataclass(frozen=True)
class WaveformSection:
    waveform: WaveformKind = WaveformKind.SCFDMA
    modulation: Modulation = Modulation.QPSK
    rank: int = 1


@dataclass(frozen=True)
class ChannelSection:
    channel: ChannelKind = ChannelKind.CDL_E
    rms_ds_ns: float = 10.0
    rician_k_db: float = 15.0
    ue_speed_kmh: float = 3.0
    carrier_ghz: float = 90.0
    xpr_db: float = 8.0


@dataclass(frozen=True)
class PnSection:
    enabled: bool = True
    direction: PnDirection = PnDirection.DOWNLINK
    bs_profile: str = "bs"
    ue_profile: str = "ue"
    profiles: Tuple[Tuple[str, Tuple[Tuple[str, Any], ...]], ...] = ()

    def profile_tables(self) -> Dict[str, Dict]:
        return {name: dict(items) for name, items in self.profiles}


@dataclass(frozen=True)
class PtrsSection:
    scheme: PtrsScheme = PtrsScheme.TD_ENHANCED
    fd_prb_spacing: int = 2
    fd_symbol_spacing: int = 1
    block_prbs: int = 4
    groups: int = 12
    subsymbols_per_group: int = 4
    ici_taps_per_side: int = 4


@dataclass(frozen=True)
class FecSection:
    max_decoder_iters: int = DEFAULT_MAX_ITERS


@dataclass(frozen=True)
class SweepSection:
    config_id: str = ""
    snr_start_db: float = -2.0
    snr_stop_db: float = 10.0
    snr_step_db: float = 0.5
    min_blocks: int = 100
    max_blocks: int = 2000
    min_errors: int = 50
    master_seed: int = 1
    early_exit_bler: float = 1e-2
    target_bler: float = 0.1


@dataclass(frozen=True)
class PaSection:
    kind: PaKind = PaKind.RAPP
    smoothness: float = 2.0
    saturation_amplitude: float = 1.0
    slots: int = 2
    aclr_min_db: float = 20.0
    max_backoff_db: float = 20.0
    step_db: float = 0.1


@dataclass(frozen=True)
class AnalysisSection:
    oversampling: int = 4
    papr_probability: float = 1e-3
    papr_slots: int = 8
    pn_realizations: int = 100
    pn_slots: int = 1


_SECTIONS = {
    "numerology": NumerologySection,
    "waveform": WaveformSection,
    "channel": ChannelSection,
    "pn": PnSection,
    "ptrs": PtrsSection,
    "fec": FecSection,
    "sweep": SweepSection,
    "pa": PaSection,
    "analysis": AnalysisSection,
}


@dataclass(frozen=True)
class LinkConfig:
    numerology: NumerologySection = field(default_factory=NumerologySection)
    waveform: WaveformSection = field(default_factory=WaveformSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    pn: PnSection = field(default_factory=PnSection)
    ptrs: PtrsSection = field(default_factory=PtrsSection)
    fec: FecSection = field(default_factory=FecSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    pa: PaSection = field(default_factory=PaSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)

    @property
    def config_id(self) -> str:
        return self.sweep.config_id

    @property
    def carrier_hz(self) -> float:
        return self.channel.carrier_ghz * 1e9

    def num(self) -> Numerology:
        return derive_numerology(self.numerology.scs_khz * 1e3, self.numerology.prb_count)

    def ptrs_config(self) -> PtrsConfig:
        p = self.ptrs
        return PtrsConfig(
            scheme=p.scheme,
            fd_prb_spacing=p.fd_prb_spacing,
            fd_symbol_spacing=p.fd_symbol_spacing,
            block_prbs=p.block_prbs,
            groups=p.groups,
            subsymbols_per_group=p.subsymbols_per_group,
            ici_taps_per_side=p.ici_taps_per_side,
        )

    def channel_profile(self) -> ChannelProfile:
        c = self.channel
        if c.channel is ChannelKind.AWGN:
            return awgn_profile(self.carrier_hz)
        return cdl_e_profile(c.rms_ds_ns, c.rician_k_db, c.ue_speed_kmh, self.carrier_hz, c.xpr_db)

    def pn_model(self, name: str) -> PnModel:
        return named_pn_model(name, self.pn.profile_tables())

    def pn_models(self) -> Tuple[Optional[PnModel], Optional[PnModel]]:
        """(transmitter, receiver) oscillator models, or (None, None) when PN is disabled."""
        if not self.pn.enabled:
            return None, None
        bs = self.pn_model(self.pn.bs_profile)
        ue = self.pn_model(self.pn.ue_profile)
        return (bs, ue) if self.pn.direction is PnDirection.DOWNLINK else (ue, bs)

    def pa_model(self) -> PaModel:
        return PaModel(self.pa.kind, 0.0, self.pa.smoothness, self.pa.saturation_amplitude)

    def snr_grid(self) -> np.ndarray:
        s = self.sweep
        return np.round(np.arange(s.snr_start_db, s.snr_stop_db + s.snr_step_db / 2, s.snr_step_db), 6)

    def data_res_per_slot(self) -> int:
        return ptrs_positions(self.ptrs_config(), self.num()).data_count

    def code(self) -> CodeConfig:
        """Code block filling the data REs of all layers of one slot."""
        bits = self.data_res_per_slot() * self.waveform.modulation.bits_per_symbol * self.waveform.rank
        return code_config(bits)

    def replace(self, **sections: Any) -> "LinkConfig":
        return dataclasses.replace(self, **sections)


# ----------------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------------


def _coerce(value: Any, default: Any, where: str) -> Any:
    if isinstance(default, enum.Enum):
        if isinstance(value, type(default)):
            return value
        return type(default).parse(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or float(value) != int(value):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    return value


def _freeze_profiles(raw: Dict[str, Any]) -> Tuple:
    frozen = []
    for name in sorted(raw):
        table = raw[name]
        if not isinstance(table, dict):
            raise ConfigError(f"pn.profiles.{name} must be a table")
        base = dict(PN_PROFILES.get(name, {}))
        base.update(table)
        items = []
        for key in sorted(base):
            value = base[key]
            if key in ("zeros", "poles"):
                value = tuple((float(c), float(s)) for c, s in value)
            items.append((key, value))
        frozen.append((name, tuple(items)))
    return tuple(frozen)


def _build_section(name: str, raw: Any) -> Any:
    cls = _SECTIONS[name]
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    defaults = cls()
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"Unknown key(s) in [{name}]: {', '.join(unknown)}")
    values = {}
    for key, value in raw.items():
        if name == "pn" and key == "profiles":
            values[key] = _freeze_profiles(value)
        else:
            values[key] = _coerce(value, getattr(defaults, key), f"{name}.{key}")
    return cls(**values)


def parse_override(text: str) -> Tuple[List[str], Any]:
    """Split 'section.key=value' into a key path and a TOML-parsed value."""
    if "=" not in text:
        raise ConfigError(f"Override '{text}' is not of the form section.key=value")
    path, raw_value = text.split("=", 1)
    keys = [k.strip() for k in path.strip().split(".")]
    if len(keys) < 2 or not all(keys):
        raise ConfigError(f"Override key '{path}' must name a section and a key")
    try:
        value = tomllib.loads(f"v = {raw_value.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw_value.strip()
    return keys, value


def apply_overrides(raw: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    merged = json.loads(json.dumps(raw, default=list))
    for text in overrides:
        keys, value = parse_override(text)
        node = merged
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"Override '{text}' descends into a non-table value")
        node[keys[-1]] = value
    return merged


def _default_config_id(cfg: LinkConfig) -> str:
    w = cfg.waveform
    return (
        f"{w.waveform.value}-{cfg.numerology.scs_khz}k-{w.modulation.value}-r{w.rank}-{cfg.ptrs.scheme.value}"
    )


def validate_config(cfg: LinkConfig) -> LinkConfig:
    """Cross-section checks; returns cfg with the derived config_id filled in."""
    num = cfg.num()
    if cfg.waveform.rank not in (1, 2):
        raise ConfigError(f"waveform.rank must be 1 or 2, got {cfg.waveform.rank}")
    ptrs = cfg.ptrs_config()
    ptrs.check_waveform(cfg.waveform.waveform)
    ptrs_positions(ptrs, num)

    s = cfg.sweep
    if not s.snr_step_db > 0:
        raise ConfigError(f"sweep.snr_step_db must be positive, got {s.snr_step_db}")
    if s.snr_stop_db < s.snr_start_db:
        raise ConfigError("sweep.snr_stop_db is below sweep.snr_start_db")
    if s.min_errors < MIN_ERRORS_FLOOR:
        raise ConfigError(f"sweep.min_errors must be at least {MIN_ERRORS_FLOOR}, got {s.min_errors}")
    if s.min_blocks < 1 or s.max_blocks < s.min_blocks:
        raise ConfigError("sweep.min_blocks must be >= 1 and <= sweep.max_blocks")
    if s.master_seed < 0:
        raise ConfigError(f"sweep.master_seed must be non-negative, got {s.master_seed}")
    if not 0 < s.target_bler < 1 or not 0 < s.early_exit_bler < 1:
        raise ConfigError("sweep.target_bler and sweep.early_exit_bler must lie in (0, 1)")
    if cfg.fec.max_decoder_iters < 1:
        raise ConfigError("fec.max_decoder_iters must be positive")

    c = cfg.channel
    if c.carrier_ghz <= 0 or c.rms_ds_ns < 0 or c.ue_speed_kmh < 0:
        raise ConfigError("channel.carrier_ghz must be positive; rms_ds_ns and ue_speed_kmh non-negative")
    cfg.pn_model(cfg.pn.bs_profile)
    cfg.pn_model(cfg.pn.ue_profile)

    a = cfg.analysis
    if a.oversampling < 1 or a.papr_slots < 1 or a.pn_realizations < 1 or a.pn_slots < 1:
        raise ConfigError("[analysis] counts must be positive")
    if not 0 < a.papr_probability < 1:
        raise ConfigError("analysis.papr_probability must lie in (0, 1)")
    if cfg.pa.slots < 1 or cfg.pa.step_db <= 0 or cfg.pa.max_backoff_db < 0:
        raise ConfigError("[pa] slots and step_db must be positive, max_backoff_db non-negative")
    cfg.pa_model()
    cfg.code()

    if not s.config_id:
        cfg = cfg.replace(sweep=dataclasses.replace(s, config_id=_default_config_id(cfg)))
    return cfg


def resolve_config(raw: Optional[Dict[str, Any]] = None, overrides: Iterable[str] = ()) -> LinkConfig:
    """Build a validated LinkConfig from parsed TOML data plus overrides."""
    merged = apply_overrides(raw or {}, overrides)
    unknown = sorted(set(merged) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"Unknown section(s): {', '.join(unknown)}")
    sections = {name: _build_section(name, merged[name]) for name in merged}
    return validate_config(LinkConfig(**sections))


def load_config(path, overrides: Iterable[str] = ()) -> LinkConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid TOML: {e}") from e
    logger.debug(f"Loaded link config from {path}")
    return resolve_config(raw, overrides)


def loads_config(text: str, overrides: Iterable[str] = ()) -> LinkConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Config text is not valid TOML: {e}") from e
    return resolve_config(raw, overrides)


# ----------------------------------------------------------------------------
# Rendering
# ----------------------------------------------------------------------------


def _render_value(value: Any) -> str:
    if isinstance(value, enum.Enum):
        return json.dumps(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_render_value(v) for v in value) + "]"
    raise ConfigError(f"Cannot render config value {value!r}")


def dump_config(cfg: LinkConfig) -> str:
    lines: List[str] = []
    for name in _SECTIONS:
        section = getattr(cfg, name)
        lines.append(f"[{name}]")
        for f in dataclasses.fields(section):
            if name == "pn" and f.name == "profiles":
                continue
            lines.append(f"{f.name} = {_render_value(getattr(section, f.name))}")
        lines.append("")
    for profile, items in cfg.pn.profiles:
        lines.append(f"[pn.profiles.{profile}]")
        for key, value in items:
            lines.append(f"{key} = {_render_value(value)}")
        lines.append("")
    return "\n".join(lines)


def config_summary(cfg: LinkConfig) -> Dict[str, Any]:
    """Flat dictionary of all sections, for REST responses and CSV metadata."""
    return {name: dataclasses.asdict(getattr(cfg, name)) for name in _SECTIONS}
