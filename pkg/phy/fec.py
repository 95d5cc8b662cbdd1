"""
FEC - CRC attachment, rate-2/3 quasi-cyclic LDPC coding and max-log demapping

The code uses a base-graph-1 style protograph: 22 systematic block columns, a
4x4 double-diagonal core and single-column extension rows.  One slot carries
one code block; the lifting size is chosen so that the 22 systematic columns
hold the transport block plus CRC, and fillers are shortened.  All systematic
bits are sent and parity is taken in order until the slot's bit budget is
filled.  This is not bit-exact NR rate matching.

LLR sign convention: positive favors bit 0.
"""

import functools
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import sparse

from phy.waveform import Modulation, axis_levels
from utils.exceptions import ConfigError, InputError

logger = logging.getLogger(__name__)

CODE_RATE = 2.0 / 3.0
CRC_BITS = 24
CRC24A_POLY = 0x864CFB
SYSTEMATIC_COLUMNS = 22
CORE_ROWS = 4
MAX_ROWS = 46
MAX_SHIFT = 384
MIN_SUM_SCALE = 0.8
DEFAULT_MAX_ITERS = 25
LLR_CLIP = 20.0
SINR_CLIP = 1e10
_BASE_GRAPH_SEED = 0x1D9C
_KNOWN_BIT_LLR = 1e3

# Double-diagonal core: (row, parity column) -> shift.
_CORE_PARITY = {(0, 22): 1, (0, 23): 0, (1, 22): 0, (1, 23): 0, (1, 24): 0, (2, 24): 0, (2, 25): 0, (3, 22): 1, (3, 25): 0}


# ----------------------------------------------------------------------------
# CRC
# ----------------------------------------------------------------------------


@functools.lru_cache(maxsize=1)
def _crc24a_table() -> Tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte << 16
        for _ in range(8):
            crc = (crc << 1) ^ CRC24A_POLY if crc & 0x800000 else crc << 1
        table.append(crc & 0xFFFFFF)
    return tuple(table)


def crc24a(bits: np.ndarray) -> int:
    """CRC24A remainder of a bit sequence (MSB first, zero initial state)."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    pad = (-bits.size) % 8
    if pad:
        bits = np.concatenate([np.zeros(pad, dtype=np.uint8), bits])
    table = _crc24a_table()
    crc = 0
    for byte in np.packbits(bits).tolist():
        crc = ((crc << 8) & 0xFFFFFF) ^ table[((crc >> 16) ^ byte) & 0xFF]
    return crc


def attach_crc(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    crc = crc24a(bits)
    crc_bits = np.array([(crc >> (CRC_BITS - 1 - i)) & 1 for i in range(CRC_BITS)], dtype=np.uint8)
    return np.concatenate([bits, crc_bits])


def check_crc(bits_with_crc: np.ndarray) -> bool:
    return crc24a(bits_with_crc) == 0


# ----------------------------------------------------------------------------
# Base graph and code configuration
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BaseGraph:
    """Nonzero blocks of the protograph as parallel (row, column, shift) arrays."""

    rows: np.ndarray
    cols: np.ndarray
    shifts: np.ndarray

    def restricted(self, n_rows: int) -> "BaseGraph":
        keep = self.rows < n_rows
        return BaseGraph(self.rows[keep], self.cols[keep], self.shifts[keep])


@functools.lru_cache(maxsize=1)
def base_graph() -> BaseGraph:
    """Deterministic protograph from a fixed seed.

    Every systematic column joins three of the four core rows.  Extension row r
    joins three systematic columns, one core parity column and its own parity
    column SYSTEMATIC_COLUMNS + r.
    """
    rng = np.random.default_rng(_BASE_GRAPH_SEED)
    blocks = []
    for col in range(SYSTEMATIC_COLUMNS):
        for row in sorted(rng.choice(CORE_ROWS, size=3, replace=False).tolist()):
            blocks.append((row, col, int(rng.integers(0, MAX_SHIFT))))
    for (row, col), shift in _CORE_PARITY.items():
        blocks.append((row, col, shift))
    for row in range(CORE_ROWS, MAX_ROWS):
        for col in sorted(rng.choice(SYSTEMATIC_COLUMNS, size=3, replace=False).tolist()):
            blocks.append((row, col, int(rng.integers(0, MAX_SHIFT))))
        blocks.append((row, SYSTEMATIC_COLUMNS + int(rng.integers(0, CORE_ROWS)), int(rng.integers(0, MAX_SHIFT))))
        blocks.append((row, SYSTEMATIC_COLUMNS + row, 0))
    blocks.sort()
    arr = np.array(blocks, dtype=np.int64)
    return BaseGraph(arr[:, 0], arr[:, 1], arr[:, 2])


@dataclass(frozen=True)
class CodeConfig:
    """One code block filling coded_bits channel bits at rate 2/3.

    info_bits counts the transport block plus its 24-bit CRC.
    """

    info_bits: int
    coded_bits: int
    lifting_size: int
    rows: int
    crc_bits: int = CRC_BITS

    @property
    def payload_bits(self) -> int:
        return self.info_bits - self.crc_bits

    @property
    def parity_bits(self) -> int:
        return self.coded_bits - self.info_bits

    @property
    def filler_bits(self) -> int:
        return SYSTEMATIC_COLUMNS * self.lifting_size - self.info_bits

    @property
    def full_length(self) -> int:
        return (SYSTEMATIC_COLUMNS + self.rows) * self.lifting_size

    @property
    def rate(self) -> float:
        return self.info_bits / self.coded_bits

    def graph(self) -> BaseGraph:
        return base_graph().restricted(self.rows)


def code_config(coded_bits: int, rate: float = CODE_RATE) -> CodeConfig:
    """Size the code block for a slot carrying coded_bits channel bits."""
    info = int(math.floor(rate * coded_bits))
    if info <= CRC_BITS:
        raise ConfigError(f"A slot of {coded_bits} coded bits cannot carry a transport block at rate {rate:.3f}")
    z = math.ceil(info / SYSTEMATIC_COLUMNS)
    rows = max(CORE_ROWS, math.ceil((coded_bits - info) / z))
    if rows > MAX_ROWS:
        raise ConfigError(f"Rate {rate:.3f} needs {rows} parity rows; the base graph has {MAX_ROWS}")
    return CodeConfig(info_bits=info, coded_bits=coded_bits, lifting_size=z, rows=rows)


def parity_check_matrix(cfg: CodeConfig) -> sparse.csr_matrix:
    """Lifted parity-check matrix over the full (unshortened, unpunctured) codeword."""
    z = cfg.lifting_size
    g = cfg.graph()
    r = np.arange(z)
    row_idx = (g.rows[:, None] * z + r[None, :]).ravel()
    col_idx = (g.cols[:, None] * z + (r[None, :] + g.shifts[:, None] % z) % z).ravel()
    data = np.ones(row_idx.size, dtype=np.int64)
    return sparse.csr_matrix((data, (row_idx, col_idx)), shape=(cfg.rows * z, cfg.full_length))


# ----------------------------------------------------------------------------
# Encoder
# ----------------------------------------------------------------------------


def _shift(block: np.ndarray, s: int) -> np.ndarray:
    """Circulant permutation P^s applied to a length-Z block."""
    return np.roll(block, -s)


def encode_full(info: np.ndarray, cfg: CodeConfig) -> np.ndarray:
    """Full lifted codeword including fillers and all parity columns."""
    info = np.asarray(info, dtype=np.uint8).ravel()
    if info.size != cfg.info_bits:
        raise InputError(f"Encoder expects {cfg.info_bits} information bits, got {info.size}")
    z = cfg.lifting_size
    systematic = np.zeros(SYSTEMATIC_COLUMNS * z, dtype=np.uint8)
    systematic[: cfg.info_bits] = info
    s = systematic.reshape(SYSTEMATIC_COLUMNS, z)

    g = cfg.graph()
    partial = np.zeros((cfg.rows, z), dtype=np.uint8)
    is_sys = g.cols < SYSTEMATIC_COLUMNS
    for row, col, shift in zip(g.rows[is_sys], g.cols[is_sys], g.shifts[is_sys] % z):
        partial[row] ^= _shift(s[col], int(shift))

    parity = np.zeros((cfg.rows, z), dtype=np.uint8)
    pa = partial[0] ^ partial[1] ^ partial[2] ^ partial[3]
    pb = partial[0] ^ _shift(pa, 1 % z)
    pc = partial[1] ^ pa ^ pb
    pd = partial[2] ^ pc
    parity[:CORE_ROWS] = (pa, pb, pc, pd)

    ext = (~is_sys) & (g.rows >= CORE_ROWS) & (g.cols < SYSTEMATIC_COLUMNS + CORE_ROWS)
    for row, col, shift in zip(g.rows[ext], g.cols[ext], g.shifts[ext] % z):
        partial[row] ^= _shift(parity[col - SYSTEMATIC_COLUMNS], int(shift))
    parity[CORE_ROWS:] = partial[CORE_ROWS:]
    return np.concatenate([systematic, parity.ravel()])


def encode(info: np.ndarray, cfg: CodeConfig) -> np.ndarray:
    """Transmitted codeword: all information bits then the first coded_bits - info_bits parity bits."""
    full = encode_full(info, cfg)
    parity_start = SYSTEMATIC_COLUMNS * cfg.lifting_size
    return np.concatenate([full[: cfg.info_bits], full[parity_start : parity_start + cfg.parity_bits]])


# ----------------------------------------------------------------------------
# Decoder
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class _TannerGraph:
    """Check-major edge layout padded to the largest row degree.

    var_index has shape (rows, max_degree, Z); padded slots point at a dummy
    variable appended after the last real one.
    """

    var_index: np.ndarray
    valid: np.ndarray
    n_vars: int

    @property
    def flat_vars(self) -> np.ndarray:
        return self.var_index[self.valid].ravel()


@functools.lru_cache(maxsize=32)
def _tanner_graph(lifting_size: int, rows: int) -> _TannerGraph:
    z = lifting_size
    g = base_graph().restricted(rows)
    n_vars = (SYSTEMATIC_COLUMNS + rows) * z
    degree = np.bincount(g.rows, minlength=rows)
    max_deg = int(degree.max())
    var_index = np.full((rows, max_deg, z), n_vars, dtype=np.int64)
    valid = np.zeros((rows, max_deg), dtype=bool)
    slot = np.zeros(rows, dtype=int)
    r = np.arange(z)
    for row, col, shift in zip(g.rows, g.cols, g.shifts % z):
        d = slot[row]
        var_index[row, d] = col * z + (r + shift) % z
        valid[row, d] = True
        slot[row] += 1
    return _TannerGraph(var_index, valid, n_vars)


@dataclass
class DecodeResult:
    info_bits: np.ndarray
    success: bool
    parity_ok: bool
    crc_ok: bool
    iterations: int


def _syndrome_ok(graph: _TannerGraph, hard: np.ndarray) -> bool:
    hard_ext = np.append(hard, 0).astype(np.uint8)
    checks = np.bitwise_xor.reduce(hard_ext[graph.var_index], axis=1)
    return not checks.any()


def decode(llrs: np.ndarray, cfg: CodeConfig, max_iters: int = DEFAULT_MAX_ITERS) -> DecodeResult:
    """Flooding normalized min-sum decoding with early termination on the parity check."""
    llrs = np.asarray(llrs, dtype=float).ravel()
    if llrs.size != cfg.coded_bits:
        raise InputError(f"Decoder expects {cfg.coded_bits} LLRs, got {llrs.size}")
    z = cfg.lifting_size
    graph = _tanner_graph(z, cfg.rows)

    channel = np.zeros(graph.n_vars)
    channel[: cfg.info_bits] = np.clip(llrs[: cfg.info_bits], -LLR_CLIP, LLR_CLIP)
    channel[cfg.info_bits : SYSTEMATIC_COLUMNS * z] = _KNOWN_BIT_LLR
    parity_start = SYSTEMATIC_COLUMNS * z
    channel[parity_start : parity_start + cfg.parity_bits] = np.clip(llrs[cfg.info_bits :], -LLR_CLIP, LLR_CLIP)

    hard = channel < 0
    iterations = 0
    parity_ok = _syndrome_ok(graph, hard)
    if not parity_ok:
        flat_vars = graph.flat_vars
        valid = graph.valid[:, :, None]
        slots = np.arange(graph.var_index.shape[1])[None, :, None]
        v2c = np.append(channel, _KNOWN_BIT_LLR)[graph.var_index]
        for iterations in range(1, max_iters + 1):
            sign = np.where(v2c < 0, -1.0, 1.0)
            mag = np.abs(v2c)
            sign_prod = np.prod(sign, axis=1, keepdims=True)
            first = np.argmin(mag, axis=1)
            min1 = np.take_along_axis(mag, first[:, None, :], axis=1)
            np.put_along_axis(mag, first[:, None, :], np.inf, axis=1)
            min2 = mag.min(axis=1, keepdims=True)
            c2v = MIN_SUM_SCALE * sign_prod * sign * np.where(slots == first[:, None, :], min2, min1)
            c2v = np.where(valid, c2v, 0.0)

            total = channel + np.bincount(flat_vars, weights=c2v[graph.valid].ravel(), minlength=graph.n_vars)
            hard = total < 0
            if _syndrome_ok(graph, hard):
                parity_ok = True
                break
            v2c = np.append(total, _KNOWN_BIT_LLR)[graph.var_index] - c2v

    info = hard[: cfg.info_bits].astype(np.uint8)
    crc_ok = check_crc(info)
    return DecodeResult(info, bool(parity_ok and crc_ok), bool(parity_ok), bool(crc_ok), iterations)


# ----------------------------------------------------------------------------
# Demapper
# ----------------------------------------------------------------------------


def _axis_llrs(y: np.ndarray, levels: np.ndarray, bits_per_axis: int) -> np.ndarray:
    """Max-log distance differences per axis bit, shape (n, bits_per_axis)."""
    dist = (y[:, None] - levels[None, :]) ** 2
    patterns = np.arange(levels.size)
    out = np.empty((y.size, bits_per_axis))
    for j in range(bits_per_axis):
        bit = (patterns >> (bits_per_axis - 1 - j)) & 1
        out[:, j] = dist[:, bit == 1].min(axis=1) - dist[:, bit == 0].min(axis=1)
    return out


def demap_llr(symbols: np.ndarray, mod: Modulation, sinr: np.ndarray) -> np.ndarray:
    """Per-bit max-log LLRs of unbiased equalized symbols, scaled by the per-RE SINR."""
    y = np.asarray(symbols, dtype=complex).ravel()
    sinr = np.broadcast_to(np.asarray(sinr, dtype=float), np.shape(symbols)).ravel()
    sinr = np.clip(sinr, np.finfo(float).tiny, SINR_CLIP)
    levels = axis_levels(mod)
    m = mod.bits_per_axis
    llr = np.empty((y.size, mod.bits_per_symbol))
    llr[:, 0::2] = _axis_llrs(y.real, levels, m) * sinr[:, None]
    llr[:, 1::2] = _axis_llrs(y.imag, levels, m) * sinr[:, None]
    return llr.ravel()
