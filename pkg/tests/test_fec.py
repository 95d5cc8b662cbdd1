# ============================================================================
# FILE: tests/test_fec.py
# ============================================================================

"""
Tests for CRC24A, the rate-2/3 LDPC code and the max-log demapper
"""

import numpy as np
import pytest
from scipy.special import erfc

from phy.fec import (
    CODE_RATE,
    SYSTEMATIC_COLUMNS,
    attach_crc,
    check_crc,
    code_config,
    crc24a,
    decode,
    demap_llr,
    encode,
    encode_full,
    parity_check_matrix,
)
from phy.waveform import Modulation, map_bits
from utils.exceptions import ConfigError, InputError

pytestmark = pytest.mark.unit

# one slot of QPSK on 8 PRBs without PTRS
SLOT_BITS = 14 * 96 * 2


@pytest.fixture
def cfg():
    return code_config(SLOT_BITS)


@pytest.fixture
def info(cfg, rng):
    return attach_crc(rng.integers(0, 2, size=cfg.payload_bits))


def _llrs(codeword, magnitude=10.0):
    return magnitude * (1.0 - 2.0 * codeword.astype(float))


class TestCrc:
    def test_attached_crc_checks(self, rng):
        assert check_crc(attach_crc(rng.integers(0, 2, size=500)))

    def test_single_flip_detected(self, rng):
        block = attach_crc(rng.integers(0, 2, size=500))
        block[123] ^= 1
        assert not check_crc(block)

    def test_linearity(self, rng):
        a = rng.integers(0, 2, size=256)
        b = rng.integers(0, 2, size=256)
        assert crc24a(a ^ b) == crc24a(a) ^ crc24a(b)

    def test_zeros(self):
        assert crc24a(np.zeros(64)) == 0

    def test_length(self, rng):
        assert attach_crc(rng.integers(0, 2, size=100)).size == 124


class TestCodeConfig:
    def test_slot_sizing(self, cfg):
        assert cfg.coded_bits == SLOT_BITS
        assert cfg.info_bits == int(np.floor(CODE_RATE * SLOT_BITS))
        assert cfg.payload_bits == cfg.info_bits - 24
        assert cfg.info_bits <= SYSTEMATIC_COLUMNS * cfg.lifting_size
        assert cfg.rate == pytest.approx(2 / 3, abs=1e-3)

    def test_too_small_for_crc(self):
        with pytest.raises(ConfigError):
            code_config(30)

    def test_rate_beyond_base_graph(self):
        with pytest.raises(ConfigError):
            code_config(SLOT_BITS, rate=0.1)


class TestEncoder:
    def test_full_codeword_satisfies_parity_checks(self, cfg, info):
        h = parity_check_matrix(cfg)
        codeword = encode_full(info, cfg)
        assert codeword.size == cfg.full_length
        assert not np.any((h @ codeword.astype(np.int64)) % 2)

    def test_fillers_are_zero(self, cfg, info):
        codeword = encode_full(info, cfg)
        assert not codeword[cfg.info_bits : SYSTEMATIC_COLUMNS * cfg.lifting_size].any()

    def test_transmitted_length_and_systematic_prefix(self, cfg, info):
        codeword = encode(info, cfg)
        assert codeword.size == cfg.coded_bits
        np.testing.assert_array_equal(codeword[: cfg.info_bits], info)

    def test_wrong_info_length(self, cfg):
        with pytest.raises(InputError):
            encode(np.zeros(cfg.info_bits - 1), cfg)


class TestDecoder:
    def test_noiseless(self, cfg, info):
        result = decode(_llrs(encode(info, cfg)), cfg)
        assert result.success
        assert result.parity_ok and result.crc_ok
        np.testing.assert_array_equal(result.info_bits, info)

    def test_corrects_single_systematic_error(self, cfg, info):
        llrs = _llrs(encode(info, cfg), magnitude=4.0)
        llrs[5] = -llrs[5]
        result = decode(llrs, cfg)
        assert result.success
        assert result.iterations >= 1
        np.testing.assert_array_equal(result.info_bits, info)

    def test_pure_noise_fails(self, cfg, rng):
        result = decode(rng.standard_normal(cfg.coded_bits) * 0.1, cfg, max_iters=5)
        assert not result.success

    def test_wrong_llr_length(self, cfg):
        with pytest.raises(InputError):
            decode(np.zeros(cfg.coded_bits + 1), cfg)


class TestDemapper:
    def test_sign_convention(self):
        symbols = np.array([1 + 1j, -1 - 1j]) / np.sqrt(2)
        llrs = demap_llr(symbols, Modulation.QPSK, 1.0)
        assert np.all(llrs[:2] > 0)
        assert np.all(llrs[2:] < 0)

    def test_scales_with_sinr(self):
        symbol = np.array([0.3 + 0.2j])
        np.testing.assert_allclose(
            demap_llr(symbol, Modulation.QPSK, 10.0), 10.0 * demap_llr(symbol, Modulation.QPSK, 1.0)
        )

    @pytest.mark.parametrize("mod", list(Modulation))
    def test_hard_decisions_invert_mapping(self, mod, rng):
        bits = rng.integers(0, 2, size=mod.bits_per_symbol * 500)
        llrs = demap_llr(map_bits(bits, mod), mod, 100.0)
        np.testing.assert_array_equal((llrs < 0).astype(int), bits)

    def test_per_re_sinr_shape(self, rng):
        symbols = map_bits(rng.integers(0, 2, size=2 * 12), Modulation.QPSK).reshape(3, 4)
        llrs = demap_llr(symbols, Modulation.QPSK, np.full((3, 4), 2.0))
        assert llrs.size == 24

    def test_qpsk_ber_matches_theory(self, rng):
        snr_db = 6.0
        snr = 10 ** (snr_db / 10)
        bits = rng.integers(0, 2, size=400_000)
        symbols = map_bits(bits, Modulation.QPSK)
        noise = np.sqrt(0.5 / snr) * (rng.standard_normal(symbols.size) + 1j * rng.standard_normal(symbols.size))
        decided = (demap_llr(symbols + noise, Modulation.QPSK, snr) < 0).astype(int)
        # Eb/N0 = SNR / 2 for QPSK, BER = Q(sqrt(2 Eb/N0))
        expected = 0.5 * erfc(np.sqrt(snr / 2))
        assert np.mean(decided != bits) == pytest.approx(expected, rel=0.05)


class TestRoundTrip:
    def test_noiseless_blocks_across_modulations(self, cfg, rng):
        """Encode, map, demap and decode 10^3 blocks, cycling through every modulation."""
        mods = list(Modulation)
        failures = []
        for block in range(1000):
            mod = mods[block % len(mods)]
            info = attach_crc(rng.integers(0, 2, size=cfg.payload_bits))
            llrs = demap_llr(map_bits(encode(info, cfg), mod), mod, 100.0)
            result = decode(llrs, cfg)
            if not result.success or not np.array_equal(result.info_bits, info):
                failures.append((block, mod))
        assert failures == []

    def test_corrupted_blocks_fail_crc(self, rng):
        for _ in range(2000):
            block = attach_crc(rng.integers(0, 2, size=int(rng.integers(40, 2000))))
            errors = rng.integers(0, 2, size=block.size)
            if not errors.any():
                errors[0] = 1
            assert not check_crc(block ^ errors)

    def test_decoder_never_reports_wrong_block_as_success(self, cfg, rng):
        for _ in range(200):
            info = attach_crc(rng.integers(0, 2, size=cfg.payload_bits))
            codeword = encode(info, cfg)
            llrs = _llrs(codeword, magnitude=1.0) + 1.5 * rng.standard_normal(cfg.coded_bits)
            result = decode(llrs, cfg, max_iters=10)
            if result.success:
                np.testing.assert_array_equal(result.info_bits, info)