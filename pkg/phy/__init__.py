"""
Physical-layer simulation core: numerology, waveforms, impairments, channel,
PTRS processing, LDPC coding and the Monte-Carlo link harness.
"""
