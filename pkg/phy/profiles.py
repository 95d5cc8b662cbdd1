"""
Shipped data tables: CDL-E tap profile and the named phase-noise parameter sets

Values are configuration data, not fitted constants.  Provenance notes are kept
next to each table and echoed by ``sublink validate-config``.
"""

from typing import Dict, Tuple

# Normalized CDL-E cluster delays (in units of the RMS delay spread) and powers
# in dB.  Cluster 1 appears twice at delay 0: its specular part (first entry)
# and its Laplacian part.  The K-factor split is applied by the channel module.
CDL_E_TAPS: Tuple[Tuple[float, float], ...] = (
    (0.0000, -0.03),
    (0.0000, -22.03),
    (0.5133, -15.8),
    (0.5440, -18.1),
    (0.5630, -19.8),
    (0.5440, -22.9),
    (0.7112, -22.4),
    (1.9092, -18.6),
    (1.9293, -20.8),
    (1.9589, -22.6),
    (2.6426, -22.3),
    (3.7136, -25.6),
    (5.4524, -20.2),
    (12.0034, -29.8),
    (20.6519, -29.2),
)
CDL_E_PROVENANCE = "3GPP TR 38.901 Table 7.7.1-5 (CDL-E), normalized delays and cluster powers"

# Multi-pole/zero phase-noise parameter sets specified at 30 GHz.
#   psd0_dbc_hz: value of the low-offset plateau
#   zeros / poles: (corner_hz, slope) pairs
PN_PROFILES: Dict[str, Dict] = {
    "bs": {
        "psd0_dbc_hz": 32.0,
        "zeros": [(3.0e3, 2.37), (550.0e3, 2.7), (280.0e6, 2.53)],
        "poles": [(1.0, 3.3), (1.6e6, 3.3), (30.0e6, 1.0)],
        "ref_carrier_hz": 30.0e9,
        "side": "bs",
        "provenance": "3GPP TR 38.803 section 6.1.11, BS model 1 at 30 GHz",
    },
    "ue": {
        "psd0_dbc_hz": 35.0,
        "zeros": [(3.0e3, 2.37), (550.0e3, 2.7), (280.0e6, 2.53)],
        "poles": [(1.0, 3.3), (1.6e6, 3.3), (30.0e6, 1.0)],
        "ref_carrier_hz": 30.0e9,
        "side": "ue",
        "provenance": "BS pole/zero shape raised by 3 dB for the noisier UE oscillator (TR 38.803 section 6.1.11 UE model)",
    },
}

# Modulation-specific EVM limits in percent.
EVM_LIMITS_PCT: Dict[str, float] = {"qpsk": 17.5, "16qam": 12.5, "64qam": 8.0, "256qam": 3.5}

SPEED_OF_LIGHT_MPS = 299_792_458.0
