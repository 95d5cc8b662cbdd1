# ============================================================================
# FILE: routes/numerology.py (Numerology Routes)
# ============================================================================

"""
Numerology Routes - SCS-dependent OFDM parameters
"""

import logging

from flask import Blueprint, Response, jsonify, request

from phy.numerology import SUPPORTED_SCS_KHZ, derive_numerology, max_prbs
from utils.decorators import handle_errors
from utils.link_request import get_number
from utils.response_helpers import success_response

# Create blueprint
numerology_bp = Blueprint("numerology", __name__)

logger = logging.getLogger(__name__)


@numerology_bp.route("/docs/numerology", methods=["GET"])
def get_documentation() -> Response:
    """Get numerology module documentation"""
    docs = {
        "module": "numerology",
        "description": "Subcarrier spacing, PRB limits, FFT size and cyclic prefix",
        "endpoints": {
            "GET /maxprbs": {
                "description": "Largest PRB allocation for a subcarrier spacing",
                "parameters": {"scs_khz": f"int - one of {list(SUPPORTED_SCS_KHZ)}"},
                "returns": "object - scs_khz, max_prbs",
                "example": "GET /api/v1/maxprbs?scs_khz=960",
            },
            "GET /numerology": {
                "description": "Derived numerology for an SCS and PRB allocation",
                "parameters": {
                    "scs_khz": "int - subcarrier spacing in kHz",
                    "prb_count": "int - allocated PRBs (default: the maximum for the SCS)",
                },
                "returns": "object - fft_size, cp_samples, sample_rate_hz, symbol/slot durations, occupied bandwidth",
                "example": "GET /api/v1/numerology?scs_khz=120&prb_count=180",
            },
        },
        "notes": [
            "180 PRBs up to 960 kHz SCS; 90 at 1920 kHz and 45 at 3840 kHz keep the channel within 2.16 GHz",
            "The FFT size is the smallest power of two with at most 85% subcarrier occupancy",
        ],
    }
    return jsonify(docs)


@numerology_bp.route("/maxprbs", methods=["GET"])
@handle_errors
def maxprbs() -> Response:
    """
    Maximum PRB count

    Example: GET /api/v1/maxprbs?scs_khz=1920
    """
    scs_khz = get_number(request.args, "scs_khz")
    result = max_prbs(scs_khz * 1e3)
    return jsonify(success_response({"scs_khz": scs_khz, "max_prbs": result}, f"Max PRBs at {scs_khz:g} kHz: {result}"))


@numerology_bp.route("/numerology", methods=["GET"])
@handle_errors
def numerology() -> Response:
    """
    Derived numerology

    Example: GET /api/v1/numerology?scs_khz=960&prb_count=180
    """
    scs_khz = get_number(request.args, "scs_khz")
    prb_count = request.args.get("prb_count", type=int)
    if prb_count is None:
        prb_count = max_prbs(scs_khz * 1e3)
    num = derive_numerology(scs_khz * 1e3, prb_count)
    data = {
        "scs_khz": num.scs_khz,
        "prb_count": num.prb_count,
        "active_subcarriers": num.active_subcarriers,
        "fft_size": num.fft_size,
        "cp_samples": num.cp_samples,
        "sample_rate_hz": num.sample_rate_hz,
        "symbol_duration_s": num.symbol_duration_s,
        "cp_duration_s": num.cp_duration_s,
        "slot_duration_s": num.slot_duration_s,
        "occupied_bandwidth_hz": num.occupied_bandwidth_hz,
    }
    return jsonify(success_response(data, f"Numerology for {num.scs_khz} kHz, {num.prb_count} PRBs"))
