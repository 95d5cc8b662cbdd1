# ============================================================================
# FILE: routes/analysis.py (Analyzer Routes)
# ============================================================================

"""
Analyzer Routes - PAPR CCDF, PA back-off search and phase-noise PSD
"""

import logging
from typing import Any, Dict, List

from flask import Blueprint, Response, jsonify, request

from phy.analysis import PAPR_LEVELS_DB, backoff_gaps, backoff_table, papr_table, pn_psd_grid
from phy.linkconfig import LinkConfig, resolve_config
from phy.waveform import Modulation, WaveformKind
from utils.decorators import handle_errors
from utils.exceptions import APIError
from utils.link_request import get_number, with_link_config
from utils.response_helpers import success_response

# Create blueprint
analysis_bp = Blueprint("analysis", __name__)

logger = logging.getLogger(__name__)


def _selection(body: Dict[str, Any], key: str, parse, all_values) -> List:
    """Optional list (or single name) of waveforms / modulations in a request body."""
    raw = body.get(key)
    if raw is None:
        return list(all_values)
    names = raw if isinstance(raw, list) else [raw]
    if not names:
        raise APIError(f"'{key}' must not be empty", "INVALID_PARAMETER")
    return [parse(n) for n in names]


@analysis_bp.route("/docs/analysis", methods=["GET"])
def get_documentation() -> Response:
    """Get analysis module documentation"""
    link_body = "JSON - optional 'config' (TOML-shaped object), 'config_file', 'overrides'"
    docs = {
        "module": "analysis",
        "description": "Waveform and impairment analyzers that run without the link Monte-Carlo",
        "endpoints": {
            "POST /papr": {
                "description": "PAPR exceeded with probability analysis.papr_probability",
                "body": link_body + ", 'waveforms', 'modulations', 'curve' (bool)",
                "returns": "array - waveform, modulation, papr_db and optionally the CCDF over 0..12 dB",
                "example": 'POST /api/v1/papr {"modulations": ["qpsk"], "curve": true}',
            },
            "POST /backoff": {
                "description": "Smallest PA back-off meeting the ACLR and modulation EVM limits",
                "body": link_body + ", 'waveforms', 'modulations', 'trace' (bool)",
                "returns": "object - rows (backoff_db, null when unreachable) and OFDM minus SC-FDMA gaps",
                "example": 'POST /api/v1/backoff {"overrides": ["pa.kind=\\"rapp\\""]}',
            },
            "GET /pnpsd": {
                "description": "Phase-noise PSD of a shipped profile on a log offset grid",
                "parameters": {
                    "profile": "string - 'bs' or 'ue' (default 'bs')",
                    "carrier_ghz": "float - carrier frequency (default 90)",
                    "points": "int - number of log-spaced offsets from 1 kHz to 1 GHz (default 61)",
                },
                "returns": "object - offsets_hz, psd_dbc_hz",
                "example": "GET /api/v1/pnpsd?profile=ue&carrier_ghz=28",
            },
        },
        "notes": [
            "The back-off search runs with 4x oversampling over 0..pa.max_backoff_db in pa.step_db steps",
            "An ideal PA always needs 0 dB back-off",
        ],
    }
    return jsonify(docs)


@analysis_bp.route("/papr", methods=["POST"])
@handle_errors
@with_link_config
def papr(cfg: LinkConfig, body: Dict[str, Any]) -> Response:
    """
    PAPR CCDF

    Example: POST /api/v1/papr {"waveforms": ["sc-fdma"], "curve": true}
    """
    waveforms = _selection(body, "waveforms", WaveformKind.parse, WaveformKind)
    modulations = _selection(body, "modulations", Modulation.parse, Modulation)
    with_curve = bool(body.get("curve", False))
    rows = papr_table(cfg, waveforms, modulations, with_curve)
    data: Dict[str, Any] = {"rows": rows}
    if with_curve:
        data["levels_db"] = PAPR_LEVELS_DB
    return jsonify(success_response(data, f"PAPR evaluated for {len(rows)} waveform/modulation pairs"))


@analysis_bp.route("/backoff", methods=["POST"])
@handle_errors
@with_link_config
def backoff(cfg: LinkConfig, body: Dict[str, Any]) -> Response:
    """
    Required PA back-off

    Example: POST /api/v1/backoff {"modulations": ["qpsk", "64qam"]}
    """
    waveforms = _selection(body, "waveforms", WaveformKind.parse, WaveformKind)
    modulations = _selection(body, "modulations", Modulation.parse, Modulation)
    rows = backoff_table(cfg, waveforms, modulations, trace=bool(body.get("trace", False)))
    return jsonify(success_response({"rows": rows, "gaps_db": backoff_gaps(rows)}, "Back-off search complete"))


@analysis_bp.route("/pnpsd", methods=["GET"])
@handle_errors
def pnpsd() -> Response:
    """
    Phase-noise PSD

    Example: GET /api/v1/pnpsd?profile=bs&carrier_ghz=90
    """
    profile = request.args.get("profile", "bs")
    carrier_ghz = get_number(request.args, "carrier_ghz", 90.0)
    points = get_number(request.args, "points", 61, int)
    if not 2 <= points <= 1000:
        raise APIError("'points' must lie in [2, 1000]", "INVALID_PARAMETER")
    grid = pn_psd_grid(resolve_config(), profile, carrier_ghz * 1e9, points)
    return jsonify(
        success_response({"profile": profile, "carrier_ghz": carrier_ghz, **grid}, f"PSD of profile '{profile}'")
    )
