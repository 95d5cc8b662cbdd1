# ============================================================================
# FILE: routes/link.py (Link Simulation Routes)
# ============================================================================

"""
Link Simulation Routes - config validation, single drops, BLER sweeps and scheme comparison

Sweeps run synchronously inside the request, so block counts are clamped to
REST_MAX_BLOCKS. Long studies belong on the command line.
"""

import dataclasses
import logging
from typing import Any, Dict, List, Tuple

from flask import Blueprint, Response, current_app, jsonify

from phy.harness import compare_schemes, run_drop, run_sweep
from phy.linkconfig import LinkConfig, config_summary, dump_config
from phy.ptrs import ptrs_overhead
from utils.decorators import handle_errors
from utils.exceptions import APIError
from utils.link_request import get_json_body, get_number, link_config_from_body, sim_threads, with_link_config
from utils.path_validator import resolve_results_dir
from utils.response_helpers import success_response
from utils.results_io import write_sweep

# Create blueprint
link_bp = Blueprint("link", __name__)

logger = logging.getLogger(__name__)


def _clamp_blocks(cfg: LinkConfig) -> LinkConfig:
    limit = int(current_app.config.get("REST_MAX_BLOCKS", 2000))
    s = cfg.sweep
    if s.max_blocks <= limit:
        return cfg
    logger.info(f"[{cfg.config_id}] clamping max_blocks {s.max_blocks} to {limit} for a REST sweep")
    return cfg.replace(sweep=dataclasses.replace(s, max_blocks=limit, min_blocks=min(s.min_blocks, limit)))


def _orderings(raw: Any) -> List[Tuple[str, str]]:
    if raw is None:
        return []
    if not isinstance(raw, list) or not all(isinstance(o, list) and len(o) == 2 for o in raw):
        raise APIError("'expected_orderings' must be a list of [better, worse] config_id pairs", "INVALID_PARAMETER")
    return [(str(better), str(worse)) for better, worse in raw]


@link_bp.route("/docs/link", methods=["GET"])
def get_documentation() -> Response:
    """Get link module documentation"""
    link_body = "JSON - optional 'config' (TOML-shaped object), 'config_file' (name under CONFIG_FOLDER), 'overrides'"
    docs = {
        "module": "link",
        "description": "Link-level Monte-Carlo: one code block per drop through PA, PN, channel, noise and receiver",
        "endpoints": {
            "POST /validateconfig": {
                "description": "Resolve and validate a link configuration without simulating",
                "body": link_body,
                "returns": "object - config_id, resolved TOML text, sections, PTRS overhead",
                "example": 'POST /api/v1/validateconfig {"overrides": ["waveform.rank=2"]}',
            },
            "POST /rundrop": {
                "description": "Simulate one drop",
                "body": link_body + ", 'snr_db' (required), 'drop_index' (default 0), 'snr_index' (default 0)",
                "returns": "object - block_error, numerical_failure, isi, iterations",
                "example": 'POST /api/v1/rundrop {"snr_db": 12.0, "drop_index": 3}',
            },
            "POST /sweep": {
                "description": "BLER versus SNR over sweep.snr_start_db..snr_stop_db",
                "body": link_body + ", 'persist' (bool), 'output' (folder name under RESULTS_FOLDER)",
                "returns": "object - points, required_snr_db, monotonicity_violations, metadata",
                "example": 'POST /api/v1/sweep {"config_file": "rank_gap_r1.toml", "persist": true}',
            },
            "POST /compare": {
                "description": "Sweep configurations that differ only in waveform and PTRS, then rank them",
                "body": "JSON - 'configs' (list of link bodies), 'expected_orderings' (list of [better, worse])",
                "returns": "object - required_snr_db per config_id, pairwise deltas, ordering checks",
                "example": 'POST /api/v1/compare {"configs": [{...}, {...}], "expected_orderings": [["a", "b"]]}',
            },
        },
        "notes": [
            "Results depend only on the resolved config and sweep.master_seed, never on the thread count",
            "Sweeps are clamped to REST_MAX_BLOCKS blocks per SNR point",
            "required_snr_db is null when the target BLER is not reached in the grid",
        ],
    }
    return jsonify(docs)


@link_bp.route("/validateconfig", methods=["POST"])
@handle_errors
@with_link_config
def validate_config(cfg: LinkConfig, body: Dict[str, Any]) -> Response:
    """
    Resolve a link configuration

    Example: POST /api/v1/validateconfig {"config": {"numerology": {"scs_khz": 960}}}
    """
    data = {
        "config_id": cfg.config_id,
        "resolved_toml": dump_config(cfg),
        "config": config_summary(cfg),
        "ptrs_overhead": ptrs_overhead(cfg.ptrs_config(), cfg.num()),
    }
    return jsonify(success_response(data, f"Config '{cfg.config_id}' is valid"))


@link_bp.route("/rundrop", methods=["POST"])
@handle_errors
@with_link_config
def rundrop(cfg: LinkConfig, body: Dict[str, Any]) -> Response:
    """
    Single drop

    Example: POST /api/v1/rundrop {"snr_db": 15, "drop_index": 0}
    """
    snr_db = get_number(body, "snr_db")
    drop_index = get_number(body, "drop_index", 0, int)
    snr_index = get_number(body, "snr_index", 0, int)
    if drop_index < 0 or snr_index < 0:
        raise APIError("'drop_index' and 'snr_index' must be non-negative", "INVALID_PARAMETER")
    result = run_drop(cfg, snr_db, drop_index, snr_index)
    outcome = "block error" if result.block_error else "decoded"
    return jsonify(success_response(result, f"Drop {drop_index} at {snr_db:g} dB: {outcome}"))


@link_bp.route("/sweep", methods=["POST"])
@handle_errors
@with_link_config
def sweep(cfg: LinkConfig, body: Dict[str, Any]) -> Response:
    """
    BLER sweep

    Example: POST /api/v1/sweep {"overrides": ["sweep.snr_stop_db=10"], "persist": true, "output": "run1"}
    """
    cfg = _clamp_blocks(cfg)
    result = run_sweep(cfg, sim_threads())
    data = result.as_dict()
    if body.get("persist"):
        out_dir = resolve_results_dir(str(body.get("output") or cfg.config_id))
        data["files"] = {name: str(path) for name, path in write_sweep(result, cfg, out_dir).items()}
    return jsonify(success_response(data, f"Sweep of '{cfg.config_id}' complete"))


@link_bp.route("/compare", methods=["POST"])
@handle_errors
def compare() -> Response:
    """
    Scheme comparison

    Example: POST /api/v1/compare {"configs": [{"config_file": "sc_td.toml"}, {"config_file": "ofdm_fd.toml"}]}
    """
    body = get_json_body()
    entries = body.get("configs")
    if not isinstance(entries, list) or not entries or not all(isinstance(e, dict) for e in entries):
        raise APIError("'configs' must be a non-empty list of link config objects", "INVALID_PARAMETER")
    cfgs = [_clamp_blocks(link_config_from_body(entry)) for entry in entries]
    report = compare_schemes(cfgs, _orderings(body.get("expected_orderings")), sim_threads())
    data = {
        "required_snr_db": report.required_snr_db,
        "deltas": report.deltas,
        "orderings": report.orderings,
        "all_hold": report.all_hold,
    }
    return jsonify(success_response(data, f"Compared {len(cfgs)} configurations"))
