"""
JSON schemas for network and scenario files
"""

from typing import Dict, List

from jsonschema import Draft202012Validator

_ID = {"type": "string", "minLength": 1}

NETWORK_SCHEMA: Dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Dispatching area network",
    "type": "object",
    "required": ["format_version", "blocks", "adjacency", "points", "point_blocks"],
    "properties": {
        "format_version": {"const": 1},
        "name": {"type": "string"},
        "blocks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "length", "speed_limit"],
                "properties": {
                    "id": _ID,
                    "length": {"type": "number"},
                    "speed_limit": {"type": "number"},
                },
                "additionalProperties": False,
            },
        },
        "adjacency": {
            "type": "array",
            "items": {"type": "array", "items": _ID, "minItems": 2, "maxItems": 2},
        },
        "points": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind"],
                "properties": {
                    "id": _ID,
                    "kind": {"enum": ["entry", "exit", "halt", "junction"]},
                    "platform_group": {"type": ["string", "null"]},
                },
                "additionalProperties": False,
            },
        },
        "point_blocks": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "inbound": {"type": "array", "items": _ID},
                    "outbound": {"type": "array", "items": _ID},
                },
                "additionalProperties": False,
            },
        },
        "crossing_pairs": {
            "type": "array",
            "items": {"type": "array", "items": _ID, "minItems": 2, "maxItems": 2},
        },
        "services": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "entry_point", "exit_point", "entry_time", "scheduled_exit"],
                "properties": {
                    "id": _ID,
                    "entry_point": _ID,
                    "exit_point": _ID,
                    "entry_time": {"type": "integer"},
                    "scheduled_exit": {"type": "integer"},
                    "scheduled_halts": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["platform_group"],
                            "properties": {
                                "platform_group": _ID,
                                "min_dwell": {"type": "integer", "minimum": 0},
                            },
                            "additionalProperties": False,
                        },
                    },
                    "max_speed": {"type": "number", "exclusiveMinimum": 0},
                    "accel": {"type": "number", "exclusiveMinimum": 0},
                    "decel": {"type": "number", "exclusiveMinimum": 0},
                    "disturbance": {"type": "integer", "minimum": 0},
                },
                "additionalProperties": False,
            },
        },
        "timetable_period": {"type": ["integer", "null"], "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

SCENARIO_SCHEMA: Dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Disturbance scenario",
    "type": "object",
    "required": ["format_version", "network", "n"],
    "properties": {
        "format_version": {"const": 1},
        "name": {"type": ["string", "null"]},
        "network": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "k": {"type": ["integer", "null"], "minimum": 1},
        "detour_factor": {"type": "number", "minimum": 1},
        "speed_levels": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "q": {"type": "number", "minimum": 0, "maximum": 1},
        "rate": {"type": "number", "exclusiveMinimum": 0},
        "horizon": {"type": "integer", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
        "replications": {"type": "integer", "minimum": 1},
        "gap_target": {"type": "number", "minimum": 0, "maximum": 1},
        "time_limit": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "pricing_time_limit": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "parallel_reps": {"type": "boolean"},
        "solver_backend": {"enum": ["bundled", "highs"]},
        "blocking": {
            "type": "object",
            "properties": {
                "setup_margin": {"type": "integer", "minimum": 0},
                "release_margin": {"type": "integer", "minimum": 0},
                "clear_time": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def validate_document(document, schema: Dict) -> List[str]:
    """Validate a parsed JSON document, returning readable violation messages"""
    validator = Draft202012Validator(schema)
    errors = []
    for error in sorted(validator.iter_errors(document), key=lambda e: list(e.path)):
        location = "/".join(str(part) for part in error.path) or "<root>"
        errors.append(f"{location}: {error.message}")
    return errors
