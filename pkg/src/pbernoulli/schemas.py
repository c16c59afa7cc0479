"""JSON schemas for every summary the command-line tool writes."""

_NUM = {"type": ["number", "string"]}   # non-finite floats are written as strings

SUMMARY = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "version", "config_hash", "seed", "status", "checks", "result"],
    "properties": {
        "command": {"type": "string"},
        "version": {"type": "string"},
        "config_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "seed": {"type": "integer"},
        "status": {"enum": ["ok", "check_failed", "numerical_failure"]},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "passed"],
                "properties": {"name": {"type": "string"}, "passed": {"type": "boolean"}},
            },
        },
        "result": {"type": "object"},
        "artifacts": {"type": "array", "items": {"type": "string"}},
    },
}

MINIMIZE_RESULT = {
    "type": "object",
    "required": ["spec", "converged", "grad_norm", "iterations", "energy_exact", "stages"],
    "properties": {
        "spec": {"type": "object", "required": ["p", "lambda_plus", "lambda_minus", "datum"]},
        "converged": {"type": "boolean"},
        "grad_norm": _NUM,
        "iterations": {"type": "integer", "minimum": 0},
        "energy_exact": _NUM,
        "stages": {"type": "array", "items": {"type": "object",
                                              "required": ["eps", "delta", "iterations"]}},
    },
}

MONOTONICITY_REPORT = {
    "type": "object",
    "required": ["x0", "p", "all_hold", "profile"],
    "properties": {
        "x0": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "p": {"type": "number"},
        "all_hold": {"type": "boolean"},
        "profile": {"type": "array", "items": {
            "type": "object", "required": ["r", "phi", "phi_3r", "tripling_holds", "h_over_r"]}},
    },
}

FLATNESS_REPORT = {
    "type": "object",
    "required": ["entries"],
    "properties": {"entries": {"type": "array", "items": {
        "type": "object", "required": ["x0", "r", "h", "nu"],
        "properties": {"verdict": {"enum": ["Flat", "NonFlat"]}}}}},
}

SHOOTING_RESULT = {
    "type": "object",
    "required": ["omega", "p", "lambda", "residual", "iterations", "steps", "lambda_closed_form"],
}

CAPACITY_ESTIMATE = {
    "type": "object",
    "required": ["Q", "ell", "value", "iterations", "converged"],
    "properties": {"value": {"type": "number", "minimum": 0}},
}

RESULT_SCHEMAS = {
    "minimize": MINIMIZE_RESULT,
    "probe acf": MONOTONICITY_REPORT,
    "probe flatness": FLATNESS_REPORT,
    "eigen shoot": SHOOTING_RESULT,
    "capacity": CAPACITY_ESTIMATE,
}
