use serde_json::{json, Value};

use hybrid_koopman::phase_space::HamiltonianPreset;

use crate::config::{CHECKS, DEFAULT_N_SAMPLES};

/// JSON Schema (draft 2020-12) of the scenario configuration.
pub fn config_schema() -> Value {
    let mut checks: Vec<&str> = vec!["all", "none"];
    checks.extend(CHECKS);
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$id": "https://hybrid-koopman.invalid/scenario.schema.json",
        "title": "hkoop scenario",
        "type": "object",
        "additionalProperties": false,
        "required": ["grid", "quantum_dim", "hamiltonian", "initial_state", "time"],
        "properties": {
            "grid": {
                "type": "object",
                "additionalProperties": false,
                "required": ["n_q", "n_p", "q_range", "p_range"],
                "properties": {
                    "n_q": {"type": "integer", "minimum": 4},
                    "n_p": {"type": "integer", "minimum": 4},
                    "q_range": {"$ref": "#/$defs/range"},
                    "p_range": {"$ref": "#/$defs/range"},
                    "boundary": {"enum": ["periodic", "zero"], "default": "periodic"},
                    "scheme": {"enum": ["central2", "central4", "fourier"], "default": "central2"}
                }
            },
            "quantum_dim": {"type": "integer", "minimum": 1},
            "params": {
                "description": "Numbers substituted for whole identifiers in every expression before parsing.",
                "type": "object",
                "propertyNames": {"pattern": "^[A-Za-z_][A-Za-z0-9_]*$", "not": {"enum": ["q", "p", "sin", "cos", "exp", "sqrt", "abs"]}},
                "additionalProperties": {"type": "number"},
                "default": {}
            },
            "hamiltonian": {
                "type": "object",
                "additionalProperties": false,
                "required": ["classical"],
                "properties": {
                    "classical": {
                        "description": "Preset name or expression in q and p.",
                        "type": "string",
                        "examples": HamiltonianPreset::NAMES
                    },
                    "quantum": {"$ref": "#/$defs/matrix", "description": "Hermitian; defaults to zero."},
                    "coupling": {
                        "type": "array",
                        "default": [],
                        "items": {
                            "type": "object",
                            "additionalProperties": false,
                            "required": ["classical", "quantum"],
                            "properties": {
                                "classical": {"$ref": "#/$defs/expression"},
                                "quantum": {"$ref": "#/$defs/matrix"},
                                "strength": {"type": "number", "default": 1.0}
                            }
                        }
                    }
                }
            },
            "initial_state": {
                "type": "object",
                "oneOf": [
                    {
                        "additionalProperties": false,
                        "required": ["classical"],
                        "properties": {
                            "kind": {"const": "product", "default": "product"},
                            "classical": {"$ref": "#/$defs/expression", "description": "Unnormalized density F(q, p) >= 0."},
                            "quantum": {"$ref": "#/$defs/matrix", "description": "Density matrix; defaults to I/d."}
                        }
                    },
                    {
                        "additionalProperties": false,
                        "required": ["kind", "blocks"],
                        "properties": {
                            "kind": {"const": "custom"},
                            "blocks": {
                                "description": "Row-major d x d entries of rho(q, p), each an expression or a [re, im] pair of expressions; normalized after evaluation.",
                                "type": "array",
                                "items": {
                                    "type": "array",
                                    "items": {
                                        "oneOf": [
                                            {"$ref": "#/$defs/expression"},
                                            {"type": "array", "prefixItems": [{"$ref": "#/$defs/expression"}, {"$ref": "#/$defs/expression"}], "minItems": 2, "maxItems": 2}
                                        ]
                                    }
                                }
                            }
                        }
                    }
                ]
            },
            "lift": {"enum": ["block_diagonal", "coherent"], "default": "block_diagonal"},
            "time": {
                "type": "object",
                "additionalProperties": false,
                "required": ["t_end"],
                "properties": {
                    "t_end": {"type": "number", "minimum": 0},
                    "n_samples": {"type": "integer", "minimum": 2, "default": DEFAULT_N_SAMPLES}
                }
            },
            "observables": {
                "type": "array",
                "default": [],
                "items": {
                    "type": "object",
                    "additionalProperties": false,
                    "required": ["name", "terms"],
                    "properties": {
                        "name": {"type": "string", "minLength": 1},
                        "terms": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "additionalProperties": false,
                                "properties": {
                                    "classical": {"$ref": "#/$defs/expression", "default": "1"},
                                    "quantum": {"$ref": "#/$defs/matrix", "description": "Defaults to the identity."},
                                    "coefficient": {"$ref": "#/$defs/complex", "default": [1.0, 0.0]}
                                }
                            }
                        }
                    }
                }
            },
            "checks": {
                "type": "array",
                "items": {"enum": checks},
                "default": ["all"]
            },
            "seed": {"type": "integer", "minimum": 0, "default": 0}
        },
        "$defs": {
            "range": {"type": "array", "prefixItems": [{"type": "number"}, {"type": "number"}], "minItems": 2, "maxItems": 2},
            "complex": {
                "oneOf": [
                    {"type": "number"},
                    {"type": "array", "prefixItems": [{"type": "number"}, {"type": "number"}], "minItems": 2, "maxItems": 2}
                ]
            },
            "matrix": {
                "description": "Row-major d x d matrix of [re, im] pairs (a bare number is real).",
                "type": "array",
                "minItems": 1,
                "items": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/complex"}}
            },
            "expression": {
                "description": "Real expression in q and p: + - * / ^, sin cos exp sqrt abs, parentheses.",
                "type": "string",
                "minLength": 1
            }
        }
    })
}

/// Machine-readable preset catalog.
pub fn preset_catalog() -> Value {
    let presets: Vec<Value> = HamiltonianPreset::NAMES
        .iter()
        .map(|name| {
            let p = HamiltonianPreset::from_name(name).expect("listed preset");
            json!({"name": name, "hamiltonian": p.describe(), "period": p.period()})
        })
        .collect();
    json!({ "presets": presets })
}
