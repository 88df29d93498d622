//! JSON Schema of the run configuration, printed by `soliton-lab schema`.

pub const CONFIG_SCHEMA: &str = r##"{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "soliton-lab run configuration",
  "type": "object",
  "additionalProperties": false,
  "required": ["params", "grid", "suites", "output_dir"],
  "properties": {
    "params": {
      "type": "object",
      "additionalProperties": false,
      "required": ["kappas"],
      "properties": {
        "kappas": {
          "oneOf": [
            {
              "type": "object", "additionalProperties": false, "required": ["explicit"],
              "properties": { "explicit": { "type": "array", "items": { "type": "number", "exclusiveMinimum": 0 } } }
            },
            {
              "type": "object", "additionalProperties": false, "required": ["geometric"],
              "properties": { "geometric": {
                "type": "object", "additionalProperties": false, "required": ["base", "ratio", "count"],
                "properties": {
                  "base": { "type": "number", "exclusiveMinimum": 0 },
                  "ratio": { "type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1 },
                  "count": { "type": "integer", "minimum": 0 }
                }
              } }
            },
            {
              "type": "object", "additionalProperties": false, "required": ["reciprocal"],
              "properties": { "reciprocal": {
                "type": "object", "additionalProperties": false, "required": ["scale", "power", "count"],
                "properties": {
                  "scale": { "type": "number", "exclusiveMinimum": 0 },
                  "power": { "type": "number", "exclusiveMinimum": 1 },
                  "count": { "type": "integer", "minimum": 0 }
                }
              } }
            }
          ]
        },
        "norming": {
          "description": "Defaults to c_j = kappa_j.",
          "oneOf": [
            {
              "type": "object", "additionalProperties": false, "required": ["explicit"],
              "properties": { "explicit": { "type": "array", "items": { "type": "number", "exclusiveMinimum": 0 } } }
            },
            {
              "type": "object", "additionalProperties": false, "required": ["rule"],
              "properties": { "rule": { "const": "c=kappa" } }
            }
          ]
        }
      }
    },
    "grid": {
      "type": "object",
      "additionalProperties": false,
      "required": ["t_values", "x_min", "x_max", "nx"],
      "properties": {
        "t_values": { "type": "array", "items": { "type": "number" }, "minItems": 1 },
        "x_min": { "type": "number" },
        "x_max": { "type": "number", "description": "Must exceed x_min." },
        "nx": { "type": "integer", "minimum": 2 }
      }
    },
    "suites": {
      "type": "array",
      "minItems": 1,
      "uniqueItems": true,
      "items": { "enum": ["field", "kdv", "spectrum", "scatter", "invariants", "converge", "mfunction"] }
    },
    "tolerances": {
      "type": "object",
      "additionalProperties": false,
      "description": "Per-suite thresholds; `soliton-lab explain <suite>` gives their meaning.",
      "properties": {
        "field": { "type": "number", "exclusiveMinimum": 0, "default": 1e-9 },
        "kdv": { "type": "number", "exclusiveMinimum": 0, "default": 1e-6 },
        "spectrum": { "type": "number", "exclusiveMinimum": 0, "default": 1e-4 },
        "scatter": { "type": "number", "exclusiveMinimum": 0, "default": 1e-6 },
        "invariants": { "type": "number", "exclusiveMinimum": 0, "default": 1e-6 },
        "converge": { "type": "number", "exclusiveMinimum": 0, "default": 1 },
        "mfunction": { "type": "number", "exclusiveMinimum": 0, "default": 1e-12 }
      }
    },
    "output_dir": { "type": "string" },
    "options": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "n": { "type": ["integer", "null"], "minimum": 0, "description": "Truncation order; all stored parameters by default." },
        "spectrum_h": { "type": "number", "exclusiveMinimum": 0, "default": 0.005 },
        "scatter_du": { "type": "number", "exclusiveMinimum": 0, "default": 0.001 },
        "scatter_window_tol": { "type": "number", "exclusiveMinimum": 0, "default": 1e-10 },
        "k_grid": { "type": "array", "items": { "type": "number", "exclusiveMinimum": 0 }, "default": [0.5, 1.0, 2.0, 4.0] },
        "invariants_du": { "type": "number", "exclusiveMinimum": 0, "default": 0.01 },
        "ladder": { "type": "array", "items": { "type": "integer", "minimum": 0 }, "minItems": 1, "default": [4, 8, 16, 32, 64] },
        "mfunction_side": { "type": "integer", "minimum": 1, "default": 10 }
      }
    }
  },
  "$comment": "Floats in artifacts are the shortest decimal strings that round-trip to the same f64."
}"##;
