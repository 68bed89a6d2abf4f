"""Experiment configuration: YAML surface, schema validation, defaults.

A config is one YAML document.  Required everywhere: ``kind``, ``seed``,
``output_dir``.  ``spectrum`` describes detuning noise in rad^2/s for the
coherence kinds and voltage noise in V^2/Hz for ``voltage_psd``.  Grids can
be given as explicit lists or as ``{start, stop, num, spacing}`` with
spacing ``linear`` or ``log``.
"""

from __future__ import annotations

import copy
from pathlib import Path

import jsonschema
import numpy as np
import yaml

KINDS = (
    "rabi_chevron",
    "ramsey",
    "hahn",
    "cpmg_t2_vs_n",
    "noise_spectroscopy",
    "rbm",
    "interleaved_rbm",
    "stark_map",
    "tone_scan",
    "voltage_psd",
)

# kinds whose pipelines sample the spectrum model
SPECTRUM_KINDS = ("ramsey", "hahn", "cpmg_t2_vs_n", "noise_spectroscopy",
                  "tone_scan", "voltage_psd")


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""


_GRID = {
    "oneOf": [
        {"type": "array", "items": {"type": "number"}, "minItems": 1},
        {
            "type": "object",
            "required": ["start", "stop", "num"],
            "additionalProperties": False,
            "properties": {
                "start": {"type": "number"},
                "stop": {"type": "number"},
                "num": {"type": "integer", "minimum": 1},
                "spacing": {"enum": ["linear", "log"]},
            },
        },
    ]
}

_SPECTRUM = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "powerlaws": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["amplitude", "exponent"],
                "additionalProperties": False,
                "properties": {
                    "amplitude": {"type": "number", "minimum": 0},
                    "exponent": {"type": "number", "minimum": 0, "maximum": 3},
                },
            },
        },
        "white_floor": {"type": "number", "minimum": 0},
        "lines": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["center_hz", "power"],
                "additionalProperties": False,
                "properties": {
                    "center_hz": {"type": "number", "exclusiveMinimum": 0},
                    "power": {"type": "number", "minimum": 0},
                    "width_hz": {"type": ["number", "null"], "exclusiveMinimum": 0},
                },
            },
        },
    },
}

_STARK = {
    "type": "object",
    "required": ["f0_ref_hz", "coefficients_hz_per_v"],
    "additionalProperties": False,
    "properties": {
        "f0_ref_hz": {"type": "number"},
        "coefficients_hz_per_v": {
            "type": "object",
            "additionalProperties": {"type": "number"},
            "minProperties": 1,
        },
        "reference_voltages": {
            "type": "object",
            "additionalProperties": {"type": "number"},
        },
    },
}

_POSINT = {"type": "integer", "minimum": 1}
_POSNUM = {"type": "number", "exclusiveMinimum": 0}

PROTOCOL_SCHEMAS: dict[str, dict] = {
    "rabi_chevron": {
        "detuning_hz": _GRID,
        "duration_s": _GRID,
    },
    "ramsey": {
        "times_s": _GRID,
        "n_traj": _POSINT,
        "fit": {"enum": ["exponential", "stretched"]},
        "duration_factor": _POSNUM,
        "samples_per_interval": _POSINT,
    },
    "hahn": {
        "times_s": _GRID,
        "n_traj": _POSINT,
        "fit": {"enum": ["exponential", "stretched"]},
        "duration_factor": _POSNUM,
        "samples_per_interval": _POSINT,
    },
    "cpmg_t2_vs_n": {
        "pulse_counts": {"type": "array", "items": _POSINT, "minItems": 2},
        "n_traj": _POSINT,
        "n_times": {"type": "integer", "minimum": 3},
        "t_factor_min": _POSNUM,
        "t_factor_max": _POSNUM,
        "fit": {"enum": ["exponential", "stretched"]},
        "duration_factor": _POSNUM,
        "samples_per_interval": _POSINT,
    },
    "noise_spectroscopy": {
        "f_grid_hz": _GRID,
        "pulse_counts": {"type": "array", "items": _POSINT, "minItems": 2},
        "n_traj": _POSINT,
        "t2_hahn_s": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "duration_factor": _POSNUM,
        "samples_per_interval": _POSINT,
    },
    "rbm": {
        "depths": {"type": "array", "items": _POSINT, "minItems": 3},
        "n_sequences": _POSINT,
        "shots": _POSINT,
        "clifford_fidelity": {"type": "number",
                              "exclusiveMinimum": 0.5, "exclusiveMaximum": 1},
    },
    "interleaved_rbm": {
        "depths": {"type": "array", "items": _POSINT, "minItems": 3},
        "n_sequences": _POSINT,
        "shots": _POSINT,
        "clifford_fidelity": {"type": "number",
                              "exclusiveMinimum": 0.5, "exclusiveMaximum": 1},
        "gate": {"type": ["string", "integer"]},
    },
    "stark_map": {
        "v_g1_v": _GRID,
        "v_g2_v": _GRID,
        "jitter_hz": {"type": "number", "minimum": 0},
    },
    "tone_scan": {
        "f_tone_hz": _POSNUM,
        "gate": {"type": "string"},
        "amplitudes_vpp": {"type": "array", "items": {"type": "number", "minimum": 0},
                           "minItems": 1},
        "f_columns_hz": {"type": "array", "items": _POSNUM, "minItems": 2},
        "total_time_s": _POSNUM,
        "shots": _POSINT,
        "phase": {"type": ["number", "null"]},
        "samples_per_interval": _POSINT,
    },
    "voltage_psd": {
        "sample_rate_hz": _POSNUM,
        "duration_s": _POSNUM,
        "nperseg_s": _POSNUM,
        "band_hz": {"type": "array", "items": {"type": "number", "minimum": 0},
                    "minItems": 2, "maxItems": 2},
        "stark_gate": {"type": "string"},
        "qubit_floor_rad2_s": {"type": "number", "minimum": 0},
        "spectroscopy": {
            "type": ["object", "null"],
            "properties": {
                "f_grid_hz": _GRID,
                "pulse_counts": {"type": "array", "items": _POSINT,
                                 "minItems": 2},
                "n_traj": _POSINT,
                "samples_per_interval": _POSINT,
            },
            "required": ["f_grid_hz", "pulse_counts", "n_traj"],
            "additionalProperties": False,
        },
        "export_trace": {"type": "boolean"},
    },
}

_AMP_LADDER = [40e-6 * 2 ** (k / 2) for k in range(10)]  # 40 uVpp to ~905 uVpp

PROTOCOL_DEFAULTS: dict[str, dict] = {
    "rabi_chevron": {
        "detuning_hz": {"start": -1.5e6, "stop": 1.5e6, "num": 61,
                        "spacing": "linear"},
        "duration_s": {"start": 4e-8, "stop": 6.4e-6, "num": 81,
                       "spacing": "linear"},
    },
    "ramsey": {
        "times_s": {"start": 2e-6, "stop": 3e-4, "num": 12, "spacing": "log"},
        "n_traj": 500, "fit": "stretched",
        "duration_factor": 2.0, "samples_per_interval": 16,
    },
    "hahn": {
        "times_s": {"start": 5e-6, "stop": 2e-3, "num": 12, "spacing": "log"},
        "n_traj": 500, "fit": "stretched",
        "duration_factor": 2.0, "samples_per_interval": 16,
    },
    "cpmg_t2_vs_n": {
        "pulse_counts": [1, 2, 4, 8, 16, 32, 64],
        "n_traj": 400, "n_times": 8, "t_factor_min": 0.3, "t_factor_max": 2.2,
        "fit": "stretched", "duration_factor": 2.0, "samples_per_interval": 16,
    },
    "noise_spectroscopy": {
        "f_grid_hz": {"start": 1300.0, "stop": 50000.0, "num": 12,
                      "spacing": "log"},
        "pulse_counts": [2, 4, 8, 16, 32],
        "n_traj": 500, "t2_hahn_s": None,
        "duration_factor": 2.0, "samples_per_interval": 32,
    },
    "rbm": {
        "depths": [1, 2, 4, 8, 16, 32, 64, 128, 200, 300],
        "n_sequences": 30, "shots": 100, "clifford_fidelity": 0.9983,
    },
    "interleaved_rbm": {
        "depths": [1, 2, 4, 8, 16, 32, 64, 128, 200, 300],
        "n_sequences": 30, "shots": 100, "clifford_fidelity": 0.9983,
        "gate": "X90",
    },
    "stark_map": {
        "v_g1_v": {"start": -0.016, "stop": 0.016, "num": 5, "spacing": "linear"},
        "v_g2_v": {"start": -0.016, "stop": 0.016, "num": 5, "spacing": "linear"},
        "jitter_hz": 10e3,
    },
    "tone_scan": {
        "f_tone_hz": 20e3, "gate": "G2",
        "amplitudes_vpp": _AMP_LADDER,
        "f_columns_hz": [10e3 / 3, 4e3, 5e3, 20e3 / 3, 8e3, 10e3,
                         40e3 / 3, 16e3, 20e3, 80e3 / 3, 33e3, 40e3],
        "total_time_s": 300e-6, "shots": 160, "phase": None,
        "samples_per_interval": 32,
    },
    "voltage_psd": {
        "sample_rate_hz": 120e3, "duration_s": 45.0, "nperseg_s": 5.0,
        "band_hz": [0.2, 50e3], "stark_gate": "G2",
        "qubit_floor_rad2_s": 350.0, "spectroscopy": None,
        "export_trace": False,
    },
}

QUBIT_DEFAULTS = {"g_factor": 1.9789, "field_t": 1.4, "rabi_hz": 390625.0}
READOUT_DEFAULTS = {"visibility": 0.55, "floor": 0.225}
STARK_DEFAULTS = {
    "f0_ref_hz": 38.7765e9,
    "coefficients_hz_per_v": {"G1": -36.21e6, "G2": -22.88e6},
    "reference_voltages": {"G1": 0.0, "G2": 0.0},
}

TOP_SCHEMA = {
    "type": "object",
    "required": ["kind", "seed", "output_dir"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(KINDS)},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string", "minLength": 1},
        "workers": {"type": ["integer", "null"], "minimum": 1},
        "qubit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "g_factor": _POSNUM, "field_t": _POSNUM, "rabi_hz": _POSNUM,
            },
        },
        "readout": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "visibility": {"type": "number", "exclusiveMinimum": 0,
                               "maximum": 1},
                "floor": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "spectrum": _SPECTRUM,
        "stark": _STARK,
        "protocol": {"type": "object"},
    },
}


def grid_values(spec) -> np.ndarray:
    """Materialize a grid spec (list or start/stop/num) into an array."""
    if isinstance(spec, (list, tuple)):
        return np.asarray(spec, dtype=float)
    spacing = spec.get("spacing", "linear")
    if spacing == "log":
        if spec["start"] <= 0 or spec["stop"] <= 0:
            raise ConfigError("log-spaced grid needs positive start/stop")
        return np.geomspace(spec["start"], spec["stop"], spec["num"])
    return np.linspace(spec["start"], spec["stop"], spec["num"])


def _merge_defaults(defaults: dict, given: dict | None) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in (given or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) \
                and key not in ("coefficients_hz_per_v", "reference_voltages"):
            out[key] = _merge_defaults(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _schema_error(exc: jsonschema.ValidationError, where: str) -> ConfigError:
    path = ".".join(str(p) for p in exc.absolute_path) or "(top level)"
    return ConfigError(f"{where}{path}: {exc.message}")


def validate_config(raw: dict) -> dict:
    """Validate a parsed config and return the normalized form.

    Normalization applies all defaults, so the returned dict alone is
    enough to reproduce the run.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    try:
        jsonschema.validate(raw, TOP_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise _schema_error(exc, "") from None
    kind = raw["kind"]
    cfg = copy.deepcopy(raw)
    cfg["qubit"] = _merge_defaults(QUBIT_DEFAULTS, raw.get("qubit"))
    cfg["readout"] = _merge_defaults(READOUT_DEFAULTS, raw.get("readout"))
    cfg["stark"] = _merge_defaults(STARK_DEFAULTS, raw.get("stark"))
    cfg["workers"] = raw.get("workers")
    cfg["protocol"] = _merge_defaults(PROTOCOL_DEFAULTS[kind],
                                      raw.get("protocol"))
    proto_schema = {
        "type": "object",
        "additionalProperties": False,
        "properties": PROTOCOL_SCHEMAS[kind],
    }
    try:
        jsonschema.validate(cfg["protocol"], proto_schema)
    except jsonschema.ValidationError as exc:
        raise _schema_error(exc, "protocol.") from None
    if kind in SPECTRUM_KINDS:
        if "spectrum" not in cfg or not cfg["spectrum"]:
            raise ConfigError(f"spectrum: required for kind={kind}")
    cfg.setdefault("spectrum", {})
    return cfg


def load_config(path) -> dict:
    """Read and validate a YAML config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open() as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML parse error in {path}: {exc}") from None
    return validate_config(raw)
