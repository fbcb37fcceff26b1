"""Strict experiment configuration: schema, defaults, key-path overrides.

Every numeric parameter of the library is addressable by a dotted key
path.  Unknown keys are rejected with the offending path; all defaults
are materialized into the persisted copy so a run is reproducible from
its snapshot alone.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math

import yaml

from .potentials import (
    FAMILIES,
    ScalarPotential,
    VectorPotential,
    directional_vector_potential,
)


class ConfigError(ValueError):
    """Raised with the dotted key path of the offending entry."""


_POTENTIAL_SCHEMA = {
    "family": "none",
    "amplitude_re": 0.0,
    "amplitude_im": 0.0,
    "center": [],
    "width": 1.0,
    "decay": 1.0,
}

_VECTOR_SCHEMA = dict(_POTENTIAL_SCHEMA, direction=[])

DEFAULTS = {
    "seed": 0,
    "model": {
        "kind": "oscillator",  # oscillator | landau | pauli
        "dim": 2,
        "b_field": 1.0,
        "length_scale": 1.0,
    },
    "basis": {
        "size": 16,
        "sizes": [12, 16],
        "padding_factor": 2.0,
        "landau_angular_ratio": 2,
    },
    "potentials": {
        "w": dict(_POTENTIAL_SCHEMA),
        "v1": dict(_POTENTIAL_SCHEMA),
        "a1": dict(_VECTOR_SCHEMA),
    },
    "sweep": {
        "tau": [0.5, 1.0, 2.0, 4.0, 8.0],
        "scale_v1": True,
        "scale_a1": False,
        "threshold_a": 0.5,
        "r": 2.0,
        "mu": 0.5,
        "delta": 0.5,
        "delta_prime": 0.25,
        "eps": [0.001, 0.01, 0.1],
        "gate_rel_tol": 1.0e-4,
        "norm_grid_radius": 30.0,
        "norm_grid_points": 81,
    },
    "norms": {
        "q": 4.0,
        "re_z": -1.0,  # negative -> auto mid-spectrum eigenvalue
        "imz_ladder": [1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        "scan_size": 32,
        "scan_padding": 1.0,
        "slope_tol": 0.15,
        "slope_tol_22": 0.05,
        "smoothing_size": 768,
        "smoothing_length_scale": 0.5,
        "smoothing_re_z": 4096.0,
        "smoothing_slope_tol": 0.15,
        "projection_size": 31,
        "k_min": 1,
        "k_max": 20,
        "projection_q": 4.0,
        "trend_tol": 0.1,
        "opnorm_maxiter": 400,
        "opnorm_tol": 1.0e-9,
        "adjoint_tol": 1.0e-8,
    },
    "phase_space": {
        "m0": 3.0,
        "mu": 0.5,
        "radius": 50.0,
        "spacing": 0.1,
        "c_min": 1.0e-3,
        "weyl_points": 256,
        "weyl_radius": 12.0,
        "bulk_fraction": 0.5,
        "garding_symbol": "oscillator",  # oscillator | quartic_well | zero
        "garding_c_default": 1.0,
        "garding_drift_tol": 1.0e-3,
        "margin_map_max_rows": 50000,
    },
    "output": {
        "write_margin_map": True,
    },
}


def _merge(defaults, user, path=""):
    if isinstance(defaults, dict):
        if not isinstance(user, dict):
            raise ConfigError(f"{path or '<root>'}: expected a mapping")
        out = {}
        for key, dval in defaults.items():
            sub = f"{path}.{key}" if path else key
            if key in user:
                out[key] = _merge(dval, user[key], sub)
            else:
                out[key] = copy.deepcopy(dval)
        for key in user:
            if key not in defaults:
                sub = f"{path}.{key}" if path else key
                raise ConfigError(f"unknown configuration key: {sub}")
        return out
    # leaf: type check against the default's type
    if isinstance(defaults, bool):
        if not isinstance(user, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return user
    if isinstance(defaults, (int, float)):
        if isinstance(user, bool) or not isinstance(user, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return type(defaults)(user) if isinstance(defaults, float) else user
    if isinstance(defaults, str):
        if not isinstance(user, str):
            raise ConfigError(f"{path}: expected a string")
        return user
    if isinstance(defaults, list):
        if not isinstance(user, list):
            raise ConfigError(f"{path}: expected a list")
        return [
            float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v
            for v in user
        ]
    raise ConfigError(f"{path}: unsupported entry")


def materialize(user_config: dict | None) -> dict:
    """Merge a user document over the defaults, rejecting unknown keys."""
    return _merge(DEFAULTS, user_config or {})


def load_config(path: str | None) -> dict:
    if path is None:
        return materialize({})
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("configuration document must be a mapping")
    return materialize(doc)


def apply_override(config: dict, assignment: str) -> None:
    """Apply one ``--set key.path=value`` override in place."""
    if "=" not in assignment:
        raise ConfigError(f"--set needs key=value, got {assignment!r}")
    path, raw = assignment.split("=", 1)
    keys = path.strip().split(".")
    node = config
    ref = DEFAULTS
    for key in keys[:-1]:
        if not isinstance(ref, dict) or key not in ref:
            raise ConfigError(f"unknown configuration key: {path.strip()}")
        node = node[key]
        ref = ref[key]
    leaf = keys[-1]
    if not isinstance(ref, dict) or leaf not in ref:
        raise ConfigError(f"unknown configuration key: {path.strip()}")
    value = yaml.safe_load(raw)
    node[leaf] = _merge(ref[leaf], value, path.strip())


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""

    def render(v):
        if type(v).__module__ == "numpy" and hasattr(v, "item"):
            v = v.item()
        if isinstance(v, float):
            if math.isinf(v):
                return '"inf"' if v > 0 else '"-inf"'
            if math.isnan(v):
                return '"nan"'
            return format(v, ".17g")
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, int):
            return str(v)
        if v is None:
            return "null"
        if isinstance(v, str):
            return json.dumps(v, ensure_ascii=False)
        if isinstance(v, complex):
            return render({"re": v.real, "im": v.imag})
        if isinstance(v, dict):
            items = sorted(v.items(), key=lambda kv: str(kv[0]))
            inner = ",".join(f"{json.dumps(str(k))}:{render(val)}" for k, val in items)
            return "{" + inner + "}"
        if isinstance(v, (list, tuple)):
            return "[" + ",".join(render(val) for val in v) + "]"
        return render(float(v))

    return render(obj)


def run_id(subcommand: str, config: dict) -> str:
    payload = subcommand + "\n" + canonical_json(config)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def _center(entry: dict, dim: int) -> tuple:
    c = entry.get("center") or []
    if not c:
        return (0.0,) * dim
    if len(c) != dim:
        raise ConfigError(f"potential center must have {dim} entries")
    return tuple(float(v) for v in c)


def scalar_potential_from(entry: dict, dim: int) -> ScalarPotential | None:
    family = entry["family"]
    if family == "none":
        return None
    if family not in FAMILIES:
        raise ConfigError(f"unknown potential family {family!r}")
    amp = complex(entry["amplitude_re"], entry["amplitude_im"])
    return ScalarPotential(
        family,
        amp,
        _center(entry, dim),
        width=float(entry["width"]),
        decay=float(entry["decay"]),
    )


def vector_potential_from(entry: dict, dim: int) -> VectorPotential | None:
    profile = scalar_potential_from(entry, dim)
    if profile is None:
        return None
    direction = entry.get("direction") or []
    if not direction:
        direction = [1.0] + [0.0] * (dim - 1)
    if len(direction) != dim:
        raise ConfigError(f"vector potential direction must have {dim} entries")
    return directional_vector_potential(profile, tuple(float(d) for d in direction))
