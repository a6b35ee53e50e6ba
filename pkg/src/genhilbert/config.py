"""Experiment configuration: JSON schema, line-aware loading, hashing.

Validation uses ``jsonschema``; error paths are mapped back to source lines
by re-parsing the document with the pure-Python JSON scanner, which lets us
record where every object and array starts.
"""
from __future__ import annotations

import hashlib
import json
import re
from json import decoder as _jdec
from json import scanner as _jscan

import jsonschema

from .exceptions import ConfigError

__all__ = [
    "SCHEMA",
    "load_config",
    "parse_config",
    "config_hash",
    "canonical_json",
    "measures_from_config",
]

_NUM = {"type": "number"}
_UNIT = {"type": "number", "minimum": 0, "exclusiveMaximum": 1}
_GRID = {"type": "array", "items": _UNIT, "minItems": 1}

_MEASURE_ITEM = {
    "type": "object",
    "required": ["type"],
    "properties": {"type": {"enum": ["atom", "density", "power", "log_carleson"]}},
    "allOf": [
        {
            "if": {"properties": {"type": {"const": "atom"}}},
            "then": {
                "required": ["location"],
                "properties": {
                    "type": True,
                    "location": _UNIT,
                    "weight": {"type": "number", "exclusiveMinimum": 0},
                },
                "additionalProperties": False,
            },
        },
        {
            "if": {"properties": {"type": {"const": "density"}}},
            "then": {
                "properties": {
                    "type": True,
                    "scale": {"type": "number", "exclusiveMinimum": 0},
                    "power": {"type": "number", "exclusiveMinimum": -1},
                    "log_power": _NUM,
                    "lower": _UNIT,
                },
                "additionalProperties": False,
            },
        },
        {
            "if": {"properties": {"type": {"const": "power"}}},
            "then": {
                "required": ["s"],
                "properties": {"type": True, "s": {"type": "number", "exclusiveMinimum": 0}},
                "additionalProperties": False,
            },
        },
        {
            "if": {"properties": {"type": {"const": "log_carleson"}}},
            "then": {
                "required": ["s"],
                "properties": {
                    "type": True,
                    "s": {"type": "number", "exclusiveMinimum": 0},
                    "order": {"type": "number", "minimum": 0},
                },
                "additionalProperties": False,
            },
        },
    ],
}

_MEASURE = {"type": "array", "items": _MEASURE_ITEM}
_COEFFS = {
    "type": "array",
    "minItems": 1,
    "items": {
        "oneOf": [
            _NUM,
            {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        ]
    },
}
_FUNCTION = {
    "type": "object",
    "oneOf": [
        {
            "required": ["coeffs"],
            "properties": {"coeffs": _COEFFS},
            "additionalProperties": False,
        },
        {
            "required": ["family", "a"],
            "properties": {
                "family": {"enum": ["BergmanF", "DirichletF", "LogG"]},
                "a": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "order": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
    ],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "genhilbert experiment configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "measure": _MEASURE,
        "measures": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": _MEASURE,
        },
        "operator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "n_terms": {"type": "integer", "minimum": 0, "maximum": 1 << 16},
            },
        },
        "spaces": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p": {"type": "number", "exclusiveMinimum": 0},
                "q": {"type": "number", "minimum": 1},
                "alpha": {"type": "number", "exclusiveMinimum": -1},
            },
        },
        "moments": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_max": {"type": "integer", "minimum": 0, "maximum": 1 << 16},
                "t_grid": _GRID,
            },
        },
        "classify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "s": {"type": "number", "exclusiveMinimum": 0},
                "log_order": _NUM,
                "t_grid": _GRID,
            },
        },
        "apply": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "function": _FUNCTION,
                "z_grid": {"type": "array", "items": _COEFFS["items"]},
            },
        },
        "verify_identity": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "betas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "functions": {"type": "array", "items": _FUNCTION, "minItems": 1},
                "z_radius": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "n_radii": {"type": "integer", "minimum": 1},
                "n_angles": {"type": "integer", "minimum": 1},
            },
        },
        "probe": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kinds": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"enum": ["lower_bound_scan", "ratio_sup", "duality", "compactness"]},
                },
                "a_grid": _GRID,
                "r_grid": _GRID,
                "s": {"type": "number", "exclusiveMinimum": 0},
                "family": {"enum": ["BergmanF", "DirichletF", "LogG", "RandomPoly"]},
                "count": {"type": "integer", "minimum": 1},
                "target": {"enum": ["bergman", "dirichlet"]},
                "functions": {"type": "array", "items": _FUNCTION, "minItems": 1},
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": (1 << 64) - 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)

_KEY_RE = re.compile(r'"((?:[^"\\]|\\.)*)"\s*:')


class _Locator:
    """Source positions of every object and array in a JSON document."""

    def __init__(self, text):
        self.text = text
        self.spans = {}  # id(container) -> (start, end)
        self._keep = []
        dec = _jdec.JSONDecoder()
        dec.parse_object = self._wrap(_jdec.JSONObject, 1)
        dec.parse_array = self._wrap(_jdec.JSONArray, 1)
        dec.scan_once = _jscan.py_make_scanner(dec)
        self.document = dec.decode(text)

    def _wrap(self, fn, opener_len):
        def parse(s_and_end, *args):
            start = s_and_end[1] - opener_len
            value, end = fn(s_and_end, *args)
            self.spans[id(value)] = (start, end)
            self._keep.append(value)
            return value, end

        return parse

    def _line(self, pos):
        return self.text.count("\n", 0, pos) + 1

    def _key_pos(self, obj, key):
        start, end = self.spans[id(obj)]
        children = [
            self.spans[id(v)] for v in obj.values() if isinstance(v, (dict, list)) and id(v) in self.spans
        ]
        for m in _KEY_RE.finditer(self.text, start, end):
            if any(a <= m.start() < b for a, b in children):
                continue
            if json.loads(f'"{m.group(1)}"') == key:
                return m.start()
        return start

    def line_of(self, path):
        node = self.document
        pos = self.spans.get(id(node), (0, 0))[0]
        for step in path:
            if isinstance(node, dict) and step in node:
                pos = self._key_pos(node, step)
                node = node[step]
            elif isinstance(node, list) and isinstance(step, int) and step < len(node):
                node = node[step]
                if id(node) in self.spans:
                    pos = self.spans[id(node)][0]
            else:
                break
        return self._line(pos)


def parse_config(text):
    """Parse and validate config text; raises :class:`ConfigError` with a line number."""
    try:
        loc = _Locator(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    cfg = loc.document
    errors = sorted(_VALIDATOR.iter_errors(cfg), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        where = "/".join(str(p) for p in path) or "<root>"
        line_path = path
        if err.validator == "additionalProperties" and isinstance(err.instance, dict):
            allowed = err.schema.get("properties", {})
            extra = [k for k in err.instance if k not in allowed]
            if extra:
                line_path = path + [extra[0]]
        raise ConfigError(f"{where}: {err.message}", loc.line_of(line_path))
    if "measure" in cfg and "measures" in cfg:
        raise ConfigError("give either 'measure' or 'measures', not both", loc.line_of(["measures"]))
    return cfg, loc


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(cfg):
    """SHA-256 of the canonical JSON form of the effective configuration."""
    return hashlib.sha256(canonical_json(cfg).encode("ascii")).hexdigest()


def measures_from_config(cfg, loc=None):
    """Named measures from ``measure`` (named ``"mu"``) or ``measures``."""
    from .measures import MeasureSpec

    if "measures" in cfg:
        named = cfg["measures"]
    else:
        named = {"mu": cfg.get("measure", [])}
    out = {}
    for name in sorted(named):
        try:
            out[name] = MeasureSpec.from_config(named[name])
        except (TypeError, ValueError) as exc:
            key = "measures" if "measures" in cfg else "measure"
            path = [key, name] if key == "measures" else [key]
            raise ConfigError(str(exc), loc.line_of(path) if loc else None) from None
    return out
