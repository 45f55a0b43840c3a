"""Run configuration: loading, schema validation and object construction.

Configs are TOML (or JSON) documents with ``schema_version = 1``.  When
``units.angstrom`` is given, every coordinate-like parameter (grid bounds,
displacements, ``a``, ``b``) is read in angstrom and rescaled into natural
coordinates by that factor.
"""
from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional

import jsonschema
from jsonschema.exceptions import best_match

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .exceptions import BasisTooLarge, ConfigInvalid, ParseError
from .hamiltonian import SPARSE_THRESHOLD, CavitySpec
from .symbasis import DEFAULT_MAX_DIMENSION, INFINITE, SpeciesSpec, count_states
from .vibsolver import (DisplacedHarmonic, Exponential, ExponentialWithBump, Grid, Harmonic,
                        HuangRhysHarmonic, Tabulated, UnitMode, VibrationalBasis)

__all__ = ["SCHEMA", "RunConfig", "load_config", "load_preset", "preset_names", "Diagnostics",
           "validate_file"]

SCHEMA_VERSION = 1

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}

_COUPLING_RULE = [{"required": ["g"]}, {"required": ["G"]}]

_POTENTIALS = {
    "harmonic": ({"omega": _pos, "offset": _num}, ["omega"]),
    "displaced_harmonic": ({"omega": _pos, "d": _num, "offset": _num}, ["omega", "d"]),
    "huang_rhys_harmonic": ({"omega": _pos, "S": _nonneg, "offset": _num}, ["omega", "S"]),
    "exponential": ({"a": _num, "d": _num, "offset": _num}, ["a", "d"]),
    "exponential_with_bump": ({"a": _num, "d1": _num, "b": _num, "c": _num, "d2": _num,
                               "offset": _num}, ["a", "d1", "b", "c", "d2"]),
    "tabulated": ({"values": {"type": "array", "items": _num, "minItems": 16}}, ["values"]),
}


def _potential_schema() -> dict:
    variants = []
    for kind, (props, req) in _POTENTIALS.items():
        variants.append({
            "type": "object",
            "properties": {"kind": {"const": kind}, **props},
            "required": ["kind"] + req,
            "additionalProperties": False,
        })
    return {"type": "object", "required": ["kind"],
            "properties": {"kind": {"enum": list(_POTENTIALS)}},
            "oneOf": variants}


SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["schema_version"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "units": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["natural", "physical"]},
                "mass": _pos,
                "angstrom": {"oneOf": [
                    _pos,
                    {"type": "object", "additionalProperties": False,
                     "required": ["huang_rhys", "omega", "displacement"],
                     "properties": {"huang_rhys": _pos, "omega": _pos, "displacement": _pos}},
                ]},
            },
        },
        "cavity": {
            "type": "object",
            "additionalProperties": False,
            "required": ["omega_c"],
            "properties": {"omega_c": {"oneOf": [_pos, {"type": "string", "pattern": "^fc:.+$"}]}},
        },
        "species": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["label", "grid", "ground", "excited", "m_e"],
                "properties": {
                    "label": {"type": "string", "minLength": 1},
                    "N": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "infinite"}]},
                    "g": _nonneg,
                    "G": _nonneg,
                    "m_g": {"type": "integer", "minimum": 1},
                    "m_e": {"type": "integer", "minimum": 1},
                    "grid": {
                        "type": "object", "additionalProperties": False,
                        "required": ["n_points", "q_min", "q_max"],
                        "properties": {"n_points": {"type": "integer", "minimum": 16},
                                       "q_min": _num, "q_max": _num},
                    },
                    "ground": _potential_schema(),
                    "excited": _potential_schema(),
                    "boundary_tol": {"oneOf": [_pos, {"type": "null"}, {"const": False}]},
                    "excited_boundary_tol": {"oneOf": [_pos, {"type": "null"}, {"const": False}]},
                    "align_fc": {"type": "boolean"},
                },
                "oneOf": _COUPLING_RULE,
            },
        },
        "kappa": {"type": "integer", "minimum": 0},
        "max_dimension": {"type": "integer", "minimum": 1},
        "time": {
            "type": "object", "additionalProperties": False,
            "required": ["t_max_fs", "n_steps"],
            "properties": {"t_max_fs": _pos, "n_steps": {"type": "integer", "minimum": 2}},
        },
        "initial": {"enum": ["photonic"]},
        "observables": {
            "type": "array", "uniqueItems": True,
            "items": {"enum": ["populations", "spectrum", "bare_spectra", "yields", "basis",
                               "trajectory", "hamiltonian"]},
        },
        "spectrum": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "gamma": {"oneOf": [_nonneg, {"type": "null"}]},
                "window": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                "n_points": {"type": "integer", "minimum": 2},
                "peak_threshold": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        "rates": {
            "type": "object", "additionalProperties": False,
            "required": ["N", "G", "J0"],
            "properties": {
                "N": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}},
                "G": _pos,
                "J0": _nonneg,
                "eta": _nonneg,
                "orders": {"type": "array", "items": {"enum": ["zeroth", "first"]}},
                "simulate": {"type": "boolean"},
                "n_modes": {"type": "integer", "minimum": 2},
                "omega": _pos,
            },
        },
        "plot": {"type": "boolean"},
    },
}

_DEFAULTS = {
    "seed": 0,
    "output_dir": "cute-out",
    "units": {"mode": "natural"},
    "kappa": 0,
    "max_dimension": DEFAULT_MAX_DIMENSION,
    "initial": "photonic",
    "observables": ["populations", "spectrum", "yields"],
    "spectrum": {"gamma": None, "window": [0.0, 5.0], "n_points": 4001, "peak_threshold": 0.05},
    "plot": False,
}

_RATE_DEFAULTS = {"eta": 0.001, "orders": ["zeroth", "first"], "simulate": True,
                  "n_modes": 200, "omega": 2.0}


def _parse_text(text: str, fmt: str) -> dict:
    if fmt == "json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        if line is None:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            if m:
                line, col = int(m.group(1)), int(m.group(2))
        raise ParseError(str(exc), line, col) from exc


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _angstrom_scale(units: dict) -> Optional[float]:
    a = units.get("angstrom")
    if a is None:
        return None
    if isinstance(a, dict):
        # natural-coordinate displacement of a Huang-Rhys oscillator, per angstrom
        return math.sqrt(2 * a["huang_rhys"] / a["omega"]) / a["displacement"]
    return float(a)


def _scaled(params: dict, lam: Optional[float]) -> dict:
    p = {k: v for k, v in params.items() if k != "kind"}
    if lam is None:
        return p
    for key in ("d", "d1", "d2"):
        if key in p:
            p[key] = p[key] * lam
    if "a" in p:
        p["a"] = p["a"] / lam
    if "b" in p:
        p["b"] = p["b"] / lam**2
    return p


def make_potential(spec: dict, lam: Optional[float] = None):
    kind = spec["kind"]
    p = _scaled(spec, lam)
    cls = {"harmonic": Harmonic, "displaced_harmonic": DisplacedHarmonic,
           "huang_rhys_harmonic": HuangRhysHarmonic, "exponential": Exponential,
           "exponential_with_bump": ExponentialWithBump}.get(kind)
    if kind == "tabulated":
        return Tabulated(p["values"])
    return cls(**p)


@dataclass
class Diagnostics:
    errors: List[str] = field(default_factory=list)
    dimension: Optional[int] = None
    memory_bytes: Optional[int] = None

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {"ok": self.ok, "errors": self.errors, "dimension": self.dimension,
                "memory_bytes": self.memory_bytes}


@dataclass
class RunConfig:
    """Validated, default-filled run description."""

    data: dict
    source: Optional[str] = None

    @classmethod
    def from_dict(cls, raw: dict, source: Optional[str] = None) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigInvalid("top level must be a table")
        validator = jsonschema.Draft202012Validator(SCHEMA)
        err = best_match(validator.iter_errors(raw))
        if err is not None:
            raise ConfigInvalid(_describe(err), tuple(err.absolute_path))
        data = _merge(_DEFAULTS, raw)
        if "species" not in raw and "observables" not in raw:
            data["observables"] = []
        if "rates" in data:
            data["rates"] = _merge(_RATE_DEFAULTS, data["rates"])
        cfg = cls(data, source)
        cfg._cross_check()
        return cfg

    # -- consistency ---------------------------------------------------
    def _cross_check(self) -> None:
        d = self.data
        units = d["units"]
        if units.get("mode") == "physical":
            if "mass" not in units:
                raise ConfigInvalid("physical units need a mass", ("units", "mass"))
            if "angstrom" in units:
                raise ConfigInvalid("angstrom rescaling applies to natural units only",
                                    ("units", "angstrom"))
        species = d.get("species", [])
        labels = [s["label"] for s in species]
        if len(set(labels)) != len(labels):
            raise ConfigInvalid("species labels must be unique", ("species",))
        for i, s in enumerate(species):
            if s["grid"]["q_max"] <= s["grid"]["q_min"]:
                raise ConfigInvalid("q_max must exceed q_min", ("species", i, "grid", "q_max"))
            if s.get("N", "infinite") == "infinite" and "G" not in s:
                raise ConfigInvalid("infinite N needs the collective coupling G",
                                    ("species", i, "G"))
            if s.get("m_g", 1) > s["grid"]["n_points"] or s["m_e"] > s["grid"]["n_points"]:
                raise ConfigInvalid("more levels requested than grid points", ("species", i, "m_e"))
            for side in ("ground", "excited"):
                pot = s[side]
                if pot["kind"] == "tabulated" and len(pot["values"]) != s["grid"]["n_points"]:
                    raise ConfigInvalid("tabulated values must match grid n_points",
                                        ("species", i, side, "values"))
        needs_system = any(o in d["observables"] for o in
                           ("populations", "spectrum", "bare_spectra", "yields", "basis",
                            "trajectory", "hamiltonian"))
        if needs_system and not species:
            raise ConfigInvalid("observables require at least one species", ("species",))
        if species and "cavity" not in d:
            raise ConfigInvalid("a cavity is required with species", ("cavity",))
        if "cavity" in d:
            wc = d["cavity"]["omega_c"]
            if isinstance(wc, str):
                ref = wc[3:]
                if ref not in labels:
                    raise ConfigInvalid(f"unknown species {ref!r}", ("cavity", "omega_c"))
                if any(s.get("align_fc") and s["label"] == ref for s in species):
                    raise ConfigInvalid("the reference species cannot itself be FC-aligned",
                                        ("cavity", "omega_c"))
        if any(o in d["observables"] for o in ("populations", "spectrum", "bare_spectra",
                                               "trajectory")) \
                and "time" not in d and species:
            raise ConfigInvalid("time grid required for dynamics", ("time",))
        lo, hi = d["spectrum"]["window"]
        if hi <= lo:
            raise ConfigInvalid("window must be ascending", ("spectrum", "window"))

    # -- construction --------------------------------------------------
    @property
    def units(self) -> UnitMode:
        u = self.data["units"]
        if u.get("mode") == "physical":
            return UnitMode.physical(u["mass"])
        return UnitMode.natural()

    @property
    def angstrom(self) -> Optional[float]:
        return _angstrom_scale(self.data["units"])

    @property
    def kappa(self) -> int:
        return int(self.data["kappa"])

    def _grid(self, s: dict) -> Grid:
        lam = self.angstrom or 1.0
        g = s["grid"]
        return Grid(int(g["n_points"]), g["q_min"] * lam, g["q_max"] * lam)

    def vibrational_bases(self) -> Dict[str, VibrationalBasis]:
        lam = self.angstrom
        out = {}
        for s in self.data.get("species", []):
            btol = s.get("boundary_tol", 0.01)
            btol = None if btol in (None, False) else btol
            etol = s.get("excited_boundary_tol", "same")
            etol = None if etol in (None, False) else etol
            out[s["label"]] = VibrationalBasis.from_potentials(
                self._grid(s), make_potential(s["ground"], lam), make_potential(s["excited"], lam),
                self.units, int(s.get("m_g", 1)), int(s["m_e"]), btol, etol)
        return out

    def cavity(self, vibs: Optional[Dict[str, VibrationalBasis]] = None) -> CavitySpec:
        wc = self.data["cavity"]["omega_c"]
        if isinstance(wc, str):
            vibs = vibs if vibs is not None else self.vibrational_bases()
            wc = vibs[wc[3:]].fc_energy()
        return CavitySpec(float(wc))

    def build_species(self):
        """Species specs (with FC alignment applied) and the cavity."""
        vibs = self.vibrational_bases()
        cavity = self.cavity(vibs)
        species = []
        for s in self.data["species"]:
            vib = vibs[s["label"]]
            if s.get("align_fc"):
                vib = vib.shifted(cavity.omega_c - vib.fc_energy())
            n = s.get("N", "infinite")
            n = INFINITE if n == "infinite" else int(n)
            species.append(SpeciesSpec(s["label"], vib, n_molecules=n, g=s.get("g"), G=s.get("G")))
        return species, cavity

    def _size_only_species(self) -> list:
        sizes = []
        for s in self.data.get("species", []):
            mg, me = int(s.get("m_g", 1)), int(s["m_e"])
            vib = VibrationalBasis.from_arrays(range(mg), range(me), [[0.0] * mg] * me)
            n = s.get("N", "infinite")
            n = INFINITE if n == "infinite" else int(n)
            sizes.append(SpeciesSpec(s["label"], vib, n_molecules=n,
                                     G=1.0 if n == INFINITE else None,
                                     g=None if n == INFINITE else 1.0))
        return sizes

    def estimate_dimension(self) -> Optional[int]:
        sizes = self._size_only_species()
        if not sizes:
            return None
        return count_states(sizes, self.kappa)

    def preflight(self) -> int:
        dim = self.estimate_dimension()
        if dim is not None and dim > self.data["max_dimension"]:
            raise BasisTooLarge(dim, self.data["max_dimension"])
        return dim

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2)


def _describe(err: jsonschema.ValidationError) -> str:
    if err.validator == "oneOf" and err.validator_value == _COUPLING_RULE:
        if isinstance(err.instance, dict) and ("g" in err.instance or "G" in err.instance):
            return "coupling: give exactly one of g or G, not both"
        return "coupling: missing g or G"
    return err.message


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {p}: {exc}") from exc
    fmt = "json" if p.suffix.lower() == ".json" else "toml"
    return RunConfig.from_dict(_parse_text(text, fmt), str(p))


def preset_names() -> List[str]:
    files = resources.files("cute").joinpath("presets").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".toml"))


def load_preset(name: str) -> RunConfig:
    res = resources.files("cute").joinpath("presets", f"{name}.toml")
    if not res.is_file():
        raise ConfigInvalid(f"unknown preset {name!r}; available: {preset_names()}", ("preset",))
    return RunConfig.from_dict(_parse_text(res.read_text(), "toml"), f"preset:{name}")


def memory_estimate(dim: int) -> int:
    """Bytes for the Hamiltonian plus a full eigenvector matrix."""
    return 2 * 8 * dim * dim if dim <= SPARSE_THRESHOLD else 8 * dim * dim + 16 * 8 * dim


def validate_file(path) -> Diagnostics:
    """Collect every schema violation and the preflight size without heavy work."""
    diag = Diagnostics()
    p = Path(path)
    text = p.read_text()
    raw = _parse_text(text, "json" if p.suffix.lower() == ".json" else "toml")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    for err in sorted(validator.iter_errors(raw), key=lambda e: [str(x) for x in e.absolute_path]):
        where = "/".join(str(x) for x in err.absolute_path) or "<root>"
        diag.errors.append(f"{where}: {_describe(err)}")
    if diag.errors:
        return diag
    try:
        cfg = RunConfig.from_dict(raw, str(p))
    except ConfigInvalid as exc:
        diag.errors.append(str(exc))
        return diag
    diag.dimension = cfg.estimate_dimension()
    if diag.dimension is not None:
        diag.memory_bytes = memory_estimate(diag.dimension)
        if diag.dimension > cfg.data["max_dimension"]:
            diag.errors.append(str(BasisTooLarge(diag.dimension, cfg.data["max_dimension"])))
    return diag
