"""Stiffness-map files, fit records and run configuration.

Maps are stored as CSV (``x1,x2,stiffness`` in SI units) with a JSON
sidecar ``<path>.meta.json`` holding the generation metadata.
"""

import csv
import json
import math
import os
import re
from dataclasses import dataclass, field

from .elastic import IndenterShape, InclusionParams, MaterialParams
from .errors import ValidationError
from .forward import GridSpec, StiffnessMap

__all__ = [
    "MAP_HEADER",
    "RunConfig",
    "format_float",
    "parse_quantity",
    "save_map",
    "load_map",
    "dump_json",
    "write_json",
    "read_json",
    "load_config",
    "config_from_dict",
]

MAP_HEADER = ("x1", "x2", "stiffness")

UNITS = {
    "pressure": {"Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "nm": 1e-9},
    "force": {"N": 1.0, "mN": 1e-3, "uN": 1e-6, "µN": 1e-6, "nN": 1e-9, "pN": 1e-12},
    "stiffness": {"N/m": 1.0, "mN/m": 1e-3, "nN/um": 1e-3, "nN/µm": 1e-3, "pN/nm": 1e-3},
    "volume": {"m3": 1.0, "um3": 1e-18, "µm3": 1e-18, "nm3": 1e-27},
    "compliance": {"m/N": 1.0, "nm/nN": 1.0, "um/nN": 1e3, "µm/nN": 1e3},
    "dimensionless": {"": 1.0},
}


def format_float(x):
    """17 significant digits: enough for an exact round trip of a double."""
    return format(float(x), ".17g")


_QUANTITY_RE = re.compile(r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf|nan)\s*(\S*)\s*")


def parse_quantity(value, kind, name="value"):
    """Convert a config value to SI.

    Accepts a bare number (already SI), a string such as ``"10 kPa"`` or a
    mapping ``{"value": 10, "unit": "kPa"}``.
    """
    table = UNITS[kind]
    if isinstance(value, bool):
        raise ValidationError(f"{name}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        number, unit = float(value), ""
    elif isinstance(value, str):
        match = _QUANTITY_RE.fullmatch(value)
        if match is None:
            raise ValidationError(f"{name}: cannot parse quantity {value!r}")
        number, unit = float(match.group(1)), match.group(2)
    elif isinstance(value, dict) and "value" in value:
        return parse_quantity(f"{value['value']} {value.get('unit', '')}".strip(), kind, name)
    else:
        raise ValidationError(f"{name}: expected a number or a unit-tagged string, got {value!r}")
    if unit == "":
        factor = 1.0
    elif unit in table:
        factor = table[unit]
    else:
        allowed = ", ".join(u for u in table if u) or "none"
        raise ValidationError(f"{name}: unit {unit!r} is not a {kind} unit (allowed: {allowed})")
    result = number * factor
    if not math.isfinite(result):
        raise ValidationError(f"{name}: value must be finite, got {value!r}")
    return result


# ---------------------------------------------------------------------------
# JSON


def _sanitize(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _sanitize(obj.item())
    return obj


def dump_json(obj):
    """Deterministic JSON text (sorted keys, non-finite floats as null)."""
    return json.dumps(_sanitize(obj), indent=2, sort_keys=True, allow_nan=False, ensure_ascii=False) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_json(obj))


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


# ---------------------------------------------------------------------------
# maps


def sidecar_path(path):
    return f"{os.fspath(path)}.meta.json"


def save_map(smap, path):
    """Write ``smap`` as CSV plus JSON metadata sidecar."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MAP_HEADER)
        for a, b, s in zip(smap.x1, smap.x2, smap.stiffness):
            writer.writerow((format_float(a), format_float(b), format_float(s)))
    meta = {k: v for k, v in smap.metadata.items() if k != "metadata_absent"}
    write_json(sidecar_path(path), meta)


def load_map(path):
    """Read a map written by :func:`save_map`.

    A missing sidecar is tolerated; the map then carries
    ``metadata_absent = True`` and no indentation depth.
    """
    x1, x2, S = [], [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for i, expected in enumerate(MAP_HEADER):
            got = header[i] if i < len(header) else None
            if got != expected:
                raise ValidationError(f"{path}: header column {i + 1} should be {expected!r}, got {got!r}")
        if len(header) != len(MAP_HEADER):
            raise ValidationError(f"{path}: unexpected extra header column {header[len(MAP_HEADER)]!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ValidationError(f"{path}: line {line}: expected 3 fields, got {len(row)}")
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise ValidationError(f"{path}: line {line}: non-numeric field in {row!r}") from None
            if not all(math.isfinite(v) for v in values):
                raise ValidationError(f"{path}: line {line}: non-finite value in {row!r}")
            x1.append(values[0])
            x2.append(values[1])
            S.append(values[2])
    side = sidecar_path(path)
    if os.path.exists(side):
        metadata = read_json(side)
    else:
        metadata = {"metadata_absent": True}
    try:
        return StiffnessMap(x1, x2, S, metadata)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# run configuration

TOP_LEVEL_KEYS = {"material", "inclusion", "indenter", "protocol", "g3", "conventions"}


@dataclass
class RunConfig:
    material: MaterialParams
    indenter: IndenterShape
    inclusion: InclusionParams = None
    nu0: float = 0.5
    w: float = None
    grid: GridSpec = None
    noise_sigma: float = 0.0
    seed: int = None
    g3: float = 0.0
    stiffness_model: str = "asymptotic"
    convention: str = "repaired"
    unit_system: str = "SI"
    extra: dict = field(default_factory=dict)

    def require_inclusion(self):
        if self.inclusion is None:
            raise ValidationError("config lacks an 'inclusion' section")
        return self.inclusion

    def require_w(self):
        if self.w is None:
            raise ValidationError("config lacks protocol.w (indentation depth)")
        return self.w


def _section(data, key, required=True):
    sec = data.get(key)
    if sec is None:
        if required:
            raise ValidationError(f"config lacks a {key!r} section")
        return {}
    if not isinstance(sec, dict):
        raise ValidationError(f"config section {key!r} must be an object")
    return sec


def _number(sec, key, where, default=None):
    if key not in sec:
        if default is None:
            raise ValidationError(f"{where}.{key} is required")
        return default
    v = sec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{where}.{key} must be a number, got {v!r}")
    return float(v)


def _pair(value, kind, name):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ValidationError(f"{name} must be a two-element list")
    return tuple(parse_quantity(v, kind, f"{name}[{i}]") for i, v in enumerate(value))


def _indenter(sec):
    shape = sec.get("shape")
    if shape == "sphere":
        if "R" not in sec:
            raise ValidationError("indenter.R is required for a sphere")
        return IndenterShape.sphere(parse_quantity(sec["R"], "length", "indenter.R"))
    if shape == "cone":
        return IndenterShape.cone(_number(sec, "half_angle_deg", "indenter"))
    if shape not in (None, "power_law"):
        raise ValidationError(f"indenter.shape must be 'sphere', 'cone' or 'power_law', got {shape!r}")
    # Amplitude has units m**(1 - lambda); only SI numbers are accepted.
    return IndenterShape(_number(sec, "lambda_exp", "indenter"), _number(sec, "A", "indenter"))


def config_from_dict(data):
    """Validate a configuration mapping and convert it to SI."""
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(data) - TOP_LEVEL_KEYS
    if unknown:
        raise ValidationError(f"unknown config section(s): {', '.join(sorted(unknown))}")

    conv = _section(data, "conventions", required=False)
    unit_system = conv.get("unit_system", "SI")
    if unit_system != "SI":
        raise ValidationError(f"conventions.unit_system must be 'SI' (use unit tags for other units), got {unit_system!r}")
    convention = conv.get("g_correction", "repaired")
    if convention not in ("repaired", "paper"):
        raise ValidationError(f"conventions.g_correction must be 'repaired' or 'paper', got {convention!r}")

    mat = _section(data, "material")
    material = MaterialParams(parse_quantity(mat.get("E"), "pressure", "material.E"), _number(mat, "nu", "material"))
    indenter = _indenter(_section(data, "indenter"))

    inc = _section(data, "inclusion", required=False)
    nu0 = _number(inc, "nu0", "inclusion", default=0.5) if inc else 0.5
    inclusion = None
    if inc and "d" in inc:
        inclusion = InclusionParams(
            d=parse_quantity(inc["d"], "length", "inclusion.d"),
            x0=_pair(inc.get("x0", [0.0, 0.0]), "length", "inclusion.x0"),
            r_eps=parse_quantity(inc.get("r_eps"), "length", "inclusion.r_eps"),
            alpha=_number(inc, "alpha", "inclusion"),
            nu0=nu0,
        )

    proto = _section(data, "protocol", required=False)
    w = parse_quantity(proto["w"], "length", "protocol.w") if "w" in proto else None
    grid = None
    gsec = proto.get("grid")
    if gsec is not None or inclusion is not None:
        gsec = gsec or {}
        counts = gsec.get("counts", [21, 21])
        if not (isinstance(counts, list) and len(counts) == 2 and all(isinstance(c, int) and not isinstance(c, bool) for c in counts)):
            raise ValidationError("protocol.grid.counts must be two integers")
        center = _pair(gsec.get("center", [0.0, 0.0]), "length", "protocol.grid.center")
        if "extent" in gsec:
            extent = _pair(gsec["extent"], "length", "protocol.grid.extent")
        elif inclusion is not None:
            extent = (6.0 * inclusion.d, 6.0 * inclusion.d)
        else:
            raise ValidationError("protocol.grid.extent is required without an inclusion")
        grid = GridSpec(center, extent, tuple(counts))
    noise = proto.get("noise", {}) or {}
    sigma = _number(noise, "sigma", "protocol.noise", default=0.0)
    seed = noise.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ValidationError(f"protocol.noise.seed must be a non-negative integer, got {seed!r}")
    if sigma < 0:
        raise ValidationError("protocol.noise.sigma must be non-negative")
    if sigma > 0 and seed is None:
        raise ValidationError("protocol.noise.seed is mandatory when sigma > 0")
    stiffness_model = proto.get("stiffness_model", "asymptotic")
    if stiffness_model not in ("asymptotic", "exact"):
        raise ValidationError(f"protocol.stiffness_model must be 'asymptotic' or 'exact', got {stiffness_model!r}")

    g3 = parse_quantity(data.get("g3", 0.0), "compliance", "g3")
    return RunConfig(
        material=material,
        indenter=indenter,
        inclusion=inclusion,
        nu0=nu0,
        w=w,
        grid=grid,
        noise_sigma=sigma,
        seed=seed,
        g3=g3,
        stiffness_model=stiffness_model,
        convention=convention,
        unit_system=unit_system,
    )


def load_config(path):
    return config_from_dict(read_json(path))
