"""Text formats: sampled fields, piecewise-constant dumps, study configs, CSV reports.

Grid field file
---------------
::

    # particle_approx grid-field v1
    box <l1_lo> <l1_hi> <l2_lo> <l2_hi>
    shape <nx> <ny>
    <ny values for x index 0>
    ...
    <ny values for x index nx-1>

Samples sit on ``linspace(l1_lo, l1_hi, nx) x linspace(l2_lo, l2_hi, ny)``.
The loaded field interpolates bilinearly and is zero outside the box.
Values are written with shortest round-trip decimals, so a write/read
cycle reproduces them bit for bit.

Piecewise-constant dump
-----------------------
Same layout with ``# particle_approx piecewise-constant v1``, a ``kind``
line, ``box`` and ``n``, then ``n`` rows of ``n`` cell values (row ``i`` is
x-cell ``i``).

Study config (YAML)
-------------------
::

    output: results.csv          # optional
    quadrature: {points: 8, panels: 1, rel_tol: 1.0e-12, max_panels: 256}
    cases:
      - name: smooth_th1
        theorem: th1             # th1 | th2 | th3 | th4
        rho: {builtin: cos2_bump, half_width: 1.0}
        phi: {builtin: cos2_bump}
        omega: {builtin: cos2_bump}          # optional, adds quantity records
        n: [4, 8, 16, 32, 64]
        eps: 1.0e-3                          # th2/th4 only
        box: [-1, 1, -1, 1]                  # th1/th3 grid box, default rho support
        outer_box: [-8, 8, -8, 8]            # optional reference-integral box
        resolution: 1.0e-3                   # truncation search resolution
        quadrature: {rel_tol: 1.0e-3}        # per-case overrides
        norms: {rho: {dx_sup: 1.6}}          # norm overrides
        constant_overrides: {C12: 1.0}       # replace bound constants

Fields are ``{builtin: <name>, <param>: <value>, ...}`` (see
:mod:`particle_approx.library`) or ``{file: <grid field path>}``; relative
paths resolve against the config's directory.

CSV report
----------
Header :data:`CSV_HEADER`.  One row per N with density and (when ``omega``
is given) quantity columns, then one constants row per case whose ``N``
column reads ``constants`` and whose ``bound_density`` / ``bound_quantity``
columns hold ``name=value`` pairs joined by ``;``.
"""

from __future__ import annotations

import copy
import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.interpolate import RegularGridInterpolator

from .bounds import CONSTANT_NAMES, THEOREMS, TRUNCATED
from .discretize import PiecewiseConstantField, make_grid
from .fields import NORM_NAMES, BoxDomain, ScalarField
from .harness import DEFAULT_N_VALUES, StudyCase
from .library import BUILTINS, make_builtin
from .quadrature import QuadratureSpec

GRID_MAGIC = "# particle_approx grid-field v1"
PC_MAGIC = "# particle_approx piecewise-constant v1"
CSV_HEADER = (
    "name,theorem,N,L,eps,measured_error_density,bound_density,ratio_density,"
    "measured_error_quantity,bound_quantity,ratio_quantity"
)


class FormatError(ValueError):
    """Malformed field file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    """Shortest round-trip decimal of a float; empty string for None."""
    return "" if x is None else repr(float(x))


# --- sampled fields -------------------------------------------------------


def _parse_float(token, lineno):
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"not a number: {token!r}", lineno) from None
    if not math.isfinite(value):
        raise FormatError(f"non-finite value {token!r}", lineno)
    return value


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def _header_field(lines, idx, key, count):
    lineno = idx + 1
    if idx >= len(lines):
        raise FormatError(f"missing '{key}' line", lineno)
    parts = lines[idx].split()
    if not parts or parts[0] != key or len(parts) != count + 1:
        raise FormatError(f"expected '{key}' followed by {count} values, got {lines[idx]!r}", lineno)
    return parts[1:], lineno


def _parse_box(lines, idx):
    tokens, lineno = _header_field(lines, idx, "box", 4)
    try:
        return BoxDomain(*(_parse_float(t, lineno) for t in tokens))
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(str(exc), lineno) from None


def _parse_matrix(lines, start, rows, cols):
    body = [(k + 1, ln) for k, ln in enumerate(lines) if k >= start and ln.strip()]
    found = sum(len(ln.split()) for _, ln in body)
    if found != rows * cols:
        raise FormatError(f"expected {rows}x{cols} = {rows * cols} values, found {found}")
    if len(body) != rows:
        raise FormatError(f"expected {rows} value rows, found {len(body)}")
    out = np.empty((rows, cols))
    for r, (lineno, ln) in enumerate(body):
        tokens = ln.split()
        if len(tokens) != cols:
            raise FormatError(f"expected {cols} values in row, found {len(tokens)}", lineno)
        out[r] = [_parse_float(t, lineno) for t in tokens]
    return out


def read_grid_values(path) -> tuple[BoxDomain, np.ndarray]:
    lines = _read_lines(path)
    if not lines or lines[0].strip() != GRID_MAGIC:
        raise FormatError(f"missing header {GRID_MAGIC!r}", 1)
    box = _parse_box(lines, 1)
    tokens, lineno = _header_field(lines, 2, "shape", 2)
    try:
        nx, ny = (int(t) for t in tokens)
    except ValueError:
        raise FormatError(f"shape must be two integers, got {tokens}", lineno) from None
    if nx < 2 or ny < 2:
        raise FormatError("shape must be at least 2 x 2", lineno)
    return box, _parse_matrix(lines, 3, nx, ny)


def field_from_samples(box: BoxDomain, values, name="sampled") -> ScalarField:
    """Bilinear interpolant of lattice samples, zero outside ``box``."""
    values = np.asarray(values, dtype=float)
    xs = np.linspace(box.l1_lo, box.l1_hi, values.shape[0])
    ys = np.linspace(box.l2_lo, box.l2_hi, values.shape[1])
    interp = RegularGridInterpolator((xs, ys), values, method="linear", bounds_error=False, fill_value=0.0)

    def evaluate(x, y):
        pts = np.stack([np.ravel(x), np.ravel(y)], axis=-1)
        return interp(pts).reshape(np.shape(x))

    return ScalarField(evaluate, support_hint=box, name=name)


def read_field_file(path) -> ScalarField:
    box, values = read_grid_values(path)
    return field_from_samples(box, values, name=os.path.basename(str(path)))


def write_grid_values(path, box: BoxDomain, values) -> None:
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or min(values.shape) < 2:
        raise ValueError("values must be a 2D array of at least 2 x 2 samples")
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")
    lines = [GRID_MAGIC, "box " + " ".join(fmt(b) for b in box.as_tuple()), f"shape {values.shape[0]} {values.shape[1]}"]
    lines += [" ".join(fmt(v) for v in row) for row in values]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_field_file(path, f: ScalarField, box: BoxDomain, nx: int, ny: int | None = None) -> None:
    """Sample ``f`` on an ``nx`` x ``ny`` lattice of ``box`` and write it."""
    ny = nx if ny is None else ny
    xs = np.linspace(box.l1_lo, box.l1_hi, nx)
    ys = np.linspace(box.l2_lo, box.l2_hi, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    write_grid_values(path, box, f(X, Y))


# --- piecewise-constant dumps ---------------------------------------------


def write_pc_file(path, pc: PiecewiseConstantField) -> None:
    lines = [
        PC_MAGIC,
        f"kind {pc.kind}",
        "box " + " ".join(fmt(b) for b in pc.grid.box.as_tuple()),
        f"n {pc.grid.n}",
    ]
    lines += [" ".join(fmt(v) for v in row) for row in pc.values]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_pc_file(path) -> PiecewiseConstantField:
    lines = _read_lines(path)
    if not lines or lines[0].strip() != PC_MAGIC:
        raise FormatError(f"missing header {PC_MAGIC!r}", 1)
    (kind,), _ = _header_field(lines, 1, "kind", 1)
    box = _parse_box(lines, 2)
    (n_tok,), lineno = _header_field(lines, 3, "n", 1)
    try:
        n = int(n_tok)
    except ValueError:
        raise FormatError(f"n must be an integer, got {n_tok!r}", lineno) from None
    if n < 1:
        raise FormatError("n must be >= 1", lineno)
    values = _parse_matrix(lines, 4, n, n)
    return PiecewiseConstantField(make_grid(box, n), values, kind)


# --- study configs --------------------------------------------------------

_TOP_KEYS = {"output", "quadrature", "cases"}
_CASE_KEYS = {
    "name", "theorem", "rho", "phi", "omega", "eps", "n", "box", "outer_box",
    "resolution", "quadrature", "norms", "constant_overrides",
}
_QUAD_KEYS = {"points", "panels", "rel_tol", "max_panels"}
_DEFAULT_QUAD = {"points": 8, "panels": 1, "rel_tol": 1e-12, "max_panels": 256}


@dataclass
class StudyConfig:
    """Validated config with defaults filled in; ``cases`` are plain dicts."""

    cases: list
    output: str | None = None
    base_dir: str = field(default=".", compare=False)

    def build_cases(self) -> list[StudyCase]:
        return [_build_case(c, self.base_dir) for c in self.cases]

    def to_document(self) -> dict:
        doc = {}
        if self.output is not None:
            doc["output"] = self.output
        doc["cases"] = copy.deepcopy(self.cases)
        return doc


def _reject_unknown(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(mapping).__name__}")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(sorted(map(str, unknown)))}")


def _number(value, where, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or (positive and value <= 0):
        raise ConfigError(f"{where} must be {'a positive' if positive else 'a finite'} number, got {value!r}")
    return value


def _box_list(value, where):
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise ConfigError(f"{where} must be a list of 4 numbers")
    nums = [_number(v, where) for v in value]
    try:
        BoxDomain(*nums)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return nums


def _normalize_quad(spec, base, where):
    spec = {} if spec is None else spec
    _reject_unknown(spec, _QUAD_KEYS, where)
    out = dict(base)
    out.update(spec)
    try:
        QuadratureSpec(**out)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    out["rel_tol"] = float(out["rel_tol"])
    return out


def _normalize_field(spec, where, base_dir):
    if not isinstance(spec, dict):
        raise ConfigError(f"{where} must be a mapping with 'builtin' or 'file'")
    if ("builtin" in spec) == ("file" in spec):
        raise ConfigError(f"{where} needs exactly one of 'builtin' or 'file'")
    if "file" in spec:
        _reject_unknown(spec, {"file"}, where)
        path = Path(base_dir, spec["file"])
        if not path.is_file():
            raise ConfigError(f"{where}: field file not found: {path}")
        return dict(spec)
    name = spec["builtin"]
    if name not in BUILTINS:
        raise ConfigError(f"{where}: unknown field {name!r}; builtins are {', '.join(sorted(BUILTINS))}")
    params = {k: v for k, v in spec.items() if k != "builtin"}
    try:
        make_builtin(name, **params)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return dict(spec)


def _make_field(spec, base_dir) -> ScalarField:
    if "file" in spec:
        return read_field_file(Path(base_dir, spec["file"]))
    params = {k: v for k, v in spec.items() if k != "builtin"}
    return make_builtin(spec["builtin"], **params)


def _normalize_case(raw, k, top_quad, base_dir):
    where = f"cases[{k}]"
    _reject_unknown(raw, _CASE_KEYS, where)
    for key in ("name", "theorem", "rho", "phi"):
        if key not in raw:
            raise ConfigError(f"{where}: missing required key {key!r}")
    case = {"name": str(raw["name"]), "theorem": raw["theorem"]}
    theorem = raw["theorem"]
    if theorem not in THEOREMS:
        raise ConfigError(f"{where}: unknown theorem {theorem!r}; expected one of {', '.join(THEOREMS)}")
    for role in ("rho", "phi", "omega"):
        if role in raw:
            case[role] = _normalize_field(raw[role], f"{where}.{role}", base_dir)

    n = raw.get("n", list(DEFAULT_N_VALUES))
    if isinstance(n, str):
        try:
            n = [int(t) for t in n.split(",") if t.strip()]
        except ValueError:
            raise ConfigError(f"{where}.n: not a list of integers: {raw['n']!r}") from None
    if not isinstance(n, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in n):
        raise ConfigError(f"{where}.n must be a list of integers")
    if not n:
        raise ConfigError(f"{where}.n: N list is empty")
    if any(v < 1 for v in n):
        raise ConfigError(f"{where}.n: N values must be positive")
    if any(b <= a for a, b in zip(n, n[1:])):
        raise ConfigError(f"{where}.n: N list must be strictly ascending, got {n}")
    case["n"] = list(n)

    if theorem in TRUNCATED:
        if "eps" not in raw:
            raise ConfigError(f"{where}: {theorem} requires eps")
        case["eps"] = _number(raw["eps"], f"{where}.eps", positive=True)
        if "box" in raw:
            raise ConfigError(f"{where}: {theorem} derives its box from eps; remove 'box'")
    else:
        if "eps" in raw:
            raise ConfigError(f"{where}: {theorem} takes no eps")
        rho = _make_field(case["rho"], base_dir)
        if rho.support_hint is None:
            raise ConfigError(f"{where}: {theorem} requires compact support; {rho.name!r} has none")
        if "box" in raw:
            case["box"] = _box_list(raw["box"], f"{where}.box")
            if not BoxDomain(*case["box"]).contains_box(rho.support_hint):
                raise ConfigError(f"{where}.box does not contain the support of rho")
    if "outer_box" in raw:
        case["outer_box"] = _box_list(raw["outer_box"], f"{where}.outer_box")
    case["resolution"] = _number(raw.get("resolution", 1e-3), f"{where}.resolution", positive=True)
    case["quadrature"] = _normalize_quad(raw.get("quadrature"), top_quad, f"{where}.quadrature")

    norms = raw.get("norms", {})
    _reject_unknown(norms, {"rho", "phi", "omega"}, f"{where}.norms")
    case["norms"] = {}
    for role, entries in norms.items():
        _reject_unknown(entries, set(NORM_NAMES), f"{where}.norms.{role}")
        case["norms"][role] = {
            name: _number(v, f"{where}.norms.{role}.{name}") for name, v in entries.items()
        }
        if any(v < 0 for v in case["norms"][role].values()):
            raise ConfigError(f"{where}.norms.{role}: norms must be >= 0")

    overrides = raw.get("constant_overrides", {})
    allowed = set(CONSTANT_NAMES[(theorem, "density")]) | set(CONSTANT_NAMES[(theorem, "quantity")])
    _reject_unknown(overrides, allowed, f"{where}.constant_overrides")
    case["constant_overrides"] = {
        k: _number(v, f"{where}.constant_overrides.{k}") for k, v in overrides.items()
    }
    return case


def _build_case(case: dict, base_dir) -> StudyCase:
    fields_ = {}
    for role in ("rho", "phi", "omega"):
        if role in case:
            f = _make_field(case[role], base_dir)
            if case["norms"].get(role):
                f = f.with_norms(f.norm_data.with_overrides(**case["norms"][role]))
            fields_[role] = f
    return StudyCase(
        name=case["name"],
        theorem_id=case["theorem"],
        rho=fields_["rho"],
        phi=fields_["phi"],
        omega=fields_.get("omega"),
        eps=case.get("eps"),
        n_values=tuple(case["n"]),
        quad=QuadratureSpec(**case["quadrature"]),
        resolution=case["resolution"],
        outer_box=BoxDomain(*case["outer_box"]) if "outer_box" in case else None,
        box=BoxDomain(*case["box"]) if "box" in case else None,
        constant_overrides=dict(case["constant_overrides"]),
    )


def load_study_config(text: str, base_dir=".") -> StudyConfig:
    """Parse and validate a YAML study config."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    _reject_unknown(doc, _TOP_KEYS, "config")
    if "cases" not in doc or not isinstance(doc["cases"], list) or not doc["cases"]:
        raise ConfigError("config needs a non-empty 'cases' list")
    top_quad = _normalize_quad(doc.get("quadrature"), _DEFAULT_QUAD, "quadrature")
    cases = [_normalize_case(raw, k, top_quad, base_dir) for k, raw in enumerate(doc["cases"])]
    names = [c["name"] for c in cases]
    if len(set(names)) != len(names):
        raise ConfigError("case names must be unique")
    output = doc.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output must be a path string")
    return StudyConfig(cases, output, str(base_dir))


def dump_study_config(config: StudyConfig) -> str:
    return yaml.safe_dump(config.to_document(), sort_keys=False)


def parse_study_config(text: str, base_dir=".") -> list[StudyCase]:
    return load_study_config(text, base_dir).build_cases()


# --- CSV reports ----------------------------------------------------------


def _constants_cell(records):
    if not records:
        return ""
    return ";".join(f"{k}={fmt(v)}" for k, v in records[-1].report.constant_values.items())


def write_study_csv(stream, results) -> None:
    """Write CSV rows for a list of :class:`~particle_approx.harness.StudyResult`."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for res in results:
        case = res.case
        L = res.truncation.L if res.truncation is not None else None
        dens = {r.n: r for r in res.by_variant("density")}
        quant = {r.n: r for r in res.by_variant("quantity")}
        for n in case.n_values:
            d, q = dens[n], quant.get(n)
            writer.writerow([
                case.name, case.theorem_id, n, fmt(L), fmt(case.eps),
                fmt(d.measured_error), fmt(d.bound), fmt(d.ratio),
                fmt(q.measured_error) if q else "", fmt(q.bound) if q else "", fmt(q.ratio) if q else "",
            ])
        writer.writerow([
            case.name, case.theorem_id, "constants", fmt(L), fmt(case.eps),
            "", _constants_cell(res.by_variant("density")), "",
            "", _constants_cell(res.by_variant("quantity")), "",
        ])
