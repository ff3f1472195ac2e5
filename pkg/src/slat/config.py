"""JSON model configs: parsing, validation with path diagnostics, and model construction.

Two kinds of document are accepted. A "euclid" config describes a gridded
model over coordinate subspaces; a "group" config binds lattice elements to
subgroups of a finite abelian group.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .euclid import CouplingSpec, EuclidModel, GridSpec, PotentialSpec
from .fingroup import FinAbGroup, Subgroup
from .semilattice import Semilattice, SemilatticeError

SCHEMA_VERSION = 1
MAX_GROUP_ORDER = 36
MAX_TOTAL_DIM = 400_000
POTENTIAL_PARAMS = {"gaussian-well": ("depth", "width"), "compact-bump": ("radius",),
                    "tabulated": ("samples",)}


class ParseError(Exception):
    """The file could not be read or is not JSON."""


@dataclass
class Diagnostic:
    path: str
    reason: str

    def to_json(self):
        return {"path": self.path, "reason": self.reason}


class ConfigError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(f"{d.path}: {d.reason}" for d in diagnostics))


def load(path) -> tuple[dict, bytes]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    return doc, raw


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _meet_from_rows(rows, diags, path) -> dict | None:
    if not isinstance(rows, list):
        diags.append(Diagnostic(path, "meet must be a list of [a, b, meet] rows"))
        return None
    out = {}
    for i, row in enumerate(rows):
        if not (isinstance(row, list) and len(row) == 3 and all(isinstance(r, str) for r in row)):
            diags.append(Diagnostic(f"{path}[{i}]", "row must be [a, b, meet] with string ids"))
            return None
        out[(row[0], row[1])] = row[2]
    return out


def _check_lattice(sets: dict[str, frozenset], dims: dict[str, int], doc: dict,
                   diags: list) -> Semilattice | None:
    lat = None
    if "meet" in doc:
        table = _meet_from_rows(doc["meet"], diags, "meet")
        if table is None:
            return None
        try:
            lat = Semilattice(dims, table)
        except SemilatticeError as exc:
            diags.append(Diagnostic("meet", str(exc)))
            return None
    try:
        derived = Semilattice.from_sets(sets)
    except SemilatticeError as exc:
        diags.append(Diagnostic("subspaces" if doc.get("kind") == "euclid" else "subgroups", str(exc)))
        return None
    if lat is not None:
        for (a, b), m in lat.meet_table().items():
            if derived.meet(a, b) != m:
                diags.append(Diagnostic("meet", f"meet({a}, {b}) = {m} but the sets intersect in "
                                                f"{derived.meet(a, b)}"))
                return None
    return derived


def validate(doc: dict) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    if doc.get("schema_version") != SCHEMA_VERSION:
        diags.append(Diagnostic("schema_version", f"must be {SCHEMA_VERSION}"))
    kind = doc.get("kind")
    if kind == "euclid":
        _validate_euclid(doc, diags)
    elif kind == "group":
        _validate_group(doc, diags)
    else:
        diags.append(Diagnostic("kind", "must be 'euclid' or 'group'"))
    return diags


def _validate_euclid(doc: dict, diags: list):
    d = doc.get("ambient_dim")
    if not (_is_int(d) and d >= 1):
        diags.append(Diagnostic("ambient_dim", "must be a positive integer"))
        return
    grid = doc.get("grid")
    n = None
    if not isinstance(grid, dict):
        diags.append(Diagnostic("grid", "must be an object with n and half_length"))
    else:
        n = grid.get("n")
        if not (_is_int(n) and n >= 9 and n % 2 == 1):
            diags.append(Diagnostic("grid.n", "must be an odd integer >= 9"))
            n = None
        L = grid.get("half_length")
        if not (_is_num(L) and L > 0):
            diags.append(Diagnostic("grid.half_length", "must be a positive number"))
    if doc.get("scheme", "fd") not in ("fd", "spectral"):
        diags.append(Diagnostic("scheme", "must be 'fd' or 'spectral'"))
    subs = doc.get("subspaces")
    if not isinstance(subs, dict) or not subs:
        diags.append(Diagnostic("subspaces", "must be a nonempty object id -> list of axes"))
        return
    sets = {}
    for k, axes in subs.items():
        p = f"subspaces.{k}"
        if not isinstance(axes, list) or not all(_is_int(a) for a in axes):
            diags.append(Diagnostic(p, "must be a list of axis numbers"))
            continue
        if len(set(axes)) != len(axes):
            diags.append(Diagnostic(p, "repeated axis"))
        bad = [a for a in axes if not 1 <= a <= d]
        if bad:
            diags.append(Diagnostic(p, f"axes {bad} outside 1..{d}"))
            continue
        sets[k] = frozenset(axes)
    if len(sets) != len(subs):
        return
    if frozenset() not in sets.values():
        diags.append(Diagnostic("subspaces", "the zero subspace (empty axis list) must be present"))
    lat = _check_lattice(sets, {k: len(v) for k, v in sets.items()}, doc, diags)
    if n is not None:
        total = sum(n ** len(v) for v in sets.values())
        if total > MAX_TOTAL_DIM:
            diags.append(Diagnostic("grid.n", f"total dimension {total} exceeds {MAX_TOTAL_DIM}"))
    for i, it in enumerate(doc.get("interactions", [])):
        _validate_interaction(it, f"interactions[{i}]", sets, n, diags)
    for i, c in enumerate(doc.get("couplings", [])):
        _validate_coupling(c, f"couplings[{i}]", sets, n, diags)
    del lat


def _validate_interaction(it, p, sets, n, diags):
    if not isinstance(it, dict):
        diags.append(Diagnostic(p, "must be an object"))
        return
    kind = it.get("kind")
    if kind not in POTENTIAL_PARAMS:
        diags.append(Diagnostic(f"{p}.kind", f"must be one of {sorted(POTENTIAL_PARAMS)}"))
        return
    params = it.get("params", {})
    for key in POTENTIAL_PARAMS[kind]:
        if key not in params:
            diags.append(Diagnostic(f"{p}.params.{key}", "missing"))
    for key in ("depth", "width", "radius", "height"):
        if key in params and not _is_num(params[key]):
            diags.append(Diagnostic(f"{p}.params.{key}", "must be a number"))
    if "width" in params and _is_num(params["width"]) and params["width"] <= 0:
        diags.append(Diagnostic(f"{p}.params.width", "must be positive"))
    if "radius" in params and _is_num(params["radius"]) and params["radius"] <= 0:
        diags.append(Diagnostic(f"{p}.params.radius", "must be positive"))
    tgt = it.get("target")
    if not (isinstance(tgt, list) and len(tgt) == 3 and all(isinstance(t, str) for t in tgt)):
        diags.append(Diagnostic(f"{p}.target", "must be [X, Y, Z]"))
        return
    unknown = [t for t in tgt if t not in sets]
    if unknown:
        diags.append(Diagnostic(f"{p}.target", f"unknown elements {unknown}"))
        return
    X, Y, Z = tgt
    if not sets[Z] <= (sets[X] & sets[Y]):
        diags.append(Diagnostic(f"{p}.target", f"{Z} is not contained in the intersection of {X} and {Y}"))
    if X != Y and X > Y:
        diags.append(Diagnostic(f"{p}.target", f"give the pair in sorted order ({Y}, {X}); "
                                               "the adjoint block is generated"))


def _validate_coupling(c, p, sets, n, diags):
    if not isinstance(c, dict):
        diags.append(Diagnostic(p, "must be an object"))
        return
    pair = c.get("pair")
    if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(t, str) for t in pair)):
        diags.append(Diagnostic(f"{p}.pair", "must be [X, Y] with Y inside X"))
        return
    unknown = [t for t in pair if t not in sets]
    if unknown:
        diags.append(Diagnostic(f"{p}.pair", f"unknown elements {unknown}"))
        return
    X, Y = pair
    if not sets[Y] <= sets[X]:
        diags.append(Diagnostic(f"{p}.pair", f"{Y} is not contained in {X}; incomparable pairs carry no field"))
        return
    if X == Y:
        if not _is_num(c.get("constant")):
            diags.append(Diagnostic(f"{p}.constant", "a diagonal coupling needs a numeric constant"))
        return
    k = len(sets[X] - sets[Y])
    if "theta" in c:
        th = c["theta"]
        if not (isinstance(th, list) and all(_is_num(v) for v in th)):
            diags.append(Diagnostic(f"{p}.theta", "must be a list of numbers"))
        elif n is not None and len(th) != n ** k:
            diags.append(Diagnostic(f"{p}.theta", f"needs {n ** k} samples"))
    elif "profile" in c:
        prof = c["profile"]
        if not (isinstance(prof, dict) and prof.get("kind") == "gaussian"
                and _is_num(prof.get("width", 1.0)) and prof.get("width", 1.0) > 0):
            diags.append(Diagnostic(f"{p}.profile", "must be {kind: gaussian, amplitude, width, center}"))
    else:
        diags.append(Diagnostic(p, "needs theta samples or a profile"))


def _validate_group(doc: dict, diags: list):
    orders = doc.get("cyclic_orders")
    if not (isinstance(orders, list) and orders and all(_is_int(o) and o >= 1 for o in orders)):
        diags.append(Diagnostic("cyclic_orders", "must be a nonempty list of positive integers"))
        return
    if math.prod(orders) > MAX_GROUP_ORDER:
        diags.append(Diagnostic("cyclic_orders", f"group order {math.prod(orders)} exceeds {MAX_GROUP_ORDER}"))
        return
    g = FinAbGroup(orders)
    subs = doc.get("subgroups")
    if not isinstance(subs, dict) or not subs:
        diags.append(Diagnostic("subgroups", "must be a nonempty object id -> list of generators"))
        return
    sets = {}
    for k, gens in subs.items():
        p = f"subgroups.{k}"
        if not (isinstance(gens, list) and all(isinstance(v, list) and len(v) == len(orders)
                                                and all(_is_int(c) for c in v) for v in gens)):
            diags.append(Diagnostic(p, f"generators must be lists of {len(orders)} integers"))
            continue
        sets[k] = g.subgroup(gens).members_set
    if len(sets) != len(subs):
        return
    _check_lattice(sets, {k: len(v) for k, v in sets.items()}, doc, diags)
    from .identities import ALL_CHECKS
    checks = doc.get("checks")
    if checks is not None and (not isinstance(checks, list) or any(c not in ALL_CHECKS for c in checks)):
        diags.append(Diagnostic("checks", f"must be a list drawn from {ALL_CHECKS}"))
    sample = doc.get("sample")
    if sample is not None and not (_is_int(sample) and sample >= 1):
        diags.append(Diagnostic("sample", "must be a positive integer"))


# construction


def build_euclid(doc: dict) -> EuclidModel:
    diags = validate(doc)
    if diags:
        raise ConfigError(diags)
    grid = GridSpec(doc["grid"]["n"], float(doc["grid"]["half_length"]))
    subs = {k: tuple(v) for k, v in doc["subspaces"].items()}
    pots = [PotentialSpec(it["kind"], dict(it.get("params", {})), tuple(it["target"]))
            for it in doc.get("interactions", [])]
    model = EuclidModel(doc["ambient_dim"], grid, subs, doc.get("scheme", "fd"), pots, [])
    coups = []
    for c in doc.get("couplings", []):
        X, Y = c["pair"]
        if X == Y:
            coups.append(CouplingSpec((X, Y), constant=float(c["constant"])))
            continue
        if "theta" in c:
            theta = np.asarray(c["theta"], dtype=float)
        else:
            prof = c["profile"]
            k = len(set(subs[X]) - set(subs[Y]))
            pts = grid.coords(k)
            center = np.broadcast_to(np.asarray(prof.get("center", 0.0), dtype=float), (k,))
            w = float(prof.get("width", 1.0))
            theta = float(prof.get("amplitude", 1.0)) * np.exp(-((pts - center) ** 2).sum(axis=1) / (2 * w * w))
        coups.append(CouplingSpec((X, Y), theta=theta))
    model.couplings = coups
    return model


@dataclass
class GroupModel:
    group: FinAbGroup
    lattice: Semilattice
    binding: dict[str, Subgroup]
    checks: list[str] | None
    sample: int | None
    all_subgroups: bool
    generation: bool
    seed: int


def build_group(doc: dict) -> GroupModel:
    diags = validate(doc)
    if diags:
        raise ConfigError(diags)
    g = FinAbGroup(doc["cyclic_orders"])
    binding = {k: g.subgroup(v) for k, v in doc["subgroups"].items()}
    lat = Semilattice.from_sets({k: v.members_set for k, v in binding.items()})
    return GroupModel(g, lat, binding, doc.get("checks"), doc.get("sample"),
                      bool(doc.get("all_subgroups", False)), bool(doc.get("generation", True)),
                      int(doc.get("seed", 0)))


def refined(doc: dict, n: int | None = None) -> dict:
    """Same euclid config on a finer grid (default 2n - 1, which nests the old points)."""
    out = json.loads(json.dumps(doc))
    old = out["grid"]["n"]
    out["grid"]["n"] = n if n is not None else 2 * old - 1
    for c in out.get("couplings", []):
        if "theta" in c:
            raise ConfigError([Diagnostic("couplings", "tabulated theta cannot be refined; use a profile")])
    for it in out.get("interactions", []):
        if it["kind"] == "tabulated":
            raise ConfigError([Diagnostic("interactions", "tabulated potentials cannot be refined")])
    return out


def dump(doc: Any) -> str:
    """Deterministic JSON text."""
    return json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v
