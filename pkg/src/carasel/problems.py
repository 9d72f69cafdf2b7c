"""Problem-file parsing, validation and canonical serialization.

Problems are UTF-8 JSON documents.  Vectors are number arrays;
correspondence tables are lists of {atom, node, vertices[]} records where
an empty vertex array (or an absent record) means the empty value.
Canonical serialization sorts keys and fixes separators, so
serialize(parse(file)) is idempotent byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .corr import CipWitness, Corr, GridSpace, canonical_witness, domain
from .equilibria import BayesSpec, GameSpec
from .errors import DomainError, ParseError
from .measure import AtomSpace, InfoPartition, Prior
from .setops import PointSet

KINDS = ("cip-check", "select", "fixpoint", "nash", "bayes", "maximal")

OPTION_DEFAULTS = {
    "tol": 1e-7,
    "inclusion_tol": 1e-9,
    "eps": None,            # default: grid adjacency radius
    "eps_eq": 1e-6,
    "seed": 0,
    "mode": None,           # default: the witness's own mode
    "strict_cip": False,
    "closed_valued": False,
    "k_max": 40,
    "restarts": 8,
    "strict_margin": 0.0,
    "damping": 0.5,
    "max_iter": 500,
}


def parse_problem(text: str) -> dict:
    """Parse and shape-validate a problem document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno) from e
    if not isinstance(doc, dict):
        raise ParseError("the problem document must be a JSON object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ParseError(f"kind must be one of {KINDS}, got {kind!r}")
    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise ParseError("options must be an object")
    for key in ("tol", "inclusion_tol", "eps", "eps_eq"):
        if key in options and options[key] is not None and not (
            isinstance(options[key], (int, float)) and options[key] > 0
        ):
            raise ParseError(f"option {key} must be strictly positive")
    if "space" not in doc:
        raise ParseError("a space section is required")
    if kind in ("nash", "bayes"):
        if "game" not in doc:
            raise ParseError(f"kind={kind} requires a game section")
    else:
        for section in ("grid", "correspondence"):
            if section not in doc:
                raise ParseError(f"kind={kind} requires a {section} section")
    if kind == "bayes" and "priors" not in doc:
        raise ParseError("kind=bayes requires a priors section")
    return doc


def load_problem(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ParseError(f"no such file: {p}")
    return parse_problem(p.read_text(encoding="utf-8"))


def canonical_json(doc) -> str:
    """Canonical serialization: sorted keys, fixed separators, trailing
    newline."""
    return json.dumps(doc, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


def problem_hash(doc: dict) -> str:
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()


def merge_options(doc: dict, overrides: dict) -> dict:
    opts = dict(OPTION_DEFAULTS)
    opts.update(doc.get("options", {}))
    for key, value in overrides.items():
        opts[key] = value
    return opts


def _wrap(fn):
    """Build-stage errors are file-consistency errors: report as parse
    failures with the offending detail."""
    def inner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ParseError:
            raise
        except (DomainError, KeyError, TypeError, ValueError, IndexError) as e:
            raise ParseError(f"invalid problem payload: {e}") from e
    return inner


@_wrap
def build_space(doc: dict) -> AtomSpace:
    sec = doc["space"]
    return AtomSpace(tuple(sec["atoms"]), sec["weights"])


@_wrap
def build_partition(doc: dict, space: AtomSpace) -> InfoPartition:
    sec = doc.get("partition")
    if sec is None:
        return InfoPartition.finest(space)
    cells = tuple(tuple(space.index_of(a) for a in cell) for cell in sec)
    return InfoPartition(space, cells)


@_wrap
def build_grid(doc: dict, section: dict | None = None) -> GridSpace:
    sec = doc["grid"] if section is None else section
    pts = np.asarray(sec["points"], dtype=float)
    metric = np.asarray(sec["metric"], dtype=float) if "metric" in sec else None
    return GridSpace(pts, metric=metric, mesh=sec.get("mesh"),
                     adjacency_radius=sec.get("adjacency_radius"))


def _records_to_corr(records, space: AtomSpace, grid: GridSpace, dim: int) -> Corr:
    table: dict[tuple[int, int], PointSet] = {}
    for rec in records:
        t = space.index_of(rec["atom"])
        z = int(rec["node"])
        if not 0 <= z < len(grid):
            raise ParseError(f"node index {z} out of range")
        verts = rec.get("vertices", [])
        ps = PointSet.of(dim, np.asarray(verts, dtype=float).reshape(-1, dim)) \
            if verts else PointSet.empty(dim)
        table[(t, z)] = ps
    empty = PointSet.empty(dim)
    return Corr.from_function(space, grid, dim,
                              lambda t, z: table.get((t, z), empty))


@_wrap
def build_correspondence(doc: dict, space: AtomSpace, grid: GridSpace,
                         key: str = "correspondence") -> Corr:
    dim = int(doc.get("dim", grid.dim))
    return _records_to_corr(doc[key], space, grid, dim)


@_wrap
def build_witness(doc: dict, psi: Corr) -> CipWitness:
    sec = doc.get("witness", "canonical")
    if sec == "canonical":
        return canonical_witness(psi)
    mode = sec.get("mode", "shared")
    dim = psi.dim
    locals_sec = sec.get("locals", {})
    locs: dict[int, Corr] = {}
    if "shared" in locals_sec:
        f = _records_to_corr(locals_sec["shared"], psi.space, psi.grid, dim)
        locs = {z: f for z in range(len(psi.grid))}
    else:
        default = None
        if "default" in locals_sec:
            default = _records_to_corr(locals_sec["default"], psi.space, psi.grid, dim)
        for key, records in locals_sec.items():
            if key == "default":
                continue
            locs[int(key)] = _records_to_corr(records, psi.space, psi.grid, dim)
        for z in range(len(psi.grid)):
            if z not in locs:
                if default is None:
                    raise ParseError(f"witness locals missing node {z} and no default")
                locs[z] = default
    radii_sec = sec.get("radii", {})
    radii: dict[tuple[int, int], float] = {}
    default_r = radii_sec.get("default")
    for rec in radii_sec.get("entries", []):
        radii[(psi.space.index_of(rec["atom"]), int(rec["node"]))] = float(rec["r"])
    for (t, z) in domain(psi):
        if (t, z) not in radii:
            if default_r is None:
                raise ParseError(f"witness radius missing at atom {t}, node {z}")
            radii[(t, z)] = float(default_r)
    box = None
    if "box" in sec:
        box = (np.asarray(sec["box"]["lo"], dtype=float),
               np.asarray(sec["box"]["hi"], dtype=float))
    return CipWitness(mode, locs, radii, box)


def _payoff_from_spec(spec: dict, space: AtomSpace, grids, i: int, own_slice):
    form = spec.get("form")
    if form == "quad_own":
        weight = float(spec.get("weight", 1.0))
        centers = {
            space.index_of(label): np.asarray(vec, dtype=float).reshape(-1)
            for label, vec in spec["center"].items()
        }
        if len(centers) != len(space):
            raise ParseError("quad_own payoff needs a center per atom")

        def u(t, x, _w=weight, _c=centers, _sl=own_slice):
            d = np.asarray(x, dtype=float)[_sl] - _c[int(t)]
            return -_w * float(d @ d)

        return u
    if form == "table":
        shapes = tuple(len(g) for g in grids)
        values = {
            space.index_of(label): np.asarray(v, dtype=float).reshape(-1)
            for label, v in spec["values"].items()
        }
        n_joint = int(np.prod(shapes))
        for t, v in values.items():
            if v.shape[0] != n_joint:
                raise ParseError("table payoff must list one value per joint node")

        def u(t, x, _vals=values, _grids=grids, _shapes=shapes):
            x = np.asarray(x, dtype=float)
            idx, off = [], 0
            for g in _grids:
                block = x[off:off + g.dim]
                dists = np.linalg.norm(g.points - block, axis=1)
                k = int(dists.argmin())
                if dists[k] > 1e-9:
                    raise DomainError("table payoff evaluated off-grid")
                idx.append(k)
                off += g.dim
            return float(_vals[int(t)][int(np.ravel_multi_index(tuple(idx), _shapes))])

        return u
    raise ParseError(f"unknown payoff form {form!r}")


@_wrap
def build_game(doc: dict) -> GameSpec:
    sec = doc["game"]
    space = build_space(doc)
    grids = tuple(build_grid(doc, g) for g in sec["grids"])
    players = tuple(sec["players"])
    offsets, off = [], 0
    for g in grids:
        offsets.append(slice(off, off + g.dim))
        off += g.dim
    payoffs = tuple(
        _payoff_from_spec(spec, space, grids, i, offsets[i])
        for i, spec in enumerate(sec["payoffs"])
    )
    concave = tuple(bool(c) for c in sec.get("concave", [True] * len(players)))
    return GameSpec(players, space, grids, payoffs, concave)


@_wrap
def build_bayes(doc: dict, game: GameSpec) -> BayesSpec:
    part = build_partition(doc, game.state_space)
    priors = []
    for spec in doc["priors"]:
        if spec.get("uniform"):
            priors.append(Prior.uniform(game.state_space))
        else:
            priors.append(Prior(game.state_space, spec["density"]))
    return BayesSpec(game, part, tuple(priors))
