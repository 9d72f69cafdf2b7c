"""Problem-kind dispatch: build inputs, run the verification or solve,
assemble a certificate with every residual embedded."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__, problems
from .corr import cip_verify, domain, scip_verify
from .equilibria import (
    bayes_equilibrium,
    maximal_element,
    random_fixed_point,
    random_nash,
)
from .errors import ParseError, PreconditionError
from .reporting import CheckSet
from .selection import caratheodory_select


@dataclass
class Certificate:
    """The written outcome of a run: status, named checks with residuals,
    tabulated outputs, and provenance."""

    status: str                 # ok | failed | no-certificate
    kind: str
    checks: CheckSet
    outputs: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    warnings: tuple = ()

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "kind": self.kind,
            "checks": [c.as_dict() for c in self.checks],
            "outputs": self.outputs,
            "warnings": list(self.warnings),
            "provenance": self.provenance,
        }


def _provenance(doc: dict, opts: dict) -> dict:
    return {
        "input_sha256": problems.problem_hash(doc),
        "tool": "carasel",
        "version": __version__,
        "seed": int(opts.get("seed", 0)),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _vector(v) -> list:
    return [float(x) for x in np.asarray(v, dtype=float).reshape(-1)]


def _selection_records(space, sel) -> list:
    return [
        {"atom": space.atoms[t], "node": z, "value": _vector(sel.values[(t, z)])}
        for (t, z) in sorted(sel.domain)
    ]


def _resolve_mode(doc: dict, opts: dict, witness) -> str:
    mode = opts.get("mode")
    if mode is None:
        mode = witness.mode if doc.get("witness") not in (None, "canonical") else "atomic"
    if mode not in ("atomic", "shared", "countable", "indexed"):
        raise ParseError(f"unknown mode {mode!r}")
    if mode != "atomic" and mode != witness.mode:
        raise ParseError(f"option mode={mode} conflicts with witness mode={witness.mode}")
    return mode


def _verification_checks(psi, witness, part, mode, opts, checks: CheckSet):
    eps = opts["eps"] if opts["eps"] is not None else psi.grid.adjacency_radius
    strict = bool(opts["strict_cip"])
    rep = cip_verify(psi, witness, eps, tol=opts["inclusion_tol"], strict=strict)
    nonempty = sum(1 for f in rep.failures if f[0] == "nonempty")
    lsc_bad = sum(1 for f in rep.failures if f[0].startswith("lsc"))
    checks.add("cip-local-nonempty", nonempty, 0,
               "local values nonempty on every witness ball")
    checks.add("cip-inclusion", rep.inclusion_residual, opts["inclusion_tol"],
               "local values inside the hull of the original value")
    checks.add("cip-lsc", lsc_bad, 0,
               f"local-hull l.s.c. at eps={eps:g} (max gap {rep.lsc_gap:.3g})")
    if rep.ok and mode != "atomic":
        srep = scip_verify(psi, witness, part, eps,
                           tol=opts["inclusion_tol"], strict=strict)
        checks.add(f"scip-{mode}", len(srep.failures), 0,
                   "strong-variant measurability and mode conditions")
        if mode == "indexed":
            checks.add("scip-hull-modulus", 0.0, 0.0,
                       f"discrete modulus of the local hulls: {srep.hull_modulus:.3g}")
    return rep, eps


def run_cip_check(doc: dict, opts: dict) -> Certificate:
    space = problems.build_space(doc)
    part = problems.build_partition(doc, space)
    grid = problems.build_grid(doc)
    psi = problems.build_correspondence(doc, space, grid)
    witness = problems.build_witness(doc, psi)
    mode = _resolve_mode(doc, opts, witness)
    checks = CheckSet()
    _verification_checks(psi, witness, part, mode, opts, checks)
    status = "ok" if checks.ok else "failed"
    return Certificate(status, "cip-check", checks,
                       outputs={"domain_size": len(domain(psi)), "mode": mode})


def _select_common(doc: dict, opts: dict):
    space = problems.build_space(doc)
    part = problems.build_partition(doc, space)
    grid = problems.build_grid(doc)
    psi = problems.build_correspondence(doc, space, grid)
    witness = problems.build_witness(doc, psi)
    mode = _resolve_mode(doc, opts, witness)
    return space, part, grid, psi, witness, mode


def run_select(doc: dict, opts: dict) -> Certificate:
    space, part, grid, psi, witness, mode = _select_common(doc, opts)
    checks = CheckSet()
    rep, eps = _verification_checks(psi, witness, part, mode, opts, checks)
    if not rep.ok:
        raise PreconditionError("inclusion-property verification failed")
    sel = caratheodory_select(
        psi, witness, part,
        closed_valued=bool(opts["closed_valued"]),
        tol=float(opts["tol"]),
        eps=eps,
        atomic=(mode == "atomic"),
        k_max=int(opts["k_max"]),
        restarts=int(opts["restarts"]),
        seed=int(opts["seed"]),
    )
    checks.extend(sel.checks)
    outputs = {
        "selection": _selection_records(space, sel),
        "modulus": sel.modulus,
        "membership_residual": sel.membership_residual,
    }
    return Certificate("ok" if checks.ok else "failed", "select", checks, outputs)


def run_fixpoint(doc: dict, opts: dict) -> Certificate:
    space, part, grid, psi, witness, mode = _select_common(doc, opts)
    checks = CheckSet()
    rep, eps = _verification_checks(psi, witness, part, mode, opts, checks)
    if not rep.ok:
        raise PreconditionError("inclusion-property verification failed")
    profile = random_fixed_point(
        psi, witness, part,
        tol=float(opts["tol"]),
        damping=float(opts["damping"]),
        max_iter=int(opts["max_iter"]),
        eps=eps,
        seed=int(opts["seed"]),
    )
    checks.extend(profile.checks)
    outputs = {
        "fixed_points": [
            {"atom": space.atoms[t], "value": _vector(v),
             "residual": profile.residuals[t]}
            for t, v in sorted(profile.values.items())
        ],
    }
    return Certificate("ok" if checks.ok else "failed", "fixpoint", checks, outputs)


def _profile_outputs(space, cert) -> dict:
    n_players = max(i for (_, i) in cert.regrets) + 1
    return {
        "profile": [
            {"atom": space.atoms[t], "value": _vector(v),
             "regrets": [cert.regrets[(t, i)] for i in range(n_players)]}
            for t, v in sorted(cert.profile.items())
        ],
        "worst_regret": cert.worst_regret,
    }


def run_nash(doc: dict, opts: dict) -> Certificate:
    game = problems.build_game(doc)
    part = problems.build_partition(doc, game.state_space)
    cert = random_nash(
        game, part, float(opts["eps_eq"]),
        strict_margin=float(opts["strict_margin"]), seed=int(opts["seed"]),
    )
    return Certificate(
        "ok" if cert.checks.ok else "failed", "nash", cert.checks,
        _profile_outputs(game.state_space, cert), warnings=cert.warnings,
    )


def run_bayes(doc: dict, opts: dict) -> Certificate:
    game = problems.build_game(doc)
    bayes = problems.build_bayes(doc, game)
    cert = bayes_equilibrium(
        bayes, float(opts["eps_eq"]),
        strict_margin=float(opts["strict_margin"]), seed=int(opts["seed"]),
    )
    return Certificate(
        "ok" if cert.checks.ok else "failed", "bayes", cert.checks,
        _profile_outputs(game.state_space, cert), warnings=cert.warnings,
    )


def run_maximal(doc: dict, opts: dict) -> Certificate:
    space, part, grid, pref, witness, mode = _select_common(doc, opts)
    result = maximal_element(pref, witness, part, eps_eq=float(opts["eps_eq"]))
    outputs = {
        "maximal": [
            {"atom": space.atoms[t], "node": result.indices[t], "value": _vector(v)}
            for t, v in sorted(result.values.items())
        ],
    }
    return Certificate("ok" if result.checks.ok else "failed", "maximal",
                       result.checks, outputs)


_RUNNERS = {
    "cip-check": run_cip_check,
    "select": run_select,
    "fixpoint": run_fixpoint,
    "nash": run_nash,
    "bayes": run_bayes,
    "maximal": run_maximal,
}


def run_problem(doc: dict, overrides: dict | None = None) -> Certificate:
    """Dispatch a parsed problem to its pipeline and stamp provenance."""
    opts = problems.merge_options(doc, overrides or {})
    cert = _RUNNERS[doc["kind"]](doc, opts)
    cert.provenance = _provenance(doc, opts)
    return cert
