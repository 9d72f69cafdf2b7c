"""Correspondence tables: domains, semicontinuity surrogates,
measurability, inclusion-property verification, the interior-union and
hull-union operators."""

import numpy as np
import pytest
from carasel import (
    AtomSpace,
    CipWitness,
    Corr,
    DomainError,
    GridSpace,
    InfoPartition,
    PointSet,
    canonical_witness,
    cip_verify,
    domain,
    hausdorff_dist,
    k_operator,
    lower_measurable_check,
    lsc_check,
    n_operator,
    scip_verify,
    usc_check,
)
from carasel.setops import ConvexSet, convex_distance

from conftest import jump_problem, line_grid
from instances import random_cip_instance


# ------------------------------------------------------------------ domain

def test_domain_total_and_empty():
    space = AtomSpace(("a", "b"), [1.0, 1.0])
    grid = line_grid(3)
    full = Corr.constant(space, grid, PointSet.of(1, [[0.0]]))
    assert domain(full) == {(t, z) for t in range(2) for z in range(3)}
    empty = Corr.constant(space, grid, PointSet.empty(1))
    assert domain(empty) == frozenset()


def test_domain_jump_table_is_full():
    space, grid, psi = jump_problem()
    assert len(domain(psi)) == 4 * 21


# --------------------------------------------------------- semicontinuity

def test_lsc_fails_on_jump_with_witness_point_one(jump):
    space, grid, psi, _ = jump
    for t in range(4):
        rep = lsc_check(psi, t, eps=0.1)
        assert not rep.ok
        z, z_adj, point = rep.violations[0]
        assert grid.points[z, 0] == pytest.approx(0.0)
        assert point[0] == pytest.approx(1.0)


def test_lsc_constant_ok_any_eps():
    space = AtomSpace(("a",), [1.0])
    grid = line_grid(5)
    psi = Corr.constant(space, grid, PointSet.of(1, [[0.3], [0.7]]))
    assert lsc_check(psi, 0, eps=1e-6).ok


def test_lsc_growing_interval_ok_at_double_mesh():
    space = AtomSpace(("a",), [1.0])
    grid = line_grid(11)
    psi = Corr.from_function(
        space, grid, 1,
        lambda t, z: PointSet.of(1, [[0.0], [grid.points[z, 0]]]),
    )
    assert lsc_check(psi, 0, eps=2 * grid.mesh + 1e-12).ok


def test_usc_jump_table_ok():
    space, grid, psi = jump_problem()
    for t in range(4):
        assert usc_check(psi, t, eps=0.1).ok


def test_usc_constant_ok():
    space = AtomSpace(("a",), [1.0])
    grid = line_grid(5)
    psi = Corr.constant(space, grid, PointSet.of(1, [[0.25]]))
    assert usc_check(psi, 0, eps=0.01).ok


def test_usc_two_sided_separation_fails():
    space = AtomSpace(("a",), [1.0])
    grid = line_grid(11)
    psi = Corr.from_function(
        space, grid, 1,
        lambda t, z: PointSet.of(1, [[1.0]]) if z == 0 else PointSet.of(1, [[0.0]]),
    )
    assert not usc_check(psi, 0, eps=0.5).ok


# ----------------------------------------------------------- measurability

def test_lower_measurable_finest_always():
    space = AtomSpace(("a", "b"), [1.0, 1.0])
    grid = line_grid(3)
    psi = Corr.from_function(
        space, grid, 1, lambda t, z: PointSet.of(1, [[float(t)]])
    )
    part = InfoPartition.finest(space)
    assert all(lower_measurable_check(psi, part, z) for z in range(3))


def test_lower_measurable_one_cell():
    space = AtomSpace(("a", "b"), [1.0, 1.0])
    grid = line_grid(3)
    part = InfoPartition.trivial(space)
    varying = Corr.from_function(
        space, grid, 1, lambda t, z: PointSet.of(1, [[float(t)]])
    )
    assert not lower_measurable_check(varying, part, 0)
    constant = Corr.constant(space, grid, PointSet.of(1, [[0.5]]))
    assert lower_measurable_check(constant, part, 0)


# ------------------------------------------------------------ verification

def test_cip_jump_shared_witness_ok(jump):
    space, grid, psi, witness = jump
    rep = cip_verify(psi, witness, eps=0.1)
    assert rep.ok
    assert rep.inclusion_residual <= 1e-12


def test_cip_planted_violation_names_node(jump):
    space, grid, psi, _ = jump
    # local value 2.0 at one node is not inside any psi hull there
    bad = Corr.from_function(
        space, grid, 1,
        lambda t, z: PointSet.of(1, [[2.0]]) if (t, z) == (1, 3) else PointSet.of(1, [[0.0]]),
    )
    radii = {(t, z): 2.5 for t in range(4) for z in range(21)}
    witness = CipWitness.shared(grid, bad, radii)
    rep = cip_verify(psi, witness, eps=0.1)
    assert not rep.ok
    assert any(kind == "inclusion" and (t, x) == (1, 3)
               for (kind, t, z, x, _) in rep.failures)


def test_cip_canonical_witness_on_lsc_table():
    space = AtomSpace(("a", "b"), [1.0, 1.0])
    grid = line_grid(11)
    psi = Corr.from_function(
        space, grid, 1,
        lambda t, z: PointSet.of(1, [[0.0], [grid.points[z, 0] / 2], [grid.points[z, 0]]])
        if grid.points[z, 0] > 0 else PointSet.of(1, [[0.0]]),
    )
    rep = cip_verify(psi, canonical_witness(psi), eps=2 * grid.mesh + 1e-9)
    assert rep.ok


def test_cip_strict_flag_checks_whole_grid():
    # sub-mesh balls contain single nodes, so the ball-restricted check
    # sees no pairs; only the whole-grid form catches the jump in F
    space = AtomSpace(("a",), [1.0])
    grid = line_grid(11)
    psi = Corr.from_function(
        space, grid, 1,
        lambda t, z: PointSet.of(1, [[0.0], [0.9]]) if z == 10 else PointSet.of(1, [[0.0]]),
    )
    f = Corr(space, grid, 1, psi.values)
    radii = {(0, z): 0.05 for z in range(11)}
    witness = CipWitness.shared(grid, f, radii)
    lenient = cip_verify(psi, witness, eps=0.05)
    strict = cip_verify(psi, witness, eps=0.05, strict=True)
    assert lenient.ok
    assert not strict.ok
    assert any(kind == "lsc" for (kind, *_rest) in strict.failures)


def test_scip_shared_mode_jump(jump):
    space, grid, psi, witness = jump
    part = InfoPartition.trivial(space)
    rep = scip_verify(psi, witness, part, eps=0.1)
    assert rep.ok and rep.mode == "shared"


def test_scip_countable_mode_rejects_non_measurable_radii():
    space = AtomSpace(("a", "b"), [1.0, 1.0])
    grid = line_grid(5)
    psi = Corr.constant(space, grid, PointSet.of(1, [[0.0]]))
    f = Corr.constant(space, grid, PointSet.of(1, [[0.0]]))
    part = InfoPartition.trivial(space)
    # radii differ across atoms of one cell: the ball indicator is not
    # cell-constant
    radii = {(t, z): (0.35 if t == 0 else 0.15) for t in range(2) for z in range(5)}
    witness = CipWitness("countable", {z: f for z in range(5)}, radii)
    rep = scip_verify(psi, witness, part, eps=0.5)
    assert not rep.ok
    assert any(kind == "ball-measurability" for (kind, *_unused) in rep.failures)


def test_scip_indexed_mode_moving_point():
    space = AtomSpace(("a",), [1.0])
    grid = line_grid(6)
    psi = Corr.constant(space, grid, PointSet.of(1, [[0.0], [1.0]]))
    locs = {
        zw: Corr.constant(space, grid, PointSet.of(1, [[0.1 + 0.1 * zw]]))
        for zw in range(6)
    }
    radii = {(0, z): 0.45 for z in range(6)}
    witness = CipWitness("indexed", locs, radii, box=([-5.0], [5.0]))
    part = InfoPartition.finest(space)
    rep = scip_verify(psi, witness, part, eps=0.5)
    assert rep.ok
    assert rep.hull_modulus == pytest.approx(0.5, rel=1e-6)  # 0.1 per 0.2 step


def test_scip_requires_cip():
    space, grid, psi = jump_problem()
    bad = Corr.constant(space, grid, PointSet.of(1, [[5.0]]))
    radii = {(t, z): 2.5 for t in range(4) for z in range(21)}
    witness = CipWitness.shared(grid, bad, radii)
    from carasel import PreconditionError

    with pytest.raises(PreconditionError):
        scip_verify(psi, witness, InfoPartition.trivial(space), eps=0.1)


# --------------------------------------------------------------- operators

def test_k_operator_singletons_have_no_interior(jump):
    space, grid, psi, witness = jump
    k = k_operator(psi, witness)
    assert all(k.value(t, z).is_empty for t in range(4) for z in range(21))


def test_k_operator_interval_with_midpoint_everywhere():
    space = AtomSpace(("a",), [1.0])
    grid = line_grid(5)
    interval = PointSet.of(1, [[0.0], [0.5], [1.0]])
    psi = Corr.constant(space, grid, interval)
    witness = canonical_witness(psi)
    k = k_operator(psi, witness)
    assert all(not k.value(0, z).is_empty for z in range(5))
    assert all(np.allclose(k.value(0, z).points, [[0.5]]) for z in range(5))


def test_k_operator_empty_domain():
    space = AtomSpace(("a",), [1.0])
    grid = line_grid(4)
    psi = Corr.constant(space, grid, PointSet.empty(1))
    witness = CipWitness.shared(grid, psi, {})
    k = k_operator(psi, witness)
    assert all(k.value(0, z).is_empty for z in range(4))


def test_k_operator_values_inside_hull_of_psi():
    rng = np.random.default_rng(7)
    for _ in range(10):
        inst = random_cip_instance(rng)
        k = k_operator(inst.psi, inst.witness)
        for (t, z) in domain(inst.psi):
            kv = k.value(t, z)
            if kv.is_empty:
                continue
            hull = ConvexSet.from_point_set(inst.psi.value(t, z))
            assert max(convex_distance(p, hull) for p in kv.points) <= 1e-9


def test_n_operator_union_not_hull():
    space = AtomSpace(("a",), [1.0])
    grid = line_grid(2)
    locs = {
        0: Corr.constant(space, grid, PointSet.of(1, [[0.0]])),
        1: Corr.constant(space, grid, PointSet.of(1, [[1.0]])),
    }
    witness = CipWitness("indexed", locs, {(0, 0): 1.0, (0, 1): 1.0},
                         box=([-2.0], [2.0]))
    out = n_operator(0, 0, [0, 1], witness)
    assert sorted(out.points[:, 0]) == [0.0, 1.0]
    single = n_operator(0, 0, [0], witness)
    assert np.allclose(single.points, [[0.0]])
    assert n_operator(0, 0, [], witness).is_empty


def test_n_operator_monotone():
    rng = np.random.default_rng(3)
    space = AtomSpace(("a",), [1.0])
    grid = line_grid(6)
    locs = {
        zw: Corr.constant(space, grid,
                          PointSet.of(2, rng.uniform(0, 1, size=(3, 2))))
        for zw in range(6)
    }
    witness = CipWitness("indexed", locs, {(0, z): 1.0 for z in range(6)},
                         box=([-2.0, -2.0], [2.0, 2.0]))
    small = n_operator(0, 0, [1, 3], witness)
    big = n_operator(0, 0, [1, 2, 3], witness)
    for p in small.points:
        assert any(np.allclose(p, q) for q in big.points)


def test_n_operator_hausdorff_continuity_bound():
    # locals move 1-Lipschitz-in-position times `slope`; the pooled union
    # inherits H(N(C), N(C')) <= slope * H(C, C')
    space = AtomSpace(("a",), [1.0])
    grid = line_grid(9)
    slope = 0.7
    locs = {
        zw: Corr.constant(space, grid, PointSet.of(1, [[slope * grid.points[zw, 0]]]))
        for zw in range(9)
    }
    witness = CipWitness("indexed", locs, {(0, z): 1.0 for z in range(9)},
                         box=([-2.0], [2.0]))
    rng = np.random.default_rng(11)
    for _ in range(50):
        c1 = sorted(rng.choice(9, size=rng.integers(1, 5), replace=False).tolist())
        c2 = sorted(rng.choice(9, size=rng.integers(1, 5), replace=False).tolist())
        n1, n2 = n_operator(0, 0, c1, witness), n_operator(0, 0, c2, witness)
        hc = hausdorff_dist(PointSet.of(1, grid.points[c1]),
                            PointSet.of(1, grid.points[c2]))
        assert hausdorff_dist(n1, n2) <= slope * hc + 1e-9


# -------------------------------------------------------------- grid space

def test_grid_metric_validation():
    with pytest.raises(DomainError):
        GridSpace(np.array([[0.0], [1.0]]), metric=np.array([[0.0, 1.0], [2.0, 0.0]]))
    bad_triangle = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
    with pytest.raises(DomainError):
        GridSpace(np.array([[0.0], [1.0], [2.0]]), metric=bad_triangle)


def test_grid_defaults_and_connectivity():
    grid = line_grid(5)
    assert grid.mesh == pytest.approx(0.25)
    assert grid.adjacency_radius == pytest.approx(0.5)
    assert grid.is_connected()
    sparse = GridSpace(np.array([[0.0], [10.0]]), mesh=0.5)
    assert not sparse.is_connected()
