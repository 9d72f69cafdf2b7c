"""Shared fixtures: the jump-discontinuity correspondence and small
builder helpers used across the suite."""

from __future__ import annotations

import numpy as np
import pytest

from carasel import AtomSpace, CipWitness, Corr, GridSpace, PointSet


def jump_problem():
    """The 1-d jump table: value [0,1] (11 samples) at the node x=0,
    {0} everywhere else; 4 atoms; 21 nodes on [-1, 1]."""
    space = AtomSpace(("t1", "t2", "t3", "t4"), [0.25] * 4)
    grid = GridSpace(np.linspace(-1.0, 1.0, 21).reshape(-1, 1), mesh=0.1)
    seg = PointSet.of(1, np.linspace(0.0, 1.0, 11).reshape(-1, 1))
    zero = PointSet.of(1, [[0.0]])
    psi = Corr.from_function(
        space, grid, 1,
        lambda t, z: seg if abs(grid.points[z, 0]) < 1e-12 else zero,
    )
    return space, grid, psi


def jump_witness(space, grid):
    """Shared constant witness {0} with balls covering the whole grid."""
    zero = PointSet.of(1, [[0.0]])
    f = Corr.constant(space, grid, zero)
    radii = {(t, z): 2.5 for t in range(len(space)) for z in range(len(grid))}
    return CipWitness.shared(grid, f, radii)


@pytest.fixture
def jump():
    space, grid, psi = jump_problem()
    return space, grid, psi, jump_witness(space, grid)


def line_grid(n: int, lo: float = 0.0, hi: float = 1.0) -> GridSpace:
    return GridSpace(np.linspace(lo, hi, n).reshape(-1, 1))


def single_atom() -> AtomSpace:
    return AtomSpace(("w",), [1.0])
