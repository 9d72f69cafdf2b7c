"""Finite atomic measure spaces, information partitions and priors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError

PRIOR_NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class AtomSpace:
    """A finite list of atoms with strictly positive weights."""

    atoms: tuple
    weights: np.ndarray

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise DomainError("an AtomSpace needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise DomainError("atom labels must be unique")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != len(atoms):
            raise DomainError("one weight per atom is required")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DomainError("atom weights must be finite and strictly positive")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def index_of(self, label) -> int:
        try:
            return self.atoms.index(label)
        except ValueError:
            raise DomainError(f"unknown atom label {label!r}") from None


@dataclass(frozen=True)
class InfoPartition:
    """Disjoint nonempty cells of atom indices covering the whole space."""

    space: AtomSpace
    cells: tuple

    def __post_init__(self):
        cells = tuple(tuple(sorted(int(i) for i in cell)) for cell in self.cells)
        seen: set[int] = set()
        for cell in cells:
            if not cell:
                raise DomainError("partition cells must be nonempty")
            for i in cell:
                if i < 0 or i >= len(self.space):
                    raise DomainError(f"atom index {i} out of range")
                if i in seen:
                    raise DomainError(f"atom index {i} appears in two cells")
                seen.add(i)
        if len(seen) != len(self.space):
            raise DomainError("partition cells must cover every atom")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def finest(cls, space: AtomSpace) -> "InfoPartition":
        return cls(space, tuple((i,) for i in range(len(space))))

    @classmethod
    def trivial(cls, space: AtomSpace) -> "InfoPartition":
        return cls(space, (tuple(range(len(space))),))

    def cell_of(self, atom_index: int) -> tuple:
        for cell in self.cells:
            if atom_index in cell:
                return cell
        raise DomainError(f"atom index {atom_index} out of range")

    def cell_id(self, atom_index: int) -> int:
        for k, cell in enumerate(self.cells):
            if atom_index in cell:
                return k
        raise DomainError(f"atom index {atom_index} out of range")

    @property
    def is_finest(self) -> bool:
        return all(len(cell) == 1 for cell in self.cells)


@dataclass(frozen=True)
class Prior:
    """Strictly positive density q with integral q d(mu) = 1."""

    space: AtomSpace
    density: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.density, dtype=float).reshape(-1)
        if q.shape[0] != len(self.space):
            raise DomainError("one density value per atom is required")
        if not np.all(np.isfinite(q)) or np.any(q <= 0):
            raise DomainError("prior density must be finite and strictly positive")
        mass = float(q @ self.space.weights)
        if abs(mass - 1.0) > PRIOR_NORMALIZATION_TOL:
            raise DomainError(f"prior density integrates to {mass}, not 1")
        q = q.copy()
        q.flags.writeable = False
        object.__setattr__(self, "density", q)

    @classmethod
    def uniform(cls, space: AtomSpace) -> "Prior":
        return cls(space, np.full(len(space), 1.0 / space.total))


def integrate(space: AtomSpace, f) -> float:
    """Sum of f over atoms weighted by the atom measures.  f may be a
    callable on atom labels or a per-atom sequence of values."""
    if callable(f):
        vals = np.array([float(f(a)) for a in space.atoms])
    else:
        vals = np.asarray(f, dtype=float).reshape(-1)
        if vals.shape[0] != len(space):
            raise DomainError("f must provide one value per atom")
    return float(vals @ space.weights)


def conditional_density(prior: Prior, part: InfoPartition, omega: int) -> np.ndarray:
    """Per-atom conditional density given the partition cell of atom
    omega: zero off the cell, q(t) / integral of q over the cell on it.
    Integrates to 1 over the cell; depends on omega only through its cell.
    """
    if part.space is not prior.space and part.space != prior.space:
        raise DomainError("prior and partition must share one atom space")
    cell = part.cell_of(int(omega))
    idx = np.array(cell, dtype=int)
    cell_mass = float(prior.density[idx] @ prior.space.weights[idx])
    if cell_mass <= 0:
        raise PreconditionError("the conditioning cell has zero prior mass")
    out = np.zeros(len(prior.space))
    out[idx] = prior.density[idx] / cell_mass
    out.flags.writeable = False
    return out
