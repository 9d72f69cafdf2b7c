"""Tabulated correspondences on (atom space) x (metric grid).

A correspondence assigns a possibly-empty point set in R^n to every
(atom, grid node) pair.  This module carries the discrete surrogates of
lower/upper semicontinuity and lower measurability, the verification of
the continuous inclusion property and its strong variants, and the
operator collecting interiors of the local inclusion witnesses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError
from .measure import AtomSpace, InfoPartition
from .setops import (
    ConvexSet,
    PointSet,
    _cross_dists,
    convex_distance,
    dist_to_point_set,
    interior_point_margin,
)

SET_EQUALITY_TOL = 1e-9
METRIC_TOL = 1e-9
ADJ_TOL = 1e-12


@dataclass(frozen=True)
class GridSpace:
    """A finite net of points in R^m with an explicit metric.

    mesh is the claimed covering radius of the net; adjacency_radius
    bounds which node pairs count as neighbors for the discrete
    semicontinuity checks (default twice the mesh).
    """

    points: np.ndarray
    metric: np.ndarray = None
    mesh: float = None
    adjacency_radius: float = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or len(pts) == 0:
            raise DomainError("grid points must form a nonempty 2-d array")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

        user_metric = self.metric is not None
        if user_metric:
            d = np.asarray(self.metric, dtype=float)
            if d.shape != (len(pts), len(pts)):
                raise DomainError("metric must be a square pairwise-distance matrix")
            _validate_metric(d)
        else:
            d = _cross_dists(pts, pts)
        d = d.copy()
        d.flags.writeable = False
        object.__setattr__(self, "metric", d)

        mesh = self.mesh
        if mesh is None:
            if len(pts) == 1:
                mesh = 1.0
            else:
                off = d + np.diag(np.full(len(pts), np.inf))
                mesh = float(off.min(axis=1).max())  # max nearest-neighbor gap
        if mesh <= 0:
            raise DomainError("mesh must be positive")
        object.__setattr__(self, "mesh", float(mesh))

        radius = self.adjacency_radius
        if radius is None:
            radius = 2.0 * mesh
        if radius <= 0:
            raise DomainError("adjacency_radius must be positive")
        object.__setattr__(self, "adjacency_radius", float(radius))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def diameter(self) -> float:
        return float(self.metric.max())

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        """Unordered node pairs (i < j) within the adjacency radius."""
        cached = self.__dict__.get("_pairs")
        if cached is None:
            i, j = np.nonzero(self.metric <= self.adjacency_radius + ADJ_TOL)
            cached = [(int(a), int(b)) for a, b in zip(i, j) if a < b]
            object.__setattr__(self, "_pairs", cached)
        return cached

    def directed_pair_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Index arrays (sources, targets) listing every adjacent pair in
        both directions; the first half is (i, j) with i < j."""
        cached = self.__dict__.get("_pair_arrays")
        if cached is None:
            pairs = self.adjacent_pairs()
            pi = np.array([i for (i, j) in pairs] + [j for (i, j) in pairs], dtype=int)
            pj = np.array([j for (i, j) in pairs] + [i for (i, j) in pairs], dtype=int)
            cached = (pi, pj)
            object.__setattr__(self, "_pair_arrays", cached)
        return cached

    def neighbors(self, i: int) -> list[int]:
        row = self.metric[i]
        return [int(j) for j in np.nonzero(row <= self.adjacency_radius + ADJ_TOL)[0] if j != i]

    def is_connected(self) -> bool:
        """Connectivity of the adjacency graph (informative; a grid that
        discretizes a connected space should be connected)."""
        n = len(self)
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in self.neighbors(i):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == n


def _validate_metric(d: np.ndarray) -> None:
    if not np.all(np.isfinite(d)):
        raise DomainError("metric entries must be finite")
    if np.abs(np.diag(d)).max(initial=0.0) > METRIC_TOL:
        raise DomainError("metric diagonal must be zero")
    if np.abs(d - d.T).max() > METRIC_TOL:
        raise DomainError("metric must be symmetric")
    if d.min() < -METRIC_TOL:
        raise DomainError("metric entries must be nonnegative")
    n = len(d)
    for k in range(n):
        # d(i,j) <= d(i,k) + d(k,j) for all i, j
        if (d - (d[:, k:k + 1] + d[k:k + 1, :])).max() > METRIC_TOL:
            raise DomainError("metric violates the triangle inequality")


@dataclass(frozen=True)
class Corr:
    """Correspondence table: (atom index, node index) -> PointSet."""

    space: AtomSpace
    grid: GridSpace
    dim: int
    values: tuple  # tuple (per atom) of tuples (per node) of PointSet

    def __post_init__(self):
        rows = []
        for t in range(len(self.space)):
            row = tuple(self.values[t])
            if len(row) != len(self.grid):
                raise DomainError("each atom row must cover every grid node")
            for ps in row:
                if not isinstance(ps, PointSet) or ps.dim != self.dim:
                    raise DomainError("all values must be PointSets of the common dim")
            rows.append(row)
        if len(self.values) != len(self.space):
            raise DomainError("one row of values per atom is required")
        object.__setattr__(self, "values", tuple(rows))

    @classmethod
    def from_function(cls, space: AtomSpace, grid: GridSpace, dim: int, fn) -> "Corr":
        """Tabulate fn(atom_index, node_index) -> PointSet."""
        rows = tuple(
            tuple(fn(t, z) for z in range(len(grid))) for t in range(len(space))
        )
        return cls(space, grid, dim, rows)

    @classmethod
    def constant(cls, space: AtomSpace, grid: GridSpace, value: PointSet) -> "Corr":
        return cls.from_function(space, grid, value.dim, lambda t, z: value)

    def value(self, t: int, z: int) -> PointSet:
        return self.values[t][z]

    def directed_gaps(self, t: int) -> np.ndarray:
        """Per-directed-adjacent-pair one-sided gaps of the atom-t row:
        entry k is the farthest any point of the value at source k must
        travel to reach the value at target k; NaN when either side is
        empty.  Cached (the table is immutable)."""
        cache = self.__dict__.setdefault("_gap_cache", {})
        if t not in cache:
            pi, pj = self.grid.directed_pair_arrays()
            half = len(pi) // 2
            out = np.full(len(pi), np.nan)
            row = self.values[t]
            for k in range(half):
                a, b = row[pi[k]], row[pj[k]]
                if a.is_empty or b.is_empty:
                    continue
                if a is b:
                    out[k] = out[k + half] = 0.0
                    continue
                d = _cross_dists(a.points, b.points)
                out[k] = d.min(axis=1).max()
                out[k + half] = d.min(axis=0).max()
            cache[t] = out
        return cache[t]

    def nonempty_at(self, t: int, z: int) -> bool:
        return not self.values[t][z].is_empty

    def t_section(self, t: int) -> list[int]:
        """Nodes where atom t has a nonempty value."""
        return [z for z in range(len(self.grid)) if self.nonempty_at(t, z)]

    def x_section(self, z: int) -> list[int]:
        """Atoms where node z has a nonempty value."""
        return [t for t in range(len(self.space)) if self.nonempty_at(t, z)]


def domain(psi: Corr) -> frozenset:
    """U = {(t, z) : value nonempty}."""
    return frozenset(
        (t, z)
        for t in range(len(psi.space))
        for z in range(len(psi.grid))
        if psi.nonempty_at(t, z)
    )


@dataclass
class SemicontinuityReport:
    """Outcome of a discrete semicontinuity check over adjacent pairs.

    max_gap is the largest point-to-neighbor-set distance the check had
    to absorb; the check passes at any eps strictly above it.
    """

    ok: bool
    violations: list = field(default_factory=list)  # (z, z_adj, witness point)
    max_gap: float = 0.0


def _lost_point(a: PointSet, b: PointSet) -> np.ndarray:
    d = _cross_dists(a.points, b.points).min(axis=1)
    return a.points[int(d.argmax())]


def lsc_check(
    psi: Corr,
    t: int,
    eps: float,
    nodes: set | None = None,
) -> SemicontinuityReport:
    """Discrete lower-semicontinuity surrogate for psi(t, .): for every
    ordered adjacent pair (z, z') with both values nonempty, every point
    of the value at z must lie within eps of the value at z' (no value
    point may vanish when stepping to a neighbor).

    nodes, when given, restricts the pairs to both endpoints inside it.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    pi, pj = psi.grid.directed_pair_arrays()
    gaps = psi.directed_gaps(t)
    mask = ~np.isnan(gaps)
    if nodes is not None and len(pi):
        inside = np.zeros(len(psi.grid), dtype=bool)
        inside[list(nodes)] = True
        mask &= inside[pi] & inside[pj]
    if not mask.any():
        return SemicontinuityReport(True, [], 0.0)
    max_gap = float(gaps[mask].max())
    violations = []
    for k in np.nonzero(mask & (gaps >= eps))[0]:
        z, z_adj = int(pi[k]), int(pj[k])
        violations.append((z, z_adj, _lost_point(psi.value(t, z), psi.value(t, z_adj))))
    return SemicontinuityReport(not violations, violations, max_gap)


def usc_check(psi: Corr, t: int, eps: float) -> SemicontinuityReport:
    """Discrete upper-semicontinuity surrogate for psi(t, .): for every
    unordered adjacent pair with both values nonempty, at least one value
    must collapse into the eps-neighborhood of the other (growth at a
    node is tolerated, mutual separation is not).
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    pi, pj = psi.grid.directed_pair_arrays()
    gaps = psi.directed_gaps(t)
    half = len(pi) // 2
    fwd, bwd = gaps[:half], gaps[half:]
    mask = ~np.isnan(fwd)
    if not mask.any():
        return SemicontinuityReport(True, [], 0.0)
    pair_gap = np.minimum(fwd, bwd)
    max_gap = float(pair_gap[mask].max())
    violations = []
    for k in np.nonzero(mask & (pair_gap >= eps))[0]:
        i, j = int(pi[k]), int(pj[k])
        a, b = psi.value(t, i), psi.value(t, j)
        src, dst = (a, b) if fwd[k] <= bwd[k] else (b, a)
        violations.append((i, j, _lost_point(src, dst)))
    return SemicontinuityReport(not violations, violations, max_gap)


def lower_measurable_check(psi: Corr, part: InfoPartition, z: int) -> bool:
    """Sufficient-condition check for lower measurability of t -> psi(t,z)
    under a finite partition: the value is constant as a set (within
    1e-9) on every cell."""
    for cell in part.cells:
        base = psi.value(cell[0], z)
        for t in cell[1:]:
            if not psi.value(t, z).same_as(base, SET_EQUALITY_TOL):
                return False
    return True


@dataclass(frozen=True)
class CipWitness:
    """Local-inclusion witness family for a correspondence psi.

    locals maps each node index z to the correspondence F_z; radii maps
    each (t, z) in the domain of psi to the radius of the open ball
    around node z inside which F_z must include into psi.  mode selects
    which strong-variant conditions scip_verify tests; box (lo, hi) is
    the compact bounding box required by the indexed mode.
    """

    mode: str
    locals: dict
    radii: dict
    box: tuple | None = None

    def __post_init__(self):
        if self.mode not in ("shared", "countable", "indexed"):
            raise DomainError(f"unknown witness mode {self.mode!r}")
        locs = dict(self.locals)
        if not locs:
            raise DomainError("a witness needs at least one local correspondence")
        if self.mode == "shared":
            first = next(iter(locs.values()))
            if any(f is not first for f in locs.values()):
                raise DomainError("shared mode requires one common local correspondence")
        radii = {}
        for key, r in dict(self.radii).items():
            t, z = int(key[0]), int(key[1])
            r = float(r)
            if r <= 0:
                raise DomainError("witness radii must be positive")
            radii[(t, z)] = r
        box = self.box
        if box is not None:
            lo = np.asarray(box[0], dtype=float).reshape(-1)
            hi = np.asarray(box[1], dtype=float).reshape(-1)
            if lo.shape != hi.shape or np.any(lo > hi):
                raise DomainError("box must be (lo, hi) with lo <= hi")
            box = (lo, hi)
        object.__setattr__(self, "locals", locs)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "box", box)

    @classmethod
    def shared(cls, grid: GridSpace, f: Corr, radii: dict, box=None) -> "CipWitness":
        return cls("shared", {z: f for z in range(len(grid))}, radii, box)

    def local(self, z: int) -> Corr:
        try:
            return self.locals[z]
        except KeyError:
            raise DomainError(f"witness has no local correspondence at node {z}") from None

    def radius(self, t: int, z: int) -> float:
        try:
            return self.radii[(t, z)]
        except KeyError:
            raise DomainError(f"witness has no radius at (t={t}, z={z})") from None

    def distinct_locals(self) -> list:
        """(local, sorted node indices sharing it), grouped by identity;
        shared witnesses collapse to a single group."""
        groups: dict[int, tuple[Corr, list[int]]] = {}
        for z, f in self.locals.items():
            groups.setdefault(id(f), (f, []))[1].append(z)
        return [(f, sorted(zs)) for f, zs in groups.values()]


def capture_matrix(psi: Corr, w: CipWitness, t: int) -> np.ndarray:
    """Boolean matrix M[x, z]: witness node z has a nonempty value of psi
    at atom t and its ball reaches x."""
    n = len(psi.grid)
    radius_row = np.full(n, -np.inf)
    for z in range(n):
        if psi.nonempty_at(t, z):
            radius_row[z] = w.radius(t, z)
    return psi.grid.metric < radius_row[None, :]


def witness_index_set(psi: Corr, w: CipWitness, t: int, x: int) -> list[int]:
    """Nodes z whose ball around z captures x: psi(t,z) nonempty and
    d(x, z) < r(t, z).  Nonempty exactly on the domain of psi."""
    out = []
    for z in range(len(psi.grid)):
        if not psi.nonempty_at(t, z):
            continue
        if psi.grid.metric[x, z] < w.radius(t, z):
            out.append(z)
    return out


def index_table(psi: Corr, w: CipWitness) -> dict:
    """Full tabulation (t, x) -> list of capturing witness nodes."""
    return {
        (t, x): witness_index_set(psi, w, t, x)
        for t in range(len(psi.space))
        for x in range(len(psi.grid))
    }


def canonical_witness(psi: Corr) -> CipWitness:
    """The witness induced by a correspondence that is itself l.s.c.:
    every node shares psi as its local correspondence, and each ball is
    as large as possible while staying inside the nonempty section
    (radius up to the nearest empty node, or past the grid diameter when
    the section is full)."""
    big = psi.grid.diameter + 1.0
    radii = {}
    for t in range(len(psi.space)):
        empty_nodes = [z for z in range(len(psi.grid)) if not psi.nonempty_at(t, z)]
        for z in range(len(psi.grid)):
            if not psi.nonempty_at(t, z):
                continue
            if empty_nodes:
                radii[(t, z)] = float(min(psi.grid.metric[z, e] for e in empty_nodes))
            else:
                radii[(t, z)] = big
    return CipWitness.shared(psi.grid, psi, radii)


@dataclass
class CipReport:
    """Outcome of verifying the continuous inclusion property."""

    ok: bool
    failures: list = field(default_factory=list)  # (kind, t, z, x, detail)
    inclusion_residual: float = 0.0
    lsc_gap: float = 0.0
    eps: float = 0.0


def _local_hull(f: Corr, t: int, x: int) -> ConvexSet:
    return ConvexSet.from_point_set(f.value(t, x))


def _inclusion_residual(points: PointSet, target: PointSet) -> float:
    """Max distance from the points to the convex hull of the target;
    zero fast path when the point arrays coincide or every point appears
    in the target list."""
    if target.is_empty:
        return float("inf")
    if points.points is target.points or np.array_equal(points.points, target.points):
        return 0.0
    hull = ConvexSet.from_point_set(target)
    worst = 0.0
    for p in points.points:
        if dist_to_point_set(p, target) == 0.0:
            continue  # p is literally one of the target samples
        worst = max(worst, convex_distance(p, hull))
    return worst


class _LocalTables:
    """Per-(local, atom) caches shared across witness nodes: emptiness
    and inclusion residual per node; gap tables come from the local's
    own cache."""

    def __init__(self, psi: Corr, f: Corr):
        self.psi = psi
        self.f = f
        self._empty: dict[int, np.ndarray] = {}
        self._residual: dict[int, np.ndarray] = {}
        self.pair_i, self.pair_j = psi.grid.directed_pair_arrays()

    def empty(self, t: int) -> np.ndarray:
        if t not in self._empty:
            self._empty[t] = np.array(
                [self.f.value(t, x).is_empty for x in range(len(self.psi.grid))]
            )
        return self._empty[t]

    def residual(self, t: int) -> np.ndarray:
        if t not in self._residual:
            empty = self.empty(t)
            res = np.zeros(len(self.psi.grid))
            for x in range(len(self.psi.grid)):
                if not empty[x]:
                    res[x] = _inclusion_residual(self.f.value(t, x), self.psi.value(t, x))
            self._residual[t] = res
        return self._residual[t]

    def gaps(self, t: int) -> np.ndarray:
        return self.f.directed_gaps(t)


def cip_verify(
    psi: Corr,
    w: CipWitness,
    eps: float,
    tol: float = SET_EQUALITY_TOL,
    strict: bool = False,
) -> CipReport:
    """Verify the continuous inclusion property of psi under witness w.

    For every (t, z) in the domain and every node x with d(x, z) <
    r(t, z): F_z(t, x) must be nonempty with every point inside the
    convex hull of psi(t, x) within tol.  The convex hulls of F_z(t, .)
    must pass the discrete l.s.c. check at eps inside the ball (on the
    whole grid when strict=True), and on the whole grid for atoms t with
    psi(t, z) empty.
    """
    report = CipReport(True, eps=eps)
    n_nodes = len(psi.grid)
    metric = psi.grid.metric
    for f, zs in w.distinct_locals():
        if f.grid is not psi.grid and len(f.grid) != n_nodes:
            raise DomainError("witness locals must live on psi's grid")
        tables = _LocalTables(psi, f)
        pi, pj = tables.pair_i, tables.pair_j
        for t in range(len(psi.space)):
            gaps = tables.gaps(t)
            finite = ~np.isnan(gaps)
            if finite.any():
                report.lsc_gap = max(report.lsc_gap, float(np.nanmax(gaps)))
            for z in zs:
                if psi.nonempty_at(t, z):
                    in_ball = metric[:, z] < w.radius(t, z)
                    empty = tables.empty(t)
                    for x in np.nonzero(in_ball & empty)[0]:
                        report.failures.append(
                            ("nonempty", t, z, int(x), "local value empty in ball")
                        )
                    usable = in_ball & ~empty
                    if usable.any():
                        res = tables.residual(t)[usable]
                        worst = float(res.max())
                        report.inclusion_residual = max(report.inclusion_residual, worst)
                        if worst > tol:
                            for x in np.nonzero(usable)[0]:
                                r = tables.residual(t)[x]
                                if r > tol:
                                    report.failures.append((
                                        "inclusion", t, z, int(x),
                                        f"local value escapes psi by {r:.3e}",
                                    ))
                    if len(pi):
                        scope = finite if strict else (
                            finite & in_ball[pi] & in_ball[pj]
                        )
                        bad = scope & (gaps >= eps)
                        for k in np.nonzero(bad)[0]:
                            report.failures.append((
                                "lsc", t, z, int(pi[k]),
                                f"value point lost toward node {int(pj[k])}",
                            ))
                else:
                    if len(pi):
                        bad = finite & (gaps >= eps)
                        for k in np.nonzero(bad)[0]:
                            report.failures.append((
                                "lsc-offsection", t, z, int(pi[k]),
                                f"value point lost toward node {int(pj[k])}",
                            ))
    report.ok = not report.failures
    return report


@dataclass
class ScipReport:
    """Outcome of the strong-variant checks, on top of a CipReport."""

    ok: bool
    mode: str
    cip: CipReport
    failures: list = field(default_factory=list)
    hull_modulus: float = 0.0  # indexed mode: discrete modulus of z -> con F_z(t,x)


def _cell_constant_local(f: Corr, part: InfoPartition, z_label: str, failures: list) -> None:
    for x in range(len(f.grid)):
        for cell in part.cells:
            base = f.value(cell[0], x)
            for t in cell[1:]:
                if not f.value(t, x).same_as(base, SET_EQUALITY_TOL):
                    failures.append(
                        ("measurability", t, z_label, x, "local value not cell-constant")
                    )
                    return


def scip_verify(
    psi: Corr,
    w: CipWitness,
    part: InfoPartition,
    eps: float,
    tol: float = SET_EQUALITY_TOL,
    strict: bool = False,
) -> ScipReport:
    """Verify the strong continuous inclusion property: the plain
    verification plus joint lower measurability of the local hulls
    (cell-wise constancy in t) and the mode-specific conditions."""
    cip = cip_verify(psi, w, eps, tol=tol, strict=strict)
    if not cip.ok:
        raise PreconditionError("plain continuous-inclusion verification failed")
    report = ScipReport(True, w.mode, cip)

    seen_ids = set()
    for z, f in sorted(w.locals.items()):
        if id(f) in seen_ids:
            continue
        seen_ids.add(id(f))
        _cell_constant_local(f, part, f"F_{z}", report.failures)

    if w.mode == "shared":
        first = next(iter(w.locals.values()))
        if any(f is not first for f in w.locals.values()):
            report.failures.append(("mode", -1, -1, -1, "locals differ in shared mode"))
    elif w.mode == "countable":
        # finiteness of the tables is automatic; the ball-membership
        # indicator {(t,x): x in O_z^t} must be cell-constant in t
        for z in range(len(psi.grid)):
            for x in range(len(psi.grid)):
                for cell in part.cells:
                    flags = []
                    for t in cell:
                        inside = (
                            psi.nonempty_at(t, z)
                            and psi.grid.metric[x, z] < w.radius(t, z)
                        )
                        flags.append(inside)
                    if len(set(flags)) > 1:
                        report.failures.append(
                            ("ball-measurability", cell[0], z, x, "ball indicator not cell-constant")
                        )
    elif w.mode == "indexed":
        # domain of psi must be cell-constant in t
        for z in range(len(psi.grid)):
            for cell in part.cells:
                flags = {psi.nonempty_at(t, z) for t in cell}
                if len(flags) > 1:
                    report.failures.append(
                        ("domain-measurability", cell[0], z, -1, "nonemptiness not cell-constant")
                    )
        # the capture-index map must have cell-constant (finite) values
        for x in range(len(psi.grid)):
            for cell in part.cells:
                base = witness_index_set(psi, w, cell[0], x)
                for t in cell[1:]:
                    if witness_index_set(psi, w, t, x) != base:
                        report.failures.append(
                            ("index-measurability", t, -1, x, "capture set not cell-constant")
                        )
        if w.box is None:
            report.failures.append(("box", -1, -1, -1, "indexed mode requires a bounding box"))
        else:
            lo, hi = w.box
            worst = 0.0
            for z, f in sorted(w.locals.items()):
                for t in range(len(psi.space)):
                    for x in range(len(psi.grid)):
                        v = f.value(t, x)
                        if v.is_empty:
                            continue
                        over = np.maximum(v.points - hi, 0.0).max(initial=0.0)
                        under = np.maximum(lo - v.points, 0.0).max(initial=0.0)
                        worst = max(worst, float(over), float(under))
            if worst > tol:
                report.failures.append(("box", -1, -1, -1, f"values escape the box by {worst:.3e}"))
        # discrete modulus of z -> local value at fixed (t, x): finite by
        # construction; record the largest ratio over adjacent node pairs
        modulus = 0.0
        pairs = psi.grid.adjacent_pairs()
        for t in range(len(psi.space)):
            for x in range(len(psi.grid)):
                for (i, j) in pairs:
                    a = w.local(i).value(t, x)
                    b = w.local(j).value(t, x)
                    if a.is_empty or b.is_empty:
                        continue
                    d = psi.grid.metric[i, j]
                    if d <= 0:
                        continue
                    gap = max(
                        float(_cross_dists(a.points, b.points).min(axis=1).max()),
                        float(_cross_dists(b.points, a.points).min(axis=1).max()),
                    )
                    modulus = max(modulus, gap / d)
        report.hull_modulus = modulus
    report.ok = not report.failures
    return report


def _interior_samples(fv: PointSet) -> list:
    """Points of the list interior to the list's own hull."""
    if fv.is_empty:
        return []
    hull = ConvexSet.from_point_set(fv)
    return [p for p in fv.points if interior_point_margin(p, hull) > 0.0]


def k_operator(psi: Corr, w: CipWitness) -> Corr:
    """Collect, at every (t, x), the witness sample points interior to
    their own local hull, over all witness nodes whose ball captures x.
    Empty wherever no local value has ambient interior."""
    groups = w.distinct_locals()
    n = len(psi.grid)
    rows = []
    for t in range(len(psi.space)):
        captures = capture_matrix(psi, w, t)
        active = [captures[:, zs].any(axis=1) for (_, zs) in groups]
        interior_cache: list[dict[int, list]] = [{} for _ in groups]
        row = []
        for x in range(n):
            pts = []
            for gi, (f, _) in enumerate(groups):
                if not active[gi][x]:
                    continue
                if x not in interior_cache[gi]:
                    interior_cache[gi][x] = _interior_samples(f.value(t, x))
                pts.extend(interior_cache[gi][x])
            row.append(PointSet.of(psi.dim, np.vstack(pts)) if pts
                       else PointSet.empty(psi.dim))
        rows.append(tuple(row))
    return Corr(psi.space, psi.grid, psi.dim, tuple(rows))


def n_operator(t: int, x: int, c, w: CipWitness) -> PointSet:
    """Union of the (closed) convex hulls of the local values at (t, x)
    over witness nodes z in c, returned as the pooled vertex list (the
    union of V-polytopes, not their joint hull)."""
    members = sorted(int(z) for z in c)
    pts = []
    dim = None
    for z in members:
        fv = w.local(z).value(t, x)
        dim = fv.dim
        if fv.is_empty:
            continue
        pts.append(fv.points)
    if dim is None:
        first = next(iter(w.locals.values()))
        dim = first.dim
    if not pts:
        return PointSet.empty(dim)
    return PointSet.of(dim, np.vstack(pts))
