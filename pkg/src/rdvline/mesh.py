"""Drop-time mesh sweeps, shift-inequality audits, and bracketing reports.

Game values are computed exactly on a regular grid of drop times; the shift
inequalities (delaying a drop by a costs at most a) then bound the optimum
between grid points and exclude drop-time cells that cannot be optimal.
There is no tolerance anywhere: every comparison is exact rational.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
from dataclasses import dataclass
from typing import Optional

from .model import GameInstance, GameKind, ModelError
from .rational import Rat, decimal_string, format_rational, parse_rational, rat
from .solver import solve_fixed_drops


@dataclass(frozen=True)
class Mesh1D:
    kind: GameKind
    distance: Rat
    lo: Rat
    step: Rat
    values: tuple  # values[i] = game value at drop time lo + i*step

    def __post_init__(self):
        if self.step <= 0:
            raise ModelError("mesh step must be positive")
        if not self.values:
            raise ModelError("empty mesh")

    @property
    def hi(self):
        return self.lo + (len(self.values) - 1) * self.step

    def point(self, i: int):
        return self.lo + i * self.step

    def points(self):
        return [self.point(i) for i in range(len(self.values))]


@dataclass(frozen=True)
class Mesh2D:
    kind: GameKind
    distance: Rat
    lo1: Rat
    lo2: Rat
    step: Rat
    values: tuple  # values[i][j] = value at drops (lo1 + i*step, lo2 + j*step)

    def __post_init__(self):
        if self.step <= 0:
            raise ModelError("mesh step must be positive")
        if not self.values or not self.values[0]:
            raise ModelError("empty mesh")
        if len({len(row) for row in self.values}) != 1:
            raise ModelError("ragged mesh")

    @property
    def shape(self):
        return (len(self.values), len(self.values[0]))

    def point(self, i: int, j: int):
        return (self.lo1 + i * self.step, self.lo2 + j * self.step)


def _grid_count(lo, hi, step) -> int:
    span = (rat(hi) - rat(lo)) / rat(step)
    if span < 0 or span.denominator != 1:
        raise ModelError(f"grid range [{lo}, {hi}] is not a whole number of steps of {step}")
    return int(span) + 1


def _solve_cell(args):
    kind_value, distance, drop1, drop2, horizon = args
    inst = GameInstance(GameKind(kind_value), distance, drop1=drop1, drop2=drop2,
                        horizon=horizon)
    return solve_fixed_drops(inst, collect_bundles=False).value


def _solve_many(jobs, workers):
    """Evaluate cells (serially or on a pool); merge is keyed, so the result
    does not depend on worker count or scheduling."""
    if workers and workers > 1 and len(jobs) > 1:
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_solve_cell, [spec for _, spec in jobs], chunksize=8)
        return {key: value for (key, _), value in zip(jobs, results)}
    return {key: _solve_cell(spec) for key, spec in jobs}


def sweep_1d(kind: GameKind = GameKind.ONE_GIFT, distance=16, lo=0, hi=None, step=1,
             workers: int = 0, existing: Optional[dict] = None,
             horizon=None) -> Mesh1D:
    """Exact game values over a regular grid of player II drop times."""
    if kind is not GameKind.ONE_GIFT:
        raise ModelError("1-D sweeps are for the one-gift game")
    distance, lo, step = rat(distance), rat(lo), rat(step)
    hi = rat(hi) if hi is not None else lo
    n = _grid_count(lo, hi, step)
    existing = existing or {}
    jobs = []
    for i in range(n):
        tau = lo + i * step
        if tau not in existing:
            jobs.append((tau, (kind.value, distance, None, tau, horizon)))
    solved = _solve_many(jobs, workers)
    values = tuple(existing.get(lo + i * step, solved.get(lo + i * step))
                   for i in range(n))
    return Mesh1D(kind, distance, lo, step, values)


def sweep_2d(kind: GameKind, distance=16, lo=0, hi=None, step=1,
             lo2=None, hi2=None, workers: int = 0,
             existing: Optional[dict] = None, horizon=None) -> Mesh2D:
    """Exact game values over a grid of drop-time pairs (square by default)."""
    if kind not in (GameKind.TWO_GIFTS_OR, GameKind.TWO_GIFTS_AND):
        raise ModelError("2-D sweeps are for the two-gift games")
    distance, lo1, step = rat(distance), rat(lo), rat(step)
    hi1 = rat(hi) if hi is not None else lo1
    lo2 = rat(lo2) if lo2 is not None else lo1
    hi2 = rat(hi2) if hi2 is not None else hi1
    n1 = _grid_count(lo1, hi1, step)
    n2 = _grid_count(lo2, hi2, step)
    existing = existing or {}
    jobs = []
    for i in range(n1):
        for j in range(n2):
            key = (lo1 + i * step, lo2 + j * step)
            if key not in existing:
                jobs.append((key, (kind.value, distance, key[0], key[1], horizon)))
    solved = _solve_many(jobs, workers)

    def cell(i, j):
        key = (lo1 + i * step, lo2 + j * step)
        return existing.get(key, solved.get(key))

    values = tuple(tuple(cell(i, j) for j in range(n2)) for i in range(n1))
    return Mesh2D(kind, distance, lo1, lo2, step, values)


def lipschitz_audit(mesh) -> list:
    """Check the drop-time shift inequalities on all applicable adjacent
    pairs; the returned list of violations must be empty (they are theorems,
    so a violation indicates a solver bug)."""
    out = []
    a = mesh.step
    if isinstance(mesh, Mesh1D):
        for i in range(len(mesh.values) - 1):
            x0, x1 = mesh.values[i], mesh.values[i + 1]
            if abs(x1 - x0) > a:
                out.append(("1d", mesh.point(i), mesh.point(i + 1), x0, x1))
        return out
    n1, n2 = mesh.shape
    v = mesh.values
    for i in range(n1):
        for j in range(n2):
            l1, l2 = mesh.point(i, j)
            if i + 1 < n1 and l1 >= l2 and v[i + 1][j] - v[i][j] > a:
                out.append(("right", (l1, l2), v[i][j], v[i + 1][j]))
            if j + 1 < n2 and l2 >= l1 and v[i][j + 1] - v[i][j] > a:
                out.append(("up", (l1, l2), v[i][j], v[i][j + 1]))
            if i + 1 < n1 and j + 1 < n2 and v[i + 1][j + 1] - v[i][j] > a:
                out.append(("diag", (l1, l2), v[i][j], v[i + 1][j + 1]))
    return out


@dataclass(frozen=True)
class BracketReport:
    """Optimal-value interval and surviving drop-time cells for one mesh."""

    x_min: Rat
    interval: tuple  # (lower, upper) bound on the optimum over the mesh range
    candidates: tuple  # merged cell-index rectangles (i0, i1, j0, j1), inclusive
    argmin: tuple  # grid points attaining x_min
    alpha: Rat
    axes: tuple  # ((lo1, hi1), (lo2, hi2)); second axis None for 1-D
    cell_count: int
    candidate_count: int


def _merge_runs(indices):
    runs = []
    for i in sorted(indices):
        if runs and runs[-1][1] == i - 1:
            runs[-1][1] = i
        else:
            runs.append([i, i])
    return runs


def bracket_1d(mesh: Mesh1D) -> BracketReport:
    """Value interval [x_min - a, x_min] and the cells that may contain an
    optimal drop time: [d_{i-1}, d_i] survives iff x(d_i) - a <= x_min."""
    a = mesh.step
    vals = mesh.values
    x_min = min(vals)
    argmin = tuple(mesh.point(i) for i, v in enumerate(vals) if v == x_min)
    keep = [i for i in range(1, len(vals)) if vals[i] - a <= x_min]
    rects = tuple((i0, i1, 0, 0) for i0, i1 in _merge_runs(keep))
    return BracketReport(
        x_min=x_min, interval=(x_min - a, x_min), candidates=rects,
        argmin=argmin, alpha=a, axes=((mesh.lo, mesh.hi), None),
        cell_count=max(len(vals) - 1, 0), candidate_count=len(keep))


def bracket_2d(mesh: Mesh2D) -> BracketReport:
    """Value interval [x_min - 2a, x_min] and the two-family candidate cells:
    [d_{i-1},d_i] x [d_{j-1},d_j] survives iff the shifted grid value one step
    beyond its later-drop side is within 2a of x_min.  Cells whose test point
    falls outside the mesh cannot be excluded here; size meshes with a margin
    ring beyond the region of interest."""
    a = mesh.step
    n1, n2 = mesh.shape
    v = mesh.values
    x_min = min(min(row) for row in v)
    bound = x_min + 2 * a
    argmin = tuple(mesh.point(i, j) for i in range(n1) for j in range(n2)
                   if v[i][j] == x_min)
    cells = set()
    for i in range(1, n1):
        for j in range(1, n2):
            l1, l2 = mesh.point(i, j)
            if l1 >= l2 and i + 1 < n1 and v[i + 1][j] <= bound:
                cells.add((i, j))
            elif l2 >= l1 and j + 1 < n2 and v[i][j + 1] <= bound:
                cells.add((i, j))
    by_j = {}
    for i, j in cells:
        by_j.setdefault(j, []).append(i)
    strips = []  # (i0, i1, j) runs, then merged vertically into rectangles
    for j in sorted(by_j):
        for i0, i1 in _merge_runs(by_j[j]):
            strips.append((i0, i1, j))
    rects = []
    for i0, i1, j in strips:
        if rects and rects[-1][0] == i0 and rects[-1][1] == i1 and rects[-1][3] == j - 1:
            rects[-1][3] = j
        else:
            rects.append([i0, i1, j, j])
    return BracketReport(
        x_min=x_min, interval=(x_min - 2 * a, x_min),
        candidates=tuple(tuple(r) for r in rects), argmin=argmin, alpha=a,
        axes=((mesh.lo1, mesh.lo1 + (n1 - 1) * a), (mesh.lo2, mesh.lo2 + (n2 - 1) * a)),
        cell_count=(n1 - 1) * (n2 - 1), candidate_count=len(cells))


def candidate_region_1d(mesh: Mesh1D, report: BracketReport):
    """Candidate cells as drop-time intervals [lo, hi]."""
    return [(mesh.point(i0 - 1), mesh.point(i1)) for i0, i1, _, _ in report.candidates]


def candidate_region_2d(mesh: Mesh2D, report: BracketReport):
    """Candidate rectangles as ((lo1, hi1), (lo2, hi2)) drop-time boxes."""
    out = []
    for i0, i1, j0, j1 in report.candidates:
        out.append(((mesh.lo1 + (i0 - 1) * mesh.step, mesh.lo1 + i1 * mesh.step),
                    (mesh.lo2 + (j0 - 1) * mesh.step, mesh.lo2 + j1 * mesh.step)))
    return out


# ---------------------------------------------------------------------------
# persistence: CSV for meshes, JSON for reports; byte-deterministic

_HEADER_1D = ["tau", "value_num", "value_den", "value_decimal15"]
_HEADER_2D = ["tau1", "tau2", "value_num", "value_den", "value_decimal15"]


def write_mesh_csv(path, mesh=None, partial=None, two_d=None):
    """Write a complete mesh, or a partial {key: value} dict, sorted by key."""
    if mesh is not None:
        if isinstance(mesh, Mesh1D):
            partial = {mesh.point(i): v for i, v in enumerate(mesh.values)}
            two_d = False
        else:
            partial = {mesh.point(i, j): v
                       for i in range(mesh.shape[0]) for j in range(mesh.shape[1])}
            two_d = True
    if two_d is None:
        raise ModelError("two_d must be given for partial meshes")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if two_d:
            w.writerow(_HEADER_2D)
            for (t1, t2) in sorted(partial):
                v = partial[(t1, t2)]
                w.writerow([format_rational(t1), format_rational(t2),
                            v.numerator, v.denominator, decimal_string(v)])
        else:
            w.writerow(_HEADER_1D)
            for t in sorted(partial):
                v = partial[t]
                w.writerow([format_rational(t), v.numerator, v.denominator,
                            decimal_string(v)])


def read_mesh_csv(path):
    """Read a mesh CSV; returns (two_d, {key: value}).  Only the exact
    num/den columns are used; the decimal column is display-only."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return None, {}
    header = rows[0]
    if header[:2] == _HEADER_2D[:2]:
        two_d = True
    elif header[0] == _HEADER_1D[0]:
        two_d = False
    else:
        raise ModelError(f"unrecognized mesh header {header!r} in {path}")
    out = {}
    for row in rows[1:]:
        if not row:
            continue
        if two_d:
            key = (parse_rational(row[0]), parse_rational(row[1]))
            out[key] = Rat(int(row[2]), int(row[3]))
        else:
            out[parse_rational(row[0])] = Rat(int(row[1]), int(row[2]))
    return two_d, out


def report_to_json(report: BracketReport, mesh=None) -> dict:
    data = {
        "x_min": format_rational(report.x_min),
        "interval": [format_rational(report.interval[0]),
                     format_rational(report.interval[1])],
        "alpha": format_rational(report.alpha),
        "argmin": [[format_rational(p) for p in (pt if isinstance(pt, tuple) else (pt,))]
                   for pt in report.argmin],
        "cell_count": report.cell_count,
        "candidate_count": report.candidate_count,
        "candidates": [],
    }
    for i0, i1, j0, j1 in report.candidates:
        cell = {"i0": i0, "i1": i1, "j0": j0, "j1": j1}
        if mesh is not None:
            if isinstance(mesh, Mesh1D):
                cell["tau"] = [format_rational(mesh.point(i0 - 1)),
                               format_rational(mesh.point(i1))]
            else:
                cell["tau1"] = [format_rational(mesh.lo1 + (i0 - 1) * mesh.step),
                                format_rational(mesh.lo1 + i1 * mesh.step)]
                cell["tau2"] = [format_rational(mesh.lo2 + (j0 - 1) * mesh.step),
                                format_rational(mesh.lo2 + j1 * mesh.step)]
        data["candidates"].append(cell)
    return data


def mesh_from_values(kind, distance, lo, step, values, lo2=None):
    """Rebuild a mesh object from stored values (for bracketing CSV files)."""
    if lo2 is None:
        return Mesh1D(kind, rat(distance), rat(lo), rat(step), tuple(values))
    return Mesh2D(kind, rat(distance), rat(lo), rat(lo2), rat(step),
                  tuple(tuple(row) for row in values))


def mesh_from_csv_values(two_d, data):
    """Arrange {tau: value} / {(tau1, tau2): value} into a grid, inferring the
    step; the keys must form a complete regular grid."""
    if not data:
        raise ModelError("empty mesh file")
    if not two_d:
        taus = sorted(data)
        if len(taus) == 1:
            step = rat(1)
        else:
            step = taus[1] - taus[0]
        for a, b in zip(taus, taus[1:]):
            if b - a != step:
                raise ModelError("mesh grid points are not equally spaced")
        return Mesh1D(GameKind.ONE_GIFT, rat(0), taus[0], step,
                      tuple(data[t] for t in taus))
    t1s = sorted({k[0] for k in data})
    t2s = sorted({k[1] for k in data})
    steps = [b - a for a, b in zip(t1s, t1s[1:])] + [b - a for a, b in zip(t2s, t2s[1:])]
    step = steps[0] if steps else rat(1)
    if any(s != step for s in steps):
        raise ModelError("mesh grid points are not equally spaced")
    try:
        values = tuple(tuple(data[(a, b)] for b in t2s) for a in t1s)
    except KeyError as missing:
        raise ModelError(f"mesh file is missing grid point {missing}") from None
    return Mesh2D(GameKind.TWO_GIFTS_OR, rat(0), t1s[0], t2s[0], step, values)
