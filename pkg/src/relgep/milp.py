"""Self-contained mixed-integer linear programming at desk scale.

The LP core is a bounded-variable two-phase primal simplex on a dense
tableau: Dantzig pricing with a Bland's-rule fallback once the
objective stalls, lowest-variable-index tie breaking everywhere, and a
refinement solve against the final basis to wash out accumulated pivot
error.  Integer programs run through a best-first branch-and-bound
driver on top of that core.  Everything is deterministic: identical
models give identical solutions, node counts, and files.

Problems beyond a few thousand variables belong in an external solver;
write_mps emits a fixed-format file as the escape hatch.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.linalg.blas import dger

from .errors import RelgepError, ValidationError

INTEGRALITIES = ("continuous", "binary", "integer")
SENSES = ("<=", "=", ">=")

_LE, _EQ, _GE = 0, 1, 2
_AT_LOWER, _AT_UPPER, _BASIC, _FREE = 0, 1, 2, 3

# reduced-cost optimality cutoff and smallest usable pivot
_DJ_TOL = 1e-9
_PIV_TOL = 1e-9
_STALL_LIMIT = 50
_REFACTOR_EVERY = 1000


@dataclass(frozen=True)
class SolverTolerances:
    """Single source for every numeric cutoff the solver applies."""

    feasibility: float = 1e-7
    integrality: float = 1e-6
    gap: float = 1e-6

    def __post_init__(self):
        for name in ("feasibility", "integrality", "gap"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} tolerance must be > 0")


@dataclass
class Variable:
    name: str
    lower: float
    upper: float
    integrality: str


@dataclass
class Row:
    name: str
    coeffs: dict[int, float]
    sense: str
    rhs: float


class MilpModel:
    """Sparse mixed-integer linear program, objective sense minimize."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.rows: list[Row] = []
        self.objective: dict[int, float] = {}
        self.objective_constant = 0.0

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def add_var(
        self,
        name: str | None = None,
        lower: float = 0.0,
        upper: float = math.inf,
        integrality: str = "continuous",
        obj: float = 0.0,
    ) -> int:
        if integrality not in INTEGRALITIES:
            raise ValidationError(
                f"integrality must be one of {INTEGRALITIES}, got {integrality!r}"
            )
        if integrality == "binary" and upper == math.inf:
            upper = 1.0
        idx = len(self.variables)
        if name is None:
            name = f"x{idx}"
        var = Variable(name, float(lower), float(upper), integrality)
        self._check_bounds(var)
        self.variables.append(var)
        if obj != 0.0:
            self.objective[idx] = self.objective.get(idx, 0.0) + float(obj)
        return idx

    def add_row(
        self,
        coeffs: Mapping[int, float],
        sense: str,
        rhs: float,
        name: str | None = None,
    ) -> int:
        if sense not in SENSES:
            raise ValidationError(f"sense must be one of {SENSES}, got {sense!r}")
        if not math.isfinite(rhs):
            raise ValidationError(f"row rhs must be finite, got {rhs}")
        clean: dict[int, float] = {}
        for j, v in coeffs.items():
            if not 0 <= j < len(self.variables):
                raise ValidationError(f"row references unknown variable index {j}")
            v = float(v)
            if not math.isfinite(v):
                raise ValidationError(f"coefficient on variable {j} must be finite")
            if v != 0.0:
                clean[j] = v
        idx = len(self.rows)
        if name is None:
            name = f"r{idx}"
        self.rows.append(Row(name, clean, sense, float(rhs)))
        return idx

    def set_objective(self, coeffs: Mapping[int, float], constant: float = 0.0):
        for j, v in coeffs.items():
            if not 0 <= j < len(self.variables):
                raise ValidationError(f"objective references unknown variable {j}")
            if not math.isfinite(v):
                raise ValidationError(f"objective coefficient on {j} must be finite")
        self.objective = {j: float(v) for j, v in coeffs.items() if v != 0.0}
        self.objective_constant = float(constant)

    def set_var_bounds(self, idx: int, lower: float, upper: float):
        if not 0 <= idx < len(self.variables):
            raise ValidationError(f"unknown variable index {idx}")
        var = self.variables[idx]
        candidate = Variable(var.name, float(lower), float(upper), var.integrality)
        self._check_bounds(candidate)
        self.variables[idx] = candidate

    def integer_indices(self) -> list[int]:
        return [
            j
            for j, var in enumerate(self.variables)
            if var.integrality in ("binary", "integer")
        ]

    @staticmethod
    def _check_bounds(var: Variable):
        if math.isnan(var.lower) or math.isnan(var.upper):
            raise ValidationError(f"variable {var.name!r}: bounds must not be NaN")
        if var.lower > var.upper:
            raise ValidationError(
                f"variable {var.name!r}: lower {var.lower} exceeds upper {var.upper}"
            )
        if var.integrality == "binary" and not (
            0.0 <= var.lower and var.upper <= 1.0
        ):
            raise ValidationError(
                f"binary variable {var.name!r} needs bounds within [0, 1]"
            )


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None
    iterations: int = 0


@dataclass
class MilpSolution:
    status: str
    x: np.ndarray | None
    objective: float
    gap: float
    nodes_explored: int = 0


@dataclass
class _Arrays:
    """Model flattened to dense numpy form, built once per model."""

    c: np.ndarray
    constant: float
    A: np.ndarray
    b: np.ndarray
    senses: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def _build_arrays(model: MilpModel) -> _Arrays:
    m, n = model.num_rows, model.num_vars
    A = np.zeros((m, n))
    b = np.zeros(m)
    senses = np.zeros(m, dtype=np.int8)
    codes = {"<=": _LE, "=": _EQ, ">=": _GE}
    for i, row in enumerate(model.rows):
        for j, v in row.coeffs.items():
            A[i, j] = v
        b[i] = row.rhs
        senses[i] = codes[row.sense]
    c = np.zeros(n)
    for j, v in model.objective.items():
        c[j] = v
    lower = np.array([v.lower for v in model.variables], dtype=float)
    upper = np.array([v.upper for v in model.variables], dtype=float)
    return _Arrays(c, model.objective_constant, A, b, senses, lower, upper)


class _Tableau:
    """Dense simplex working set: T = B^-1 A over all columns."""

    def __init__(self, A_all, lower, upper, b, basis, stat, xval):
        self.A = A_all
        self.lower = lower
        self.upper = upper
        self.b = b
        self.basis = basis
        self.stat = stat
        self.xval = xval
        self.m, self.N = A_all.shape
        self.T = np.zeros((0, self.N), order="F") if self.m == 0 else None

    def refactor(self) -> bool:
        """Recompute T and basic values from the basis; False if singular."""
        if self.m == 0:
            return True
        B = self.A[:, self.basis]
        try:
            # column-major so the per-pivot rank-1 BLAS update is in place
            self.T = np.asfortranarray(np.linalg.solve(B, self.A))
            nonbasic = self.stat != _BASIC
            resid = self.b - self.A[:, nonbasic] @ self.xval[nonbasic]
            self.xval[self.basis] = np.linalg.solve(B, resid)
        except np.linalg.LinAlgError:
            return False
        return True

    def reduced_costs(self, c: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return c.copy()
        return c - c[self.basis] @ self.T


def _choose_entering(tab: _Tableau, d: np.ndarray, bland: bool) -> tuple[int, int]:
    movable = (tab.stat != _BASIC) & (tab.lower < tab.upper)
    can_increase = movable & ((tab.stat == _AT_LOWER) | (tab.stat == _FREE))
    can_decrease = movable & ((tab.stat == _AT_UPPER) | (tab.stat == _FREE))
    improving_up = can_increase & (d < -_DJ_TOL)
    improving_down = can_decrease & (d > _DJ_TOL)
    eligible = improving_up | improving_down
    if not eligible.any():
        return -1, 0
    if bland:
        j = int(np.argmax(eligible))
    else:
        score = np.where(eligible, np.abs(d), -1.0)
        j = int(np.argmax(score))
    return j, 1 if improving_up[j] else -1


def _ratio_test(tab: _Tableau, j: int, direction: int):
    """Step length, leaving row (or -1 for a bound flip), and flip flag."""
    if tab.stat[j] == _FREE:
        # interior start: the own-bound move is the distance to the far bound
        own = (tab.upper[j] - tab.xval[j]) if direction > 0 \
            else (tab.xval[j] - tab.lower[j])
    else:
        own = tab.upper[j] - tab.lower[j]
    if tab.m == 0:
        return (own, -1, True) if math.isfinite(own) else (math.inf, -1, False)
    a = tab.T[:, j]
    delta = direction * a
    xb = tab.xval[tab.basis]
    theta = np.full(tab.m, math.inf)
    pos = delta > _PIV_TOL
    if pos.any():
        theta[pos] = (xb[pos] - tab.lower[tab.basis[pos]]) / delta[pos]
    neg = delta < -_PIV_TOL
    if neg.any():
        theta[neg] = (xb[neg] - tab.upper[tab.basis[neg]]) / delta[neg]
    np.maximum(theta, 0.0, out=theta)
    row_min = float(theta.min())
    if own <= row_min:
        return (own, -1, True) if math.isfinite(own) else (math.inf, -1, False)
    if math.isinf(row_min):
        return math.inf, -1, False
    cand = np.flatnonzero(theta <= row_min + 1e-12)
    r = int(cand[np.argmin(tab.basis[cand])])
    return float(theta[r]), r, False


def _apply_step(tab: _Tableau, d: np.ndarray, j: int, direction: int,
                theta: float, row: int, flip: bool):
    if flip:
        if tab.m:
            tab.xval[tab.basis] -= direction * theta * tab.T[:, j]
        tab.xval[j] = tab.upper[j] if direction > 0 else tab.lower[j]
        tab.stat[j] = _AT_UPPER if direction > 0 else _AT_LOWER
        return
    a = tab.T[:, j].copy()
    leaving = tab.basis[row]
    hits_lower = direction * a[row] > 0
    entering_value = tab.xval[j] + direction * theta
    tab.xval[tab.basis] -= direction * theta * a
    tab.xval[leaving] = tab.lower[leaving] if hits_lower else tab.upper[leaving]
    tab.stat[leaving] = _AT_LOWER if hits_lower else _AT_UPPER
    tab.xval[j] = entering_value
    tab.stat[j] = _BASIC
    tab.basis[row] = j
    # pivot the tableau on (row, j)
    dj = d[j]
    tab.T[row, :] /= a[row]
    a[row] = 0.0
    dger(-1.0, a, tab.T[row, :], a=tab.T, overwrite_a=1)
    tab.T[:, j] = 0.0
    tab.T[row, j] = 1.0
    d -= dj * tab.T[row, :]
    d[j] = 0.0


def _run_phase(tab: _Tableau, c: np.ndarray, max_iter: int, used: int):
    """Iterate to optimality for objective c.  Returns (status, iters, d)."""
    d = tab.reduced_costs(c)
    z = float(c @ tab.xval)
    bland = False
    stall = 0
    pivots = 0
    it = used
    while it < max_iter:
        j, direction = _choose_entering(tab, d, bland)
        if j < 0:
            return "optimal", it, d
        theta, row, flip = _ratio_test(tab, j, direction)
        if math.isinf(theta):
            return "unbounded", it, d
        improvement = abs(d[j]) * theta
        _apply_step(tab, d, j, direction, theta, row, flip)
        it += 1
        if not flip:
            pivots += 1
            if pivots % _REFACTOR_EVERY == 0 and tab.refactor():
                d = tab.reduced_costs(c)
                z = float(c @ tab.xval)
                stall = 0
                continue
        z -= improvement
        if improvement > 1e-12 * (1.0 + abs(z)):
            stall = 0
            bland = False
        else:
            stall += 1
            if stall > _STALL_LIMIT:
                bland = True
    return "iteration_limit", it, d


def _solve_arrays(arrays: _Arrays, lower, upper, tol: SolverTolerances,
                  max_iterations: int | None, start=None,
                  refine=True) -> LpSolution:
    m, n = arrays.A.shape
    slack_lower = np.where(arrays.senses == _GE, -math.inf, 0.0)
    slack_upper = np.where(arrays.senses == _LE, math.inf, 0.0)

    if start is not None:
        # warm crash: seed structurals from a prior solution, clipped into
        # the current bounds; interior values start nonbasic-free
        v = np.clip(start, lower, upper)
        bad = ~np.isfinite(v)
        if bad.any():
            v[bad] = np.clip(np.zeros(int(bad.sum())), lower[bad], upper[bad])
        stat_struct = np.full(n, _FREE, dtype=np.int8)
        stat_struct[v == lower] = _AT_LOWER
        stat_struct[v == upper] = _AT_UPPER
    else:
        # nonbasic start: structurals at the nearest finite bound, else free at 0
        v = np.where(
            np.isfinite(lower), lower, np.where(np.isfinite(upper), upper, 0.0)
        )
        stat_struct = np.where(
            np.isfinite(lower),
            _AT_LOWER,
            np.where(np.isfinite(upper), _AT_UPPER, _FREE),
        ).astype(np.int8)
    residual = arrays.b - arrays.A @ v

    # rows violated by no more than the snap width skip their artificial;
    # the slack starts basic a hair out of bounds and the refinement snaps it
    snap = 1e-9
    slack_ok = np.where(
        arrays.senses == _LE,
        residual >= -snap,
        np.where(
            arrays.senses == _GE, residual <= snap, np.abs(residual) <= snap
        ),
    )
    art_rows = np.flatnonzero(~slack_ok)
    n_art = art_rows.size

    A_all = np.zeros((m, n + m + n_art))
    A_all[:, :n] = arrays.A
    A_all[:, n : n + m] = np.eye(m)
    sigma = np.where(residual[art_rows] >= 0.0, 1.0, -1.0)
    A_all[art_rows, n + m + np.arange(n_art)] = sigma

    lower_all = np.concatenate([lower, slack_lower, np.zeros(n_art)])
    upper_all = np.concatenate([upper, slack_upper, np.full(n_art, math.inf)])

    stat = np.empty(n + m + n_art, dtype=np.int8)
    stat[:n] = stat_struct
    stat[n : n + m] = np.where(
        slack_ok, _BASIC, np.where(arrays.senses == _GE, _AT_UPPER, _AT_LOWER)
    )
    stat[n + m :] = _BASIC

    xval = np.zeros(n + m + n_art)
    xval[:n] = v
    xval[n : n + m] = np.where(slack_ok, residual, 0.0)
    xval[n + m :] = np.abs(residual[art_rows])

    basis = np.where(slack_ok, n + np.arange(m), 0)
    basis[art_rows] = n + m + np.arange(n_art)
    basis = basis.astype(int)

    tab = _Tableau(A_all, lower_all, upper_all, arrays.b, basis, stat, xval)
    if m and tab.T is None:
        # initial basis is diagonal with entries 1 (slack) or sigma (artificial)
        diag = np.ones(m)
        diag[art_rows] = sigma
        tab.T = np.asfortranarray(A_all * diag[:, None])

    if max_iterations is None:
        max_iterations = 100 * (m + n) + 1000

    iterations = 0
    if n_art:
        c1 = np.zeros(n + m + n_art)
        c1[n + m :] = 1.0
        status, iterations, _ = _run_phase(tab, c1, max_iterations, 0)
        if status == "iteration_limit":
            return LpSolution("iteration_limit", None, math.nan, None, iterations)
        if status == "unbounded":
            raise RelgepError("simplex failure: phase 1 reported unbounded")
        infeasibility = float(c1 @ tab.xval)
        if infeasibility > tol.feasibility * max(
            1.0, float(np.abs(arrays.b).max(initial=0.0))
        ):
            return LpSolution("infeasible", None, math.nan, None, iterations)
        # artificials are pinned at zero for phase 2
        tab.lower[n + m :] = 0.0
        tab.upper[n + m :] = 0.0

    c2 = np.zeros(n + m + n_art)
    c2[:n] = arrays.c
    status, iterations, d = _run_phase(tab, c2, max_iterations, iterations)

    if status == "unbounded":
        return LpSolution(
            "unbounded", tab.xval[:n].copy(), -math.inf, None, iterations
        )
    if status == "iteration_limit":
        return LpSolution("iteration_limit", None, math.nan, None, iterations)

    # refinement: recompute basic values and duals directly from the basis
    # (skipped for throwaway relaxations, whose duals are never read and
    # whose update drift is far below the branching tolerances)
    if m:
        if refine and tab.refactor():
            try:
                duals = np.linalg.solve(
                    tab.A[:, tab.basis].T, c2[tab.basis]
                )
            except np.linalg.LinAlgError:
                duals = -d[n : n + m].copy()
        else:
            duals = -d[n : n + m].copy()
        xb = tab.xval[tab.basis]
        lo_b = tab.lower[tab.basis]
        up_b = tab.upper[tab.basis]
        snap_low = (xb < lo_b) & (lo_b - xb <= tol.feasibility)
        snap_up = (xb > up_b) & (xb - up_b <= tol.feasibility)
        xb[snap_low] = lo_b[snap_low]
        xb[snap_up] = up_b[snap_up]
        tab.xval[tab.basis] = xb
    else:
        duals = np.zeros(0)

    x = tab.xval[:n].copy()
    objective = float(arrays.c @ x) + arrays.constant
    return LpSolution("optimal", x, objective, duals, iterations)


def solve_lp(
    model: MilpModel,
    tolerances: SolverTolerances | None = None,
    max_iterations: int | None = None,
) -> LpSolution:
    """Solve the LP relaxation of the model (integrality ignored)."""
    tol = tolerances or SolverTolerances()
    arrays = _build_arrays(model)
    return _solve_arrays(arrays, arrays.lower, arrays.upper, tol, max_iterations)


def solve_milp(
    model: MilpModel,
    node_limit: int = 100_000,
    gap_tol: float | None = None,
    tolerances: SolverTolerances | None = None,
    max_iterations: int | None = None,
) -> MilpSolution:
    """Best-first branch-and-bound over LP relaxations.

    Branches on the most fractional integer variable (ties to the lowest
    index); node order is by relaxation bound with creation index as the
    tie break, so runs are reproducible including node counts.
    """
    tol = tolerances or SolverTolerances()
    if gap_tol is None:
        gap_tol = tol.gap
    arrays = _build_arrays(model)
    int_idx = np.array(model.integer_indices(), dtype=int)
    for j in int_idx:
        if not (math.isfinite(arrays.lower[j]) and math.isfinite(arrays.upper[j])):
            raise ValidationError(
                f"integer variable {model.variables[j].name!r} needs finite bounds"
            )

    incumbent_x = None
    incumbent_obj = math.inf
    nodes = 0
    next_id = 1
    heap = [(-math.inf, 0, {}, None)]
    hit_node_limit = False

    def _acceptable(bound: float) -> bool:
        # true when the bound can still beat the incumbent by more than gap
        return bound < incumbent_obj - gap_tol * max(1.0, abs(incumbent_obj))

    def _try_integral(lo, up, guess, x_start):
        # one LP with the integers pinned to guess; returns its solution
        fixed_lo = lo.copy()
        fixed_up = up.copy()
        fixed_lo[int_idx] = guess
        fixed_up[int_idx] = guess
        return _solve_arrays(arrays, fixed_lo, fixed_up, tol, max_iterations,
                             start=x_start)

    while heap:
        bound, _, fixes, parent_x = heapq.heappop(heap)
        if incumbent_x is not None and not _acceptable(bound):
            heapq.heappush(heap, (bound, 0, fixes, parent_x))
            break
        if nodes >= node_limit:
            hit_node_limit = True
            heapq.heappush(heap, (bound, 0, fixes, parent_x))
            break
        nodes += 1
        lo = arrays.lower.copy()
        up = arrays.upper.copy()
        for j, (fl, fu) in fixes.items():
            lo[j], up[j] = fl, fu
        relax = _solve_arrays(arrays, lo, up, tol, max_iterations,
                              start=parent_x, refine=False)
        if relax.status == "infeasible":
            continue
        if relax.status == "unbounded":
            raise ValidationError(
                "relaxation is unbounded; add finite bounds to the model"
            )
        if relax.status == "iteration_limit":
            raise RelgepError("LP iteration limit hit inside branch-and-bound")
        if incumbent_x is not None and not _acceptable(relax.objective):
            continue

        if int_idx.size:
            frac = np.abs(relax.x[int_idx] - np.round(relax.x[int_idx]))
            most = int(np.argmax(frac))
            max_frac = float(frac[most])
        else:
            max_frac = 0.0

        if max_frac <= tol.integrality:
            if int_idx.size:
                repaired = _try_integral(
                    lo, up, np.round(relax.x[int_idx]), relax.x
                )
            else:
                repaired = relax
            if repaired.status == "optimal" and repaired.objective < incumbent_obj:
                incumbent_x = repaired.x
                incumbent_obj = repaired.objective
            continue

        if nodes == 1:
            # root rounding probe: nearest then ceiling, for an early incumbent
            glo = np.ceil(lo[int_idx] - tol.integrality)
            gup = np.floor(up[int_idx] + tol.integrality)
            if np.all(glo <= gup):
                for guess in (
                    np.clip(np.round(relax.x[int_idx]), glo, gup),
                    np.clip(np.ceil(relax.x[int_idx]), glo, gup),
                ):
                    probe = _try_integral(lo, up, guess, relax.x)
                    if probe.status == "optimal" and probe.objective < incumbent_obj:
                        incumbent_x = probe.x
                        incumbent_obj = probe.objective

        j = int(int_idx[most])
        split = math.floor(relax.x[j])
        down = dict(fixes)
        down[j] = (lo[j], float(split))
        upfix = dict(fixes)
        upfix[j] = (float(split + 1), up[j])
        heapq.heappush(heap, (relax.objective, next_id, down, relax.x))
        heapq.heappush(heap, (relax.objective, next_id + 1, upfix, relax.x))
        next_id += 2

    if incumbent_x is None:
        status = "node_limit" if hit_node_limit else "infeasible"
        return MilpSolution(status, None, math.nan, math.inf, nodes)

    best_remaining = heap[0][0] if heap else incumbent_obj
    gap = max(0.0, incumbent_obj - best_remaining) / max(1.0, abs(incumbent_obj))
    if hit_node_limit and gap > gap_tol:
        status = "node_limit"
    else:
        status = "optimal"
    return MilpSolution(status, incumbent_x, incumbent_obj, gap, nodes)


def _fmt(value: float) -> str:
    if value == 0.0:
        return "0"
    return f"{value:.12g}"


def write_mps(model: MilpModel, path) -> None:
    """Write fixed-format MPS with generated 8-character names.

    Variables become C0000001... and rows R0000001... in model order;
    the objective row is OBJ.  One coefficient pair per line keeps every
    field at its fixed column even for 12-significant-digit numbers.  An
    objective constant, if any, is carried as an RHS entry on OBJ.
    """
    col_name = [f"C{j + 1:07d}" for j in range(model.num_vars)]
    row_name = [f"R{i + 1:07d}" for i in range(model.num_rows)]
    sense_letter = {"<=": "L", ">=": "G", "=": "E"}

    entries: list[list[tuple[str, float]]] = [[] for _ in range(model.num_vars)]
    for j, v in model.objective.items():
        entries[j].append(("OBJ", v))
    for i, row in enumerate(model.rows):
        for j in sorted(row.coeffs):
            entries[j].append((row_name[i], row.coeffs[j]))
    for j in range(model.num_vars):
        if not entries[j]:
            entries[j].append(("OBJ", 0.0))

    lines = [f"NAME          {model.name.upper()[:8] or 'MODEL'}"]
    lines.append("ROWS")
    lines.append(" N  OBJ")
    for i, row in enumerate(model.rows):
        lines.append(f" {sense_letter[row.sense]}  {row_name[i]}")

    lines.append("COLUMNS")
    in_integer_block = False
    for j, var in enumerate(model.variables):
        is_int = var.integrality in ("binary", "integer")
        if is_int and not in_integer_block:
            lines.append(
                "    MARKER                 'MARKER'                 'INTORG'"
            )
            in_integer_block = True
        elif not is_int and in_integer_block:
            lines.append(
                "    MARKER                 'MARKER'                 'INTEND'"
            )
            in_integer_block = False
        for target, value in entries[j]:
            lines.append(f"    {col_name[j]:<9} {target:<9} {_fmt(value)}")
    if in_integer_block:
        lines.append(
            "    MARKER                 'MARKER'                 'INTEND'"
        )

    lines.append("RHS")
    if model.objective_constant != 0.0:
        lines.append(f"    RHS       OBJ       {_fmt(-model.objective_constant)}")
    for i, row in enumerate(model.rows):
        if row.rhs != 0.0:
            lines.append(f"    RHS       {row_name[i]:<9} {_fmt(row.rhs)}")

    lines.append("BOUNDS")
    for j, var in enumerate(model.variables):
        if var.lower == var.upper:
            lines.append(f" FX BND       {col_name[j]:<9} {_fmt(var.lower)}")
            continue
        if math.isfinite(var.lower):
            lines.append(f" LO BND       {col_name[j]:<9} {_fmt(var.lower)}")
        else:
            lines.append(f" MI BND       {col_name[j]}")
        if math.isfinite(var.upper):
            lines.append(f" UP BND       {col_name[j]:<9} {_fmt(var.upper)}")
        else:
            lines.append(f" PL BND       {col_name[j]}")
    lines.append("ENDATA")

    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def write_solution_csv(solution, model: MilpModel, path) -> None:
    """Solution as CSV: a status header line, then (variable, value) rows."""
    lines = [f"status,{solution.status}"]
    if solution.x is not None:
        lines.append(f"objective,{solution.objective!r}")
        lines.append("variable,value")
        for j, var in enumerate(model.variables):
            lines.append(f"{var.name},{float(solution.x[j])!r}")
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")
