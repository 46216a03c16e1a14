"""Reserve-margin sweep, feature-type partitioning, and feature bounds.

The sweep reruns a margin-constrained expansion plan under K step
sizes: starting from zero margins, every year whose plan fails the
adequacy threshold gets its margin raised by the step, and the plan is
re-solved until all years pass.  The per-type unit counts across steps
form one decision matrix per year; types whose rows never move are
pinned to fixed counts, and the rest become features with relaxed
integer bounds around their sweep extrema.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .adequacy import AdequacyConfig, simulate_lolh
from .errors import InfeasibleError, RelgepError, ValidationError
from .fleet import (
    GeneratorType,
    HourlySeries,
    PlanningHorizon,
    scale_demand,
)
from .milp import SolverTolerances, solve_milp

DEFAULT_STEP_SIZES = (0.01, 0.02, 0.03, 0.04, 0.05)
DEFAULT_RELAXATION = 0.05
DEFAULT_PARTITION_TOLERANCE = 0.01


@dataclass(frozen=True)
class SweepConfig:
    initial_step_sizes: tuple[float, ...] = DEFAULT_STEP_SIZES
    max_iterations: int = 50
    lolh_threshold: float = 2.4

    def __post_init__(self):
        steps = tuple(float(s) for s in self.initial_step_sizes)
        object.__setattr__(self, "initial_step_sizes", steps)
        if not steps:
            raise ValidationError("initial_step_sizes must be nonempty")
        if any(s <= 0 for s in steps):
            raise ValidationError("step sizes must be > 0")
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValidationError("step sizes must be strictly increasing")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if not self.lolh_threshold > 0:
            raise ValidationError("lolh_threshold must be > 0")


@dataclass(frozen=True)
class SweepMatrix:
    """Unit counts per type for one year, one column per step size."""

    year: int
    rows: dict[str, tuple[int, ...]]

    def __post_init__(self):
        widths = {len(r) for r in self.rows.values()}
        if len(widths) > 1:
            raise ValidationError("matrix rows must all have the same width")
        rows = {}
        for name, row in self.rows.items():
            clean = []
            for v in row:
                if v < 0 or v != int(v):
                    raise ValidationError(
                        f"matrix row {name!r}: counts must be nonnegative integers"
                    )
                clean.append(int(v))
            rows[name] = tuple(clean)
        object.__setattr__(self, "rows", rows)

    @property
    def num_steps(self) -> int:
        return len(next(iter(self.rows.values()))) if self.rows else 0


@dataclass(frozen=True)
class FeaturePartition:
    year: int
    feature_new: frozenset[str]
    feature_old: frozenset[str]
    nonfeature_new: frozenset[str]
    nonfeature_old: frozenset[str]
    fixed_counts: dict[str, int]

    def __post_init__(self):
        object.__setattr__(self, "fixed_counts", dict(self.fixed_counts))
        nonfeature = self.nonfeature_new | self.nonfeature_old
        missing = nonfeature - set(self.fixed_counts)
        if missing:
            raise ValidationError(
                f"nonfeature types without fixed counts: {sorted(missing)}"
            )
        if self.feature_new & self.nonfeature_new:
            raise ValidationError("a new type cannot be both feature and nonfeature")
        if self.feature_old & self.nonfeature_old:
            raise ValidationError("an old type cannot be both feature and nonfeature")

    def feature_names(self) -> list[str]:
        """Feature types in canonical (sorted-name) order."""
        return sorted(self.feature_new | self.feature_old)

    def to_dict(self) -> dict:
        return {
            "year": self.year,
            "feature_new": sorted(self.feature_new),
            "feature_old": sorted(self.feature_old),
            "nonfeature_new": sorted(self.nonfeature_new),
            "nonfeature_old": sorted(self.nonfeature_old),
            "fixed_counts": {k: self.fixed_counts[k] for k in sorted(self.fixed_counts)},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "FeaturePartition":
        return cls(
            year=int(data["year"]),
            feature_new=frozenset(data["feature_new"]),
            feature_old=frozenset(data["feature_old"]),
            nonfeature_new=frozenset(data["nonfeature_new"]),
            nonfeature_old=frozenset(data["nonfeature_old"]),
            fixed_counts={k: int(v) for k, v in data["fixed_counts"].items()},
        )


@dataclass(frozen=True)
class FeatureBounds:
    """Integer unit-count box per feature type, with the sweep extrema."""

    year: int
    lower: dict[str, int]
    upper: dict[str, int]
    sweep_min: dict[str, int]
    sweep_max: dict[str, int]

    def __post_init__(self):
        for name in ("lower", "upper", "sweep_min", "sweep_max"):
            object.__setattr__(self, name, dict(getattr(self, name)))
        keys = set(self.lower)
        for name, other in (
            ("upper", self.upper),
            ("sweep_min", self.sweep_min),
            ("sweep_max", self.sweep_max),
        ):
            if set(other) != keys:
                raise ValidationError(f"bounds field {name} covers different types")
        for t in keys:
            if self.lower[t] < 0:
                raise ValidationError(f"{t}: lower bound must be >= 0")
            if self.lower[t] > self.sweep_min[t]:
                raise ValidationError(
                    f"{t}: lower bound {self.lower[t]} exceeds sweep minimum "
                    f"{self.sweep_min[t]}"
                )
            if self.upper[t] < self.sweep_max[t]:
                raise ValidationError(
                    f"{t}: upper bound {self.upper[t]} below sweep maximum "
                    f"{self.sweep_max[t]}"
                )

    def feature_names(self) -> list[str]:
        return sorted(self.lower)

    def to_dict(self) -> dict:
        return {
            "year": self.year,
            "lower": {k: self.lower[k] for k in sorted(self.lower)},
            "upper": {k: self.upper[k] for k in sorted(self.upper)},
            "sweep_min": {k: self.sweep_min[k] for k in sorted(self.sweep_min)},
            "sweep_max": {k: self.sweep_max[k] for k in sorted(self.sweep_max)},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "FeatureBounds":
        return cls(
            year=int(data["year"]),
            lower={k: int(v) for k, v in data["lower"].items()},
            upper={k: int(v) for k, v in data["upper"].items()},
            sweep_min={k: int(v) for k, v in data["sweep_min"].items()},
            sweep_max={k: int(v) for k, v in data["sweep_max"].items()},
        )


@dataclass
class SweepOutcome:
    """Everything one sweep run produced, for reporting and reuse."""

    matrices: list[SweepMatrix]
    final_margins: dict[float, tuple[float, ...]]
    rounds_used: dict[float, int]
    baseline_lolh: tuple[float, ...]
    step_sizes: tuple[float, ...]
    lolh_threshold: float


def _plan_lolh(fleet, plan_mixes, horizon, base_load, cf_map, adequacy_cfg):
    """Derated LOLH per year for a sequence of per-year mixes."""
    values = []
    for t in range(1, horizon.num_years + 1):
        load_t = scale_demand(base_load, horizon, t)
        result = simulate_lolh(fleet, plan_mixes[t - 1], load_t, cf_map, adequacy_cfg)
        values.append(result.lolh)
    return values


def run_margin_sweep_detailed(
    fleet: Sequence[GeneratorType],
    horizon: PlanningHorizon,
    cfg: SweepConfig,
    gep_builder: Callable,
    base_load: HourlySeries,
    cf_map: Mapping[str, HourlySeries],
    adequacy_cfg: AdequacyConfig | None = None,
    solver_tolerances: SolverTolerances | None = None,
) -> SweepOutcome:
    """Run the margin sweep and keep margins, rounds, and baseline LOLH.

    gep_builder(reserve_margins) must return an object with a .model
    MilpModel and an .extract_plan(solution) giving per-year mixes.
    Every step size starts from zero margins; each round raises the
    margin of every failing year by the step and re-solves.
    """
    if adequacy_cfg is None:
        adequacy_cfg = AdequacyConfig()
    num_years = horizon.num_years

    # ladders from different step sizes revisit the same margin points;
    # identical margins give identical models and plans, so one solve serves
    # all of them (keys rounded far below any step size, merging float-sum
    # twins like 6 x 0.01 and 3 x 0.02)
    memo: dict[tuple, object] = {}

    def _solve(margins):
        key = tuple(round(m, 9) for m in margins)
        if key in memo:
            return memo[key]
        problem = gep_builder(tuple(margins))
        sol = solve_milp(problem.model, tolerances=solver_tolerances)
        if sol.status == "infeasible":
            raise InfeasibleError(
                f"expansion plan infeasible at reserve margins {list(margins)}"
            )
        if sol.status != "optimal":
            raise RelgepError(f"expansion solve ended with status {sol.status}")
        plan = problem.extract_plan(sol)
        memo[key] = plan
        return plan

    baseline_plan = _solve([0.0] * num_years)
    baseline_lolh = _plan_lolh(
        fleet, baseline_plan.mixes, horizon, base_load, cf_map, adequacy_cfg
    )

    per_step_counts: dict[float, list[dict[str, int]]] = {}
    final_margins: dict[float, tuple[float, ...]] = {}
    rounds_used: dict[float, int] = {}

    for step in cfg.initial_step_sizes:
        margins = [0.0] * num_years
        plan = baseline_plan
        lolh = list(baseline_lolh)
        rounds = 0
        while True:
            failing = [t for t in range(1, num_years + 1)
                       if lolh[t - 1] > cfg.lolh_threshold]
            if not failing:
                break
            if rounds >= cfg.max_iterations:
                raise ValidationError(
                    f"margin sweep for step {step} did not converge in "
                    f"{cfg.max_iterations} rounds; failing years {failing}"
                )
            for t in failing:
                margins[t - 1] += step
            plan = _solve(margins)
            lolh = _plan_lolh(
                fleet, plan.mixes, horizon, base_load, cf_map, adequacy_cfg
            )
            rounds += 1
        per_step_counts[step] = [dict(mix.counts) for mix in plan.mixes]
        final_margins[step] = tuple(margins)
        rounds_used[step] = rounds

    matrices = []
    for t in range(1, num_years + 1):
        rows = {}
        for gen in fleet:
            rows[gen.name] = tuple(
                per_step_counts[step][t - 1].get(gen.name, 0)
                for step in cfg.initial_step_sizes
            )
        matrices.append(SweepMatrix(year=t, rows=rows))
    return SweepOutcome(
        matrices=matrices,
        final_margins=final_margins,
        rounds_used=rounds_used,
        baseline_lolh=tuple(baseline_lolh),
        step_sizes=cfg.initial_step_sizes,
        lolh_threshold=cfg.lolh_threshold,
    )


def run_margin_sweep(
    fleet, horizon, cfg, gep_builder, base_load, cf_map,
    adequacy_cfg=None, solver_tolerances=None,
) -> list[SweepMatrix]:
    """Decision matrices (one per year) from the margin sweep."""
    outcome = run_margin_sweep_detailed(
        fleet, horizon, cfg, gep_builder, base_load, cf_map,
        adequacy_cfg, solver_tolerances,
    )
    return outcome.matrices


def partition_feature_types(
    matrices: Sequence[SweepMatrix],
    fleet: Sequence[GeneratorType],
    tolerance: float = DEFAULT_PARTITION_TOLERANCE,
) -> list[FeaturePartition]:
    """Split types into feature and nonfeature sets, one partition per year.

    A new type is nonfeature when its row is all zeros; an old type is
    nonfeature when every entry stays within the relative tolerance of
    its initial count.  Nonfeature counts are pinned: zero for new
    types, the rounded row median for old ones.
    """
    if not matrices:
        raise ValidationError("no sweep matrices given")
    if tolerance < 0:
        raise ValidationError("tolerance must be >= 0")
    by_name = {gen.name: gen for gen in fleet}
    partitions = []
    for matrix in matrices:
        unknown = sorted(set(matrix.rows) - set(by_name))
        if unknown:
            raise ValidationError(
                f"year {matrix.year}: matrix rows for undeclared types {unknown}"
            )
        feature_new, feature_old = set(), set()
        nonfeature_new, nonfeature_old = set(), set()
        fixed: dict[str, int] = {}
        for name in matrix.rows:
            gen = by_name[name]
            row = matrix.rows[name]
            if gen.category == "new":
                if all(v == 0 for v in row):
                    nonfeature_new.add(name)
                    fixed[name] = 0
                else:
                    feature_new.add(name)
            else:
                init = gen.initial_units
                if all(abs(v - init) <= tolerance * init for v in row):
                    nonfeature_old.add(name)
                    fixed[name] = int(round(float(np.median(row))))
                else:
                    feature_old.add(name)
        partitions.append(
            FeaturePartition(
                year=matrix.year,
                feature_new=frozenset(feature_new),
                feature_old=frozenset(feature_old),
                nonfeature_new=frozenset(nonfeature_new),
                nonfeature_old=frozenset(nonfeature_old),
                fixed_counts=fixed,
            )
        )
    return partitions


def _relax_fraction(relax, name: str, default: float) -> float:
    if relax is None:
        return default
    if isinstance(relax, Mapping):
        return float(relax.get(name, default))
    return float(relax)


def compute_feature_bounds(
    matrices: Sequence[SweepMatrix],
    partitions: Sequence[FeaturePartition],
    relax_down=None,
    relax_up=None,
) -> list[FeatureBounds]:
    """Relaxed integer bounds around the sweep extrema of feature types.

    lower = floor(min x (1 - relax_down)) clamped at zero, and
    upper = ceil(max x (1 + relax_up)).  Relaxations are a single
    fraction or a per-type map; the default is 5% both ways.
    """
    if len(matrices) != len(partitions):
        raise ValidationError("matrices and partitions must align per year")
    out = []
    for matrix, partition in zip(matrices, partitions):
        if matrix.year != partition.year:
            raise ValidationError(
                f"matrix year {matrix.year} does not match partition year "
                f"{partition.year}"
            )
        lower, upper, smin, smax = {}, {}, {}, {}
        for name in partition.feature_names():
            if name not in matrix.rows:
                raise ValidationError(
                    f"feature type {name!r} missing from year {matrix.year} matrix"
                )
            down = _relax_fraction(relax_down, name, DEFAULT_RELAXATION)
            up = _relax_fraction(relax_up, name, DEFAULT_RELAXATION)
            if not 0.0 <= down <= 1.0:
                raise ValidationError(f"{name}: relax_down must lie in [0, 1]")
            if up < 0.0:
                raise ValidationError(f"{name}: relax_up must be >= 0")
            row = matrix.rows[name]
            smin[name] = min(row)
            smax[name] = max(row)
            lower[name] = max(0, math.floor(smin[name] * (1.0 - down)))
            upper[name] = math.ceil(smax[name] * (1.0 + up))
        out.append(
            FeatureBounds(
                year=matrix.year, lower=lower, upper=upper,
                sweep_min=smin, sweep_max=smax,
            )
        )
    return out


def write_sweep_matrix_csv(matrix: SweepMatrix, step_sizes, path) -> None:
    """Matrix as CSV: one row per type, one column per step size."""
    if matrix.rows and len(step_sizes) != matrix.num_steps:
        raise ValidationError("step size count does not match matrix width")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["type"] + [repr(float(s)) for s in step_sizes])
        for name, row in matrix.rows.items():
            writer.writerow([name] + [str(v) for v in row])


def read_sweep_matrix_csv(path, year: int) -> tuple[SweepMatrix, tuple[float, ...]]:
    """Read a matrix CSV back; returns the matrix and its step sizes."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty sweep matrix file") from None
        if not header or header[0] != "type":
            raise ValidationError(f"{path}: expected header starting with 'type'")
        try:
            steps = tuple(float(s) for s in header[1:])
        except ValueError as exc:
            raise ValidationError(f"{path}: bad step size in header: {exc}") from None
        rows = {}
        for lineno, line in enumerate(reader, start=2):
            if not line:
                continue
            name, values = line[0], line[1:]
            if len(values) != len(steps):
                raise ValidationError(
                    f"{path}:{lineno}: expected {len(steps)} counts, got {len(values)}"
                )
            try:
                rows[name] = tuple(int(v) for v in values)
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return SweepMatrix(year=year, rows=rows), steps
