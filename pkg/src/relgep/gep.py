"""Multi-year generation expansion MILP in two variants.

The reserve-margin variant (RM) keeps the classical annual capacity
margin rows.  The reliability-verification variant (RVC) drops them and
instead fixes nonfeature unit counts and restricts each constrained
year's feature counts to a hull-encoded disjunction of reliable regions.
Unit commitment detail is out of scope; dispatch is a linear economic
dispatch over representative hours.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .adequacy import AdequacyConfig, ReliabilityResult, simulate_lolh
from .errors import InfeasibleError, ParseError, RelgepError, ValidationError
from .fleet import (
    GenerationMix,
    GeneratorType,
    HourlySeries,
    PlanningHorizon,
    scale_demand,
)
from .hull import HullEncoding, check_membership, encode_disjunction
from .milp import MilpModel, MilpSolution
from .sweep import FeaturePartition
from .wodt import Disjunction

__all__ = [
    "CostBreakdown",
    "GepConfig",
    "GepProblem",
    "Plan",
    "build_gep_rm",
    "build_gep_rvc",
    "evaluate_plan_lolh",
    "read_breakdown_text",
    "read_plan_csv",
    "write_breakdown_text",
    "write_plan_csv",
]

_COST_COMPONENTS = ("capital", "fixed_om", "variable_carbon", "unserved_penalty")


@dataclass(frozen=True)
class GepConfig:
    """Expansion-model settings shared by both variants.

    ``reserve_margins`` is used only by the reserve-margin variant; an
    empty tuple means zero margin every year.  ``renewable_credit`` maps
    renewable type names to the capacity-credit fraction counted toward
    the margin row (types not listed get credit 0).
    """

    horizon: PlanningHorizon
    representative_hours: tuple[int, ...] | None = None
    unserved_energy_penalty: float = 10_000.0
    reserve_margins: tuple[float, ...] = ()
    renewable_credit: Mapping[str, float] = field(default_factory=dict)
    discount_rate: float = 0.0

    def __post_init__(self):
        if not self.unserved_energy_penalty > 0:
            raise ValidationError(
                f"unserved_energy_penalty must be > 0, "
                f"got {self.unserved_energy_penalty}"
            )
        margins = tuple(float(m) for m in self.reserve_margins)
        if not margins:
            margins = (0.0,) * self.horizon.num_years
        if len(margins) != self.horizon.num_years:
            raise ValidationError(
                f"reserve_margins must have {self.horizon.num_years} entries, "
                f"got {len(margins)}"
            )
        if any(m < 0 for m in margins):
            raise ValidationError("reserve margins must be >= 0")
        object.__setattr__(self, "reserve_margins", margins)
        if self.representative_hours is not None:
            hours = tuple(int(h) for h in self.representative_hours)
            if not hours:
                raise ValidationError("representative_hours must not be empty")
            if any(h < 0 for h in hours):
                raise ValidationError("representative hours must be >= 0")
            if len(set(hours)) != len(hours):
                raise ValidationError("representative hours must be distinct")
            object.__setattr__(self, "representative_hours", hours)
        credit = {str(k): float(v) for k, v in self.renewable_credit.items()}
        for name, value in credit.items():
            if not 0.0 <= value <= 1.0:
                raise ValidationError(
                    f"renewable credit for {name!r} must lie in [0, 1], got {value}"
                )
        object.__setattr__(self, "renewable_credit", credit)
        if not self.discount_rate > -1.0:
            raise ValidationError(
                f"discount_rate must be > -1, got {self.discount_rate}"
            )


@dataclass(frozen=True)
class CostBreakdown:
    """Discounted objective split by component."""

    capital: float
    fixed_om: float
    variable_carbon: float
    unserved_penalty: float

    def __post_init__(self):
        for name in _COST_COMPONENTS:
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= -1e-9):
                raise ValidationError(f"cost component {name} must be >= 0, got {value}")

    @property
    def total(self) -> float:
        return self.capital + self.fixed_om + self.variable_carbon + self.unserved_penalty


@dataclass(frozen=True)
class Plan:
    """Per-year builds, retirements, and operational counts of one solve.

    Count identities are enforced: a new type's operational count is its
    cumulative builds; an old type's is its initial count minus
    cumulative retirements, never negative.
    """

    horizon: PlanningHorizon
    builds: Mapping[str, tuple[int, ...]]
    retirements: Mapping[str, tuple[int, ...]]
    ngo: Mapping[str, tuple[int, ...]]
    initial_counts: Mapping[str, int]
    breakdown: CostBreakdown

    def __post_init__(self):
        years = self.horizon.num_years
        builds = {k: tuple(int(v) for v in row) for k, row in self.builds.items()}
        retire = {k: tuple(int(v) for v in row) for k, row in self.retirements.items()}
        ngo = {k: tuple(int(v) for v in row) for k, row in self.ngo.items()}
        initial = {k: int(v) for k, v in self.initial_counts.items()}
        if set(builds) & set(retire):
            raise ValidationError("a type cannot both build and retire")
        if set(ngo) != set(builds) | set(retire):
            raise ValidationError("ngo must cover exactly the build and retire types")
        if set(initial) != set(retire):
            raise ValidationError("initial_counts must cover exactly the old types")
        for label, table in (("builds", builds), ("retirements", retire), ("ngo", ngo)):
            for name, row in table.items():
                if len(row) != years:
                    raise ValidationError(
                        f"{label} row for {name!r} has {len(row)} entries, "
                        f"expected {years}"
                    )
                if any(v < 0 for v in row):
                    raise ValidationError(f"{label} row for {name!r} has negative entries")
        for name, row in builds.items():
            total = 0
            for t, built in enumerate(row):
                total += built
                if ngo[name][t] != total:
                    raise ValidationError(
                        f"{name!r} year {t + 1}: ngo {ngo[name][t]} does not equal "
                        f"cumulative builds {total}"
                    )
        for name, row in retire.items():
            total = initial[name]
            for t, retired in enumerate(row):
                total -= retired
                if total < 0:
                    raise ValidationError(
                        f"{name!r} year {t + 1}: retirements exceed initial units"
                    )
                if ngo[name][t] != total:
                    raise ValidationError(
                        f"{name!r} year {t + 1}: ngo {ngo[name][t]} does not equal "
                        f"initial minus cumulative retirements {total}"
                    )
        object.__setattr__(self, "builds", builds)
        object.__setattr__(self, "retirements", retire)
        object.__setattr__(self, "ngo", ngo)
        object.__setattr__(self, "initial_counts", initial)

    @property
    def mixes(self) -> list[GenerationMix]:
        return [
            GenerationMix(
                year=t,
                counts={name: row[t - 1] for name, row in self.ngo.items()},
            )
            for t in range(1, self.horizon.num_years + 1)
        ]

    @property
    def objective(self) -> float:
        return self.breakdown.total


def _discount(cfg: GepConfig, year: int) -> float:
    return (1.0 + cfg.discount_rate) ** -(year - 1)


def _profile_values(
    gen: GeneratorType, cf_map: Mapping[str, HourlySeries], hours: int
) -> np.ndarray:
    if not gen.is_renewable:
        return np.ones(hours)
    if gen.profile_ref not in cf_map:
        raise ValidationError(
            f"renewable type {gen.name!r}: no capacity-factor series "
            f"{gen.profile_ref!r}"
        )
    series = cf_map[gen.profile_ref]
    if series.kind != "capacity_factor":
        raise ValidationError(f"series {series.name!r} is not a capacity-factor series")
    if len(series) != hours:
        raise ValidationError(
            f"profile {gen.profile_ref!r} has {len(series)} hours, expected {hours}"
        )
    return series.values


def _unit_cap(
    gen: GeneratorType,
    cfg: GepConfig,
    loads: Sequence[HourlySeries],
    cf_map: Mapping[str, HourlySeries],
    margin_need: float,
) -> int:
    """Units of one type that alone meet the strictest margin and saturate
    every dispatch hour; no larger count can improve the objective."""
    if gen.category == "old":
        return gen.initial_units
    cap = gen.unit_capacity_mw
    if not gen.is_renewable:
        need = max(margin_need, max(float(ld.values.max()) for ld in loads))
        return math.ceil(need / cap - 1e-9) if need > 0 else 0
    profile = _profile_values(gen, cf_map, len(loads[0]))
    need = 0.0
    for ld in loads:
        usable = profile > 1e-12
        if np.any(usable):
            need = max(need, float(np.max(ld.values[usable] / (cap * profile[usable]))))
    credit = cfg.renewable_credit.get(gen.name, 0.0)
    if credit > 0 and margin_need > 0:
        need = max(need, margin_need / (credit * cap))
    return math.ceil(need - 1e-9) if need > 0 else 0


class GepProblem:
    """A built expansion model plus the handles to read a plan back out."""

    def __init__(self, model, fleet, cfg, variant):
        self.model: MilpModel = model
        self.fleet: tuple[GeneratorType, ...] = tuple(fleet)
        self.cfg: GepConfig = cfg
        self.variant: str = variant
        self.build_vars: dict[str, list[int]] = {}
        self.retire_vars: dict[str, list[int]] = {}
        self.ngo_vars: dict[str, list[int]] = {}
        self.cost_vars: dict[str, dict[int, float]] = {c: {} for c in _COST_COMPONENTS}
        self.encodings: dict[int, HullEncoding] = {}
        self.disjunctions: dict[int, Disjunction] = {}

    def _add_cost(self, component: str, var_id: int, coeff: float) -> None:
        if coeff != 0.0:
            self.cost_vars[component][var_id] = (
                self.cost_vars[component].get(var_id, 0.0) + coeff
            )

    def feature_vector(self, solution: MilpSolution, year: int) -> tuple[int, ...]:
        """Rounded feature-type counts of a solved model for one year."""
        if year not in self.disjunctions:
            raise ValidationError(f"year {year} carries no reliability constraint")
        names = self.disjunctions[year].feature_names
        return tuple(
            int(round(float(solution.x[self.ngo_vars[name][year - 1]])))
            for name in names
        )

    def extract_plan(self, solution: MilpSolution) -> Plan:
        if solution.status != "optimal":
            raise ValidationError(
                f"cannot extract a plan from a {solution.status} solution"
            )
        years = self.cfg.horizon.num_years
        builds = {
            name: tuple(int(round(float(solution.x[ids[t]]))) for t in range(years))
            for name, ids in self.build_vars.items()
        }
        retire = {
            name: tuple(int(round(float(solution.x[ids[t]]))) for t in range(years))
            for name, ids in self.retire_vars.items()
        }
        ngo = {
            name: tuple(int(round(float(solution.x[ids[t]]))) for t in range(years))
            for name, ids in self.ngo_vars.items()
        }
        initial = {
            gen.name: gen.initial_units
            for gen in self.fleet
            if gen.category == "old"
        }
        parts = {}
        for component in _COST_COMPONENTS:
            parts[component] = max(
                0.0,
                sum(
                    coeff * float(solution.x[var_id])
                    for var_id, coeff in self.cost_vars[component].items()
                ),
            )
        plan = Plan(
            horizon=self.cfg.horizon,
            builds=builds,
            retirements=retire,
            ngo=ngo,
            initial_counts=initial,
            breakdown=CostBreakdown(**parts),
        )
        for year, disj in self.disjunctions.items():
            point = [float(ngo[name][year - 1]) for name in disj.feature_names]
            if not check_membership(disj, point):
                raise RelgepError(
                    f"year {year}: solver returned feature counts {point} outside "
                    f"every reliable region"
                )
        return plan


def _validate_credits(fleet: Sequence[GeneratorType], cfg: GepConfig) -> None:
    renewables = {gen.name for gen in fleet if gen.is_renewable}
    unknown = sorted(set(cfg.renewable_credit) - renewables)
    if unknown:
        raise ValidationError(
            f"renewable_credit names non-renewable or undeclared types: {unknown}"
        )


def _rep_hours(cfg: GepConfig, hours: int) -> list[int]:
    if cfg.representative_hours is None:
        return list(range(hours))
    bad = [h for h in cfg.representative_hours if h >= hours]
    if bad:
        raise ValidationError(
            f"representative hours {bad} outside the {hours}-hour year"
        )
    return list(cfg.representative_hours)


def _build_core(
    fleet: Sequence[GeneratorType],
    cfg: GepConfig,
    base_load: HourlySeries,
    cf_map: Mapping[str, HourlySeries],
    with_margins: bool,
    extra_caps: Mapping[str, int],
    variant: str,
) -> GepProblem:
    if base_load.kind != "load_mw":
        raise ValidationError(f"series {base_load.name!r} is not a load series")
    names = [gen.name for gen in fleet]
    if len(set(names)) != len(names):
        raise ValidationError("fleet has duplicate type names")
    _validate_credits(fleet, cfg)
    horizon = cfg.horizon
    years = horizon.num_years
    hours = len(base_load)
    rep = _rep_hours(cfg, hours)
    loads = [scale_demand(base_load, horizon, t) for t in range(1, years + 1)]
    peaks = [float(ld.values.max()) for ld in loads]
    margins = cfg.reserve_margins if with_margins else (0.0,) * years
    margin_need = max(
        (1.0 + margins[t - 1]) * peaks[t - 1] for t in range(1, years + 1)
    ) if years else 0.0

    model = MilpModel(name=f"gep-{variant}")
    problem = GepProblem(model, fleet, cfg, variant)

    caps: dict[str, int] = {}
    for gen in fleet:
        cap = _unit_cap(gen, cfg, loads, cf_map, margin_need)
        caps[gen.name] = max(cap, int(extra_caps.get(gen.name, 0)))

    # investment and count variables
    for gen in fleet:
        ids = []
        for t in range(1, years + 1):
            disc = _discount(cfg, t)
            if gen.category == "new":
                obj = disc * gen.capital_cost
                var = model.add_var(
                    name=f"b[{gen.name},{t}]",
                    upper=float(caps[gen.name]),
                    integrality="integer",
                    obj=obj,
                )
                problem._add_cost("capital", var, obj)
            else:
                var = model.add_var(
                    name=f"ret[{gen.name},{t}]",
                    upper=float(gen.initial_units),
                    integrality="integer",
                )
            ids.append(var)
        if gen.category == "new":
            problem.build_vars[gen.name] = ids
        else:
            problem.retire_vars[gen.name] = ids
    for gen in fleet:
        ids = []
        for t in range(1, years + 1):
            upper = float(caps[gen.name])
            if (
                gen.lifetime_expiry_year is not None
                and t > gen.lifetime_expiry_year
            ):
                upper = 0.0
            disc = _discount(cfg, t)
            obj = disc * gen.fixed_om_cost
            var = model.add_var(name=f"ngo[{gen.name},{t}]", upper=upper, obj=obj)
            problem._add_cost("fixed_om", var, obj)
            ids.append(var)
        problem.ngo_vars[gen.name] = ids

    # count balance: ngo equals cumulative builds, or initial minus retirements
    for gen in fleet:
        for t in range(1, years + 1):
            coeffs = {problem.ngo_vars[gen.name][t - 1]: 1.0}
            if gen.category == "new":
                for tau in range(t):
                    coeffs[problem.build_vars[gen.name][tau]] = -1.0
                rhs = 0.0
            else:
                for tau in range(t):
                    coeffs[problem.retire_vars[gen.name][tau]] = 1.0
                rhs = float(gen.initial_units)
            model.add_row(coeffs, "=", rhs, name=f"cb[{gen.name},{t}]")

    # dispatch, unserved energy, load balance, capacity caps
    for t in range(1, years + 1):
        disc = _discount(cfg, t)
        tax = horizon.carbon_tax_schedule[t - 1]
        load_t = loads[t - 1].values
        gen_vars: dict[str, dict[int, int]] = {}
        for gen in fleet:
            profile = _profile_values(gen, cf_map, hours)
            per_hour = {}
            obj = disc * (gen.variable_cost + tax * gen.co2_rate)
            for h in rep:
                var = model.add_var(name=f"g[{gen.name},{t},{h}]", obj=obj)
                problem._add_cost("variable_carbon", var, obj)
                per_hour[h] = var
                model.add_row(
                    {
                        var: 1.0,
                        problem.ngo_vars[gen.name][t - 1]:
                            -gen.unit_capacity_mw * float(profile[h]),
                    },
                    "<=",
                    0.0,
                    name=f"cap[{gen.name},{t},{h}]",
                )
            gen_vars[gen.name] = per_hour
        for h in rep:
            obj = disc * cfg.unserved_energy_penalty
            uns = model.add_var(name=f"uns[{t},{h}]", obj=obj)
            problem._add_cost("unserved_penalty", uns, obj)
            coeffs = {gen_vars[gen.name][h]: 1.0 for gen in fleet}
            coeffs[uns] = 1.0
            model.add_row(coeffs, "=", float(load_t[h]), name=f"lb[{t},{h}]")

    if with_margins:
        for t in range(1, years + 1):
            coeffs = {}
            for gen in fleet:
                credit = (
                    cfg.renewable_credit.get(gen.name, 0.0)
                    if gen.is_renewable
                    else 1.0
                )
                coeffs[problem.ngo_vars[gen.name][t - 1]] = (
                    credit * gen.unit_capacity_mw
                )
            rhs = (1.0 + margins[t - 1]) * peaks[t - 1]
            model.add_row(coeffs, ">=", rhs, name=f"rm[{t}]")
    return problem


def build_gep_rm(
    fleet: Sequence[GeneratorType],
    cfg: GepConfig,
    base_load: HourlySeries,
    cf_map: Mapping[str, HourlySeries],
) -> GepProblem:
    """Expansion model with annual reserve-margin rows.

    Firm capacity (thermal at nameplate, renewables at their credit)
    must exceed each year's peak load by that year's margin.
    """
    return _build_core(
        fleet, cfg, base_load, cf_map,
        with_margins=True, extra_caps={}, variant="rm",
    )


def _check_fixed_counts(
    fleet_by_name: Mapping[str, GeneratorType],
    partitions: Mapping[int, FeaturePartition],
) -> None:
    """Reject fixed counts that no count-balance path can realize."""
    fixed_years: dict[str, list[tuple[int, int]]] = {}
    for year in sorted(partitions):
        part = partitions[year]
        for name, value in part.fixed_counts.items():
            fixed_years.setdefault(name, []).append((year, value))
    for name, entries in fixed_years.items():
        gen = fleet_by_name[name]
        for (_, before), (year, after) in zip(entries, entries[1:]):
            if gen.category == "new" and after < before:
                raise InfeasibleError(
                    f"{name!r}: fixed count drops from {before} to {after} in "
                    f"year {year}, but new units cannot be retired"
                )
            if gen.category == "old" and after > before:
                raise InfeasibleError(
                    f"{name!r}: fixed count rises from {before} to {after} in "
                    f"year {year}, but old units cannot be added"
                )
        for year, value in entries:
            if gen.category == "old":
                if value > gen.initial_units:
                    raise InfeasibleError(
                        f"{name!r}: fixed count {value} exceeds the "
                        f"{gen.initial_units} initial units"
                    )
                if (
                    gen.lifetime_expiry_year is not None
                    and year > gen.lifetime_expiry_year
                    and value > 0
                ):
                    raise InfeasibleError(
                        f"{name!r}: fixed count {value} in year {year} is after "
                        f"the lifetime expiry year {gen.lifetime_expiry_year}"
                    )


def build_gep_rvc(
    fleet: Sequence[GeneratorType],
    cfg: GepConfig,
    base_load: HourlySeries,
    cf_map: Mapping[str, HourlySeries],
    disjunctions: Mapping[int, Disjunction],
    partitions: Mapping[int, FeaturePartition],
) -> GepProblem:
    """Expansion model with reliability-verification constraints.

    Margin rows are dropped.  In every year with a partition the
    nonfeature counts are pinned by equality rows; in every constrained
    year (a key of ``disjunctions``) the feature counts get the
    disjunction's box bounds and its hull encoding.  All other rows
    match the reserve-margin variant.
    """
    fleet_by_name = {gen.name: gen for gen in fleet}
    years = cfg.horizon.num_years
    for year, part in partitions.items():
        if part.year != year:
            raise ValidationError(
                f"partition keyed {year} carries year {part.year}"
            )
        if not 1 <= year <= years:
            raise ValidationError(f"partition year {year} outside the horizon")
        unknown = sorted(
            (set(part.fixed_counts) | part.feature_new | part.feature_old)
            - set(fleet_by_name)
        )
        if unknown:
            raise ValidationError(
                f"year {year}: partition references undeclared types {unknown}"
            )
    for year, disj in disjunctions.items():
        if disj.year != year:
            raise ValidationError(f"disjunction keyed {year} carries year {disj.year}")
        if year not in partitions:
            raise ValidationError(
                f"constrained year {year} has no feature partition"
            )
        expected = tuple(partitions[year].feature_names())
        if tuple(disj.feature_names) != expected:
            raise ValidationError(
                f"year {year}: disjunction features {list(disj.feature_names)} "
                f"do not match partition features {list(expected)}"
            )
    _check_fixed_counts(fleet_by_name, partitions)

    # a feature count may need to reach its box upper bound
    extra_caps: dict[str, int] = {}
    for year, disj in disjunctions.items():
        box = disj.regions[0].box
        for name in disj.feature_names:
            extra_caps[name] = max(extra_caps.get(name, 0), int(box.upper[name]))

    problem = _build_core(
        fleet, cfg, base_load, cf_map,
        with_margins=False, extra_caps=extra_caps, variant="rvc",
    )
    model = problem.model

    for year in sorted(partitions):
        part = partitions[year]
        for name in sorted(part.fixed_counts):
            model.add_row(
                {problem.ngo_vars[name][year - 1]: 1.0},
                "=",
                float(part.fixed_counts[name]),
                name=f"fix[{name},{year}]",
            )

    for year in sorted(disjunctions):
        disj = disjunctions[year]
        box = disj.regions[0].box
        x_ids = []
        for name in disj.feature_names:
            gen = fleet_by_name[name]
            if (
                gen.lifetime_expiry_year is not None
                and year > gen.lifetime_expiry_year
                and box.upper[name] > 0
            ):
                raise ValidationError(
                    f"{name!r}: year {year} box allows units past the lifetime "
                    f"expiry year {gen.lifetime_expiry_year}"
                )
            var_id = problem.ngo_vars[name][year - 1]
            model.set_var_bounds(
                var_id, float(box.lower[name]), float(box.upper[name])
            )
            x_ids.append(var_id)
        problem.encodings[year] = encode_disjunction(model, disj, x_ids)
        problem.disjunctions[year] = disj
    return problem


def evaluate_plan_lolh(
    plan: Plan,
    fleet: Sequence[GeneratorType],
    base_load: HourlySeries,
    cf_map: Mapping[str, HourlySeries],
    cfg: AdequacyConfig,
) -> list[ReliabilityResult]:
    """Adequacy of each planning year's mix under that year's scaled demand."""
    results = []
    for t, mix in enumerate(plan.mixes, start=1):
        load_t = scale_demand(base_load, plan.horizon, t)
        results.append(simulate_lolh(fleet, mix, load_t, cf_map, cfg))
    return results


def write_plan_csv(plan: Plan, path) -> None:
    """Plan as CSV: one row per (year, type) with builds, retirements, ngo."""
    names = sorted(plan.ngo)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["year", "type", "builds", "retirements", "ngo"])
        for t in range(1, plan.horizon.num_years + 1):
            for name in names:
                writer.writerow([
                    t,
                    name,
                    plan.builds.get(name, (0,) * plan.horizon.num_years)[t - 1],
                    plan.retirements.get(name, (0,) * plan.horizon.num_years)[t - 1],
                    plan.ngo[name][t - 1],
                ])


def read_plan_csv(
    path,
    horizon: PlanningHorizon,
    fleet: Sequence[GeneratorType],
    breakdown: CostBreakdown | None = None,
) -> Plan:
    """Rebuild a plan from its CSV; the breakdown travels separately."""
    by_name = {gen.name: gen for gen in fleet}
    years = horizon.num_years
    builds: dict[str, list[int]] = {}
    retire: dict[str, list[int]] = {}
    ngo: dict[str, list[int]] = {}
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["year", "type", "builds", "retirements", "ngo"]:
            raise ParseError(f"{path}:1: unexpected plan header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise ParseError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                year = int(row[0])
                built, retired, count = int(row[2]), int(row[3]), int(row[4])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            name = row[1]
            if name not in by_name:
                raise ParseError(f"{path}:{lineno}: undeclared type {name!r}")
            if not 1 <= year <= years:
                raise ParseError(f"{path}:{lineno}: year {year} outside the horizon")
            gen = by_name[name]
            if gen.category == "new":
                builds.setdefault(name, [0] * years)[year - 1] = built
            else:
                retire.setdefault(name, [0] * years)[year - 1] = retired
            ngo.setdefault(name, [0] * years)[year - 1] = count
    initial = {name: by_name[name].initial_units for name in retire}
    if breakdown is None:
        breakdown = CostBreakdown(0.0, 0.0, 0.0, 0.0)
    return Plan(
        horizon=horizon,
        builds={k: tuple(v) for k, v in builds.items()},
        retirements={k: tuple(v) for k, v in retire.items()},
        ngo={k: tuple(v) for k, v in ngo.items()},
        initial_counts=initial,
        breakdown=breakdown,
    )


def write_breakdown_text(breakdown: CostBreakdown, path) -> None:
    """Objective breakdown as 'key: value' lines, ending with the total."""
    with open(path, "w") as handle:
        for name in _COST_COMPONENTS:
            handle.write(f"{name}: {getattr(breakdown, name)!r}\n")
        handle.write(f"total: {breakdown.total!r}\n")


def read_breakdown_text(path) -> CostBreakdown:
    path = Path(path)
    values: dict[str, float] = {}
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            key, sep, raw = line.partition(":")
            if not sep:
                raise ParseError(f"{path}:{lineno}: expected 'key: value'")
            try:
                values[key.strip()] = float(raw)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    missing = [name for name in _COST_COMPONENTS if name not in values]
    if missing:
        raise ParseError(f"{path}: missing cost components {missing}")
    return CostBreakdown(**{name: values[name] for name in _COST_COMPONENTS})
