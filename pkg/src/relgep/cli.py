"""Stage-by-stage command-line pipeline with persisted artifacts.

Each subcommand runs one stage of the reliability-verified expansion
pipeline, reading earlier stages' files from the output directory and
writing its own, so every stage can be rerun or inspected on its own.
``pipeline`` runs all stages in order.  Every stochastic step draws
from the one configured seed, so a rerun with identical inputs writes
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import yaml

from .adequacy import AdequacyConfig
from .errors import (
    InfeasibleError,
    MissingArtifactError,
    ParseError,
    RelgepError,
    ValidationError,
)
from .fleet import (
    PlanningHorizon,
    load_fleet,
    load_series,
    read_yaml,
    scale_demand,
)
from .gep import (
    GepConfig,
    build_gep_rm,
    build_gep_rvc,
    evaluate_plan_lolh,
    read_breakdown_text,
    read_plan_csv,
    write_breakdown_text,
    write_plan_csv,
)
from .milp import solve_milp, write_mps
from .sampler import (
    build_dataset,
    dataset_summary,
    enumerate_grid,
    read_dataset_csv,
    write_dataset_csv,
    write_summary_text,
)
from .sweep import (
    FeatureBounds,
    FeaturePartition,
    SweepConfig,
    compute_feature_bounds,
    partition_feature_types,
    run_margin_sweep_detailed,
    write_sweep_matrix_csv,
)
from .wodt import (
    LbfgsConfig,
    extract_feasible_regions,
    read_disjunction_text,
    read_tree_text,
    train_wodt,
    write_disjunction_text,
    write_tree_text,
)

__all__ = [
    "STAGES",
    "RunConfig",
    "load_run_config",
    "run_stage",
    "run_pipeline",
    "main",
]

STAGES = (
    "sweep",
    "label",
    "train",
    "extract",
    "encode",
    "solve-rm",
    "solve-rvc",
    "report",
)

# stages with nothing to do when no year needs a reliability constraint
_CONSTRAINED_ONLY = ("train", "extract", "encode")


@dataclass(frozen=True)
class RunConfig:
    """One run's inputs, stage settings, output directory, and seed."""

    fleet_path: Path
    load_path: Path
    profile_paths: Mapping[str, Path]
    horizon: PlanningHorizon
    adequacy: AdequacyConfig
    sweep: SweepConfig
    partition_tolerance: float
    relax_down: object
    relax_up: object
    stride: object
    max_samples: int | None
    max_depth: int
    lbfgs: LbfgsConfig
    min_leaf_weight: float
    min_train_accuracy: float
    unserved_energy_penalty: float
    discount_rate: float
    renewable_credit: Mapping[str, float]
    representative_hours: tuple[int, ...] | None
    out_dir: Path
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "profile_paths", dict(self.profile_paths))
        object.__setattr__(self, "renewable_credit", dict(self.renewable_credit))
        if not 0.0 < self.min_train_accuracy <= 1.0:
            raise ValidationError(
                f"min_train_accuracy must lie in (0, 1], got {self.min_train_accuracy}"
            )


def _apply_override(raw: dict, spec: str) -> None:
    """Apply one ``key=value`` override; dotted keys walk into sections."""
    key, sep, value = spec.partition("=")
    if not sep or not key:
        raise ValidationError(f"override {spec!r} must look like key=value")
    try:
        parsed = yaml.safe_load(value)
    except yaml.YAMLError as exc:
        raise ValidationError(f"override {spec!r}: bad value ({exc})") from exc
    node = raw
    parts = key.split(".")
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ValidationError(
                f"override {spec!r}: {part!r} is not a config section"
            )
        node = child
    node[parts[-1]] = parsed


def _section(raw: Mapping, name: str, allowed: tuple[str, ...]) -> dict:
    value = raw.get(name) or {}
    if not isinstance(value, Mapping):
        raise ValidationError(f"config section {name!r} must be a mapping")
    unknown = sorted(set(value) - set(allowed))
    if unknown:
        raise ValidationError(f"config section {name!r} has unknown keys {unknown}")
    return dict(value)


def _input_path(base: Path, raw: Mapping, key: str) -> Path:
    value = raw.get(key)
    if not isinstance(value, str) or not value:
        raise ValidationError(f"config needs a {key!r} path")
    path = (base / value).resolve() if not Path(value).is_absolute() else Path(value)
    if not path.is_file():
        raise ValidationError(f"{key} file {path} does not exist")
    return path


_TOP_KEYS = (
    "fleet", "load", "profiles", "horizon", "adequacy", "sweep",
    "sampler", "wodt", "gep", "out", "seed",
)


def load_run_config(
    config_path,
    out=None,
    seed: int | None = None,
    overrides=(),
) -> RunConfig:
    """Parse a run config; relative paths resolve against the file."""
    config_path = Path(config_path)
    raw = read_yaml(config_path)
    if not isinstance(raw, dict):
        raise ValidationError(f"{config_path}: config must be a mapping")
    for spec in overrides:
        _apply_override(raw, spec)
    unknown = sorted(set(raw) - set(_TOP_KEYS))
    if unknown:
        raise ValidationError(f"{config_path}: unknown config keys {unknown}")
    base = config_path.resolve().parent

    fleet_path = _input_path(base, raw, "fleet")
    load_path = _input_path(base, raw, "load")
    profiles_raw = raw.get("profiles") or {}
    if not isinstance(profiles_raw, Mapping):
        raise ValidationError("config section 'profiles' must be a mapping")
    profile_paths = {
        str(name): _input_path(base, profiles_raw, str(name))
        for name in sorted(profiles_raw)
    }

    horizon_raw = _section(
        raw, "horizon", ("num_years", "load_growth_rate", "carbon_tax_schedule")
    )
    if "num_years" not in horizon_raw:
        raise ValidationError("config section 'horizon' needs num_years")
    horizon_kwargs = {"num_years": int(horizon_raw["num_years"])}
    if "load_growth_rate" in horizon_raw:
        horizon_kwargs["load_growth_rate"] = float(horizon_raw["load_growth_rate"])
    if "carbon_tax_schedule" in horizon_raw:
        schedule = horizon_raw["carbon_tax_schedule"]
        if schedule is not None:
            horizon_kwargs["carbon_tax_schedule"] = tuple(
                float(v) for v in schedule
            )
    horizon = PlanningHorizon(base_load_ref=load_path.name, **horizon_kwargs)

    if seed is None:
        if "seed" not in raw:
            raise ValidationError("config needs a seed")
        seed = raw["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValidationError(f"seed must be an integer, got {seed!r}")

    adequacy_raw = _section(
        raw, "adequacy", ("mode", "replications", "lolh_threshold")
    )
    adequacy = AdequacyConfig(
        mode=str(adequacy_raw.get("mode", "derated")),
        replications=int(adequacy_raw.get("replications", 1)),
        seed=seed,
        lolh_threshold=float(adequacy_raw.get("lolh_threshold", 2.4)),
    )

    sweep_raw = _section(
        raw, "sweep",
        ("step_sizes", "max_iterations", "partition_tolerance",
         "relax_down", "relax_up"),
    )
    sweep_kwargs = {"lolh_threshold": adequacy.lolh_threshold}
    if "step_sizes" in sweep_raw:
        sweep_kwargs["initial_step_sizes"] = tuple(
            float(s) for s in sweep_raw["step_sizes"]
        )
    if "max_iterations" in sweep_raw:
        sweep_kwargs["max_iterations"] = int(sweep_raw["max_iterations"])
    sweep_cfg = SweepConfig(**sweep_kwargs)

    sampler_raw = _section(raw, "sampler", ("stride", "max_samples"))
    max_samples = sampler_raw.get("max_samples")
    if max_samples is not None:
        max_samples = int(max_samples)

    wodt_raw = _section(
        raw, "wodt",
        ("max_depth", "lbfgs_max_iter", "lbfgs_memory", "lbfgs_tolerance",
         "min_leaf_weight", "min_train_accuracy"),
    )
    lbfgs = LbfgsConfig(
        max_iter=int(wodt_raw.get("lbfgs_max_iter", 100)),
        memory=int(wodt_raw.get("lbfgs_memory", 10)),
        tolerance=float(wodt_raw.get("lbfgs_tolerance", 1e-6)),
    )

    gep_raw = _section(
        raw, "gep",
        ("unserved_energy_penalty", "discount_rate", "renewable_credit",
         "representative_hours"),
    )
    credit_raw = gep_raw.get("renewable_credit") or {}
    if not isinstance(credit_raw, Mapping):
        raise ValidationError("gep.renewable_credit must be a mapping")
    rep_hours = gep_raw.get("representative_hours")
    if rep_hours is not None:
        rep_hours = tuple(int(h) for h in rep_hours)

    if out is None:
        out = raw.get("out")
        if not isinstance(out, str) or not out:
            raise ValidationError("config needs an 'out' directory")
        out_dir = (base / out).resolve() if not Path(out).is_absolute() else Path(out)
    else:
        out_dir = Path(out).resolve()

    return RunConfig(
        fleet_path=fleet_path,
        load_path=load_path,
        profile_paths=profile_paths,
        horizon=horizon,
        adequacy=adequacy,
        sweep=sweep_cfg,
        partition_tolerance=float(sweep_raw.get("partition_tolerance", 0.01)),
        relax_down=sweep_raw.get("relax_down"),
        relax_up=sweep_raw.get("relax_up"),
        stride=sampler_raw.get("stride"),
        max_samples=max_samples,
        max_depth=int(wodt_raw.get("max_depth", 6)),
        lbfgs=lbfgs,
        min_leaf_weight=float(wodt_raw.get("min_leaf_weight", 1.0)),
        min_train_accuracy=float(wodt_raw.get("min_train_accuracy", 0.999)),
        unserved_energy_penalty=float(
            gep_raw.get("unserved_energy_penalty", 10_000.0)
        ),
        discount_rate=float(gep_raw.get("discount_rate", 0.0)),
        renewable_credit={str(k): float(v) for k, v in credit_raw.items()},
        representative_hours=rep_hours,
        out_dir=out_dir,
        seed=seed,
    )


class _Artifacts:
    """File layout under the output directory."""

    def __init__(self, root: Path):
        self.root = root
        self.sweep_dir = root / "sweep"
        self.datasets_dir = root / "datasets"
        self.trees_dir = root / "trees"
        self.disjunctions_dir = root / "disjunctions"
        self.encode_dir = root / "encode"
        self.plans_dir = root / "plans"
        self.report_dir = root / "report"
        self.sweep_summary = self.sweep_dir / "summary.yaml"
        self.partitions = self.sweep_dir / "partitions.yaml"
        self.bounds = self.sweep_dir / "bounds.yaml"
        self.rvc_mps = self.encode_dir / "rvc_model.mps"
        self.encoding_summary = self.encode_dir / "encoding.yaml"
        self.rm_plan = self.plans_dir / "rm_plan.csv"
        self.rm_breakdown = self.plans_dir / "rm_breakdown.txt"
        self.rvc_plan = self.plans_dir / "rvc_plan.csv"
        self.rvc_breakdown = self.plans_dir / "rvc_breakdown.txt"
        self.report_text = self.report_dir / "report.txt"
        self.report_lolh = self.report_dir / "lolh_by_year.csv"
        self.report_margins = self.report_dir / "capacity_margins_by_year.csv"
        self.report_costs = self.report_dir / "cost_split.csv"

    def sweep_matrix(self, year: int) -> Path:
        return self.sweep_dir / f"matrix_year{year}.csv"

    def dataset(self, year: int) -> Path:
        return self.datasets_dir / f"year{year}.csv"

    def dataset_summary(self, year: int) -> Path:
        return self.datasets_dir / f"year{year}_summary.txt"

    def tree(self, year: int) -> Path:
        return self.trees_dir / f"year{year}.txt"

    def disjunction(self, year: int) -> Path:
        return self.disjunctions_dir / f"year{year}.txt"


def _artifact(path: Path, producing_stage: str) -> Path:
    if not path.is_file():
        raise MissingArtifactError(path, producing_stage)
    return path


def _read_artifact(reader, path: Path, producing_stage: str):
    """Read a prior stage's file; parse errors name that stage."""
    _artifact(path, producing_stage)
    try:
        return reader(str(path))
    except ParseError as exc:
        raise ParseError(
            f"{exc} (artifact of the '{producing_stage}' stage)"
        ) from exc


def _write_yaml(data, path: Path) -> None:
    with open(path, "w") as handle:
        yaml.safe_dump(data, handle, sort_keys=True)


def _load_inputs(cfg: RunConfig):
    fleet = load_fleet(cfg.fleet_path)
    base_load = load_series(cfg.load_path, "load_mw", name=cfg.load_path.name)
    cf_map = {
        name: load_series(path, "capacity_factor", name=name)
        for name, path in sorted(cfg.profile_paths.items())
    }
    return fleet, base_load, cf_map


def _gep_config(cfg: RunConfig, margins=()) -> GepConfig:
    return GepConfig(
        horizon=cfg.horizon,
        representative_hours=cfg.representative_hours,
        unserved_energy_penalty=cfg.unserved_energy_penalty,
        reserve_margins=tuple(margins),
        renewable_credit=cfg.renewable_credit,
        discount_rate=cfg.discount_rate,
    )


def _read_sweep_summary(art: _Artifacts) -> dict:
    data = _read_artifact(read_yaml, art.sweep_summary, "sweep")
    if not isinstance(data, dict) or "constrained_years" not in data:
        raise ParseError(
            f"{art.sweep_summary}: malformed sweep summary "
            "(artifact of the 'sweep' stage)"
        )
    return data


def _constrained_years(art: _Artifacts) -> list[int]:
    return [int(t) for t in _read_sweep_summary(art)["constrained_years"]]


def _read_partitions(art: _Artifacts) -> dict[int, FeaturePartition]:
    rows = _read_artifact(read_yaml, art.partitions, "sweep")
    try:
        parts = [FeaturePartition.from_dict(row) for row in rows]
    except (TypeError, KeyError, ValueError) as exc:
        raise ParseError(
            f"{art.partitions}: malformed partitions ({exc}) "
            "(artifact of the 'sweep' stage)"
        ) from exc
    return {part.year: part for part in parts}


def _read_bounds(art: _Artifacts) -> dict[int, FeatureBounds]:
    rows = _read_artifact(read_yaml, art.bounds, "sweep")
    try:
        bounds = [FeatureBounds.from_dict(row) for row in rows]
    except (TypeError, KeyError, ValueError) as exc:
        raise ParseError(
            f"{art.bounds}: malformed bounds ({exc}) "
            "(artifact of the 'sweep' stage)"
        ) from exc
    return {bnd.year: bnd for bnd in bounds}


def _solve_or_raise(model, what: str):
    sol = solve_milp(model)
    if sol.status == "infeasible":
        raise InfeasibleError(f"{what} is infeasible")
    if sol.status != "optimal":
        raise RelgepError(f"{what} solve ended with status {sol.status}")
    return sol


def stage_sweep(cfg: RunConfig) -> None:
    art = _Artifacts(cfg.out_dir)
    art.sweep_dir.mkdir(parents=True, exist_ok=True)
    fleet, base_load, cf_map = _load_inputs(cfg)

    def gep_builder(margins):
        return build_gep_rm(fleet, _gep_config(cfg, margins), base_load, cf_map)

    outcome = run_margin_sweep_detailed(
        fleet, cfg.horizon, cfg.sweep, gep_builder, base_load, cf_map,
        cfg.adequacy,
    )
    partitions = partition_feature_types(
        outcome.matrices, fleet, tolerance=cfg.partition_tolerance
    )
    bounds = compute_feature_bounds(
        outcome.matrices, partitions,
        relax_down=cfg.relax_down, relax_up=cfg.relax_up,
    )
    constrained = [
        t for t, value in enumerate(outcome.baseline_lolh, start=1)
        if value > cfg.adequacy.lolh_threshold
    ]
    for matrix in outcome.matrices:
        write_sweep_matrix_csv(
            matrix, outcome.step_sizes, art.sweep_matrix(matrix.year)
        )
    summary = {
        "baseline_lolh": [float(v) for v in outcome.baseline_lolh],
        "constrained_years": constrained,
        "lolh_threshold": float(outcome.lolh_threshold),
        "step_sizes": [float(s) for s in outcome.step_sizes],
        "ladders": [
            {
                "step": float(step),
                "rounds": int(outcome.rounds_used[step]),
                "margins": [float(m) for m in outcome.final_margins[step]],
            }
            for step in outcome.step_sizes
        ],
    }
    _write_yaml(summary, art.sweep_summary)
    _write_yaml([partitions[i].to_dict() for i in range(len(partitions))],
                art.partitions)
    _write_yaml([bounds[i].to_dict() for i in range(len(bounds))], art.bounds)
    lolh = ", ".join(f"{v:g}" for v in outcome.baseline_lolh)
    print(f"sweep: baseline lolh [{lolh}]; "
          f"constrained years {constrained if constrained else 'none'}")


def stage_label(cfg: RunConfig) -> None:
    art = _Artifacts(cfg.out_dir)
    constrained = _constrained_years(art)
    if not constrained:
        print("label: no constrained years; nothing to label")
        return
    bounds = _read_bounds(art)
    partitions = _read_partitions(art)
    fleet, base_load, cf_map = _load_inputs(cfg)
    art.datasets_dir.mkdir(parents=True, exist_ok=True)
    for year in constrained:
        if year not in bounds or year not in partitions:
            raise ValidationError(
                f"sweep artifacts carry no feature data for year {year}"
            )
        vectors = enumerate_grid(
            bounds[year], stride=cfg.stride, max_samples=cfg.max_samples,
            seed=cfg.seed,
        )
        load_t = scale_demand(base_load, cfg.horizon, year)
        ds = build_dataset(
            year, vectors, partitions[year], fleet, load_t, cf_map,
            cfg.adequacy, bounds[year], stride=cfg.stride,
            max_samples=cfg.max_samples, seed=cfg.seed,
        )
        write_dataset_csv(ds, art.dataset(year))
        summary = dataset_summary(ds)
        write_summary_text(summary, art.dataset_summary(year))
        print(f"label: year {year}: {summary.count} samples, "
              f"share of reliable labels {summary.label_one_fraction:.3f}")


def stage_train(cfg: RunConfig) -> None:
    art = _Artifacts(cfg.out_dir)
    constrained = _constrained_years(art)
    if not constrained:
        print("train: no constrained years; nothing to train")
        return
    bounds = _read_bounds(art)
    art.trees_dir.mkdir(parents=True, exist_ok=True)
    for year in constrained:
        ds = _read_artifact(
            lambda path: read_dataset_csv(
                path, year, bounds[year], stride=cfg.stride,
                max_samples=cfg.max_samples, seed=cfg.seed,
            ),
            art.dataset(year), "label",
        )
        tree = train_wodt(
            ds, max_depth=cfg.max_depth, lbfgs_cfg=cfg.lbfgs,
            min_leaf_weight=cfg.min_leaf_weight, seed=cfg.seed,
        )
        if tree.train_accuracy < cfg.min_train_accuracy:
            raise ValidationError(
                f"year {year}: train accuracy {tree.train_accuracy:.6f} is "
                f"below the configured floor {cfg.min_train_accuracy}"
            )
        write_tree_text(tree, art.tree(year))
        print(f"train: year {year}: accuracy {tree.train_accuracy:.6f}")


def stage_extract(cfg: RunConfig) -> None:
    art = _Artifacts(cfg.out_dir)
    constrained = _constrained_years(art)
    if not constrained:
        print("extract: no constrained years; nothing to extract")
        return
    bounds = _read_bounds(art)
    art.disjunctions_dir.mkdir(parents=True, exist_ok=True)
    for year in constrained:
        tree = _read_artifact(read_tree_text, art.tree(year), "train")
        disj = extract_feasible_regions(tree, bounds[year])
        write_disjunction_text(disj, art.disjunction(year))
        print(f"extract: year {year}: {len(disj.regions)} reliable regions")


def stage_encode(cfg: RunConfig) -> None:
    art = _Artifacts(cfg.out_dir)
    constrained = _constrained_years(art)
    if not constrained:
        print("encode: no constrained years; nothing to encode")
        return
    partitions = _read_partitions(art)
    disjunctions = {
        year: _read_artifact(read_disjunction_text, art.disjunction(year),
                             "extract")
        for year in constrained
    }
    fleet, base_load, cf_map = _load_inputs(cfg)
    problem = build_gep_rvc(
        fleet, _gep_config(cfg), base_load, cf_map, disjunctions, partitions
    )
    art.encode_dir.mkdir(parents=True, exist_ok=True)
    write_mps(problem.model, art.rvc_mps)
    stats = {
        year: {
            "regions": encoding.num_regions,
            "features": len(encoding.x_var_ids),
            "vars_added": encoding.vars_added(),
            "rows_added": encoding.rows_added(),
        }
        for year, encoding in sorted(problem.encodings.items())
    }
    _write_yaml(stats, art.encoding_summary)
    total_vars = sum(entry["vars_added"] for entry in stats.values())
    total_rows = sum(entry["rows_added"] for entry in stats.values())
    print(f"encode: hull encodings added {total_vars} variables and "
          f"{total_rows} rows over years {constrained}")


def stage_solve_rm(cfg: RunConfig) -> None:
    art = _Artifacts(cfg.out_dir)
    summary = _read_sweep_summary(art)
    ladders = sorted(summary["ladders"], key=lambda entry: entry["step"])
    margins = tuple(float(m) for m in ladders[0]["margins"])
    fleet, base_load, cf_map = _load_inputs(cfg)
    problem = build_gep_rm(fleet, _gep_config(cfg, margins), base_load, cf_map)
    sol = _solve_or_raise(problem.model, "reserve-margin expansion plan")
    plan = problem.extract_plan(sol)
    art.plans_dir.mkdir(parents=True, exist_ok=True)
    write_plan_csv(plan, art.rm_plan)
    write_breakdown_text(plan.breakdown, art.rm_breakdown)
    print(f"solve-rm: margins {[f'{m:g}' for m in margins]}, "
          f"objective {plan.objective:.2f}")


def stage_solve_rvc(cfg: RunConfig) -> None:
    art = _Artifacts(cfg.out_dir)
    constrained = _constrained_years(art)
    partitions = _read_partitions(art)
    disjunctions = {
        year: _read_artifact(read_disjunction_text, art.disjunction(year),
                             "extract")
        for year in constrained
    }
    fleet, base_load, cf_map = _load_inputs(cfg)
    problem = build_gep_rvc(
        fleet, _gep_config(cfg), base_load, cf_map, disjunctions, partitions
    )
    sol = _solve_or_raise(problem.model, "reliability-verified expansion plan")
    plan = problem.extract_plan(sol)
    art.plans_dir.mkdir(parents=True, exist_ok=True)
    write_plan_csv(plan, art.rvc_plan)
    write_breakdown_text(plan.breakdown, art.rvc_breakdown)
    print(f"solve-rvc: constrained years {constrained if constrained else 'none'}, "
          f"objective {plan.objective:.2f}")


def _firm_capacity(fleet, credit: Mapping[str, float], counts: Mapping[str, int]) -> float:
    """Firm MW of one year's mix: thermal at nameplate, renewables at credit."""
    total = 0.0
    for gen in fleet:
        count = counts.get(gen.name, 0)
        factor = credit.get(gen.name, 0.0) if gen.is_renewable else 1.0
        total += count * gen.unit_capacity_mw * factor
    return total


def _investment_cost(plan, fleet, discount_rate: float) -> float:
    """Discounted capital plus fixed O&M recomputed from the plan counts.

    Sums year-major over name-sorted types, so any consumer repeating
    this walk reproduces the figure bit for bit.
    """
    total = 0.0
    by_name = {gen.name: gen for gen in fleet}
    years = plan.horizon.num_years
    for t in range(1, years + 1):
        factor = (1.0 + discount_rate) ** -(t - 1)
        for name in sorted(plan.ngo):
            gen = by_name[name]
            builds = plan.builds.get(name, (0,) * years)[t - 1]
            total += factor * gen.capital_cost * builds
            total += factor * gen.fixed_om_cost * plan.ngo[name][t - 1]
    return total


def stage_report(cfg: RunConfig) -> None:
    art = _Artifacts(cfg.out_dir)
    summary = _read_sweep_summary(art)
    constrained = [int(t) for t in summary["constrained_years"]]
    threshold = float(summary["lolh_threshold"])
    fleet, base_load, cf_map = _load_inputs(cfg)

    rm_breakdown = _read_artifact(read_breakdown_text, art.rm_breakdown, "solve-rm")
    rm_plan = _read_artifact(
        lambda path: read_plan_csv(path, cfg.horizon, fleet, rm_breakdown),
        art.rm_plan, "solve-rm",
    )
    rvc_breakdown = _read_artifact(
        read_breakdown_text, art.rvc_breakdown, "solve-rvc"
    )
    rvc_plan = _read_artifact(
        lambda path: read_plan_csv(path, cfg.horizon, fleet, rvc_breakdown),
        art.rvc_plan, "solve-rvc",
    )

    rm_lolh = [r.lolh for r in
               evaluate_plan_lolh(rm_plan, fleet, base_load, cf_map, cfg.adequacy)]
    rvc_lolh = [r.lolh for r in
                evaluate_plan_lolh(rvc_plan, fleet, base_load, cf_map, cfg.adequacy)]

    years = list(range(1, cfg.horizon.num_years + 1))
    peaks = [float(scale_demand(base_load, cfg.horizon, t).values.max())
             for t in years]
    rm_margin = [
        _firm_capacity(fleet, cfg.renewable_credit, rm_plan.mixes[t - 1].counts)
        / peak - 1.0
        for t, peak in zip(years, peaks)
    ]
    rvc_margin = [
        _firm_capacity(fleet, cfg.renewable_credit, rvc_plan.mixes[t - 1].counts)
        / peak - 1.0
        for t, peak in zip(years, peaks)
    ]

    split = {}
    for method, plan in (("rm-gep", rm_plan), ("rvc-gep", rvc_plan)):
        investment = _investment_cost(plan, fleet, cfg.discount_rate)
        operational = (plan.breakdown.variable_carbon
                       + plan.breakdown.unserved_penalty)
        split[method] = (investment, operational, investment + operational)

    art.report_dir.mkdir(parents=True, exist_ok=True)
    with open(art.report_lolh, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["year", "rm_gep", "rvc_gep"])
        for t in years:
            writer.writerow([t, repr(rm_lolh[t - 1]), repr(rvc_lolh[t - 1])])
    with open(art.report_margins, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["year", "rm_gep", "rvc_gep"])
        for t in years:
            writer.writerow([t, repr(rm_margin[t - 1]), repr(rvc_margin[t - 1])])
    with open(art.report_costs, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "investment", "operational", "total"])
        for method in ("rm-gep", "rvc-gep"):
            investment, operational, total = split[method]
            writer.writerow(
                [method, repr(investment), repr(operational), repr(total)]
            )

    lines = []
    lines.append("reliability-verified expansion report")
    lines.append("=====================================")
    lines.append("")
    lines.append(
        f"constrained years: "
        f"{', '.join(str(t) for t in constrained) if constrained else 'none'}"
        f" (loss-of-load threshold {threshold:g} h/yr)"
    )
    lines.append("")
    lines.append("loss-of-load hours by planning year")
    lines.append(f"{'year':>4}  {'rm-gep':>10}  {'rvc-gep':>10}")
    for t in years:
        lines.append(
            f"{t:>4}  {rm_lolh[t - 1]:>10.4f}  {rvc_lolh[t - 1]:>10.4f}"
        )
    lines.append("")
    lines.append("capacity margin by planning year"
                 " (firm capacity over peak, fraction)")
    lines.append(f"{'year':>4}  {'rm-gep':>10}  {'rvc-gep':>10}")
    for t in years:
        lines.append(
            f"{t:>4}  {rm_margin[t - 1]:>10.4f}  {rvc_margin[t - 1]:>10.4f}"
        )
    lines.append("")
    lines.append("discounted cost totals"
                 " (investment recomputed from the plan artifact)")
    lines.append(f"{'method':<8}  {'investment':>14}  {'operational':>14}"
                 f"  {'total':>14}")
    for method in ("rm-gep", "rvc-gep"):
        investment, operational, total = split[method]
        lines.append(f"{method:<8}  {investment:>14.2f}  {operational:>14.2f}"
                     f"  {total:>14.2f}")
    lines.append("")
    saving = split["rm-gep"][2] - split["rvc-gep"][2]
    lines.append(f"rvc-gep saving versus rm-gep: {saving:.2f}")
    lines.append("")
    with open(art.report_text, "w") as handle:
        handle.write("\n".join(lines))
    print(f"report: wrote {art.report_text.name}, {art.report_lolh.name}, "
          f"{art.report_margins.name}, {art.report_costs.name}")


_STAGE_FUNCS = {
    "sweep": stage_sweep,
    "label": stage_label,
    "train": stage_train,
    "extract": stage_extract,
    "encode": stage_encode,
    "solve-rm": stage_solve_rm,
    "solve-rvc": stage_solve_rvc,
    "report": stage_report,
}


def run_stage(stage: str, cfg: RunConfig) -> None:
    """Run exactly one stage; errors carry the stage name."""
    if stage not in _STAGE_FUNCS:
        raise ValidationError(
            f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}"
        )
    try:
        _STAGE_FUNCS[stage](cfg)
    except RelgepError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = stage
        raise


def run_pipeline(cfg: RunConfig) -> None:
    """Run all stages in order, halting at the first failure."""
    art = _Artifacts(cfg.out_dir)
    for stage in STAGES:
        if stage in _CONSTRAINED_ONLY and not _constrained_years(art):
            print(f"{stage}: skipped; no constrained years")
            continue
        run_stage(stage, cfg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relgep",
        description="Reliability-verified generation expansion pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "sweep": "run the reserve-margin sweep and derive feature boxes",
        "label": "enumerate and label candidate mixes for constrained years",
        "train": "train the reliability classifier per constrained year",
        "extract": "extract reliable regions from the trained trees",
        "encode": "build the constrained expansion model and write MPS",
        "solve-rm": "solve the reserve-margin expansion plan",
        "solve-rvc": "solve the reliability-verified expansion plan",
        "report": "write the comparison report and plot-ready tables",
        "pipeline": "run every stage in order",
    }
    for name in (*STAGES, "pipeline"):
        stage_parser = sub.add_parser(name, help=descriptions[name])
        stage_parser.add_argument(
            "--config", required=True, help="run configuration YAML"
        )
        stage_parser.add_argument(
            "--out", default=None, help="output directory (overrides the config)"
        )
        stage_parser.add_argument(
            "--seed", type=int, default=None, help="seed (overrides the config)"
        )
        stage_parser.add_argument(
            "--stage-override", action="append", default=[],
            metavar="KEY=VALUE",
            help="override one config entry, dotted keys allowed "
                 "(e.g. wodt.max_depth=4)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_run_config(
            args.config, out=args.out, seed=args.seed,
            overrides=args.stage_override,
        )
        if args.command == "pipeline":
            run_pipeline(cfg)
        else:
            run_stage(args.command, cfg)
    except MissingArtifactError as exc:
        _print_error(exc)
        return 4
    except InfeasibleError as exc:
        _print_error(exc)
        return 3
    except RelgepError as exc:
        _print_error(exc)
        return 2
    return 0


def _print_error(exc: RelgepError) -> None:
    stage = getattr(exc, "stage", None)
    prefix = f"stage {stage}: " if stage else ""
    print(f"error: {prefix}{exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
