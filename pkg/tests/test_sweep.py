"""Margin sweep driver, feature partitioning, and bound relaxation."""

from types import SimpleNamespace

import pytest

from relgep.errors import InfeasibleError, ValidationError
from relgep.fleet import GenerationMix, GeneratorType, HourlySeries, PlanningHorizon
from relgep.sweep import (
    FeatureBounds,
    FeaturePartition,
    SweepConfig,
    SweepMatrix,
    compute_feature_bounds,
    partition_feature_types,
    read_sweep_matrix_csv,
    run_margin_sweep,
    run_margin_sweep_detailed,
    write_sweep_matrix_csv,
)
from relgep.milp import MilpModel


def peaker_type(outage_rate, units=0):
    return GeneratorType(
        name="peaker",
        category="old",
        unit_capacity_mw=100.0,
        forced_outage_rate=outage_rate,
        capital_cost=1_000_000.0,
        fixed_om_cost=0.0,
        variable_cost=20.0,
        co2_rate=0.4,
        initial_units=units,
    )


class ToyBuilder:
    """One-year, one-type stand-in for the expansion model.

    Minimizes the unit count subject to nameplate capacity covering the
    margin-inflated peak, which is what the real model reduces to when
    a single type exists.
    """

    def __init__(self, peak, cap=100.0, upper=10):
        self.peak = peak
        self.cap = cap
        self.upper = upper

    def __call__(self, margins):
        model = MilpModel()
        model.add_var("b", 0, self.upper, integrality="integer", obj=1.0)
        model.add_row({0: self.cap}, ">=", (1.0 + margins[0]) * self.peak)
        problem = SimpleNamespace(model=model)
        problem.extract_plan = lambda sol: SimpleNamespace(
            mixes=[GenerationMix(year=1, counts={"peaker": int(round(sol.x[0]))})]
        )
        return problem


def one_year_setup(outage_rate, loads):
    fleet = [peaker_type(outage_rate)]
    horizon = PlanningHorizon(
        num_years=1, base_load_ref="load", load_growth_rate=0.0
    )
    base_load = HourlySeries("load", loads, "load_mw")
    return fleet, horizon, base_load


class TestSweepConfig:
    def test_defaults(self):
        cfg = SweepConfig()
        assert cfg.initial_step_sizes == (0.01, 0.02, 0.03, 0.04, 0.05)
        assert cfg.lolh_threshold == 2.4

    def test_steps_must_increase(self):
        with pytest.raises(ValidationError, match="increasing"):
            SweepConfig(initial_step_sizes=(0.02, 0.01))

    def test_steps_must_be_positive(self):
        with pytest.raises(ValidationError, match="> 0"):
            SweepConfig(initial_step_sizes=(0.0, 0.1))


class TestRunMarginSweep:
    def test_reliable_at_zero_margin_exits_immediately(self):
        fleet, horizon, load = one_year_setup(0.0, [121.0, 122.0, 123.0])
        cfg = SweepConfig(initial_step_sizes=(0.25,))
        outcome = run_margin_sweep_detailed(
            fleet, horizon, cfg, ToyBuilder(peak=123.0), load, {}
        )
        assert outcome.rounds_used[0.25] == 0
        assert outcome.final_margins[0.25] == (0.0,)
        # rm=0 solution: smallest count with 100 b >= 123
        assert outcome.matrices[0].rows["peaker"] == (2,)

    def test_margins_rise_until_reliable(self):
        # FOR 0.5 halves derated capacity, so the margin must push the
        # nameplate requirement past three units
        fleet, horizon, load = one_year_setup(0.5, [121.0, 122.0, 123.0])
        cfg = SweepConfig(initial_step_sizes=(0.25, 0.5))
        outcome = run_margin_sweep_detailed(
            fleet, horizon, cfg, ToyBuilder(peak=123.0), load, {}
        )
        assert outcome.baseline_lolh == (3.0,)
        assert outcome.final_margins[0.25] == (0.75,)
        assert outcome.rounds_used[0.25] == 3
        assert outcome.final_margins[0.5] == (1.0,)
        assert outcome.rounds_used[0.5] == 2
        assert outcome.matrices[0].rows["peaker"] == (3, 3)

    def test_coarse_step_overshoots_by_one_unit(self):
        fleet, horizon, load = one_year_setup(0.5, [121.0, 122.0, 123.0])
        cfg = SweepConfig(initial_step_sizes=(0.75, 1.5))
        matrices = run_margin_sweep(
            fleet, horizon, cfg, ToyBuilder(peak=123.0), load, {}
        )
        assert matrices[0].rows["peaker"] == (3, 4)

    def test_recorded_plans_meet_threshold(self):
        fleet, horizon, load = one_year_setup(0.5, [121.0, 122.0, 123.0])
        cfg = SweepConfig(initial_step_sizes=(0.25, 0.5, 1.5))
        matrices = run_margin_sweep(
            fleet, horizon, cfg, ToyBuilder(peak=123.0), load, {}
        )
        from relgep.adequacy import AdequacyConfig, simulate_lolh

        for k in range(3):
            count = matrices[0].rows["peaker"][k]
            mix = GenerationMix(year=1, counts={"peaker": count})
            result = simulate_lolh(fleet, mix, load, {}, AdequacyConfig())
            assert result.lolh <= cfg.lolh_threshold

    def test_infeasible_plan_reports_margins(self):
        fleet, horizon, load = one_year_setup(0.5, [121.0, 122.0, 123.0])
        cfg = SweepConfig(initial_step_sizes=(0.75,))
        with pytest.raises(InfeasibleError, match="margins"):
            run_margin_sweep(
                fleet, horizon, cfg, ToyBuilder(peak=123.0, upper=2), load, {}
            )

    def test_nonconverging_sweep_raises(self):
        fleet, horizon, load = one_year_setup(0.5, [121.0, 122.0, 123.0])
        cfg = SweepConfig(initial_step_sizes=(0.25,), max_iterations=2)
        with pytest.raises(ValidationError, match="did not converge"):
            run_margin_sweep(
                fleet, horizon, cfg, ToyBuilder(peak=123.0), load, {}
            )


def make_fleet():
    def gen(name, category, units):
        return GeneratorType(
            name=name,
            category=category,
            unit_capacity_mw=50.0,
            forced_outage_rate=0.05,
            capital_cost=1e6,
            fixed_om_cost=1e4,
            variable_cost=30.0,
            co2_rate=0.4,
            initial_units=units,
        )

    return [
        gen("wind-new", "new", 0),
        gen("ng-ct-new", "new", 0),
        gen("exotic-new", "new", 0),
        gen("coal-old", "old", 40),
        gen("ng-st-old", "old", 16),
    ]


class TestPartition:
    def test_spec_rules(self):
        fleet = make_fleet()
        matrix = SweepMatrix(
            year=1,
            rows={
                "wind-new": (432, 433, 435, 434, 432),
                "ng-ct-new": (3, 4, 3, 5, 4),
                "exotic-new": (0, 0, 0, 0, 0),
                "coal-old": (40, 40, 40, 40, 40),
                "ng-st-old": (16, 12, 8, 16, 10),
            },
        )
        (part,) = partition_feature_types([matrix], fleet)
        assert part.feature_new == {"wind-new", "ng-ct-new"}
        assert part.nonfeature_new == {"exotic-new"}
        assert part.feature_old == {"ng-st-old"}
        assert part.nonfeature_old == {"coal-old"}
        assert part.fixed_counts == {"exotic-new": 0, "coal-old": 40}

    def test_close_to_initial_counts_as_constant(self):
        fleet = make_fleet()
        # one percent of 40 is 0.4, so 40 +- 0 only; widen via tolerance
        matrix = SweepMatrix(
            year=1,
            rows={
                "wind-new": (1, 1, 1, 1, 2),
                "ng-ct-new": (0, 0, 0, 0, 0),
                "exotic-new": (0, 0, 0, 0, 0),
                "coal-old": (40, 41, 40, 39, 40),
                "ng-st-old": (16, 16, 16, 16, 16),
            },
        )
        (part,) = partition_feature_types([matrix], fleet, tolerance=0.05)
        assert "coal-old" in part.nonfeature_old
        assert part.fixed_counts["coal-old"] == 40

    def test_partition_is_exhaustive_and_disjoint(self):
        fleet = make_fleet()
        matrix = SweepMatrix(
            year=2,
            rows={g.name: (1, 2, 3, 4, 5) for g in fleet},
        )
        (part,) = partition_feature_types([matrix], fleet)
        new_names = {g.name for g in fleet if g.category == "new"}
        old_names = {g.name for g in fleet if g.category == "old"}
        assert part.feature_new | part.nonfeature_new == new_names
        assert part.feature_old | part.nonfeature_old == old_names
        assert not part.feature_new & part.nonfeature_new
        assert not part.feature_old & part.nonfeature_old

    def test_unknown_type_rejected(self):
        fleet = make_fleet()
        matrix = SweepMatrix(year=1, rows={"mystery": (1, 1, 1, 1, 1)})
        with pytest.raises(ValidationError, match="mystery"):
            partition_feature_types([matrix], fleet)


class TestFeatureBoundsComputation:
    def setup_year(self, row, category="new", initial=0):
        gen = GeneratorType(
            name="t",
            category=category,
            unit_capacity_mw=2.0,
            forced_outage_rate=0.017,
            capital_cost=1e6,
            fixed_om_cost=1e4,
            variable_cost=0.0,
            co2_rate=0.0,
            initial_units=initial,
        )
        matrix = SweepMatrix(year=1, rows={"t": tuple(row)})
        (part,) = partition_feature_types([matrix], [gen])
        return matrix, part

    def test_relaxed_bounds_example(self):
        matrix, part = self.setup_year([432, 433, 435, 434, 432])
        (bounds,) = compute_feature_bounds(
            [matrix], [part], relax_down=0.0046, relax_up=0.02
        )
        assert bounds.lower["t"] == 430
        assert bounds.upper["t"] == 444
        assert (bounds.sweep_min["t"], bounds.sweep_max["t"]) == (432, 435)

    def test_aggressive_relaxation_example(self):
        matrix, part = self.setup_year([16, 16, 16, 16, 16], "old", 40)
        (bounds,) = compute_feature_bounds(
            [matrix], [part], relax_down=1.0, relax_up=0.5
        )
        assert bounds.lower["t"] == 0
        assert bounds.upper["t"] == 24

    def test_zero_relaxation_collapses_to_extrema(self):
        matrix, part = self.setup_year([5, 5, 5, 5, 5])
        (bounds,) = compute_feature_bounds(
            [matrix], [part], relax_down=0.0, relax_up=0.0
        )
        assert (bounds.lower["t"], bounds.upper["t"]) == (5, 5)

    def test_per_type_relaxation_map(self):
        matrix, part = self.setup_year([10, 12, 11, 10, 12])
        (bounds,) = compute_feature_bounds(
            [matrix], [part], relax_down={"t": 0.5}, relax_up={"other": 9.0}
        )
        assert bounds.lower["t"] == 5
        assert bounds.upper["t"] == 13  # default 5% up: ceil(12.6)

    def test_bounds_always_bracket_extrema(self):
        import numpy as np

        rng = np.random.default_rng(4)
        for _ in range(50):
            row = rng.integers(0, 100, size=5)
            matrix, part = self.setup_year(row.tolist())
            if not part.feature_new:
                continue
            (bounds,) = compute_feature_bounds(
                [matrix], [part],
                relax_down=float(rng.uniform(0, 1)),
                relax_up=float(rng.uniform(0, 2)),
            )
            assert bounds.lower["t"] <= min(row)
            assert bounds.upper["t"] >= max(row)
            assert bounds.lower["t"] >= 0

    def test_invalid_relaxations_rejected(self):
        matrix, part = self.setup_year([3, 4, 5, 4, 3])
        with pytest.raises(ValidationError, match="relax_down"):
            compute_feature_bounds([matrix], [part], relax_down=1.5)
        with pytest.raises(ValidationError, match="relax_up"):
            compute_feature_bounds([matrix], [part], relax_up=-0.1)


class TestSerialization:
    def test_matrix_csv_round_trip(self, tmp_path):
        matrix = SweepMatrix(
            year=3, rows={"a": (1, 2, 3), "b": (0, 0, 1)}
        )
        steps = (0.01, 0.02, 0.03)
        path = tmp_path / "matrix_year3.csv"
        write_sweep_matrix_csv(matrix, steps, path)
        back, back_steps = read_sweep_matrix_csv(path, year=3)
        assert back == matrix
        assert back_steps == steps

    def test_partition_dict_round_trip(self):
        part = FeaturePartition(
            year=2,
            feature_new=frozenset({"w"}),
            feature_old=frozenset(),
            nonfeature_new=frozenset({"x"}),
            nonfeature_old=frozenset({"c"}),
            fixed_counts={"x": 0, "c": 40},
        )
        assert FeaturePartition.from_dict(part.to_dict()) == part

    def test_bounds_dict_round_trip(self):
        bounds = FeatureBounds(
            year=1,
            lower={"w": 430}, upper={"w": 444},
            sweep_min={"w": 432}, sweep_max={"w": 435},
        )
        assert FeatureBounds.from_dict(bounds.to_dict()) == bounds

    def test_bounds_invariants_enforced(self):
        with pytest.raises(ValidationError, match="exceeds sweep minimum"):
            FeatureBounds(
                year=1, lower={"w": 433}, upper={"w": 444},
                sweep_min={"w": 432}, sweep_max={"w": 435},
            )
