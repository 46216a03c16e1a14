"""Adequacy simulation: derated capacity, Monte Carlo LOLH, labeling.

The Monte Carlo path is checked against an exact oracle that enumerates
every combination of unit outage states per hour.
"""

import numpy as np
import pytest

from relgep.adequacy import (
    AdequacyConfig,
    ReliabilityResult,
    available_capacity_derated,
    counter_uniform,
    label_sample,
    simulate_lolh,
)
from relgep.errors import ValidationError
from relgep.fleet import GenerationMix, GeneratorType, HourlySeries

from _oracles import exact_lolh, lolh_standard_error


def thermal(name, cap, outage_rate, category="old", units=0):
    return GeneratorType(
        name=name,
        category=category,
        unit_capacity_mw=cap,
        forced_outage_rate=outage_rate,
        capital_cost=0.0,
        fixed_om_cost=0.0,
        variable_cost=10.0,
        co2_rate=0.0,
        initial_units=units,
    )


def wind(name, cap, outage_rate, profile="wind_cf"):
    return GeneratorType(
        name=name,
        category="new",
        unit_capacity_mw=cap,
        forced_outage_rate=outage_rate,
        capital_cost=0.0,
        fixed_om_cost=0.0,
        variable_cost=0.0,
        co2_rate=0.0,
        is_renewable=True,
        profile_ref=profile,
    )


def load_series(values):
    return HourlySeries("load", values, "load_mw")


def cf_series(values, name="wind_cf"):
    return HourlySeries(name, values, "capacity_factor")


class TestCounterUniform:
    def test_values_in_unit_interval(self):
        vals = counter_uniform(0, np.arange(10_000, dtype=np.uint64))
        assert np.all(vals >= 0.0) and np.all(vals < 1.0)

    def test_order_independence(self):
        grid = counter_uniform(
            7, 3, 1,
            np.arange(5, dtype=np.uint64)[:, None],
            np.arange(4, dtype=np.uint64)[None, :],
        )
        for h in range(5):
            for r in range(4):
                assert float(grid[h, r]) == float(counter_uniform(7, 3, 1, h, r))

    def test_seed_changes_stream(self):
        a = counter_uniform(1, np.arange(100, dtype=np.uint64))
        b = counter_uniform(2, np.arange(100, dtype=np.uint64))
        assert not np.array_equal(a, b)

    def test_approximately_uniform(self):
        vals = counter_uniform(0, np.arange(1_000_000, dtype=np.uint64))
        assert abs(vals.mean() - 0.5) < 0.002


class TestDeratedCapacity:
    def test_thermal_example(self):
        fleet = [thermal("coal-st", 100.0, 0.079)]
        mix = GenerationMix(year=1, counts={"coal-st": 2})
        assert available_capacity_derated(fleet, mix, {}, 0) == pytest.approx(184.2)

    def test_empty_mix(self):
        fleet = [thermal("coal-st", 100.0, 0.079)]
        mix = GenerationMix(year=1, counts={})
        assert available_capacity_derated(fleet, mix, {}, 0) == 0.0

    def test_wind_example(self):
        fleet = [wind("wind", 50.0, 0.017)]
        mix = GenerationMix(year=1, counts={"wind": 3})
        cf_map = {"wind_cf": cf_series([0.5])}
        got = available_capacity_derated(fleet, mix, cf_map, 0)
        assert got == pytest.approx(73.725)

    def test_missing_profile_errors(self):
        fleet = [wind("wind", 50.0, 0.017)]
        mix = GenerationMix(year=1, counts={"wind": 1})
        with pytest.raises(ValidationError, match="wind_cf"):
            available_capacity_derated(fleet, mix, {}, 0)


class TestSimulateLolhDerated:
    def test_zero_load_never_loses(self):
        fleet = [thermal("gas", 10.0, 0.1)]
        mix = GenerationMix(year=1, counts={"gas": 1})
        result = simulate_lolh(
            fleet, mix, load_series(np.zeros(24)), {}, AdequacyConfig()
        )
        assert result.lolh == 0.0 and result.eue_mwh == 0.0

    def test_empty_mix_loses_every_positive_hour(self):
        fleet = [thermal("gas", 10.0, 0.1)]
        mix = GenerationMix(year=1, counts={})
        result = simulate_lolh(
            fleet, mix, load_series(np.full(24, 5.0)), {}, AdequacyConfig()
        )
        assert result.lolh == 24.0

    def test_exact_tie_counts_as_served(self):
        # 1 unit of 100 MW, FOR 0.2: derated capacity exactly 80
        fleet = [thermal("gas", 100.0, 0.2)]
        mix = GenerationMix(year=1, counts={"gas": 1})
        result = simulate_lolh(
            fleet, mix, load_series([80.0, 80.0001]), {}, AdequacyConfig()
        )
        assert result.lolh == 1.0

    def test_eue_accumulates_shortfall(self):
        fleet = [thermal("gas", 100.0, 0.0)]
        mix = GenerationMix(year=1, counts={"gas": 1})
        result = simulate_lolh(
            fleet, mix, load_series([150.0, 90.0, 130.0]), {}, AdequacyConfig()
        )
        assert result.lolh == 2.0
        assert result.eue_mwh == pytest.approx(50.0 + 30.0)

    def test_adding_a_unit_never_hurts(self):
        fleet = [thermal("a", 30.0, 0.1), thermal("b", 45.0, 0.05)]
        load = load_series(np.linspace(20, 160, 24))
        cfg = AdequacyConfig()
        rng = np.random.default_rng(3)
        for _ in range(20):
            counts = {"a": int(rng.integers(0, 4)), "b": int(rng.integers(0, 4))}
            base = simulate_lolh(
                fleet, GenerationMix(year=1, counts=counts), load, {}, cfg
            ).lolh
            for name in counts:
                bigger = dict(counts)
                bigger[name] += 1
                more = simulate_lolh(
                    fleet, GenerationMix(year=1, counts=bigger), load, {}, cfg
                ).lolh
                assert more <= base


class TestSimulateLolhMonteCarlo:
    def test_single_unit_analytic(self):
        # unit up with prob 0.5 each hour; load below capacity, so
        # lolh expectation over 10 hours is exactly 5
        fleet = [thermal("gas", 100.0, 0.5)]
        mix = GenerationMix(year=1, counts={"gas": 1})
        cfg = AdequacyConfig(mode="monte_carlo", replications=100_000, seed=11)
        result = simulate_lolh(
            fleet, mix, load_series(np.full(10, 60.0)), {}, cfg
        )
        assert result.lolh == pytest.approx(5.0, abs=0.1)

    def test_matches_enumeration_oracle(self):
        fleet = [thermal("a", 100.0, 0.2), thermal("b", 60.0, 0.1)]
        mix = GenerationMix(year=1, counts={"a": 1, "b": 1})
        load_values = np.linspace(40, 175, 24)
        reps = 40_000
        cfg = AdequacyConfig(mode="monte_carlo", replications=reps, seed=5)
        result = simulate_lolh(fleet, mix, load_series(load_values), {}, cfg)
        expected, loss_prob, eue_exact = exact_lolh(fleet, mix, load_values, {})
        se = lolh_standard_error(loss_prob, reps)
        assert abs(result.lolh - expected) <= 3.0 * se
        assert result.eue_mwh == pytest.approx(eue_exact, rel=0.05)

    def test_renewable_profile_applies(self):
        fleet = [wind("wind", 100.0, 0.1)]
        mix = GenerationMix(year=1, counts={"wind": 2})
        cf_map = {"wind_cf": cf_series([1.0, 0.25, 0.0, 0.6])}
        load_values = np.full(4, 110.0)
        reps = 40_000
        cfg = AdequacyConfig(mode="monte_carlo", replications=reps, seed=9)
        result = simulate_lolh(fleet, mix, load_series(load_values), cf_map, cfg)
        expected, loss_prob, _ = exact_lolh(fleet, mix, load_values, cf_map)
        se = lolh_standard_error(loss_prob, reps)
        assert abs(result.lolh - expected) <= max(3.0 * se, 1e-9)

    def test_zero_outage_matches_derated(self):
        fleet = [thermal("gas", 50.0, 0.0), wind("wind", 20.0, 0.0)]
        mix = GenerationMix(year=1, counts={"gas": 2, "wind": 3})
        cf_map = {"wind_cf": cf_series(np.linspace(0, 1, 24))}
        load = load_series(np.linspace(30, 150, 24))
        derated = simulate_lolh(fleet, mix, load, cf_map, AdequacyConfig())
        mc = simulate_lolh(
            fleet, mix, load, cf_map,
            AdequacyConfig(mode="monte_carlo", replications=50, seed=1),
        )
        assert mc.lolh == derated.lolh
        assert mc.eue_mwh == pytest.approx(derated.eue_mwh, abs=1e-9)

    def test_deterministic_for_fixed_seed(self):
        fleet = [thermal("a", 100.0, 0.2), thermal("b", 60.0, 0.1)]
        mix = GenerationMix(year=1, counts={"a": 2, "b": 1})
        load = load_series(np.linspace(40, 260, 24))
        cfg = AdequacyConfig(mode="monte_carlo", replications=500, seed=42)
        first = simulate_lolh(fleet, mix, load, {}, cfg)
        second = simulate_lolh(fleet, mix, load, {}, cfg)
        assert first == second

    def test_seed_changes_result(self):
        fleet = [thermal("a", 100.0, 0.3)]
        mix = GenerationMix(year=1, counts={"a": 1})
        load = load_series(np.full(24, 50.0))
        a = simulate_lolh(
            fleet, mix, load, {},
            AdequacyConfig(mode="monte_carlo", replications=200, seed=1),
        )
        b = simulate_lolh(
            fleet, mix, load, {},
            AdequacyConfig(mode="monte_carlo", replications=200, seed=2),
        )
        assert a.lolh != b.lolh


class TestValidation:
    def test_mode_checked(self):
        with pytest.raises(ValidationError, match="mode"):
            AdequacyConfig(mode="exact")

    def test_derated_requires_single_replication(self):
        with pytest.raises(ValidationError, match="replications"):
            AdequacyConfig(mode="derated", replications=10)

    def test_replications_positive(self):
        with pytest.raises(ValidationError, match="replications"):
            AdequacyConfig(mode="monte_carlo", replications=0)

    def test_threshold_positive(self):
        with pytest.raises(ValidationError, match="lolh_threshold"):
            AdequacyConfig(lolh_threshold=0.0)

    def test_unknown_type_in_mix(self):
        fleet = [thermal("gas", 50.0, 0.1)]
        mix = GenerationMix(year=1, counts={"coal": 1})
        with pytest.raises(ValidationError, match="coal"):
            simulate_lolh(
                fleet, mix, load_series([10.0]), {}, AdequacyConfig()
            )

    def test_profile_length_mismatch(self):
        fleet = [wind("wind", 50.0, 0.1)]
        mix = GenerationMix(year=1, counts={"wind": 1})
        cf_map = {"wind_cf": cf_series([0.5, 0.5])}
        with pytest.raises(ValidationError, match="hours"):
            simulate_lolh(
                fleet, mix, load_series([10.0, 10.0, 10.0]), cf_map,
                AdequacyConfig(),
            )

    def test_load_series_kind_checked(self):
        fleet = [thermal("gas", 50.0, 0.1)]
        mix = GenerationMix(year=1, counts={"gas": 1})
        with pytest.raises(ValidationError, match="load"):
            simulate_lolh(fleet, mix, cf_series([0.5]), {}, AdequacyConfig())


class TestLabeling:
    def test_reliable_year(self):
        result = ReliabilityResult(2.34, 0.0, "derated", 1, 0)
        assert label_sample(result, AdequacyConfig()) == 1

    def test_unreliable_year(self):
        result = ReliabilityResult(44.58, 100.0, "derated", 1, 0)
        assert label_sample(result, AdequacyConfig()) == 0

    def test_threshold_is_inclusive(self):
        result = ReliabilityResult(2.4, 0.0, "derated", 1, 0)
        assert label_sample(result, AdequacyConfig()) == 1
