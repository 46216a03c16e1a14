"""Chronological loss-of-load-hours simulation under forced outages.

Two modes are provided.  ``derated`` treats every unit as available at
its long-run expected fraction ``1 - FOR`` of nameplate, giving a
deterministic hourly capacity profile.  ``monte_carlo`` draws each
unit's hourly availability as an independent Bernoulli(1 - FOR) using a
counter-based random stream keyed by (seed, type, unit, hour,
replication), so results never depend on evaluation order.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .fleet import GenerationMix, GeneratorType, HourlySeries

MODES = ("derated", "monte_carlo")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_64 = float(2.0**-64)

# chunk size (elements) for Monte Carlo draws, bounds peak memory
_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class AdequacyConfig:
    """Simulation mode, replication count, seed, and the labeling threshold."""

    mode: str = "derated"
    replications: int = 1
    seed: int = 0
    lolh_threshold: float = 2.4

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.replications < 1:
            raise ValidationError(
                f"replications must be >= 1, got {self.replications}"
            )
        if self.mode == "derated" and self.replications != 1:
            raise ValidationError("derated mode requires replications = 1")
        if not self.lolh_threshold > 0:
            raise ValidationError(
                f"lolh_threshold must be > 0, got {self.lolh_threshold}"
            )


@dataclass(frozen=True)
class ReliabilityResult:
    """Outcome of one adequacy simulation."""

    lolh: float
    eue_mwh: float
    mode: str
    replications: int
    seed: int

    def __post_init__(self):
        if self.lolh < 0 or self.eue_mwh < 0:
            raise ValidationError("lolh and eue_mwh must be >= 0")
        if self.mode == "derated" and self.replications != 1:
            raise ValidationError("derated mode implies replications = 1")


def _mix64(x: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    # splitmix64 finalizer: full-avalanche 64-bit scramble
    x = np.uint64(x) if np.isscalar(x) else x
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def counter_uniform(seed: int, *keys) -> np.ndarray:
    """Uniform [0,1) values addressed purely by (seed, *keys).

    Each key may be a scalar or a broadcastable uint64-compatible array;
    the result has the broadcast shape.  Values for distinct key tuples
    are independent draws from a fixed stream, so any evaluation order
    (or parallel split) produces identical numbers.
    """
    with np.errstate(over="ignore"):
        h = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        for key in keys:
            k = np.asarray(key, dtype=np.uint64) if not np.isscalar(key) else np.uint64(int(key) & 0xFFFFFFFFFFFFFFFF)
            h = _mix64((h ^ k) + _GOLDEN)
    return np.asarray(h, dtype=np.uint64).astype(np.float64) * _INV_2_64


def _type_key(name: str) -> int:
    # stable across processes (unlike hash())
    return zlib.crc32(name.encode("utf-8"))


def derive_seed(seed: int, *keys: int) -> int:
    """Derive an independent child seed from (seed, *keys).

    Distinct key tuples yield streams that do not overlap with each other
    or with draws made directly under the parent seed.
    """
    with np.errstate(over="ignore"):
        h = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        for key in keys:
            h = _mix64((h ^ np.uint64(int(key) & 0xFFFFFFFFFFFFFFFF)) + _GOLDEN)
        # perturb once more so a child seed never collides with the parent
        h = _mix64(h ^ _MIX2)
    return int(h)


def _fleet_by_name(fleet: Sequence[GeneratorType]) -> dict[str, GeneratorType]:
    return {gen.name: gen for gen in fleet}


def _profile(gen: GeneratorType, cf_map: Mapping[str, HourlySeries], hours: int) -> np.ndarray:
    if gen.profile_ref not in cf_map:
        raise ValidationError(
            f"renewable type {gen.name!r}: no capacity-factor series "
            f"{gen.profile_ref!r}"
        )
    series = cf_map[gen.profile_ref]
    if series.kind != "capacity_factor":
        raise ValidationError(
            f"series {series.name!r} is not a capacity-factor series"
        )
    if len(series) != hours:
        raise ValidationError(
            f"profile {gen.profile_ref!r} has {len(series)} hours, expected {hours}"
        )
    return series.values


def available_capacity_derated(
    fleet: Sequence[GeneratorType],
    mix: GenerationMix,
    cf_map: Mapping[str, HourlySeries],
    hour: int,
) -> float:
    """Expected available capacity (MW) of a mix at one hour."""
    by_name = _fleet_by_name(fleet)
    total = 0.0
    for name, count in mix.counts.items():
        if name not in by_name:
            raise ValidationError(f"mix references undeclared type {name!r}")
        gen = by_name[name]
        cap = count * gen.unit_capacity_mw * (1.0 - gen.forced_outage_rate)
        if gen.is_renewable:
            if gen.profile_ref not in cf_map:
                raise ValidationError(
                    f"renewable type {name!r}: no capacity-factor series "
                    f"{gen.profile_ref!r}"
                )
            series = cf_map[gen.profile_ref]
            if not 0 <= hour < len(series):
                raise ValidationError(f"hour {hour} outside profile of {name!r}")
            cap *= float(series.values[hour])
        total += cap
    return total


def derated_capacity_profile(
    fleet: Sequence[GeneratorType],
    mix: GenerationMix,
    cf_map: Mapping[str, HourlySeries],
    hours: int,
) -> np.ndarray:
    """Vector of derated available capacity for every hour of the year."""
    by_name = _fleet_by_name(fleet)
    profile = np.zeros(hours)
    for name, count in mix.counts.items():
        if name not in by_name:
            raise ValidationError(f"mix references undeclared type {name!r}")
        gen = by_name[name]
        if count == 0:
            continue
        cap = count * gen.unit_capacity_mw * (1.0 - gen.forced_outage_rate)
        if gen.is_renewable:
            profile += cap * _profile(gen, cf_map, hours)
        else:
            profile += cap
    return profile


def _simulate_monte_carlo(
    fleet_by_name: dict[str, GeneratorType],
    mix: GenerationMix,
    load: np.ndarray,
    cf_map: Mapping[str, HourlySeries],
    cfg: AdequacyConfig,
) -> tuple[float, float]:
    hours = load.size
    reps = cfg.replications
    rep_chunk = max(1, _CHUNK_ELEMS // max(1, hours))
    hour_idx = np.arange(hours, dtype=np.uint64)[:, None]

    loss_total = 0.0
    eue_total = 0.0
    for start in range(0, reps, rep_chunk):
        stop = min(start + rep_chunk, reps)
        rep_idx = np.arange(start, stop, dtype=np.uint64)[None, :]
        available = np.zeros((hours, stop - start))
        for name in sorted(mix.counts):
            gen = fleet_by_name[name]
            count = mix.counts[name]
            if count == 0:
                continue
            p_up = 1.0 - gen.forced_outage_rate
            up = np.zeros((hours, stop - start))
            for unit in range(count):
                draws = counter_uniform(
                    cfg.seed, _type_key(name), unit, hour_idx, rep_idx
                )
                up += draws < p_up
            cap = up * gen.unit_capacity_mw
            if gen.is_renewable:
                cap *= _profile(gen, cf_map, hours)[:, None]
            available += cap
        shortfall = load[:, None] - available
        loss_total += float(np.sum(shortfall > 0))
        eue_total += float(np.sum(np.maximum(shortfall, 0.0)))
    return loss_total / reps, eue_total / reps


def simulate_lolh(
    fleet: Sequence[GeneratorType],
    mix: GenerationMix,
    load: HourlySeries,
    cf_map: Mapping[str, HourlySeries],
    cfg: AdequacyConfig,
) -> ReliabilityResult:
    """Count expected hours per year where available capacity falls short of load.

    An hour is lost only on a strict shortfall (available < load); exact
    ties count as served.  Monte Carlo results are deterministic for a
    fixed (seed, inputs) pair.
    """
    if load.kind != "load_mw":
        raise ValidationError(f"series {load.name!r} is not a load series")
    by_name = _fleet_by_name(fleet)
    for name in mix.counts:
        if name not in by_name:
            raise ValidationError(f"mix references undeclared type {name!r}")
    hours = len(load)

    if cfg.mode == "derated":
        available = derated_capacity_profile(fleet, mix, cf_map, hours)
        shortfall = load.values - available
        lolh = float(np.count_nonzero(shortfall > 0))
        eue = float(np.sum(np.maximum(shortfall, 0.0)))
    else:
        lolh, eue = _simulate_monte_carlo(by_name, mix, load.values, cf_map, cfg)
    return ReliabilityResult(
        lolh=lolh,
        eue_mwh=eue,
        mode=cfg.mode,
        replications=cfg.replications,
        seed=cfg.seed,
    )


def label_sample(result: ReliabilityResult, cfg: AdequacyConfig) -> int:
    """1 if the mix meets the LOLH threshold (inclusive), else 0."""
    return 1 if result.lolh <= cfg.lolh_threshold else 0
