"""Generator fleet, hourly time series, and planning-horizon data model.

Fleets are clustered: a generator type stands for a pool of identical
units, and a generation mix holds the integer count of units of each
type that are installed and not retired in a given planning year.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml

from .errors import ParseError, ValidationError

CATEGORIES = ("new", "old")
SERIES_KINDS = ("load_mw", "capacity_factor")

_REQUIRED_FLEET_KEYS = frozenset(
    {
        "category",
        "unit_capacity_mw",
        "forced_outage_rate",
        "capital_cost",
        "fixed_om_cost",
        "variable_cost",
        "co2_rate",
        "initial_units",
    }
)
_OPTIONAL_FLEET_KEYS = frozenset(
    {"is_renewable", "profile_ref", "lifetime_expiry_year"}
)


@dataclass(frozen=True)
class GeneratorType:
    """One clustered generation technology.

    ``initial_units`` is the unit count installed before year 1; it must
    be zero for candidate (``new``) types.  ``lifetime_expiry_year`` is
    the last planning year an ``old`` type may stay operational.
    """

    name: str
    category: str
    unit_capacity_mw: float
    forced_outage_rate: float
    capital_cost: float
    fixed_om_cost: float
    variable_cost: float
    co2_rate: float
    initial_units: int = 0
    is_renewable: bool = False
    profile_ref: str | None = None
    lifetime_expiry_year: int | None = None

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValidationError(
                f"generator {self.name!r}: category must be one of {CATEGORIES}, "
                f"got {self.category!r}"
            )
        if not (self.unit_capacity_mw > 0 and math.isfinite(self.unit_capacity_mw)):
            raise ValidationError(
                f"generator {self.name!r}: unit_capacity_mw must be > 0, "
                f"got {self.unit_capacity_mw}"
            )
        if not 0.0 <= self.forced_outage_rate <= 1.0:
            raise ValidationError(
                f"generator {self.name!r}: forced_outage_rate must lie in [0, 1], "
                f"got {self.forced_outage_rate}"
            )
        for fld in ("capital_cost", "fixed_om_cost", "variable_cost", "co2_rate"):
            value = getattr(self, fld)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(
                    f"generator {self.name!r}: {fld} must be finite and >= 0, got {value}"
                )
        if not isinstance(self.initial_units, int) or self.initial_units < 0:
            raise ValidationError(
                f"generator {self.name!r}: initial_units must be a nonnegative "
                f"integer, got {self.initial_units!r}"
            )
        if self.category == "new" and self.initial_units != 0:
            raise ValidationError(
                f"generator {self.name!r}: new types must have initial_units = 0, "
                f"got {self.initial_units}"
            )
        if self.is_renewable and not self.profile_ref:
            raise ValidationError(
                f"generator {self.name!r}: renewable types require a profile_ref"
            )
        if self.lifetime_expiry_year is not None:
            if self.category != "old":
                raise ValidationError(
                    f"generator {self.name!r}: lifetime_expiry_year only applies "
                    f"to old types"
                )
            if not isinstance(self.lifetime_expiry_year, int) or self.lifetime_expiry_year < 1:
                raise ValidationError(
                    f"generator {self.name!r}: lifetime_expiry_year must be a "
                    f"positive integer, got {self.lifetime_expiry_year!r}"
                )


@dataclass(frozen=True)
class HourlySeries:
    """A fixed-length hourly series: either demand in MW or a capacity factor."""

    name: str
    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in SERIES_KINDS:
            raise ValidationError(
                f"series {self.name!r}: kind must be one of {SERIES_KINDS}, "
                f"got {self.kind!r}"
            )
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise ValidationError(
                f"series {self.name!r}: values must be a nonempty 1-D sequence"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError(f"series {self.name!r}: all values must be finite")
        if np.any(values < 0):
            raise ValidationError(f"series {self.name!r}: values must be >= 0")
        if self.kind == "capacity_factor" and np.any(values > 1.0):
            raise ValidationError(
                f"series {self.name!r}: capacity factors must lie in [0, 1]"
            )
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class GenerationMix:
    """Per-type operational unit counts for one planning year."""

    year: int
    counts: Mapping[str, int]

    def __post_init__(self):
        for name, count in self.counts.items():
            if not isinstance(count, (int, np.integer)) or count < 0:
                raise ValidationError(
                    f"mix year {self.year}: count for {name!r} must be a "
                    f"nonnegative integer, got {count!r}"
                )
        object.__setattr__(self, "counts", dict(self.counts))


@dataclass(frozen=True)
class PlanningHorizon:
    """Planning window: year count, demand growth, and carbon tax path."""

    num_years: int
    base_load_ref: str
    load_growth_rate: float = 0.014
    carbon_tax_schedule: tuple[float, ...] = ()

    def __post_init__(self):
        if self.num_years < 1:
            raise ValidationError(f"num_years must be >= 1, got {self.num_years}")
        if not self.load_growth_rate > -1.0:
            raise ValidationError(
                f"load_growth_rate must be > -1, got {self.load_growth_rate}"
            )
        schedule = tuple(float(v) for v in self.carbon_tax_schedule)
        if not schedule:
            schedule = (0.0,) * self.num_years
        if len(schedule) != self.num_years:
            raise ValidationError(
                f"carbon_tax_schedule must have {self.num_years} entries, "
                f"got {len(schedule)}"
            )
        object.__setattr__(self, "carbon_tax_schedule", schedule)


class _StrictLoader(yaml.SafeLoader):
    """SafeLoader that rejects duplicate mapping keys."""


def _strict_mapping(loader, node, deep=False):
    mapping = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in mapping:
            raise ParseError(
                f"duplicate key {key!r} at line {key_node.start_mark.line + 1}"
            )
        mapping[key] = loader.construct_object(value_node, deep=deep)
    return mapping


_StrictLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _strict_mapping
)


def read_yaml(path: str | Path):
    """Parse a YAML file, rejecting duplicate keys; errors carry file context."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    try:
        return yaml.load(text, Loader=_StrictLoader)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def load_fleet(path: str | Path) -> list[GeneratorType]:
    """Load generator types from a YAML fleet file.

    The file is a mapping from type name to a block holding exactly the
    ``GeneratorType`` fields; unknown keys and duplicate names are errors.
    """
    path = Path(path)
    data = read_yaml(path)
    if data is None:
        return []
    if not isinstance(data, dict):
        raise ParseError(f"{path}: fleet file must be a mapping of type blocks")
    types = []
    for name, block in data.items():
        if not isinstance(block, dict):
            raise ParseError(f"{path}: generator {name!r}: block must be a mapping")
        unknown = set(block) - _REQUIRED_FLEET_KEYS - _OPTIONAL_FLEET_KEYS
        if unknown:
            raise ParseError(
                f"{path}: generator {name!r}: unknown keys {sorted(unknown)}"
            )
        missing = _REQUIRED_FLEET_KEYS - set(block)
        if missing:
            raise ParseError(
                f"{path}: generator {name!r}: missing keys {sorted(missing)}"
            )
        try:
            types.append(GeneratorType(name=str(name), **block))
        except (ValidationError, TypeError) as exc:
            raise ParseError(f"{path}: {exc}") from exc
    return types


def dump_fleet(types: Sequence[GeneratorType], path: str | Path) -> None:
    """Write generator types back to the fleet YAML format (round-trip safe)."""
    blocks = {}
    for gen in types:
        block = {
            "category": gen.category,
            "unit_capacity_mw": gen.unit_capacity_mw,
            "forced_outage_rate": gen.forced_outage_rate,
            "capital_cost": gen.capital_cost,
            "fixed_om_cost": gen.fixed_om_cost,
            "variable_cost": gen.variable_cost,
            "co2_rate": gen.co2_rate,
            "initial_units": gen.initial_units,
        }
        if gen.is_renewable:
            block["is_renewable"] = True
            block["profile_ref"] = gen.profile_ref
        if gen.lifetime_expiry_year is not None:
            block["lifetime_expiry_year"] = gen.lifetime_expiry_year
        blocks[gen.name] = block
    Path(path).write_text(
        yaml.safe_dump(blocks, sort_keys=False, default_flow_style=False),
        encoding="utf-8",
    )


def load_series(path: str | Path, kind: str, name: str | None = None) -> HourlySeries:
    """Load a headerless one-column CSV of hourly values."""
    path = Path(path)
    if kind not in SERIES_KINDS:
        raise ValidationError(f"kind must be one of {SERIES_KINDS}, got {kind!r}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            value = float(line)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: not a number: {line!r}") from exc
        if not math.isfinite(value):
            raise ParseError(f"{path}:{lineno}: non-finite value {line!r}")
        if value < 0:
            raise ParseError(f"{path}:{lineno}: negative value {value}")
        if kind == "capacity_factor" and value > 1.0:
            raise ParseError(
                f"{path}:{lineno}: capacity factor {value} outside [0, 1]"
            )
        values.append(value)
    if not values:
        raise ParseError(f"{path}: series file is empty")
    return HourlySeries(
        name=name if name is not None else path.stem,
        values=np.asarray(values),
        kind=kind,
    )


def scale_demand(base: HourlySeries, horizon: PlanningHorizon, year: int) -> HourlySeries:
    """Scale a base-year load series to a planning year by compound growth."""
    if base.kind != "load_mw":
        raise ValidationError(f"series {base.name!r} is not a load series")
    if not 1 <= year <= horizon.num_years:
        raise ValidationError(
            f"year {year} outside planning horizon 1..{horizon.num_years}"
        )
    factor = (1.0 + horizon.load_growth_rate) ** (year - 1)
    return HourlySeries(
        name=f"{base.name}#y{year}",
        values=base.values * factor,
        kind="load_mw",
    )
