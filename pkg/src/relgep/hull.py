"""Exact convex-hull reformulation of a region disjunction into MILP rows.

Each region k gets a selector binary W_k and per-feature auxiliaries
z_k; the encoding makes x feasible exactly when it lies in some region
intersected with the feature box.  Because every region is bounded by
its box, the reformulation is exact (each disjunct has a trivial
recession cone).
"""

from __future__ import annotations

import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, ValidationError
from .milp import MilpModel, solve_lp
from .wodt import Disjunction

__all__ = [
    "HullEncoding",
    "ExactnessReport",
    "encode_disjunction",
    "check_membership",
    "validate_exactness",
    "MEMBERSHIP_TOLERANCE",
]

MEMBERSHIP_TOLERANCE = 1e-9
_ROW_GROUPS = ("aggregation", "selection", "region", "linking")


@dataclass(frozen=True)
class HullEncoding:
    """Handle to the variables and rows one disjunction added to a model.

    Row ids come in four groups: ``aggregation`` (per-feature sum of
    auxiliaries equals x), ``selection`` (selector binaries sum to 1),
    ``region`` (region rows against selected auxiliaries), and
    ``linking`` (auxiliaries pinned into the selected region's box).
    """

    year: int
    x_var_ids: tuple[int, ...]
    w_var_ids: tuple[int, ...]
    z_var_ids: tuple[tuple[int, ...], ...]
    row_ids: dict[str, tuple[int, ...]]

    def __post_init__(self):
        x_ids = tuple(int(i) for i in self.x_var_ids)
        w_ids = tuple(int(i) for i in self.w_var_ids)
        z_ids = tuple(tuple(int(i) for i in group) for group in self.z_var_ids)
        if not x_ids:
            raise ValidationError("encoding needs at least one feature variable")
        if len(z_ids) != len(w_ids):
            raise ValidationError(
                f"{len(z_ids)} auxiliary groups for {len(w_ids)} selectors"
            )
        for group in z_ids:
            if len(group) != len(x_ids):
                raise ValidationError(
                    f"auxiliary group width {len(group)} does not match "
                    f"{len(x_ids)} features"
                )
        rows = dict(self.row_ids)
        if tuple(sorted(rows)) != tuple(sorted(_ROW_GROUPS)):
            raise ValidationError(f"row groups must be {_ROW_GROUPS}, got {sorted(rows)}")
        rows = {key: tuple(int(i) for i in rows[key]) for key in _ROW_GROUPS}
        if len(rows["aggregation"]) != len(x_ids):
            raise ValidationError("one aggregation row per feature required")
        if len(rows["selection"]) != 1:
            raise ValidationError("exactly one selection row required")
        if len(rows["linking"]) != 2 * len(x_ids) * len(w_ids):
            raise ValidationError("two linking rows per region and feature required")
        object.__setattr__(self, "x_var_ids", x_ids)
        object.__setattr__(self, "w_var_ids", w_ids)
        object.__setattr__(self, "z_var_ids", z_ids)
        object.__setattr__(self, "row_ids", rows)

    @property
    def num_regions(self) -> int:
        return len(self.w_var_ids)

    def vars_added(self) -> int:
        return self.num_regions * (len(self.x_var_ids) + 1)

    def rows_added(self) -> int:
        return sum(len(ids) for ids in self.row_ids.values())


@dataclass(frozen=True)
class ExactnessReport:
    """Boundedness and emptiness findings for one disjunction.

    ``bounded`` restates the construction invariant that every region
    carries a finite box; ``empty_regions`` lists regions whose rows
    admit no point inside the box (found by LP).  ``exact`` holds when
    all regions are bounded.  Membership tolerance is absolute.
    """

    year: int
    bounded: bool
    region_rows: tuple[int, ...]
    empty_regions: tuple[int, ...]
    tolerance: float = MEMBERSHIP_TOLERANCE

    @property
    def exact(self) -> bool:
        return self.bounded


def _region_is_empty(region) -> bool:
    model = MilpModel(name="regionlp")
    box = region.box
    names = box.feature_names()
    ids = [
        model.add_var(name=name, lower=float(box.lower[name]), upper=float(box.upper[name]))
        for name in names
    ]
    for row, rhs in zip(region.rows, region.rhs):
        model.add_row({ids[j]: float(v) for j, v in enumerate(row)}, "<=", float(rhs))
    return solve_lp(model).status == "infeasible"


def _empty_region_indices(disj: Disjunction) -> tuple[int, ...]:
    return tuple(k for k, region in enumerate(disj.regions) if _region_is_empty(region))


def encode_disjunction(
    model: MilpModel, disj: Disjunction, x_var_ids: Sequence[int]
) -> HullEncoding:
    """Append the hull reformulation of ``disj`` over existing x variables.

    Per kept region: one selector binary, one auxiliary per feature, the
    region rows applied to the auxiliaries, and two linking rows per
    feature.  Empty regions are dropped with a warning; the x variables
    must already carry the box bounds.
    """
    names = list(disj.feature_names)
    box = disj.regions[0].box
    x_ids = [int(i) for i in x_var_ids]
    if len(x_ids) != len(names):
        raise ValidationError(
            f"{len(x_ids)} feature variables for {len(names)} features"
        )
    if len(set(x_ids)) != len(x_ids):
        raise ValidationError("feature variable ids must be distinct")
    for idx, name in zip(x_ids, names):
        if not 0 <= idx < model.num_vars:
            raise ValidationError(f"unknown variable index {idx}")
        var = model.variables[idx]
        if var.lower != float(box.lower[name]) or var.upper != float(box.upper[name]):
            raise ValidationError(
                f"variable {var.name!r} bounds [{var.lower}, {var.upper}] do not "
                f"match box [{box.lower[name]}, {box.upper[name]}] of feature {name!r}"
            )
    empty = set(_empty_region_indices(disj))
    kept = [(k, region) for k, region in enumerate(disj.regions) if k not in empty]
    if not kept:
        raise InfeasibleError(f"year {disj.year}: every region is empty; nothing to encode")
    if empty:
        warnings.warn(
            f"year {disj.year}: dropping {len(empty)} empty region(s) "
            f"{sorted(empty)} before encoding",
            stacklevel=2,
        )

    w_ids: list[int] = []
    z_ids: list[tuple[int, ...]] = []
    for k, _ in kept:
        w_ids.append(
            model.add_var(name=f"hullw[{disj.year},{k}]", integrality="binary")
        )
        z_ids.append(
            tuple(
                model.add_var(
                    name=f"hullz[{disj.year},{k},{name}]",
                    lower=0.0,
                    upper=float(box.upper[name]),
                )
                for name in names
            )
        )

    aggregation = []
    for j, name in enumerate(names):
        coeffs = {group[j]: 1.0 for group in z_ids}
        coeffs[x_ids[j]] = -1.0
        aggregation.append(
            model.add_row(coeffs, "=", 0.0, name=f"hullsum[{disj.year},{name}]")
        )
    selection = [
        model.add_row(
            {w: 1.0 for w in w_ids}, "=", 1.0, name=f"hullpick[{disj.year}]"
        )
    ]
    region_rows = []
    for (k, region), w, group in zip(kept, w_ids, z_ids):
        for i in range(region.rows.shape[0]):
            coeffs = {group[j]: float(region.rows[i, j]) for j in range(len(names))}
            coeffs[w] = -float(region.rhs[i])
            region_rows.append(
                model.add_row(coeffs, "<=", 0.0, name=f"hullrow[{disj.year},{k},{i}]")
            )
    linking = []
    for (k, _), w, group in zip(kept, w_ids, z_ids):
        for j, name in enumerate(names):
            linking.append(
                model.add_row(
                    {w: float(box.lower[name]), group[j]: -1.0},
                    "<=",
                    0.0,
                    name=f"hulllo[{disj.year},{k},{name}]",
                )
            )
            linking.append(
                model.add_row(
                    {group[j]: 1.0, w: -float(box.upper[name])},
                    "<=",
                    0.0,
                    name=f"hullup[{disj.year},{k},{name}]",
                )
            )
    return HullEncoding(
        year=disj.year,
        x_var_ids=tuple(x_ids),
        w_var_ids=tuple(w_ids),
        z_var_ids=tuple(z_ids),
        row_ids={
            "aggregation": tuple(aggregation),
            "selection": tuple(selection),
            "region": tuple(region_rows),
            "linking": tuple(linking),
        },
    )


def check_membership(disj: Disjunction, x: Sequence[float]) -> bool:
    """Direct evaluation: inside the box and some region, tolerance 1e-9."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (len(disj.feature_names),):
        raise ValidationError(
            f"expected {len(disj.feature_names)} coordinates, got shape {x.shape}"
        )
    return disj.contains(x, tol=MEMBERSHIP_TOLERANCE)


def validate_exactness(disj: Disjunction) -> ExactnessReport:
    """Report boundedness and empty regions; never raises."""
    bounded = True
    for region in disj.regions:
        box = region.box
        for name in box.feature_names():
            if not (
                np.isfinite(float(box.lower[name])) and np.isfinite(float(box.upper[name]))
            ):
                bounded = False
    return ExactnessReport(
        year=disj.year,
        bounded=bounded,
        region_rows=tuple(region.rows.shape[0] for region in disj.regions),
        empty_regions=_empty_region_indices(disj),
    )
