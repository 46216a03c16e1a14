"""Weighted oblique decision trees for reliability classification.

Training fits one hyperplane per internal node with a built-in L-BFGS
optimizer, minimizing the cross-entropy of soft branch label
distributions under logistic memberships; each sample reaches both
children with multiplicative soft weights.  Prediction and region
extraction use hard sign splits, so every leaf labeled 1 yields a
closed polyhedron in original feature units.
"""

from __future__ import annotations

import csv
import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .adequacy import derive_seed
from .errors import InfeasibleError, ParseError, RelgepError, ValidationError
from .sweep import FeatureBounds

__all__ = [
    "LbfgsConfig",
    "lbfgs_minimize",
    "ObliqueNode",
    "ObliqueTree",
    "Region",
    "Disjunction",
    "train_wodt",
    "predict",
    "predict_batch",
    "extract_feasible_regions",
    "WeightedObliqueTreeClassifier",
    "write_tree_text",
    "read_tree_text",
    "write_disjunction_text",
    "read_disjunction_text",
]

PURITY_STOP = 0.999
_L2_PENALTY = 1e-6
_ENTROPY_EPS = 1e-9
_ZERO_WEIGHT_NORM = 1e-12
_NEGLIGIBLE_WEIGHT = 1e-12
_AXIS_SHARPNESS = 8.0
_WOLFE_C1 = 1e-4
_WOLFE_C2 = 0.9
_TREE_FORMAT = ("relgep-tree", "1")
_DISJUNCTION_FORMAT = ("relgep-disjunction", "1")


# ---------------------------------------------------------------------------
# L-BFGS with a strong-Wolfe line search


@dataclass(frozen=True)
class LbfgsConfig:
    """Optimizer settings: iteration cap, history size, gradient tolerance."""

    max_iter: int = 100
    memory: int = 10
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.memory < 1:
            raise ValidationError(f"memory must be >= 1, got {self.memory}")
        if not self.tolerance > 0.0:
            raise ValidationError(f"tolerance must be > 0, got {self.tolerance}")


def _require_finite(f: float, g: np.ndarray, x: np.ndarray) -> None:
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise RelgepError(
            f"non-finite objective or gradient at iterate "
            f"{np.array2string(np.asarray(x), precision=6)}"
        )


def _zoom(objective, x, d, phi0, dphi0, a_lo, a_hi, phi_lo, dphi_lo, g_lo, phi_hi):
    # Narrow a bracket known to contain a strong-Wolfe point.
    for _ in range(30):
        span = a_hi - a_lo
        if abs(span) <= 1e-14 * max(1.0, abs(a_lo)):
            break
        t = 0.5
        denom = phi_hi - phi_lo - dphi_lo * span
        if math.isfinite(phi_hi) and denom > 0.0:
            # minimizer of the quadratic through (a_lo, phi_lo, dphi_lo, a_hi, phi_hi)
            t_q = -dphi_lo * span / (2.0 * denom)
            if 0.1 <= t_q <= 0.9:
                t = t_q
        alpha = a_lo + t * span
        f, g = objective(x + alpha * d)
        if not (math.isfinite(f) and np.all(np.isfinite(g))):
            a_hi, phi_hi = alpha, math.inf
            continue
        dphi = float(g @ d)
        if f > phi0 + _WOLFE_C1 * alpha * dphi0 or f >= phi_lo:
            a_hi, phi_hi = alpha, f
        else:
            if abs(dphi) <= -_WOLFE_C2 * dphi0:
                return alpha, f, g
            if dphi * (a_hi - a_lo) >= 0.0:
                a_hi, phi_hi = a_lo, phi_lo
            a_lo, phi_lo, dphi_lo, g_lo = alpha, f, dphi, g
    if a_lo > 0.0 and phi_lo <= phi0 + _WOLFE_C1 * a_lo * dphi0:
        return a_lo, phi_lo, g_lo
    return None


def _wolfe_line_search(objective, x, f0, g0, d):
    """Step length satisfying sufficient decrease and curvature conditions.

    Falls back to the best sufficient-decrease point when the curvature
    condition is unattainable (for example on a linear objective), and
    returns None only when no decreasing step exists.
    """
    dphi0 = float(g0 @ d)
    if not dphi0 < 0.0:
        return None
    a_prev, phi_prev, dphi_prev, g_prev = 0.0, f0, dphi0, g0
    alpha = 1.0
    shrinks = 0
    expansions = 0
    while expansions < 25:
        f, g = objective(x + alpha * d)
        if not (math.isfinite(f) and np.all(np.isfinite(g))):
            shrinks += 1
            if shrinks > 40:
                raise RelgepError(
                    f"non-finite objective or gradient at iterate "
                    f"{np.array2string(x + alpha * d, precision=6)}"
                )
            alpha = a_prev + 0.5 * (alpha - a_prev)
            continue
        dphi = float(g @ d)
        if f > f0 + _WOLFE_C1 * alpha * dphi0 or (expansions > 0 and f >= phi_prev):
            return _zoom(objective, x, d, f0, dphi0, a_prev, alpha, phi_prev, dphi_prev, g_prev, f)
        if abs(dphi) <= -_WOLFE_C2 * dphi0:
            return alpha, f, g
        if dphi >= 0.0:
            return _zoom(objective, x, d, f0, dphi0, alpha, a_prev, f, dphi, g, phi_prev)
        a_prev, phi_prev, dphi_prev, g_prev = alpha, f, dphi, g
        alpha *= 2.0
        expansions += 1
    if a_prev > 0.0:
        # expansion budget spent without meeting curvature; keep the decrease
        return a_prev, phi_prev, g_prev
    return None


def lbfgs_minimize(
    objective: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: Sequence[float],
    max_iter: int = 100,
    memory: int = 10,
    tolerance: float = 1e-6,
) -> tuple[np.ndarray, float]:
    """Minimize a smooth function given its value-and-gradient callable.

    Two-loop recursion over the last ``memory`` curvature pairs with a
    strong-Wolfe line search.  Stops when the gradient 2-norm falls to
    ``tolerance`` or after ``max_iter`` iterations, whichever is first.
    """
    cfg = LbfgsConfig(max_iter=max_iter, memory=memory, tolerance=tolerance)
    x = np.array(x0, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValidationError(f"x0 must be a nonempty vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError(f"x0 must be finite, got {x!r}")
    f, g = objective(x)
    f = float(f)
    g = np.asarray(g, dtype=np.float64)
    _require_finite(f, g, x)
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho: list[float] = []
    for _ in range(cfg.max_iter):
        if float(np.linalg.norm(g)) <= cfg.tolerance:
            break
        # two-loop recursion builds the quasi-Newton direction
        q = g.copy()
        alphas = []
        for s, y, r in zip(reversed(s_hist), reversed(y_hist), reversed(rho)):
            a = r * float(s @ q)
            alphas.append(a)
            q -= a * y
        if y_hist:
            q *= float(s_hist[-1] @ y_hist[-1]) / float(y_hist[-1] @ y_hist[-1])
        for (s, y, r), a in zip(zip(s_hist, y_hist, rho), reversed(alphas)):
            q += (a - r * float(y @ q)) * s
        d = -q
        if float(d @ g) >= 0.0:
            # history produced a non-descent direction; restart from steepest descent
            s_hist.clear()
            y_hist.clear()
            rho.clear()
            d = -g
        found = _wolfe_line_search(objective, x, f, g, d)
        if found is None:
            break
        alpha, f_new, g_new = found
        x_new = x + alpha * d
        s = x_new - x
        y = np.asarray(g_new, dtype=np.float64) - g
        sy = float(s @ y)
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_hist.append(s)
            y_hist.append(y)
            rho.append(1.0 / sy)
            if len(s_hist) > cfg.memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho.pop(0)
        x, f, g = x_new, float(f_new), np.asarray(g_new, dtype=np.float64)
    return x, f


# ---------------------------------------------------------------------------
# Tree and region types


@dataclass(frozen=True)
class ObliqueNode:
    """Internal node (hyperplane and two children) or leaf (label, purity)."""

    weights: np.ndarray | None = None
    bias: float | None = None
    left: "ObliqueNode | None" = None
    right: "ObliqueNode | None" = None
    label: int | None = None
    weighted_purity: float | None = None

    def __post_init__(self):
        if self.label is not None:
            if any(v is not None for v in (self.weights, self.bias, self.left, self.right)):
                raise ValidationError("leaf node must not carry a hyperplane or children")
            if self.label not in (0, 1):
                raise ValidationError(f"leaf label must be 0 or 1, got {self.label!r}")
            purity = self.weighted_purity
            if purity is None or not (0.5 - 1e-9 <= purity <= 1.0 + 1e-9):
                raise ValidationError(f"leaf purity must lie in [0.5, 1], got {purity!r}")
            object.__setattr__(self, "weighted_purity", float(min(max(purity, 0.5), 1.0)))
            return
        if self.weights is None or self.bias is None or self.left is None or self.right is None:
            raise ValidationError("internal node needs weights, bias, and both children")
        weights = np.array(self.weights, dtype=np.float64)
        if weights.ndim != 1 or weights.size == 0:
            raise ValidationError(f"weights must be a nonempty vector, got shape {weights.shape}")
        if not np.all(np.isfinite(weights)) or not math.isfinite(self.bias):
            raise ValidationError("hyperplane coefficients must be finite")
        if float(np.linalg.norm(weights)) <= _ZERO_WEIGHT_NORM:
            raise ValidationError("internal node weights must not be all zero")
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def is_leaf(self) -> bool:
        return self.label is not None


def _node_depth(node: ObliqueNode) -> int:
    if node.is_leaf:
        return 0
    return 1 + max(_node_depth(node.left), _node_depth(node.right))


def _check_widths(node: ObliqueNode, num_features: int) -> None:
    if node.is_leaf:
        return
    if node.weights.size != num_features:
        raise ValidationError(
            f"internal node has {node.weights.size} weights, expected {num_features}"
        )
    _check_widths(node.left, num_features)
    _check_widths(node.right, num_features)


@dataclass(frozen=True)
class ObliqueTree:
    """Trained tree plus the feature scaling it was trained under.

    ``feature_scaling`` holds one (offset, scale) pair per feature;
    training and prediction evaluate hyperplanes on
    ``(x - offset) / scale``.
    """

    root: ObliqueNode
    feature_names: tuple[str, ...]
    feature_scaling: tuple[tuple[float, float], ...]
    max_depth: int
    train_accuracy: float
    single_label: bool = False

    def __post_init__(self):
        names = tuple(self.feature_names)
        if not names:
            raise ValidationError("tree needs at least one feature")
        scaling = tuple((float(o), float(s)) for o, s in self.feature_scaling)
        if len(scaling) != len(names):
            raise ValidationError(
                f"{len(scaling)} scaling pairs for {len(names)} features"
            )
        for name, (offset, scale) in zip(names, scaling):
            if not (math.isfinite(offset) and math.isfinite(scale) and scale > 0.0):
                raise ValidationError(
                    f"feature {name!r}: scaling must be finite with scale > 0, "
                    f"got ({offset}, {scale})"
                )
        if self.max_depth < 0:
            raise ValidationError(f"max_depth must be >= 0, got {self.max_depth}")
        if not 0.0 <= self.train_accuracy <= 1.0:
            raise ValidationError(
                f"train_accuracy must lie in [0, 1], got {self.train_accuracy}"
            )
        _check_widths(self.root, len(names))
        if _node_depth(self.root) > self.max_depth:
            raise ValidationError(
                f"tree depth {_node_depth(self.root)} exceeds max_depth {self.max_depth}"
            )
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "feature_scaling", scaling)

    def scale(self, X: np.ndarray) -> np.ndarray:
        """Map points from original units into the training [0,1] box."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        offsets = np.array([o for o, _ in self.feature_scaling])
        scales = np.array([s for _, s in self.feature_scaling])
        return (X - offsets) / scales


@dataclass(frozen=True)
class Region:
    """One reliability-feasible polyhedron: rows @ x <= rhs, inside box."""

    rows: np.ndarray
    rhs: np.ndarray
    box: FeatureBounds

    def __post_init__(self):
        num_features = len(self.box.feature_names())
        rows = np.array(self.rows, dtype=np.float64)
        if rows.size == 0:
            rows = rows.reshape(0, num_features)
        if rows.ndim != 2 or rows.shape[1] != num_features:
            raise ValidationError(
                f"rows must be a matrix with {num_features} columns, got shape {rows.shape}"
            )
        rhs = np.array(self.rhs, dtype=np.float64).reshape(-1)
        if rhs.shape[0] != rows.shape[0]:
            raise ValidationError(
                f"{rows.shape[0]} rows with {rhs.shape[0]} right-hand sides"
            )
        if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(rhs))):
            raise ValidationError("region coefficients must be finite")
        rows.flags.writeable = False
        rhs.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "rhs", rhs)

    def contains(self, x: Sequence[float], tol: float = 1e-9) -> bool:
        """Membership in original units, box bounds included."""
        x = np.asarray(x, dtype=np.float64)
        names = self.box.feature_names()
        if x.shape != (len(names),):
            raise ValidationError(f"expected {len(names)} coordinates, got shape {x.shape}")
        for value, name in zip(x, names):
            if value < self.box.lower[name] - tol or value > self.box.upper[name] + tol:
                return False
        return bool(np.all(self.rows @ x <= self.rhs + tol))


@dataclass(frozen=True)
class Disjunction:
    """Union of reliability-feasible regions for one year."""

    year: int
    regions: tuple[Region, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        regions = tuple(self.regions)
        if not regions:
            raise ValidationError("disjunction needs at least one region")
        names = tuple(self.feature_names)
        for index, region in enumerate(regions):
            if tuple(region.box.feature_names()) != names:
                raise ValidationError(
                    f"region {index} features {region.box.feature_names()} "
                    f"do not match {list(names)}"
                )
            if region.box.year != self.year:
                raise ValidationError(
                    f"region {index} box year {region.box.year} does not match {self.year}"
                )
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "feature_names", names)

    def contains(self, x: Sequence[float], tol: float = 1e-9) -> bool:
        return any(region.contains(x, tol) for region in self.regions)


# ---------------------------------------------------------------------------
# Training


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _make_node_objective(X_s, y, v):
    """Weighted logistic cross-entropy of the soft branch assignments.

    Each sample joins the right branch with membership sigma(w.x + b) and
    the left with the complement; the loss is the membership-weighted
    cross-entropy of each branch's own label frequencies (its weighted
    entropy), so minimizing it maximizes soft information gain.  A small
    ridge on w keeps perfectly separating hyperplanes bounded.
    """
    total = float(v.sum())

    def objective(params: np.ndarray) -> tuple[float, np.ndarray]:
        w = params[:-1]
        b = params[-1]
        z = X_s @ w + b
        sig = _sigmoid(z)
        member_right = v * sig
        member_left = v - member_right
        # smoothed branch counts: weight W_b and label-1 weight S_b
        W = np.array([member_left.sum(), member_right.sum()]) + 2.0 * _ENTROPY_EPS
        S = np.array([member_left @ y, member_right @ y]) + _ENTROPY_EPS
        Z = W - S
        loss = float(np.sum(-S * np.log(S / W) - Z * np.log(Z / W))) / total
        loss += _L2_PENALTY * float(w @ w)
        # dL/dW_b and dL/dS_b feed the chain rule through sigma'(z)
        dW = np.log(W / Z)
        dS = np.log(Z / S)
        dz = v * sig * (1.0 - sig) * ((dW[1] - dW[0]) + y * (dS[1] - dS[0]))
        grad = np.empty(params.size)
        grad[:-1] = (X_s.T @ dz) / total + 2.0 * _L2_PENALTY * w
        grad[-1] = float(dz.sum()) / total
        return loss, grad

    return objective


def _best_axis_split(X_s, y, v):
    """Axis split (feature, threshold) minimizing weighted Gini, or None."""
    total = float(v.sum())
    best = None
    for j in range(X_s.shape[1]):
        order = np.argsort(X_s[:, j], kind="stable")
        xs = X_s[order, j]
        cum_w = np.cumsum(v[order])
        cum_w1 = np.cumsum((v * y)[order])
        cuts = np.nonzero(np.diff(xs) > 0.0)[0]
        if cuts.size == 0:
            continue
        left_w = cum_w[cuts]
        left_w1 = cum_w1[cuts]
        right_w = total - left_w
        right_w1 = cum_w1[-1] - left_w1
        with np.errstate(invalid="ignore", divide="ignore"):
            p_left = left_w1 / left_w
            p_right = right_w1 / right_w
            score = (
                left_w * 2.0 * p_left * (1.0 - p_left)
                + right_w * 2.0 * p_right * (1.0 - p_right)
            ) / total
        score = np.where((left_w > 0.0) & (right_w > 0.0), score, np.inf)
        pick = int(np.argmin(score))
        if best is None or score[pick] < best[0]:
            threshold = 0.5 * (xs[cuts[pick]] + xs[cuts[pick] + 1])
            best = (float(score[pick]), j, float(threshold))
    if best is None:
        return None
    _, j, threshold = best
    return j, threshold


def _fit_hyperplane(X_s, y, v, lbfgs_cfg, seed, path_id):
    """Best hyperplane over several starts: zero, best axis split, random."""
    num_features = X_s.shape[1]
    objective = _make_node_objective(X_s, y, v)
    starts = [np.zeros(num_features + 1)]
    axis = _best_axis_split(X_s, y, v)
    if axis is not None:
        j, threshold = axis
        params = np.zeros(num_features + 1)
        params[j] = _AXIS_SHARPNESS
        params[-1] = -_AXIS_SHARPNESS * threshold
        starts.append(params)
    for restart in range(3):
        rng = np.random.default_rng(derive_seed(seed, path_id, restart))
        starts.append(np.append(rng.normal(0.0, 1.0, num_features), rng.normal()))
    best_params, best_loss = None, math.inf
    for start in starts:
        params, loss = lbfgs_minimize(
            objective,
            start,
            max_iter=lbfgs_cfg.max_iter,
            memory=lbfgs_cfg.memory,
            tolerance=lbfgs_cfg.tolerance,
        )
        if loss < best_loss:
            best_params, best_loss = params, loss
    return best_params[:-1], float(best_params[-1])


def _leaf(ones: float, zeros: float) -> ObliqueNode:
    total = ones + zeros
    label = 1 if ones > zeros else 0
    purity = max(ones, zeros) / total if total > 0.0 else 1.0
    return ObliqueNode(label=label, weighted_purity=min(max(purity, 0.5), 1.0))


def _grow(X_s, y, v, depth, path_id, max_depth, min_leaf_weight, lbfgs_cfg, seed):
    keep = v > _NEGLIGIBLE_WEIGHT
    if not np.all(keep):
        X_s, y, v = X_s[keep], y[keep], v[keep]
    total = float(v.sum())
    ones = float(v @ y)
    zeros = total - ones
    purity = max(ones, zeros) / total if total > 0.0 else 1.0
    if depth >= max_depth or purity >= PURITY_STOP or total < min_leaf_weight:
        return _leaf(ones, zeros)
    w, b = _fit_hyperplane(X_s, y, v, lbfgs_cfg, seed, path_id)
    if float(np.linalg.norm(w)) <= _ZERO_WEIGHT_NORM:
        return _leaf(ones, zeros)
    p_right = _sigmoid(X_s @ w + b)
    left = _grow(
        X_s, y, v * (1.0 - p_right), depth + 1, 2 * path_id,
        max_depth, min_leaf_weight, lbfgs_cfg, seed,
    )
    right = _grow(
        X_s, y, v * p_right, depth + 1, 2 * path_id + 1,
        max_depth, min_leaf_weight, lbfgs_cfg, seed,
    )
    return ObliqueNode(weights=w, bias=b, left=left, right=right)


def _scaling_from_bounds(bounds: FeatureBounds) -> tuple[tuple[float, float], ...]:
    scaling = []
    for name in bounds.feature_names():
        lower = float(bounds.lower[name])
        width = float(bounds.upper[name]) - lower
        scaling.append((lower, width if width > 0.0 else 1.0))
    return tuple(scaling)


def _fit_tree(X, y, feature_names, scaling, max_depth, lbfgs_cfg, min_leaf_weight, seed):
    """Shared trainer over raw arrays; features arrive in original units."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ValidationError(f"bad training shapes X{X.shape}, y{y.shape}")
    offsets = np.array([o for o, _ in scaling])
    scales = np.array([s for _, s in scaling])
    X_s = (X - offsets) / scales
    labels = set(np.unique(y).tolist())
    if not labels <= {0.0, 1.0}:
        raise ValidationError(f"labels must be 0/1, got {sorted(labels)}")
    single_label = len(labels) < 2
    if single_label:
        warnings.warn(
            "training data contains a single label; returning a one-leaf tree",
            stacklevel=3,
        )
        label = int(y[0])
        root = ObliqueNode(label=label, weighted_purity=1.0)
    else:
        root = _grow(
            X_s, y, np.ones(X.shape[0]), 0, 1,
            max_depth, min_leaf_weight, lbfgs_cfg, seed,
        )
    accuracy = float(np.mean(_predict_scaled(root, X_s) == y.astype(np.int64)))
    return ObliqueTree(
        root=root,
        feature_names=tuple(feature_names),
        feature_scaling=scaling,
        max_depth=max_depth,
        train_accuracy=accuracy,
        single_label=single_label,
    )


def train_wodt(ds, max_depth=6, lbfgs_cfg=None, min_leaf_weight=1.0, seed=0) -> ObliqueTree:
    """Train a tree on a labeled dataset using its bounds for scaling.

    Splits stop at ``max_depth``, at weighted purity >= 0.999, or when a
    node's total soft weight drops below ``min_leaf_weight``.  A dataset
    with only one label yields a single-leaf tree and a warning.
    """
    if max_depth < 1:
        raise ValidationError(f"max_depth must be >= 1, got {max_depth}")
    if not min_leaf_weight > 0.0:
        raise ValidationError(f"min_leaf_weight must be > 0, got {min_leaf_weight}")
    if not ds.samples:
        raise ValidationError("dataset is empty")
    if lbfgs_cfg is None:
        lbfgs_cfg = LbfgsConfig()
    return _fit_tree(
        ds.feature_matrix(),
        ds.label_vector(),
        ds.feature_names,
        _scaling_from_bounds(ds.bounds),
        max_depth,
        lbfgs_cfg,
        min_leaf_weight,
        seed,
    )


# ---------------------------------------------------------------------------
# Prediction


def _predict_scaled(root: ObliqueNode, X_s: np.ndarray) -> np.ndarray:
    out = np.empty(X_s.shape[0], dtype=np.int64)
    stack = [(root, np.arange(X_s.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            out[idx] = node.label
            continue
        goes_right = X_s[idx] @ node.weights + node.bias >= 0.0
        stack.append((node.left, idx[~goes_right]))
        stack.append((node.right, idx[goes_right]))
    return out


def predict(tree: ObliqueTree, x: Sequence[float]) -> int:
    """Hard-path label for one point in original units: right iff w.x_s + b >= 0."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (len(tree.feature_names),):
        raise ValidationError(
            f"expected {len(tree.feature_names)} coordinates, got shape {x.shape}"
        )
    return int(_predict_scaled(tree.root, tree.scale(x))[0])


def predict_batch(tree: ObliqueTree, X) -> np.ndarray:
    """Hard-path labels for points given as rows, in original units."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != len(tree.feature_names):
        raise ValidationError(
            f"expected {len(tree.feature_names)} columns, got {X.shape[1]}"
        )
    return _predict_scaled(tree.root, tree.scale(X))


# ---------------------------------------------------------------------------
# Region extraction


def extract_feasible_regions(tree: ObliqueTree, bounds: FeatureBounds) -> Disjunction:
    """All leaf-1 polyhedra of the tree, in original units, plus the box.

    Depth-first, left child first, so region order is deterministic.
    Left branches contribute w.x_s <= -b and right branches -w.x_s <= b;
    rows are unscaled back to original units before emission.
    """
    names = tuple(bounds.feature_names())
    if names != tree.feature_names:
        raise ValidationError(
            f"bounds features {list(names)} do not match tree features "
            f"{list(tree.feature_names)}"
        )
    expected = _scaling_from_bounds(bounds)
    for name, got, want in zip(names, tree.feature_scaling, expected):
        if abs(got[0] - want[0]) > 1e-12 or abs(got[1] - want[1]) > 1e-12:
            raise ValidationError(
                f"feature {name!r}: tree scaling {got} does not match bounds scaling {want}"
            )
    offsets = np.array([o for o, _ in tree.feature_scaling])
    scales = np.array([s for _, s in tree.feature_scaling])
    regions: list[Region] = []

    def visit(node: ObliqueNode, rows: list[np.ndarray], rhs: list[float]) -> None:
        if node.is_leaf:
            if node.label == 1:
                if rows:
                    scaled_rows = np.vstack(rows)
                    unscaled = scaled_rows / scales
                    shifted = np.asarray(rhs) + unscaled @ offsets
                else:
                    unscaled = np.zeros((0, len(names)))
                    shifted = np.zeros(0)
                regions.append(Region(rows=unscaled, rhs=shifted, box=bounds))
            return
        visit(node.left, rows + [node.weights], rhs + [-node.bias])
        visit(node.right, rows + [-node.weights], rhs + [node.bias])

    visit(tree.root, [], [])
    if not regions:
        raise InfeasibleError(
            f"year {bounds.year}: no reliability-feasible region within feature bounds"
        )
    return Disjunction(year=bounds.year, regions=tuple(regions), feature_names=names)


# ---------------------------------------------------------------------------
# Scikit-learn style wrapper


class WeightedObliqueTreeClassifier(BaseEstimator, ClassifierMixin):
    """Binary classifier over integer unit-count features.

    Thin estimator around the tree trainer.  ``bounds`` fixes the
    feature scaling; when omitted, bounds are inferred from the training
    data's per-column range.

    Parameters
    ----------
    max_depth : positive int, default=6
        Maximum tree depth.

    min_leaf_weight : positive float, default=1.0
        Stop splitting below this total soft sample weight.

    lbfgs_max_iter : positive int, default=100
        Iteration cap per hyperplane fit.

    lbfgs_memory : positive int, default=10
        Curvature pairs kept by the optimizer.

    lbfgs_tolerance : positive float, default=1e-6
        Gradient norm at which a hyperplane fit stops.

    random_state : int, default=0
        Seed for the random hyperplane restarts.

    bounds : FeatureBounds, default=None
        Feature box used for scaling and region extraction.

    Attributes
    ----------
    tree_ : ObliqueTree
        The trained tree.

    classes_ : ndarray of shape (n_classes,)
        Class labels seen during fit.

    n_features_in_ : int
        Number of features seen during fit.
    """

    def __init__(
        self,
        max_depth=6,
        min_leaf_weight=1.0,
        lbfgs_max_iter=100,
        lbfgs_memory=10,
        lbfgs_tolerance=1e-6,
        random_state=0,
        bounds=None,
    ):
        self.max_depth = max_depth
        self.min_leaf_weight = min_leaf_weight
        self.lbfgs_max_iter = lbfgs_max_iter
        self.lbfgs_memory = lbfgs_memory
        self.lbfgs_tolerance = lbfgs_tolerance
        self.random_state = random_state
        self.bounds = bounds

    def _validate_params(self):
        if not (isinstance(self.max_depth, (int, np.integer)) and self.max_depth >= 1):
            raise ValueError("max_depth must be a positive integer")
        if not self.min_leaf_weight > 0.0:
            raise ValueError("min_leaf_weight must be positive")

    def fit(self, X, y):
        """Train the tree; returns self."""
        X, y = check_X_y(X, y)
        self._validate_params()
        classes = unique_labels(y)
        if not set(classes.tolist()) <= {0, 1}:
            raise ValueError(f"labels must be 0/1, got {classes.tolist()}")
        if self.bounds is not None:
            names = self.bounds.feature_names()
            if X.shape[1] != len(names):
                raise ValueError(
                    f"X has {X.shape[1]} features, bounds name {len(names)}"
                )
            scaling = _scaling_from_bounds(self.bounds)
        else:
            names = [f"x{j}" for j in range(X.shape[1])]
            lows = X.min(axis=0)
            widths = X.max(axis=0) - lows
            scaling = tuple(
                (float(lo), float(wd) if wd > 0.0 else 1.0)
                for lo, wd in zip(lows, widths)
            )
        self.tree_ = _fit_tree(
            X,
            y.astype(np.float64),
            names,
            scaling,
            int(self.max_depth),
            LbfgsConfig(
                max_iter=int(self.lbfgs_max_iter),
                memory=int(self.lbfgs_memory),
                tolerance=float(self.lbfgs_tolerance),
            ),
            float(self.min_leaf_weight),
            int(self.random_state),
        )
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """Hard-path labels for samples."""
        check_is_fitted(self)
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return predict_batch(self.tree_, X)


# ---------------------------------------------------------------------------
# Serialization


def _heap_rows(node: ObliqueNode, node_id: int, out: dict[int, ObliqueNode]) -> None:
    out[node_id] = node
    if not node.is_leaf:
        _heap_rows(node.left, 2 * node_id, out)
        _heap_rows(node.right, 2 * node_id + 1, out)


def write_tree_text(tree: ObliqueTree, path: str) -> None:
    """Versioned text dump: header, per-feature scaling, heap-indexed nodes."""
    nodes: dict[int, ObliqueNode] = {}
    _heap_rows(tree.root, 1, nodes)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_TREE_FORMAT)
        writer.writerow(["max_depth", str(tree.max_depth)])
        writer.writerow(["train_accuracy", repr(tree.train_accuracy)])
        writer.writerow(["single_label", "1" if tree.single_label else "0"])
        for name, (offset, scale) in zip(tree.feature_names, tree.feature_scaling):
            writer.writerow(["feature", name, repr(offset), repr(scale)])
        for node_id in sorted(nodes):
            node = nodes[node_id]
            if node.is_leaf:
                writer.writerow(
                    ["node", str(node_id), "leaf", str(node.label), repr(node.weighted_purity)]
                )
            else:
                writer.writerow(
                    ["node", str(node_id), "internal", repr(node.bias)]
                    + [repr(float(w)) for w in node.weights]
                )


def _build_node(rows: dict[int, list[str]], node_id: int, path: str) -> ObliqueNode:
    if node_id not in rows:
        raise ParseError(f"{path}: missing node {node_id}")
    row = rows[node_id]
    kind = row[2]
    if kind == "leaf":
        return ObliqueNode(label=int(row[3]), weighted_purity=float(row[4]))
    if kind == "internal":
        return ObliqueNode(
            weights=np.array([float(v) for v in row[4:]]),
            bias=float(row[3]),
            left=_build_node(rows, 2 * node_id, path),
            right=_build_node(rows, 2 * node_id + 1, path),
        )
    raise ParseError(f"{path}: unknown node kind {kind!r}")


def read_tree_text(path: str) -> ObliqueTree:
    """Read a tree written by write_tree_text; rejects other versions."""
    with open(path, newline="") as handle:
        rows = [row for row in csv.reader(handle) if row]
    if not rows or tuple(rows[0]) != _TREE_FORMAT:
        raise ParseError(
            f"{path}: expected header {','.join(_TREE_FORMAT)}, "
            f"got {rows[0] if rows else 'empty file'}"
        )
    header: dict[str, str] = {}
    features: list[tuple[str, float, float]] = []
    node_rows: dict[int, list[str]] = {}
    try:
        for row in rows[1:]:
            if row[0] == "feature":
                features.append((row[1], float(row[2]), float(row[3])))
            elif row[0] == "node":
                node_rows[int(row[1])] = row
            else:
                header[row[0]] = row[1]
        tree = ObliqueTree(
            root=_build_node(node_rows, 1, path),
            feature_names=tuple(name for name, _, _ in features),
            feature_scaling=tuple((offset, scale) for _, offset, scale in features),
            max_depth=int(header["max_depth"]),
            train_accuracy=float(header["train_accuracy"]),
            single_label=header.get("single_label", "0") == "1",
        )
    except (KeyError, IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed tree file ({exc})") from exc
    return tree


def write_disjunction_text(disj: Disjunction, path: str) -> None:
    """Versioned text dump: box bounds once, then per-region rows and rhs."""
    box = disj.regions[0].box
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_DISJUNCTION_FORMAT)
        writer.writerow(["year", str(disj.year)])
        for name in disj.feature_names:
            writer.writerow(
                [
                    "feature",
                    name,
                    str(box.lower[name]),
                    str(box.upper[name]),
                    str(box.sweep_min[name]),
                    str(box.sweep_max[name]),
                ]
            )
        for index, region in enumerate(disj.regions):
            writer.writerow(["region", str(index), str(region.rows.shape[0])])
            for row, rhs in zip(region.rows, region.rhs):
                writer.writerow(
                    ["row", str(index), repr(float(rhs))] + [repr(float(v)) for v in row]
                )


def read_disjunction_text(path: str) -> Disjunction:
    """Read a disjunction written by write_disjunction_text."""
    with open(path, newline="") as handle:
        rows = [row for row in csv.reader(handle) if row]
    if not rows or tuple(rows[0]) != _DISJUNCTION_FORMAT:
        raise ParseError(
            f"{path}: expected header {','.join(_DISJUNCTION_FORMAT)}, "
            f"got {rows[0] if rows else 'empty file'}"
        )
    try:
        year = None
        lower: dict[str, int] = {}
        upper: dict[str, int] = {}
        sweep_min: dict[str, int] = {}
        sweep_max: dict[str, int] = {}
        region_sizes: list[int] = []
        region_rows: list[list[list[float]]] = []
        region_rhs: list[list[float]] = []
        for row in rows[1:]:
            if row[0] == "year":
                year = int(row[1])
            elif row[0] == "feature":
                name = row[1]
                lower[name] = int(row[2])
                upper[name] = int(row[3])
                sweep_min[name] = int(row[4])
                sweep_max[name] = int(row[5])
            elif row[0] == "region":
                if int(row[1]) != len(region_sizes):
                    raise ParseError(f"{path}: region indices out of order")
                region_sizes.append(int(row[2]))
                region_rows.append([])
                region_rhs.append([])
            elif row[0] == "row":
                index = int(row[1])
                region_rhs[index].append(float(row[2]))
                region_rows[index].append([float(v) for v in row[3:]])
            else:
                raise ParseError(f"{path}: unknown record {row[0]!r}")
        if year is None:
            raise ParseError(f"{path}: missing year record")
        box = FeatureBounds(
            year=year, lower=lower, upper=upper, sweep_min=sweep_min, sweep_max=sweep_max
        )
        regions = []
        for size, rows_k, rhs_k in zip(region_sizes, region_rows, region_rhs):
            if size != len(rows_k):
                raise ParseError(
                    f"{path}: region declared {size} rows, found {len(rows_k)}"
                )
            regions.append(
                Region(
                    rows=np.asarray(rows_k, dtype=np.float64),
                    rhs=np.asarray(rhs_k, dtype=np.float64),
                    box=box,
                )
            )
        return Disjunction(
            year=year, regions=tuple(regions), feature_names=tuple(sorted(lower))
        )
    except ParseError:
        raise
    except (KeyError, IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed disjunction file ({exc})") from exc
