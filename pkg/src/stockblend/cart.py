"""Binary regression tree: greedy growth on within-node target variance,
then cost-complexity pruning with cross-validated subtree selection.

Splits maximize the impurity reduction i(t) - pL*i(tL) - pR*i(tR); for
regression targets the impurity i is the within-node target variance.  The
Gini index is kept for class-probability inputs and an optional
classification reading of the same machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

_PRUNE_TOL = 1e-12


@dataclass(frozen=True)
class CartParams:
    min_leaf: int = 5
    cv_folds: int = 10
    max_depth: int = 20

    def __post_init__(self):
        if self.min_leaf < 1:
            raise ValidationError("min_leaf must be >= 1")
        if self.cv_folds < 2:
            raise ValidationError("cv_folds must be >= 2")
        if self.max_depth < 1:
            raise ValidationError("max_depth must be >= 1")


@dataclass
class TreeNode:
    """Internal node (feature, threshold, children) or leaf (value only).

    Every node keeps the mean target, sample count and resubstitution SSE of
    its training subset, which pruning reuses.
    """

    value: float
    count: int
    sse: float
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = field(default=None, repr=False)
    right: "TreeNode | None" = field(default=None, repr=False)

    def is_leaf(self) -> bool:
        return self.feature is None

    def collapse(self):
        self.feature = None
        self.threshold = None
        self.left = None
        self.right = None

    def clone(self) -> "TreeNode":
        node = TreeNode(self.value, self.count, self.sse,
                        self.feature, self.threshold)
        if not self.is_leaf():
            node.left = self.left.clone()
            node.right = self.right.clone()
        return node

    def to_dict(self) -> dict:
        record = {"value": self.value, "count": self.count, "sse": self.sse}
        if not self.is_leaf():
            record.update(
                feature=self.feature,
                threshold=self.threshold,
                left=self.left.to_dict(),
                right=self.right.to_dict(),
            )
        return record

    @staticmethod
    def from_dict(record: dict) -> "TreeNode":
        node = TreeNode(record["value"], record["count"], record["sse"])
        if "feature" in record:
            node.feature = record["feature"]
            node.threshold = record["threshold"]
            node.left = TreeNode.from_dict(record["left"])
            node.right = TreeNode.from_dict(record["right"])
        return node


@dataclass
class CartModel:
    root: TreeNode
    n_features: int

    def leaf_count(self) -> int:
        return _count_leaves(self.root)

    def depth(self) -> int:
        return _depth(self.root)


def gini_impurity(class_probs) -> float:
    """Gini index 1 - sum(p^2) of a class-probability vector."""
    probs = np.asarray(class_probs, dtype=float)
    if probs.ndim != 1 or len(probs) == 0:
        raise ValidationError("class probabilities must be a nonempty vector")
    if np.any(probs < -1e-12):
        raise ValidationError(f"negative probability in {probs}")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValidationError(f"probabilities sum to {probs.sum()}, not 1")
    return float(1.0 - np.sum(probs ** 2))


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Exhaustive scan over midpoint thresholds of every feature.

    Returns (feature, threshold, child_sse) for the split minimizing
    sse_left + sse_right, or None when no valid strictly-improving split
    exists.  Ties resolve to the lowest feature index, then lowest threshold.
    """
    n, d = x.shape
    if n < 2 * min_leaf:
        return None

    order = np.argsort(x, axis=0, kind="stable")
    xs = np.take_along_axis(x, order, axis=0)
    ys = y[order]

    csum = np.cumsum(ys, axis=0)
    csq = np.cumsum(ys ** 2, axis=0)
    total_sum, total_sq = csum[-1], csq[-1]

    counts = np.arange(1, n, dtype=float)[:, None]
    left_sse = csq[:-1] - csum[:-1] ** 2 / counts
    right_counts = n - counts
    right_sum = total_sum - csum[:-1]
    right_sse = (total_sq - csq[:-1]) - right_sum ** 2 / right_counts

    valid = ((counts >= min_leaf) & (right_counts >= min_leaf)) & (xs[:-1] < xs[1:])
    score = np.where(valid, left_sse + right_sse, np.inf)

    best = None
    node_sse = float(total_sq[0] - total_sum[0] ** 2 / n) if d else 0.0
    for f in range(d):
        col = score[:, f]
        p = int(np.argmin(col))
        s = col[p]
        if not np.isfinite(s):
            continue
        if node_sse - s <= _PRUNE_TOL:
            continue
        # within a feature argmin picks the first (lowest) threshold; across
        # features only a strictly better score displaces an earlier one
        threshold = 0.5 * (xs[p, f] + xs[p + 1, f])
        if best is None or s < best[2] - _PRUNE_TOL:
            best = (f, float(threshold), float(s))
    return best


def _grow(x: np.ndarray, y: np.ndarray, params: CartParams, depth: int) -> TreeNode:
    mean = float(y.mean())
    sse = float(np.sum((y - mean) ** 2))
    node = TreeNode(value=mean, count=len(y), sse=sse)
    if sse <= _PRUNE_TOL or len(y) < 2 * params.min_leaf or depth >= params.max_depth:
        return node
    split = _best_split(x, y, params.min_leaf)
    if split is None:
        return node
    feature, threshold, _ = split
    mask = x[:, feature] < threshold
    node.feature = feature
    node.threshold = threshold
    node.left = _grow(x[mask], y[mask], params, depth + 1)
    node.right = _grow(x[~mask], y[~mask], params, depth + 1)
    return node


def cart_grow(x: np.ndarray, y: np.ndarray, params: CartParams) -> CartModel:
    """Grow the full tree; stopping only on purity, node size or depth."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(y) == 0:
        raise ValidationError("training set must be nonempty")
    if x.shape[0] != len(y):
        raise ValidationError(f"{x.shape[0]} inputs vs {len(y)} targets")
    return CartModel(root=_grow(x, y, params, depth=0), n_features=x.shape[1])


def _count_leaves(node: TreeNode) -> int:
    if node.is_leaf():
        return 1
    return _count_leaves(node.left) + _count_leaves(node.right)


def _depth(node: TreeNode) -> int:
    if node.is_leaf():
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


def _subtree_stats(node: TreeNode):
    """(leaf SSE sum, leaf count) of the subtree rooted at ``node``."""
    if node.is_leaf():
        return node.sse, 1
    ls, lc = _subtree_stats(node.left)
    rs, rc = _subtree_stats(node.right)
    return ls + rs, lc + rc


def _weakest_links(node: TreeNode, out: list):
    """Collect (g, node) for every internal node, g = (R(t)-R(T_t))/(|T_t|-1)."""
    if node.is_leaf():
        return
    sse_sub, leaves = _subtree_stats(node)
    g = (node.sse - sse_sub) / (leaves - 1)
    out.append((g, node))
    _weakest_links(node.left, out)
    _weakest_links(node.right, out)


def _prune_to_alpha(root: TreeNode, alpha: float):
    """Iteratively collapse weakest links with g <= alpha (in place)."""
    while not root.is_leaf():
        links: list = []
        _weakest_links(root, links)
        g_min = min(g for g, _ in links)
        if g_min > alpha + _PRUNE_TOL:
            break
        for g, node in links:
            if g <= g_min + _PRUNE_TOL and not node.is_leaf():
                node.collapse()


def cost_complexity_alphas(root: TreeNode) -> list[float]:
    """Breakpoints 0 = a0 < a1 < ... of the nested pruning sequence, ending
    at the value that collapses the tree to its root."""
    work = root.clone()
    alphas = [0.0]
    _prune_to_alpha(work, 0.0)
    while not work.is_leaf():
        links: list = []
        _weakest_links(work, links)
        g_min = min(g for g, _ in links)
        alphas.append(max(g_min, alphas[-1]))
        for g, node in links:
            if g <= g_min + _PRUNE_TOL and not node.is_leaf():
                node.collapse()
    return alphas


def _predict_batch(node: TreeNode, x: np.ndarray) -> np.ndarray:
    out = np.empty(len(x))
    for i, row in enumerate(x):
        cur = node
        while not cur.is_leaf():
            cur = cur.left if row[cur.feature] < cur.threshold else cur.right
        out[i] = cur.value
    return out


def cart_prune(model: CartModel, x: np.ndarray, y: np.ndarray,
               params: CartParams) -> CartModel:
    """Cost-complexity pruning with cross-validated subtree selection.

    Candidate subtrees come from the nested weakest-link sequence of the
    full tree; their representative alphas are scored by K-fold squared
    error with contiguous chronological folds, and the minimum-cost subtree
    is returned (no one-standard-error rule).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if model.root.is_leaf():
        return model

    alphas = cost_complexity_alphas(model.root)
    if len(alphas) == 1:
        return model
    # Representative alpha per subtree: geometric mean of adjacent
    # breakpoints; the root-only subtree is probed at +inf.
    betas = [math.sqrt(alphas[k] * alphas[k + 1]) for k in range(len(alphas) - 1)]
    betas.append(math.inf)

    n = len(y)
    folds = min(params.cv_folds, n)
    bounds = [round(i * n / folds) for i in range(folds + 1)]
    cv_sse = np.zeros(len(betas))
    for f in range(folds):
        lo, hi = bounds[f], bounds[f + 1]
        if hi <= lo:
            continue
        mask = np.ones(n, dtype=bool)
        mask[lo:hi] = False
        if not mask.any():
            continue
        fold_model = cart_grow(x[mask], y[mask], params)
        work = fold_model.root.clone()
        for k, beta in enumerate(betas):
            _prune_to_alpha(work, beta)
            pred = _predict_batch(work, x[lo:hi])
            cv_sse[k] += float(np.sum((pred - y[lo:hi]) ** 2))

    # Minimum CV cost; ties resolve toward the smaller (more pruned) tree.
    best_k = int(np.flatnonzero(cv_sse <= cv_sse.min() + _PRUNE_TOL)[-1])
    pruned = model.root.clone()
    _prune_to_alpha(pruned, alphas[best_k])
    return CartModel(root=pruned, n_features=model.n_features)


def cart_predict(model: CartModel, x) -> float:
    """Route a feature vector to its leaf; values at a threshold go right."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n_features,):
        raise ValidationError(
            f"input has shape {x.shape}, expected ({model.n_features},)"
        )
    node = model.root
    while not node.is_leaf():
        node = node.left if x[node.feature] < node.threshold else node.right
    return float(node.value)
