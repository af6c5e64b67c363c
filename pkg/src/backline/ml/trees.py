"""Array-backed binary decision trees and the two split searches used to grow them.

Rows go left when ``x[feature] < threshold``. Thresholds are midpoints between
consecutive distinct sorted values. Split-search ties resolve to the lowest
feature index, then the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MIN_GAIN = 1e-12


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        for _ in range(self.depth):
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                break
            go_left = X[rows, np.where(internal, f, 0)] < self.threshold[node]
            node = np.where(internal, np.where(go_left, self.left[node], self.right[node]), node)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def used_features(self) -> set:
        return {int(f) for f in self.feature if f >= 0}

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
            "depth": self.depth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=float),
            np.asarray(d["gain"], dtype=float),
            int(d["depth"]),
        )


class _Builder:
    def __init__(self):
        self.feature, self.threshold, self.left, self.right, self.value, self.gain = [], [], [], [], [], []
        self.depth = 0

    def add(self, value: float, depth: int) -> int:
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        self.gain.append(0.0)
        self.depth = max(self.depth, depth)
        return len(self.feature) - 1

    def split(self, node: int, feature: int, threshold: float, gain: float, left: int, right: int):
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.gain[node] = gain
        self.left[node] = left
        self.right[node] = right

    def build(self) -> Tree:
        return Tree(
            np.asarray(self.feature, dtype=np.int64),
            np.asarray(self.threshold, dtype=float),
            np.asarray(self.left, dtype=np.int64),
            np.asarray(self.right, dtype=np.int64),
            np.asarray(self.value, dtype=float),
            np.asarray(self.gain, dtype=float),
            self.depth,
        )


def _sorted_candidates(x: np.ndarray):
    order = np.argsort(x, kind="stable")
    xs = x[order]
    cut = np.flatnonzero(xs[1:] > xs[:-1])  # split after position cut[i]
    return order, xs, cut


def newton_tree(
    X: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    max_depth: int = 3,
    reg_lambda: float = 1.0,
    min_child_weight: float = 1.0,
) -> Tree:
    """Second-order boosting tree: gain 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)], leaf -G/(H+l)."""
    b = _Builder()

    def score(G, H):
        return G * G / (H + reg_lambda)

    def grow(idx: np.ndarray, depth: int) -> int:
        G, H = grad[idx].sum(), hess[idx].sum()
        node = b.add(-G / (H + reg_lambda), depth)
        if depth >= max_depth or len(idx) < 2:
            return node
        best = (_MIN_GAIN, -1, 0.0, None)
        parent = score(G, H)
        for f in range(X.shape[1]):
            order, xs, cut = _sorted_candidates(X[idx, f])
            if len(cut) == 0:
                continue
            GL = np.cumsum(grad[idx][order])[cut]
            HL = np.cumsum(hess[idx][order])[cut]
            GR, HR = G - GL, H - HL
            gain = 0.5 * (score(GL, HL) + score(GR, HR) - parent)
            gain[(HL < min_child_weight) | (HR < min_child_weight)] = -np.inf
            k = int(np.argmax(gain))
            if gain[k] > best[0]:
                best = (float(gain[k]), f, 0.5 * (xs[cut[k]] + xs[cut[k] + 1]), None)
        gain, f, thr, _ = best
        if f < 0:
            return node
        mask = X[idx, f] < thr
        left = grow(idx[mask], depth + 1)
        right = grow(idx[~mask], depth + 1)
        b.split(node, f, thr, gain, left, right)
        return node

    grow(np.arange(len(X)), 0)
    return b.build()


def gini_tree(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    rng: np.random.Generator,
    max_features: int,
    min_samples_split: int = 2,
    max_depth: int | None = None,
) -> Tree:
    """Weighted Gini classification tree; leaves hold the weighted positive share.

    ``gain`` records the weighted impurity decrease W*g - WL*gL - WR*gR.
    """
    b = _Builder()
    n_features = X.shape[1]
    limit = np.inf if max_depth is None else max_depth

    def grow(idx: np.ndarray, depth: int) -> int:
        W = w[idx].sum()
        W1 = (w[idx] * y[idx]).sum()
        p = W1 / W if W > 0 else 0.0
        node = b.add(p, depth)
        if depth >= limit or len(idx) < min_samples_split or p <= 0.0 or p >= 1.0:
            return node
        parent = 2.0 * W1 * (1.0 - p)  # W * gini
        best = (_MIN_GAIN, -1, 0.0)
        feats = np.sort(rng.choice(n_features, size=min(max_features, n_features), replace=False))
        for f in feats:
            order, xs, cut = _sorted_candidates(X[idx, f])
            if len(cut) == 0:
                continue
            wl = np.cumsum(w[idx][order])[cut]
            w1l = np.cumsum((w[idx] * y[idx])[order])[cut]
            wr, w1r = W - wl, W1 - w1l
            with np.errstate(divide="ignore", invalid="ignore"):
                child = 2.0 * w1l * (1.0 - w1l / wl) + 2.0 * w1r * (1.0 - w1r / wr)
            gain = parent - np.nan_to_num(child, nan=np.inf)
            k = int(np.argmax(gain))
            if gain[k] > best[0]:
                best = (float(gain[k]), int(f), 0.5 * (xs[cut[k]] + xs[cut[k] + 1]))
        gain, f, thr = best
        if f < 0:
            return node
        mask = X[idx, f] < thr
        left = grow(idx[mask], depth + 1)
        right = grow(idx[~mask], depth + 1)
        b.split(node, f, thr, gain, left, right)
        return node

    grow(np.arange(len(X)), 0)
    return b.build()
