"""Regression surrogates and acquisition scores for the optimizer engines.

Three model families, all fit on encoded candidate vectors:

* Gaussian process with a Matern-5/2 kernel (length scale picked from a
  fixed ladder by marginal likelihood) -- used by the BO engines.
* Bagged regression trees with variance-reduction splits -- prediction is
  the across-tree mean, uncertainty the across-tree standard deviation.
* Cubic radial basis function interpolant with a linear polynomial tail.

All fits are deterministic: same data (and seed, for the forest) gives the
same model, which keeps whole-experiment replay byte-stable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import ndtr

from .errors import DomainError, FitError, NumericError

GP_LENGTH_SCALE_LADDER = (0.1, 0.3, 1.0, 3.0, 10.0)
GP_JITTER = 1e-6
GP_JITTER_MAX = 1e-2

_SQRT5 = math.sqrt(5.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    return X


def _pairwise_dist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d2 = np.sum(A**2, axis=1)[:, None] + np.sum(B**2, axis=1)[None, :] - 2.0 * A @ B.T
    return np.sqrt(np.maximum(d2, 0.0))


def matern52(dist: np.ndarray, length_scale: float) -> np.ndarray:
    """Matern-5/2 correlation as a function of Euclidean distance."""
    r = _SQRT5 * dist / length_scale
    return (1.0 + r + r**2 / 3.0) * np.exp(-r)


# ---------------------------------------------------------------------------
# Gaussian process


@dataclass(frozen=True)
class GpModel:
    X: np.ndarray
    alpha: np.ndarray          # K^-1 u for the standardized targets u
    chol: tuple                # cho_factor of K
    length_scale: float
    jitter: float
    y_mean: float
    y_std: float
    log_transform: bool

    def predict(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and std at query rows, on the original target scale."""
        Xq = _as_matrix(Xq)
        ks = matern52(_pairwise_dist(Xq, self.X), self.length_scale)
        mean_u = ks @ self.alpha
        v = cho_solve(self.chol, ks.T)
        var_u = 1.0 + self.jitter - np.sum(ks * v.T, axis=1)
        std_u = np.sqrt(np.maximum(var_u, 0.0))
        mean_t = mean_u * self.y_std + self.y_mean
        std_t = std_u * self.y_std
        if self.log_transform:
            mean = np.exp(mean_t)
            std = mean * std_t  # first-order propagation through exp
        else:
            mean, std = mean_t, std_t
        return mean, std


def _check_conflicting_duplicates(X: np.ndarray, y: np.ndarray) -> None:
    seen: dict[tuple, float] = {}
    for row, target in zip(X, y):
        key = tuple(row.tolist())
        if key in seen and abs(seen[key] - target) > 1e-12:
            raise FitError(f"duplicate input with conflicting targets {seen[key]} vs {target}")
        seen.setdefault(key, float(target))


def _chol_with_escalation(K: np.ndarray):
    jitter = GP_JITTER
    n = K.shape[0]
    while jitter <= GP_JITTER_MAX:
        try:
            chol = cho_factor(K + jitter * np.eye(n), lower=True)
            return chol, jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    return None, None


def gp_fit(X, y, log_transform: bool = True) -> GpModel:
    """Fit a GP to positive targets, optionally on log scale.

    Targets are standardized after the optional log transform; the signal
    variance is fixed at 1 on that scale, and the length scale is the ladder
    entry with the highest marginal likelihood (ties go to the smaller one).
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float)
    if len(X) < 1 or len(X) != len(y):
        raise DomainError(f"need matching non-empty X, y; got {len(X)} vs {len(y)}")
    if log_transform and np.any(y <= 0):
        raise DomainError("log transform requires strictly positive targets")
    _check_conflicting_duplicates(X, y)

    z = np.log(y) if log_transform else y
    y_mean = float(z.mean())
    y_std = float(z.std())
    if y_std < 1e-12:
        y_std = 1.0
    u = (z - y_mean) / y_std

    dist = _pairwise_dist(X, X)
    n = len(X)
    best = None
    for ell in GP_LENGTH_SCALE_LADDER:
        K = matern52(dist, ell)
        chol, jitter = _chol_with_escalation(K)
        if chol is None:
            continue
        alpha = cho_solve(chol, u)
        log_det_half = float(np.sum(np.log(np.diag(chol[0]))))
        mll = -0.5 * float(u @ alpha) - log_det_half - 0.5 * n * math.log(2.0 * math.pi)
        if best is None or mll > best[0]:
            best = (mll, ell, chol, jitter, alpha)
    if best is None:
        raise NumericError("kernel matrix not positive definite for any ladder entry")
    _, ell, chol, jitter, alpha = best
    return GpModel(
        X=X.copy(),
        alpha=alpha,
        chol=chol,
        length_scale=ell,
        jitter=jitter,
        y_mean=y_mean,
        y_std=y_std,
        log_transform=log_transform,
    )


def gp_posterior(model: GpModel, x) -> tuple[float, float]:
    mean, std = model.predict(x)
    return float(mean[0]), float(std[0])


# ---------------------------------------------------------------------------
# Acquisition scores (minimization convention; higher score = evaluate next)


class AcquisitionKind(enum.Enum):
    EI = "ei"
    PI = "pi"
    LCB = "lcb"


def acquisition(kind: AcquisitionKind, mean, std, best_observed, kappa: float = 1.96):
    """Score candidates for a minimization problem.

    EI is the expected improvement below the incumbent, PI the probability
    of improvement, and LCB the negated lower confidence bound mean - k*std
    (so maximizing the score still prefers optimistic candidates).
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if np.any(std < 0):
        raise DomainError("std must be non-negative")
    if kind is AcquisitionKind.LCB:
        score = -(mean - kappa * std)
        return score if score.ndim else float(score)

    gap = best_observed - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(std > 0, gap / np.where(std > 0, std, 1.0), 0.0)
    if kind is AcquisitionKind.EI:
        ei = gap * ndtr(z) + std * _INV_SQRT_2PI * np.exp(-0.5 * z**2)
        score = np.where(std > 0, np.maximum(ei, 0.0), np.maximum(gap, 0.0))
    elif kind is AcquisitionKind.PI:
        score = np.where(std > 0, ndtr(z), (gap > 0).astype(float))
    else:
        raise DomainError(f"unknown acquisition kind {kind!r}")
    return score if score.ndim else float(score)


# ---------------------------------------------------------------------------
# Random forest regressor


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    n_features: int
    sample_indices: tuple     # per-tree training rows (bootstrap or full)
    max_features: int
    min_split: int

    def predict(self, x) -> tuple[float, float]:
        x = np.asarray(x, dtype=float).ravel()
        preds = np.array([_tree_predict(tree, x) for tree in self.trees])
        return float(preds.mean()), float(preds.std())


def _tree_predict(node, x: np.ndarray) -> float:
    while node[0] == "split":
        _, feat, thr, left, right = node
        node = left if x[feat] <= thr else right
    return node[1]


def _best_split(cols, y, idx, features):
    """Best (feature, threshold, gain) by sum-of-squares reduction, or None.

    Node subsets are tiny, so this stays in plain Python: per-call numpy
    overhead would dominate the arithmetic.
    """
    n = len(idx)
    ys_node = [y[i] for i in idx]
    total = 0.0
    total2 = 0.0
    for v in ys_node:
        total += v
        total2 += v * v
    sse_parent = total2 - total * total / n
    best = None
    for feat in features:
        col = cols[feat]
        order = sorted(idx, key=col.__getitem__)
        xs = [col[i] for i in order]
        ys = [y[i] for i in order]
        csum = 0.0
        csum2 = 0.0
        for i in range(n - 1):
            yi = ys[i]
            csum += yi
            csum2 += yi * yi
            if xs[i] == xs[i + 1]:
                continue
            nl = i + 1
            nr = n - nl
            sse_l = csum2 - csum * csum / nl
            sse_r = (total2 - csum2) - (total - csum) * (total - csum) / nr
            gain = sse_parent - (sse_l + sse_r)
            if gain > 1e-12 and (best is None or gain > best[2]):
                best = (feat, 0.5 * (xs[i] + xs[i + 1]), gain)
    return best


def _build_tree(cols, y, idx, rng, min_split, max_features):
    ys = [y[i] for i in idx]
    if len(idx) < min_split or max(ys) == min(ys):
        return ("leaf", sum(ys) / len(ys))
    d = len(cols)
    features = rng.choice(d, size=min(max_features, d), replace=False)
    split = _best_split(cols, y, idx, features)
    if split is None:
        return ("leaf", sum(ys) / len(ys))
    feat, thr, _ = split
    col = cols[feat]
    left_idx = [i for i in idx if col[i] <= thr]
    right_idx = [i for i in idx if col[i] > thr]
    left = _build_tree(cols, y, left_idx, rng, min_split, max_features)
    right = _build_tree(cols, y, right_idx, rng, min_split, max_features)
    return ("split", int(feat), thr, left, right)


def forest_fit(
    X,
    y,
    n_trees: int = 30,
    seed: int = 0,
    bootstrap: bool = True,
    min_split: int = 2,
    max_features: int | None = None,
) -> ForestModel:
    """Fit bagged regression trees.

    Splits greedily maximize variance reduction over a per-node random
    subset of ceil(sqrt(d)) features (override with max_features); nodes
    with fewer than min_split samples, or no improving split, become leaves.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float)
    if len(X) < 1 or len(X) != len(y):
        raise DomainError(f"need matching non-empty X, y; got {len(X)} vs {len(y)}")
    if n_trees < 1:
        raise DomainError(f"n_trees must be >= 1, got {n_trees}")
    n, d = X.shape
    if max_features is None:
        max_features = math.ceil(math.sqrt(d))
    cols = [X[:, j].tolist() for j in range(d)]
    targets = y.tolist()
    trees, samples = [], []
    for child_seq in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child_seq)
        idx = [int(i) for i in rng.integers(0, n, size=n)] if bootstrap else list(range(n))
        trees.append(_build_tree(cols, targets, idx, rng, min_split, max_features))
        samples.append(tuple(idx))
    return ForestModel(
        trees=tuple(trees),
        n_features=d,
        sample_indices=tuple(samples),
        max_features=max_features,
        min_split=min_split,
    )


def forest_predict(model: ForestModel, x) -> tuple[float, float]:
    return model.predict(x)


# ---------------------------------------------------------------------------
# Cubic RBF interpolant with linear tail


RBF_RIDGE = 1e-8
RBF_RIDGE_MAX = 1e-2


@dataclass(frozen=True)
class RbfModel:
    centers: np.ndarray
    weights: np.ndarray        # one per center
    tail: np.ndarray           # [c0, c1..cd]; zeros when no tail was fit
    constant: float | None     # set for the degenerate single-center model

    def predict(self, x) -> float:
        if self.constant is not None:
            return self.constant
        x = np.asarray(x, dtype=float).ravel()
        r = np.sqrt(np.maximum(np.sum((self.centers - x) ** 2, axis=1), 0.0))
        return float(self.weights @ r**3 + self.tail[0] + self.tail[1:] @ x)


def _solve_escalating(A: np.ndarray, b: np.ndarray, ridge_rows: int):
    """Solve Ax=b, escalating a ridge on the leading block until it works."""
    ridge = 0.0
    while True:
        M = A.copy()
        M[np.arange(ridge_rows), np.arange(ridge_rows)] += ridge
        try:
            sol = np.linalg.solve(M, b)
            if np.all(np.isfinite(sol)) and np.linalg.norm(M @ sol - b) <= 1e-6 * (1.0 + np.linalg.norm(b)):
                return sol
        except np.linalg.LinAlgError:
            pass
        ridge = RBF_RIDGE if ridge == 0.0 else ridge * 10.0
        if ridge > RBF_RIDGE_MAX:
            raise NumericError("RBF system singular after ridge escalation")


def rbf_fit(X, y) -> RbfModel:
    """Fit the cubic interpolant; with >= d+2 affinely spanning centers the
    linear tail is included (and linear targets are reproduced exactly)."""
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float)
    if len(X) < 1 or len(X) != len(y):
        raise DomainError(f"need matching non-empty X, y; got {len(X)} vs {len(y)}")
    n, d = X.shape
    if n == 1:
        return RbfModel(centers=X.copy(), weights=np.zeros(1), tail=np.zeros(d + 1), constant=float(y[0]))
    phi = _pairwise_dist(X, X) ** 3
    P = np.hstack([np.ones((n, 1)), X])
    if n >= d + 2 and np.linalg.matrix_rank(P) == d + 1:
        A = np.block([[phi, P], [P.T, np.zeros((d + 1, d + 1))]])
        b = np.concatenate([y, np.zeros(d + 1)])
        sol = _solve_escalating(A, b, ridge_rows=n)
        return RbfModel(centers=X.copy(), weights=sol[:n], tail=sol[n:], constant=None)
    A = phi + RBF_RIDGE * np.eye(n)
    sol = _solve_escalating(A, y, ridge_rows=n)
    return RbfModel(centers=X.copy(), weights=sol, tail=np.zeros(d + 1), constant=None)


def rbf_predict(model: RbfModel, x) -> float:
    return model.predict(x)
