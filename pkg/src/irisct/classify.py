"""Distance matchers, the local/global cascade and a one-vs-rest SVM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels, DimMismatch, EmptyMask

__all__ = [
    "MatchResult",
    "hamming",
    "trit_distance",
    "euclidean",
    "threshold_match",
    "cascade_match",
    "SVMModel",
    "svm_train",
    "svm_predict",
    "svm_decision",
    "BINARY_THRESHOLD",
    "evaluate",
]

BINARY_THRESHOLD = 0.42
N_LOCAL = 2520


@dataclass(frozen=True)
class MatchResult:
    distance: float
    threshold: float
    decision: str           # "accept" or "reject"
    stage: str = "single"   # which cascade stage decided

    @property
    def accepted(self) -> bool:
        return self.decision == "accept"


def _pair(a, b):
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    if a.size != b.size:
        raise DimMismatch(f"length {a.size} vs {b.size}")
    return a, b


def _joint_mask(n, mask_a, mask_b):
    m = np.ones(n, dtype=bool)
    for extra in (mask_a, mask_b):
        if extra is not None:
            extra = np.asarray(extra, dtype=bool).reshape(-1)
            if extra.size != n:
                raise DimMismatch("mask length differs from code length")
            m &= extra
    return m


def hamming(a, b, mask_a=None, mask_b=None) -> float:
    """Fraction of disagreeing bits among positions valid in both masks."""
    a, b = _pair(a, b)
    m = _joint_mask(a.size, mask_a, mask_b)
    valid = int(m.sum())
    if valid == 0:
        raise EmptyMask("no jointly valid bits")
    return float(np.count_nonzero((a != b) & m) / valid)


def trit_distance(a, b, mask_a=None, mask_b=None) -> float:
    """Fraction of positions where two trit codes differ (optionally masked)."""
    a, b = _pair(a, b)
    m = _joint_mask(a.size, mask_a, mask_b)
    valid = int(m.sum())
    if valid == 0:
        raise EmptyMask("no jointly valid positions")
    return float(np.count_nonzero((a != b) & m) / valid)


def euclidean(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.sqrt(np.sum((a.astype(float) - b.astype(float)) ** 2)))


def threshold_match(distance: float, threshold: float = BINARY_THRESHOLD) -> MatchResult:
    return MatchResult(float(distance), float(threshold),
                       "accept" if distance <= threshold else "reject")


def cascade_match(probe, gallery, t_local_lo: float = 0.30, t_local_hi: float = 0.50,
                  t_global: float = 1.0, n_local: int = N_LOCAL,
                  mask_probe=None, mask_gallery=None) -> MatchResult:
    """Two-stage decision on COMBINED vectors.

    The trit prefix decides on its own when its distance is at most
    ``t_local_lo`` (accept) or at least ``t_local_hi`` (reject); between the
    two, the Euclidean distance of the real suffix is compared with
    ``t_global``.
    """
    probe, gallery = _pair(probe, gallery)
    if t_local_lo > t_local_hi:
        raise ValueError("t_local_lo must not exceed t_local_hi")
    mp = None if mask_probe is None else np.asarray(mask_probe, dtype=bool)[:n_local]
    mg = None if mask_gallery is None else np.asarray(mask_gallery, dtype=bool)[:n_local]
    d_local = trit_distance(probe[:n_local], gallery[:n_local], mp, mg)
    if d_local <= t_local_lo:
        return MatchResult(d_local, t_local_lo, "accept", "local")
    if d_local >= t_local_hi:
        return MatchResult(d_local, t_local_hi, "reject", "local")
    d_global = euclidean(probe[n_local:], gallery[n_local:])
    return MatchResult(d_global, t_global, "accept" if d_global <= t_global else "reject", "global")


# ---------------------------------------------------------------------------
# support vector machine
# ---------------------------------------------------------------------------

_TAU = 1e-12


def _kernel(A, B, kind, gamma):
    if kind == "linear":
        return A @ B.T
    sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2 * A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _smo(K, y, C, tol, max_iter):
    """Dual soft-margin SVM by SMO with second-order working-set selection.

    Minimizes ``0.5 a'Qa - sum(a)`` with ``Q = yy' * K``, ``0 <= a <= C``,
    ``y'a = 0``; stops when the maximal KKT violation falls below ``tol``.
    Returns ``(alpha, rho)`` for the decision ``sum a_i y_i K(x_i, x) - rho``.
    """
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K).copy()
    for _ in range(max_iter):
        v = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(v[up])])
        g_max = v[i]
        g_min = v[low].min()
        if g_max - g_min < tol:
            break
        cand = low & (v < g_max)
        b = g_max - v[cand]
        a = diag[i] + diag[cand] - 2 * K[i, cand]
        a = np.where(a > 0, a, _TAU)
        j = int(np.flatnonzero(cand)[np.argmin(-(b * b) / a)])

        old_i, old_j = alpha[i], alpha[j]
        Qij = y[i] * y[j] * K[i, j]
        if y[i] != y[j]:
            quad = max(diag[i] + diag[j] + 2 * Qij, _TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, diff
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, C - diff
            elif alpha[j] > C:
                alpha[j], alpha[i] = C, C + diff
        else:
            quad = max(diag[i] + diag[j] - 2 * Qij, _TAU)
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, total - C
            elif alpha[j] < 0:
                alpha[j], alpha[i] = 0.0, total
            if total > C:
                if alpha[j] > C:
                    alpha[j], alpha[i] = C, total - C
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, total
        d_i, d_j = alpha[i] - old_i, alpha[j] - old_j
        grad += y * (K[:, i] * (y[i] * d_i) + K[:, j] * (y[j] * d_j))

    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yg[free].mean()
    else:
        ub_set = ((y > 0) & (alpha >= C)) | ((y < 0) & (alpha <= 0))
        lb_set = ((y > 0) & (alpha <= 0)) | ((y < 0) & (alpha >= C))
        ub = yg[ub_set].min() if ub_set.any() else np.inf
        lb = yg[lb_set].max() if lb_set.any() else -np.inf
        rho = 0.5 * (ub + lb) if np.isfinite(ub) and np.isfinite(lb) else (ub if np.isfinite(ub) else lb)
    return alpha, float(rho)


@dataclass(frozen=True)
class SVMModel:
    classes: np.ndarray         # sorted labels
    X: np.ndarray               # training vectors
    dual: np.ndarray            # (n_classes, n_train) signed dual coefficients
    rho: np.ndarray             # (n_classes,)
    kernel: str
    gamma: float
    C: float

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def svm_train(X, labels, C: float = 1.0, kernel: str = "linear", gamma: float | None = None,
              tol: float = 1e-3, max_iter: int = 100000) -> SVMModel:
    """One-vs-rest soft-margin SVMs.

    ``gamma`` defaults to ``1 / (d * var(X))`` for the rbf kernel.  The
    solver is deterministic, so no seed is needed.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] != labels.size:
        raise DimMismatch("X must be (n_samples, n_features) with one label per row")
    classes = np.unique(labels)
    if classes.size < 2:
        raise DegenerateLabels("SVM training needs at least two classes")
    if kernel not in ("linear", "rbf"):
        raise ValueError(f"kernel must be linear or rbf, got {kernel!r}")
    if gamma is None:
        var = X.var()
        gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
    K = _kernel(X, X, kernel, gamma)
    dual = np.zeros((classes.size, X.shape[0]))
    rho = np.zeros(classes.size)
    for ci, c in enumerate(classes):
        y = np.where(labels == c, 1.0, -1.0)
        alpha, rho[ci] = _smo(K, y, C, tol, max_iter)
        dual[ci] = alpha * y
    return SVMModel(classes, X, dual, rho, kernel, float(gamma), float(C))


def svm_decision(model: SVMModel, X) -> np.ndarray:
    """One-vs-rest decision values, shape (n_samples, n_classes)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.dim:
        raise DimMismatch(f"input has {X.shape[1]} features, model expects {model.dim}")
    return (model.dual @ _kernel(model.X, X, model.kernel, model.gamma)).T - model.rho


def svm_predict(model: SVMModel, x):
    """Label with the largest decision value; ties go to the lowest class."""
    x = np.asarray(x, dtype=float)
    scores = svm_decision(model, x)
    picks = model.classes[np.argmax(scores, axis=1)]
    return picks[0] if x.ndim == 1 else picks


def evaluate(index, methods=None, config=None, seed=None):
    """Run the full pipeline over a dataset; see :mod:`irisct.evaluation`."""
    from .evaluation import evaluate as _evaluate
    from .features import METHODS

    return _evaluate(index, METHODS if methods is None else methods, config, seed)
