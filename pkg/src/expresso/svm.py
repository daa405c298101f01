"""Linear 1-norm soft-margin SVM, one per expressiveness aspect.

The decision value is ``<w, x> - b``; positive means "large value of the
aspect". Training solves the dual by sequential minimal optimisation:
pairs of multipliers chosen by second-order working-set selection.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

ASPECTS = ("a", "b", "c")
TAU = 1e-12
POLISH_EVERY = 50


class SvmNotConverged(RuntimeError):
    def __init__(self, iterations: int, violation: float):
        self.iterations = iterations
        self.violation = violation
        super().__init__(f"SMO did not converge in {iterations} iterations (max KKT violation {violation:.3g})")


@dataclass(frozen=True)
class SvmModel:
    w: np.ndarray
    b: float
    aspect: str
    C: float

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float).copy())
        if self.aspect not in ASPECTS:
            raise ValueError(f"aspect must be one of a, b, c; got {self.aspect!r}")
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not (np.isfinite(self.w).all() and np.isfinite(self.b)):
            raise ValueError("SVM weights must be finite")

    def decision(self, x) -> np.ndarray | float:
        return decision(self, x)


@dataclass(frozen=True)
class SvmFit:
    model: SvmModel
    alpha: np.ndarray
    iterations: int
    kkt_violation: float
    dual_objective: float


def decision(m: SvmModel, x):
    """``<w, x> - b`` for one vector or a batch of rows."""
    return np.asarray(x, dtype=float) @ m.w - m.b


def label_by_median(values: Sequence[float]) -> np.ndarray:
    """+1 for values above the median, -1 otherwise (the median itself is -1)."""
    v = np.asarray(values, dtype=float)
    if len(v) < 2 or np.ptp(v) == 0:
        raise ValueError("median split needs at least 2 distinct values")
    labels = np.where(v > np.median(v), 1, -1)
    if abs(labels.sum()) == len(labels):
        raise ValueError("median split leaves one class empty")
    return labels


def dual_objective(alpha, X, y) -> float:
    """Dual objective sum(alpha) - 1/2 alpha' Q alpha with Q_ij = y_i y_j <x_i, x_j>."""
    v = (np.asarray(alpha) * np.asarray(y)) @ np.asarray(X, dtype=float)
    return float(np.sum(alpha) - 0.5 * v @ v)


def kkt_violation(alpha, X, y, m: SvmModel) -> float:
    """Largest violation of the KKT conditions of the soft-margin problem."""
    margin = np.asarray(y) * decision(m, X)
    alpha = np.asarray(alpha)
    below = np.where(alpha < m.C, np.maximum(0.0, 1.0 - margin), 0.0)
    above = np.where(alpha > 0, np.maximum(0.0, margin - 1.0), 0.0)
    return float(np.max(below + above)) if len(alpha) else 0.0


def train_svm(
    X,
    y,
    C: float = 1.0,
    aspect: str = "b",
    tol: float = 1e-8,
    max_iter: int = 100_000,
) -> SvmFit:
    """Solve the linear soft-margin dual and return the model and diagnostics."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if X.ndim != 2 or len(X) != n:
        raise ValueError("X must be (n, d) with one label per row")
    if not set(np.unique(y)) == {-1.0, 1.0}:
        raise ValueError("labels must be +1/-1 with both classes present")
    if not C > 0:
        raise ValueError("C must be positive")

    K = X @ X.T
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if it % POLISH_EVERY == 0:
            polished = _polish(alpha, Q, y, C, tol)
            if polished is not None:
                alpha, G = polished
                converged = True
                break
        yG = -y * G
        up = ((alpha < C) & (y > 0)) | ((alpha > 0) & (y < 0))
        low = ((alpha < C) & (y < 0)) | ((alpha > 0) & (y > 0))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(yG[up])])
        gmax = yG[i]
        gmin = yG[low].min()
        if gmax - gmin <= tol:
            converged = True
            break
        # second-order choice of j among violating partners of i
        cand = np.flatnonzero(low & (yG < gmax))
        b_ij = gmax - yG[cand]
        a_ij = QD[i] + QD[cand] - 2.0 * y[i] * y[cand] * Q[i, cand]
        a_ij = np.where(a_ij > 0, a_ij, TAU)
        j = int(cand[np.argmin(-(b_ij ** 2) / a_ij)])

        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
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
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
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
        G += Q[:, i] * (alpha[i] - ai_old) + Q[:, j] * (alpha[j] - aj_old)

    b = _offset(alpha, G, y, C)
    model = SvmModel((alpha * y) @ X, b, aspect, C)
    viol = kkt_violation(alpha, X, y, model)
    if not converged:
        raise SvmNotConverged(it, viol)
    return SvmFit(model, alpha, it, viol, dual_objective(alpha, X, y))


def _gap(alpha, G, y, C) -> float:
    """Maximal violating-pair gap; 0 when the KKT conditions hold exactly."""
    yG = -y * G
    up = ((alpha < C) & (y > 0)) | ((alpha > 0) & (y < 0))
    low = ((alpha < C) & (y < 0)) | ((alpha > 0) & (y > 0))
    if not up.any() or not low.any():
        return 0.0
    return float(yG[up].max() - yG[low].min())


def _polish(alpha, Q, y, C, tol):
    """Solve exactly on the current active set; None unless the result is optimal.

    SMO converges only linearly on badly conditioned data, but it finds
    which multipliers sit at 0, at C or strictly between long before the
    free ones settle. With that split fixed, stationarity plus y'alpha = 0
    is a small linear system.
    """
    eps = 1e-9 * C
    free = np.flatnonzero((alpha > eps) & (alpha < C - eps))
    at_c = alpha >= C - eps
    fixed = np.where(at_c, C, 0.0)
    fixed[free] = 0.0
    k = free.size
    A = np.zeros((k + 1, k + 1))
    A[:k, :k] = Q[np.ix_(free, free)]
    A[:k, k] = y[free]
    A[k, :k] = y[free]
    rhs = np.empty(k + 1)
    rhs[:k] = 1.0 - Q[free] @ fixed
    rhs[k] = -(y @ fixed)
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    cand = fixed.copy()
    cand[free] = sol[:k]
    if (cand < 0).any() or (cand > C).any() or abs(y @ cand) > 1e-12 * max(1.0, C * len(y)):
        return None
    G = Q @ cand - 1.0
    if _gap(cand, G, y, C) > tol:
        return None
    return cand, G


def _offset(alpha, G, y, C) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(yG[free].mean())
    upper = alpha >= C
    lower = alpha <= 0
    ub_mask = (upper & (y < 0)) | (lower & (y > 0))
    lb_mask = (upper & (y > 0)) | (lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2)


# -- model file ---------------------------------------------------------------


def dumps(m: SvmModel) -> str:
    return (
        f"svm {m.aspect} {m.C:.17g}\n"
        + " ".join(f"{w:.17g}" for w in m.w)
        + f"\n{m.b:.17g}\n"
    )


def loads(text: str) -> SvmModel:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 3 or rows[0][0] != "svm":
        raise ValueError("not an SVM model file (expected header 'svm <aspect> <C>')")
    if len(rows) != 3 or len(rows[2]) != 1:
        raise ValueError("SVM model file needs a weight line and an offset line")
    try:
        return SvmModel(np.array([float(v) for v in rows[1]]), float(rows[2][0]), rows[0][1], float(rows[0][2]))
    except ValueError as exc:
        raise ValueError(f"bad SVM model file: {exc}") from None


def save(m: SvmModel, path) -> None:
    Path(path).write_text(dumps(m), encoding="utf-8")


def load(path) -> SvmModel:
    return loads(Path(path).read_text(encoding="utf-8"))
