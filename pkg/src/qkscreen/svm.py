"""Kernel support vector classification trained by SMO on a Gram matrix."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .dataset import kfold
from .metrics import roc_auc

SUPPORT_FLOOR = 1e-8
_TAU = 1e-12


class SvmError(ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KernelSpec:
    kind: str  # linear | poly | rbf | precomputed
    degree: int = 3
    offset: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "poly", "rbf", "precomputed"):
            raise SvmError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and not self.gamma > 0:
            raise SvmError("rbf gamma must be > 0")
        if self.kind == "poly" and self.degree < 1:
            raise SvmError("poly degree must be >= 1")

    def __call__(self, x, x2) -> float:
        x, x2 = np.asarray(x, dtype=float), np.asarray(x2, dtype=float)
        if x.shape != x2.shape:
            raise SvmError("dimension mismatch")
        return float(self.matrix(x[None, :], x2[None, :])[0, 0])

    def matrix(self, A, B) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if A.shape[1] != B.shape[1]:
            raise SvmError("dimension mismatch")
        if self.kind == "linear":
            return A @ B.T
        if self.kind == "poly":
            return (A @ B.T + self.offset) ** self.degree
        if self.kind == "rbf":
            sq = (A**2).sum(1)[:, None] + (B**2).sum(1)[None, :] - 2.0 * A @ B.T
            return np.exp(-self.gamma * np.maximum(sq, 0.0))
        raise SvmError("precomputed kernels have no closed form")

    def label(self) -> str:
        if self.kind == "poly":
            return f"poly(d={self.degree},r={self.offset:g})"
        if self.kind == "rbf":
            return f"rbf(gamma={self.gamma:g})"
        return self.kind

    def to_dict(self) -> dict:
        return {"kind": self.kind, "degree": self.degree, "offset": self.offset, "gamma": self.gamma}


def classical_kernel(spec: KernelSpec, x, x2) -> float:
    return spec(x, x2)


@dataclass(frozen=True)
class DualSolution:
    alpha: np.ndarray
    b: float
    C: float
    upper: float  # box bound actually used
    objective: float
    converged: bool = True
    iterations: int = 0
    history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.alpha > SUPPORT_FLOOR)


def dual_objective(alpha, K, y) -> float:
    ay = np.asarray(alpha) * np.asarray(y)
    return float(np.sum(alpha) - 0.5 * ay @ np.asarray(K) @ ay)


def smo_train(
    K,
    y,
    C: float = 1.0,
    tol: float = 1e-3,
    max_iter: int = 1_000_000,
    box: str = "standard",
    record_history: bool = False,
    selection: str = "max_violating",
) -> DualSolution:
    """Solve the C-SVC dual with SMO.

    The working pair is the maximal violating pair; ``selection="second_order"``
    keeps the same first index but picks the partner by second-order gain.

    Maximizes ``sum(a) - 1/2 a^T (yy^T * K) a`` subject to ``sum(a y) = 0``
    and ``0 <= a <= C``.  ``box="scaled"`` swaps the upper bound for
    ``1 / (2 n C)``.  Stops once the KKT gap ``m(a) - M(a)`` drops below
    ``tol``; otherwise returns the last iterate with ``converged=False``.
    Non-positive curvature steps run to the box boundary, so indefinite
    (sampled) Gram matrices still yield a feasible iterate.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    if K.ndim != 2 or K.shape != (n, n):
        raise SvmError(f"K must be square and match y; got {K.shape} for {n} labels")
    if not np.isin(y, (-1.0, 1.0)).all():
        raise SvmError("labels must be +1/-1")
    if not C > 0:
        raise SvmError("C must be > 0")
    if box == "standard":
        upper = float(C)
    elif box == "scaled":
        upper = 1.0 / (2.0 * n * C)
    else:
        raise SvmError(f"unknown box convention {box!r}")

    if selection not in ("second_order", "max_violating"):
        raise SvmError(f"unknown selection rule {selection!r}")
    alpha, grad, it, converged, hist = _smo_core(
        K, y, upper, float(tol), int(max_iter), selection == "second_order", bool(record_history)
    )
    history = tuple(hist.tolist()) if record_history else ()
    if not converged:
        warnings.warn(f"SMO did not converge in {max_iter} iterations", ConvergenceWarning, stacklevel=2)
    pos = y > 0

    v = -y * grad
    free = (alpha > 0) & (alpha < upper)
    if free.any():
        b = float(v[free].mean())
    else:
        below, above = alpha < upper, alpha > 0
        up = np.where(pos, below, above)
        low = np.where(pos, above, below)
        hi = v[up].max() if up.any() else v.max()
        lo = v[low].min() if low.any() else v.min()
        b = float(0.5 * (hi + lo))
    return DualSolution(
        alpha=alpha,
        b=b,
        C=float(C),
        upper=upper,
        objective=dual_objective(alpha, K, y),
        converged=converged,
        iterations=it,
        history=history,
    )


@numba.njit(cache=True)
def _smo_core(K, y, upper, tol, max_iter, second_order, record):
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a^T Q a - e^T a
    hist = np.zeros(max_iter + 1 if record else 1)
    converged = False
    it = 0
    while it < max_iter:
        # i: maximal violator in I_up; m - M is the KKT gap
        i = -1
        j = -1
        vmax = -np.inf
        vmin = np.inf
        for t in range(n):
            v = -y[t] * grad[t]
            in_up = alpha[t] < upper if y[t] > 0 else alpha[t] > 0
            in_low = alpha[t] > 0 if y[t] > 0 else alpha[t] < upper
            if in_up and v > vmax:
                vmax = v
                i = t
            if in_low and v < vmin:
                vmin = v
                j = t
        if i < 0 or j < 0 or vmax - vmin < tol:
            converged = True
            break
        if second_order:
            best = -np.inf
            for t in range(n):
                in_low = alpha[t] > 0 if y[t] > 0 else alpha[t] < upper
                v = -y[t] * grad[t]
                if in_low and v < vmax:
                    a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                    if a <= _TAU:
                        a = _TAU
                    g = (vmax - v) * (vmax - v) / a
                    if g > best:
                        best = g
                        j = t
        gap = vmax + y[j] * grad[j]
        room_i = upper - alpha[i] if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else upper - alpha[j]
        step = min(room_i, room_j)
        curv = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if curv > _TAU:
            step = min(step, gap / curv)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        for t in (i, j):
            if alpha[t] < 1e-12 * upper:
                alpha[t] = 0.0
            elif alpha[t] > upper * (1.0 - 1e-12):
                alpha[t] = upper
        for t in range(n):
            grad[t] += step * y[t] * (K[t, i] - K[t, j])
        it += 1
        if record:
            # dual objective = sum(a) - 1/2 a^T Q a = 1/2 sum(a) - 1/2 a^T grad
            obj = 0.0
            for t in range(n):
                obj += 0.5 * alpha[t] - 0.5 * alpha[t] * grad[t]
            hist[it] = obj
    return alpha, grad, it, converged, hist[: it + 1]


def kkt_violations(sol: DualSolution, K, y, tol: float = 1e-3) -> np.ndarray:
    """Indices of training rows that break the KKT margin conditions at ``tol``."""
    y = np.asarray(y, dtype=float)
    margin = y * (np.asarray(K) @ (sol.alpha * y) + sol.b)
    at_zero = sol.alpha <= 0
    at_top = sol.alpha >= sol.upper
    free = ~at_zero & ~at_top
    bad = (at_zero & (margin < 1 - tol)) | (at_top & (margin > 1 + tol)) | (free & (np.abs(margin - 1) > tol))
    return np.flatnonzero(bad)


@dataclass(frozen=True)
class TrainedSvcModel:
    dual: DualSolution
    labels: np.ndarray
    train_vectors: np.ndarray
    kernel: KernelSpec
    pipeline: dict | None = None
    quantum_depth: int | None = None  # set when the Gram came from the ZZ feature map

    def decision_function(self, K_test) -> np.ndarray:
        return decision_function(self, K_test)

    def predict(self, K_test) -> np.ndarray:
        return np.where(self.decision_function(K_test) > 0, 1, -1)

    def to_dict(self) -> dict:
        return {
            "alpha": self.dual.alpha.tolist(),
            "b": self.dual.b,
            "C": self.dual.C,
            "upper": self.dual.upper,
            "objective": self.dual.objective,
            "labels": self.labels.tolist(),
            "kernel": self.kernel.to_dict(),
            "quantum_depth": self.quantum_depth,
            "train_vectors": self.train_vectors.tolist(),
            "pipeline": self.pipeline,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedSvcModel":
        dual = DualSolution(np.asarray(d["alpha"], float), d["b"], d["C"], d["upper"], d["objective"])
        return cls(
            dual,
            np.asarray(d["labels"], int),
            np.asarray(d["train_vectors"], float),
            KernelSpec(**d["kernel"]),
            d.get("pipeline"),
            d.get("quantum_depth"),
        )


def fit_svc(
    K, y, C: float, kernel: KernelSpec, train_vectors=None, tol: float = 1e-3, box: str = "standard", **meta
) -> TrainedSvcModel:
    dual = smo_train(K, y, C, tol=tol, box=box)
    vectors = np.zeros((len(y), 0)) if train_vectors is None else np.asarray(train_vectors, float)
    return TrainedSvcModel(dual, np.asarray(y, int), vectors, kernel, **meta)


def decision_function(model: TrainedSvcModel, K_test) -> np.ndarray:
    """Scores ``sum_i a_i y_i K(x_i, x) + b`` for each row of ``K_test``."""
    K_test = np.atleast_2d(np.asarray(K_test, dtype=float))
    if K_test.shape[1] != model.labels.size:
        raise SvmError(f"K_test has {K_test.shape[1]} columns, model has {model.labels.size} training rows")
    return K_test @ (model.dual.alpha * model.labels) + model.dual.b


DEFAULT_C = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
DEFAULT_GAMMA = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)
DEFAULT_KERNELS = ("linear", "poly2", "poly3", "rbf")
_KIND_RANK = {"rbf": 0, "poly": 1, "linear": 2}


@dataclass(frozen=True)
class Grid:
    """Hyperparameter grid.

    ``gamma=None`` means the decades 1e-4..1e1 plus ``1 / n_features``.
    Kernel names: ``linear``, ``rbf`` and ``poly<d>``.
    """

    C: tuple[float, ...] = DEFAULT_C
    gamma: tuple[float, ...] | None = None
    kernels: tuple[str, ...] = DEFAULT_KERNELS
    poly_offset: float = 1.0

    def __post_init__(self):
        if not self.C or not self.kernels or (self.gamma is not None and not self.gamma):
            raise SvmError("grid must be non-empty")

    def kernel_specs(self, n_features: int) -> list[KernelSpec]:
        gammas = self.gamma if self.gamma is not None else DEFAULT_GAMMA + (1.0 / n_features,)
        specs = []
        for name in self.kernels:
            if name == "linear":
                specs.append(KernelSpec("linear"))
            elif name == "rbf":
                specs += [KernelSpec("rbf", gamma=float(g)) for g in sorted(set(gammas))]
            elif name.startswith("poly") and name[4:].isdigit():
                specs.append(KernelSpec("poly", degree=int(name[4:]), offset=self.poly_offset))
            else:
                raise SvmError(f"unknown grid kernel {name!r}")
        return specs


@dataclass(frozen=True)
class GridResult:
    kernel: KernelSpec
    C: float
    mean_auc: float
    table: tuple[tuple[str, float, float], ...]  # (kernel label, C, mean AUC)


def _preference(kernel: KernelSpec, C: float, auc: float):
    # larger AUC, then smaller C, rbf > poly > linear, smaller gamma / degree
    return (-round(auc, 12), C, _KIND_RANK[kernel.kind], kernel.gamma if kernel.kind == "rbf" else 0.0, kernel.degree)


def grid_search(
    X, y, grid: Grid | None = None, folds: int = 5, seed: int = 0, tol: float = 1e-3, max_iter: int = 100_000
) -> GridResult:
    """Pick (kernel, C) by mean stratified cross-validated AUC-ROC.

    Each cell's SMO run is capped at ``max_iter``; an unconverged cell is
    scored from its last iterate.
    """
    grid = grid or Grid()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    splits = kfold(y, folds, seed)
    specs = grid.kernel_specs(X.shape[1])
    scores = {(s, c): [] for s in specs for c in grid.C}
    for train_idx, val_idx in splits:
        Xtr, Xva, ytr, yva = X[train_idx], X[val_idx], y[train_idx], y[val_idx]
        for spec in specs:
            Ktr = spec.matrix(Xtr, Xtr)
            Kva = spec.matrix(Xva, Xtr)
            for c in grid.C:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ConvergenceWarning)
                    dual = smo_train(Ktr, ytr, c, tol=tol, max_iter=max_iter)
                model = TrainedSvcModel(dual, ytr, Xtr, spec)
                scores[(spec, c)].append(roc_auc(yva, decision_function(model, Kva)))
    table = [(s, c, float(np.mean(v))) for (s, c), v in scores.items()]
    best = min(table, key=lambda t: _preference(*t))
    return GridResult(best[0], best[1], best[2], tuple((s.label(), c, m) for s, c, m in table))
