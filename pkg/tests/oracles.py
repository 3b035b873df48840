"""Independent reference computations used by the test suite."""

import numpy as np


def brute_force_dual(K, y, C: float) -> tuple[float, np.ndarray]:
    """Exact dual optimum of a small problem by enumerating active sets.

    Every coordinate is either at 0, at C, or free; for each of the 3**n
    patterns the equality-constrained stationary point over the free
    coordinates is solved and kept when feasible.  Intended as a test oracle
    for n <= 10.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    Q = np.outer(y, y) * K
    best, best_alpha = 0.0, np.zeros(n)
    for code in range(3**n):
        state = [(code // 3**t) % 3 for t in range(n)]
        free = np.array([s == 2 for s in state])
        alpha = np.array([C if s == 1 else 0.0 for s in state])
        if free.any():
            F = np.flatnonzero(free)
            B = np.flatnonzero(~free)
            m = F.size
            lhs = np.zeros((m + 1, m + 1))
            lhs[:m, :m] = Q[np.ix_(F, F)]
            lhs[:m, m] = y[F]
            lhs[m, :m] = y[F]
            rhs = np.concatenate([1.0 - Q[np.ix_(F, B)] @ alpha[B], [-(y[B] @ alpha[B])]])
            sol, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
            if not np.allclose(lhs @ sol, rhs, atol=1e-9):
                continue
            alpha[F] = sol[:m]
        if abs(alpha @ y) > 1e-9 or alpha.min() < -1e-12 or alpha.max() > C + 1e-12:
            continue
        value = float(alpha.sum() - 0.5 * alpha @ Q @ alpha)
        if value > best:
            best, best_alpha = value, alpha
    return best, best_alpha


def grid_dual_maximum(K, y, C: float, step: float = 1e-2) -> float:
    """Dual maximum over a regular grid of the feasible polytope (n <= 4)."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    Q = np.outer(y, y) * K
    ticks = np.linspace(0.0, C, int(round(C / step)) + 1)
    mesh = np.stack(np.meshgrid(*([ticks] * (n - 1)), indexing="ij"), -1).reshape(-1, n - 1)
    # last coordinate fixed by the equality constraint
    last = -(mesh @ y[:-1]) * y[-1]
    ok = (last >= -1e-12) & (last <= C + 1e-12)
    A = np.column_stack([mesh[ok], np.clip(last[ok], 0, C)])
    values = A.sum(1) - 0.5 * np.einsum("ij,jk,ik->i", A, Q, A)
    return float(values.max()) if values.size else 0.0


# -- dense circuit oracle ------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_I = np.eye(2, dtype=complex)


def _phase(theta):
    return np.diag([1.0, np.exp(1j * theta)])


def _on_qubit(gate, q, n):
    """Full 2**n matrix of a one-qubit gate; qubit 0 is the least significant bit."""
    out = np.ones((1, 1), dtype=complex)
    for k in reversed(range(n)):
        out = np.kron(out, gate if k == q else _I)
    return out


def _cnot(control, target, n):
    dim = 2**n
    M = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        row = col ^ (1 << target) if (col >> control) & 1 else col
        M[row, col] = 1.0
    return M


def dense_unitary(x, depth):
    """Feature-map unitary assembled by explicit matrix products."""
    x = np.asarray(x, dtype=float)
    n = x.size
    layer = np.eye(2**n, dtype=complex)
    for q in range(n):
        layer = _on_qubit(_H, q, n) @ layer
    for q in range(n):
        layer = _on_qubit(_phase(2 * x[q]), q, n) @ layer
    for j in range(n - 1):
        cx = _cnot(j, j + 1, n)
        zz = _on_qubit(_phase(2 * (np.pi - x[j]) * (np.pi - x[j + 1])), j + 1, n)
        layer = cx @ zz @ cx @ layer
    return np.linalg.matrix_power(layer, depth)


def dense_feature_state(x, depth):
    U = dense_unitary(x, depth)
    return U[:, 0]


def dense_kernel(x, x2, depth):
    return float(abs(np.vdot(dense_feature_state(x, depth), dense_feature_state(x2, depth))) ** 2)


def pairwise_auc(y, scores):
    """O(n^2) Mann-Whitney count with ties worth one half."""
    pos = [s for s, t in zip(scores, y) if t > 0]
    neg = [s for s, t in zip(scores, y) if t <= 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))
