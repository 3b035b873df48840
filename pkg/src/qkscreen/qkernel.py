"""ZZ feature map, dense statevector simulation and fidelity kernels.

Qubit ``q`` is bit ``q`` of the basis-state index (little-endian), so the
amplitude of ``|0...0>`` is element 0.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

MAX_QUBITS = 24
_SQRT_HALF = np.sqrt(0.5)


class KernelError(ValueError):
    pass


class Gate(NamedTuple):
    name: str  # "h", "p" or "cx"
    qubits: tuple[int, ...]
    angle: float = 0.0


def _single_phase(x: float) -> float:
    return 2.0 * x


def _pair_phase(x0: float, x1: float) -> float:
    return 2.0 * (np.pi - x0) * (np.pi - x1)


@dataclass(frozen=True)
class FeatureMapSpec:
    """ZZ feature map with linear entanglement.

    ``single_phase`` and ``pair_phase`` are the data-map hooks; the
    defaults give ``P(2 x_i)`` and ``P(2 (pi - x_j)(pi - x_{j+1}))``.
    """

    n_qubits: int
    depth: int = 2
    single_phase: Callable[[float], float] = field(default=_single_phase, compare=False, repr=False)
    pair_phase: Callable[[float, float], float] = field(default=_pair_phase, compare=False, repr=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise KernelError("n_qubits must be >= 1")
        if self.n_qubits > MAX_QUBITS:
            raise KernelError(f"n_qubits capped at {MAX_QUBITS}")
        if self.depth < 1:
            raise KernelError("depth must be >= 1")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(j, j + 1) for j in range(self.n_qubits - 1)]


def build_feature_map(x: Sequence[float], spec: FeatureMapSpec) -> list[Gate]:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != spec.n_qubits:
        raise KernelError(f"expected {spec.n_qubits} angles, got {x.size}")
    if not np.isfinite(x).all():
        raise KernelError("angles must be finite")
    layer: list[Gate] = [Gate("h", (q,)) for q in range(spec.n_qubits)]
    layer += [Gate("p", (q,), float(spec.single_phase(x[q]))) for q in range(spec.n_qubits)]
    for j, k in spec.pairs:
        layer += [
            Gate("cx", (j, k)),
            Gate("p", (k,), float(spec.pair_phase(x[j], x[k]))),
            Gate("cx", (j, k)),
        ]
    return layer * spec.depth


def inverse(gates: Sequence[Gate]) -> list[Gate]:
    """Reverse the sequence and negate phase angles (H and CX are self-inverse)."""
    return [Gate(g.name, g.qubits, -g.angle) if g.name == "p" else g for g in reversed(gates)]


def _cx_permutation(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**n)
    return np.where((idx >> control) & 1, idx ^ (1 << target), idx)


def _apply(state: np.ndarray, gate: Gate, n: int, angle=None) -> np.ndarray:
    """Apply one gate to a batch of states of shape (batch, 2**n).

    ``angle`` may be a per-row array for batched phase gates.
    """
    if gate.name == "cx":
        c, t = gate.qubits
        return state[:, _cx_permutation(n, c, t)]
    (q,) = gate.qubits
    view = state.reshape(state.shape[0], 2 ** (n - q - 1), 2, 2**q)
    if gate.name == "h":
        a0 = view[:, :, 0, :].copy()
        a1 = view[:, :, 1, :]
        view[:, :, 0, :] = (a0 + a1) * _SQRT_HALF
        view[:, :, 1, :] = (a0 - a1) * _SQRT_HALF
    elif gate.name == "p":
        theta = gate.angle if angle is None else np.asarray(angle)[:, None, None]
        view[:, :, 1, :] *= np.exp(1j * theta)
    else:
        raise KernelError(f"unknown gate {gate.name!r}")
    return state


def simulate(gates: Sequence[Gate], n_qubits: int) -> np.ndarray:
    """Run ``gates`` on ``|0...0>`` and return the 2**n amplitudes."""
    for g in gates:
        if any(q < 0 or q >= n_qubits for q in g.qubits):
            raise KernelError(f"gate {g.name} on qubit out of range for {n_qubits} qubits")
        if g.name == "cx" and g.qubits[0] == g.qubits[1]:
            raise KernelError("cx control equals target")
    state = np.zeros((1, 2**n_qubits), dtype=complex)
    state[0, 0] = 1.0
    for g in gates:
        state = _apply(state, g, n_qubits)
    return state[0]


def statevectors(A, spec: FeatureMapSpec) -> np.ndarray:
    """Feature-map states for every row of ``A``, shape (rows, 2**n).

    Gate-by-gate batched simulation: the circuit template is shared and
    only the phase angles vary per row.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    rows, n = A.shape
    if n != spec.n_qubits:
        raise KernelError(f"expected {spec.n_qubits} columns, got {n}")
    if not np.isfinite(A).all():
        raise KernelError("angles must be finite")
    single = np.vectorize(spec.single_phase, otypes=[float])(A)
    pair = {
        (j, k): np.vectorize(spec.pair_phase, otypes=[float])(A[:, j], A[:, k]) for j, k in spec.pairs
    }
    state = np.zeros((rows, 2**n), dtype=complex)
    state[:, 0] = 1.0
    for _ in range(spec.depth):
        for q in range(n):
            state = _apply(state, Gate("h", (q,)), n)
        for q in range(n):
            state = _apply(state, Gate("p", (q,)), n, single[:, q])
        for j, k in spec.pairs:
            state = _apply(state, Gate("cx", (j, k)), n)
            state = _apply(state, Gate("p", (k,)), n, pair[(j, k)])
            state = _apply(state, Gate("cx", (j, k)), n)
    return state


def kernel_exact(x, x2, spec: FeatureMapSpec) -> float:
    """|<phi(x)|phi(x2)>|^2 from two simulated statevectors."""
    if np.size(x) != np.size(x2):
        raise KernelError("dimension mismatch")
    a = simulate(build_feature_map(x, spec), spec.n_qubits)
    b = simulate(build_feature_map(x2, spec), spec.n_qubits)
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def inversion_probability(x, x2, spec: FeatureMapSpec) -> float:
    """All-zeros probability after U(x2) followed by U(x)^dagger."""
    if np.size(x) != np.size(x2):
        raise KernelError("dimension mismatch")
    gates = build_feature_map(x2, spec) + inverse(build_feature_map(x, spec))
    amp0 = simulate(gates, spec.n_qubits)[0]
    return float(min(1.0, abs(amp0) ** 2))


def _entry_rng(seed: int, i: int, j: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, i, j]))


def _sample_frequency(p: float, shots: int, rng: np.random.Generator) -> float:
    # counting all-zeros outcomes among `shots` draws is a binomial count
    return rng.binomial(shots, min(max(p, 0.0), 1.0)) / shots


def kernel_sampled(x, x2, spec: FeatureMapSpec, shots: int, seed: int = 0) -> float:
    """Shot-noise estimate of the kernel via the inversion test."""
    if shots < 1:
        raise KernelError("shots must be >= 1")
    p = inversion_probability(x, x2, spec)
    return _sample_frequency(p, shots, _entry_rng(seed, 0, 0))


@dataclass(frozen=True)
class KernelMatrix:
    values: np.ndarray
    mode: str = "exact"  # "exact" | "sampled"
    shots: int = 0
    symmetric: bool = False
    jitter: float = 0.0  # PSD repair added to the diagonal, 0 when none

    @property
    def psd_repair(self) -> str:
        return f"jitter({self.jitter:g})" if self.jitter > 0 else "none"

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def gram_matrix(
    A,
    B=None,
    spec: FeatureMapSpec | None = None,
    mode: str = "exact",
    shots: int | None = None,
    seed: int = 0,
    psd_repair: bool = False,
) -> KernelMatrix:
    """Pairwise kernel matrix between rows of ``A`` and rows of ``B``.

    ``B=None`` (or ``"same"``) builds the symmetric self-Gram: the upper
    triangle is evaluated and mirrored.  In sampled mode each entry (i, j)
    draws from its own RNG stream seeded by ``(seed, i, j)``, so results do
    not depend on evaluation order.  ``psd_repair`` applies only to sampled
    self-Grams.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    same = B is None or (isinstance(B, str) and B == "same")
    if spec is None:
        spec = FeatureMapSpec(A.shape[1])
    if mode not in ("exact", "sampled"):
        raise KernelError(f"unknown mode {mode!r}")
    if mode == "sampled" and (shots is None or shots < 1):
        raise KernelError("sampled mode needs shots >= 1")
    sa = statevectors(A, spec)
    if same:
        sb = sa
    else:
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if B.shape[1] != A.shape[1]:
            raise KernelError("dimension mismatch between A and B")
        sb = statevectors(B, spec)
    # fidelity equals the inversion-test all-zeros probability
    fid = np.minimum(np.abs(sa.conj() @ sb.T) ** 2, 1.0)
    if same:
        fid = np.triu(fid)
        fid = fid + np.triu(fid, 1).T
    if mode == "exact":
        if same:
            np.fill_diagonal(fid, 1.0)
        return KernelMatrix(fid, "exact", 0, same)

    rows, cols = fid.shape
    out = np.empty_like(fid)
    for i in range(rows):
        for j in range(i if same else 0, cols):
            out[i, j] = _sample_frequency(fid[i, j], shots, _entry_rng(seed, i, j))
            if same:
                out[j, i] = out[i, j]
    jitter = 0.0
    if same and psd_repair:
        out, jitter = repair_psd(out)
    return KernelMatrix(out, "sampled", int(shots), same, jitter)


def repair_psd(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Add ``(max(0, -lambda_min) + 1e-10) * I`` when ``K`` has a negative eigenvalue."""
    K = np.asarray(K, dtype=float)
    lam = np.linalg.eigvalsh(K)[0]
    if lam >= 0:
        return K, 0.0
    eps = -lam + 1e-10
    return K + eps * np.eye(K.shape[0]), eps


_MAGIC = b"QKM1"
_HEADER = struct.Struct("<4sIIBQ")
_MODE_CODE = {"exact": 0, "sampled": 1}


def write_qkm(path: str | Path, km: KernelMatrix) -> None:
    """Binary dump: magic, u32 rows, u32 cols, u8 mode, u64 shots, f64 row-major (little-endian)."""
    rows, cols = km.values.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, rows, cols, _MODE_CODE[km.mode], km.shots))
        fh.write(np.ascontiguousarray(km.values, dtype="<f8").tobytes())


def read_qkm(path: str | Path) -> KernelMatrix:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise KernelError("truncated QKM1 file")
    magic, rows, cols, mode, shots = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise KernelError("not a QKM1 file")
    body = data[_HEADER.size:]
    if len(body) != 8 * rows * cols:
        raise KernelError("QKM1 payload size does not match header")
    values = np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(float)
    name = {v: k for k, v in _MODE_CODE.items()}[mode]
    return KernelMatrix(values, name, int(shots), rows == cols and np.array_equal(values, values.T))


def write_kernel_csv(path: str | Path, km: KernelMatrix) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in km.values:
            writer.writerow([repr(float(v)) for v in row])
