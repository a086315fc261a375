"""Small dense state-vector algebra over labelled qubit registers.

Amplitude index bits follow label order, most significant first: for labels
``("A", "B")`` the amplitude of ``|0_A 1_B>`` sits at index ``0b01``.
Measured qubits are removed from the register on collapse.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-12
IMPOSSIBLE_TOL = 1e-15

SQRT2 = np.sqrt(2.0)


class LabelError(ValueError):
    """Raised for duplicate, missing or unknown qubit labels."""


class ImpossibleOutcomeError(ValueError):
    """Raised when a forced measurement outcome has zero probability."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


class StateVector:
    """Normalized pure state on an ordered register of named qubits."""

    __slots__ = ("labels", "amps")

    def __init__(self, labels: Sequence[str], amps, *, normalize: bool = False):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate qubit labels in {labels}")
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        if amps.size != 2 ** len(labels):
            raise ValueError(
                f"{amps.size} amplitudes do not fit {len(labels)} qubits"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        self.labels = labels
        self.amps = _frozen(amps)

    @classmethod
    def basis(cls, labels: Sequence[str], bits: str) -> StateVector:
        labels = tuple(labels)
        if len(bits) != len(labels):
            raise ValueError("bit string length must match the register")
        amps = np.zeros(2 ** len(labels), dtype=complex)
        amps[int(bits, 2) if bits else 0] = 1.0
        return cls(labels, amps)

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit."""
        return self.amps.reshape((2,) * self.n_qubits)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"unknown qubit label {label!r}") from None

    def reorder(self, labels: Sequence[str]) -> StateVector:
        """Return the same state with the register permuted to ``labels``."""
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise LabelError(f"{labels} is not a permutation of {self.labels}")
        axes = [self.index(lab) for lab in labels]
        return StateVector(labels, np.transpose(self.tensor(), axes))

    def relabel(self, mapping: dict[str, str]) -> StateVector:
        return StateVector([mapping.get(lab, lab) for lab in self.labels], self.amps)

    def canonical(self) -> np.ndarray:
        """Amplitudes with the global phase fixed.

        The largest-magnitude amplitude (first one on ties within 1e-12) is
        rotated onto the positive real axis.
        """
        mags = np.abs(self.amps)
        k = int(np.argmax(mags >= mags.max() - NORM_TOL))
        return self.amps * (np.conj(self.amps[k]) / mags[k])

    def __repr__(self) -> str:
        return f"StateVector(labels={self.labels}, amps={self.amps!r})"


@dataclass(frozen=True)
class SingleQubitOp:
    matrix: np.ndarray
    unitary: bool = True
    name: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("single-qubit operator must be 2x2")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator entries must be finite")
        if self.unitary and not np.allclose(m.conj().T @ m, np.eye(2), atol=NORM_TOL, rtol=0):
            raise ValueError(f"operator {self.name or m!r} is flagged unitary but is not")
        object.__setattr__(self, "matrix", _frozen(m))

    def __matmul__(self, other: SingleQubitOp) -> SingleQubitOp:
        return SingleQubitOp(
            self.matrix @ other.matrix,
            unitary=self.unitary and other.unitary,
            name=self.name + other.name,
        )


I2 = SingleQubitOp(np.eye(2), name="I")
X = SingleQubitOp([[0, 1], [1, 0]], name="X")
Y = SingleQubitOp([[0, -1j], [1j, 0]], name="Y")
Z = SingleQubitOp([[1, 0], [0, -1]], name="Z")
H = SingleQubitOp(np.array([[1, 1], [1, -1]]) / SQRT2, name="H")
S = SingleQubitOp([[1, 0], [0, 1j]], name="S")

# measurement bases: column k is the ket of outcome k
BASES = {
    "Z": np.eye(2, dtype=complex),
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2,
}

# Bell basis on (first, second) qubit, in the paper's naming
BELL_VECTORS = {
    "Psi+": np.array([1, 0, 0, 1], dtype=complex) / SQRT2,
    "Psi-": np.array([1, 0, 0, -1], dtype=complex) / SQRT2,
    "Phi+": np.array([0, 1, 1, 0], dtype=complex) / SQRT2,
    "Phi-": np.array([0, 1, -1, 0], dtype=complex) / SQRT2,
}


def tensor(a: StateVector, b: StateVector) -> StateVector:
    clash = set(a.labels) & set(b.labels)
    if clash:
        raise LabelError(f"labels {sorted(clash)} appear on both sides")
    return StateVector(a.labels + b.labels, np.kron(a.amps, b.amps), normalize=True)


def _apply_matrix(state: StateVector, axis: int, matrix: np.ndarray) -> np.ndarray:
    psi = np.tensordot(matrix, state.tensor(), axes=([1], [axis]))
    return np.moveaxis(psi, 0, axis)


def apply_single(state: StateVector, label: str, op: SingleQubitOp) -> StateVector:
    """Apply ``op`` to the qubit ``label``.

    Non-unitary operators are allowed; the result is renormalized.
    """
    axis = state.index(label)
    psi = _apply_matrix(state, axis, op.matrix)
    return StateVector(state.labels, psi, normalize=True)


def _project(state: StateVector, axes: Sequence[int], bra: np.ndarray) -> np.ndarray:
    """Contract ``bra`` (shape ``(2,) * len(axes)``) into the given axes."""
    bra = np.asarray(bra, dtype=complex).reshape((2,) * len(axes))
    return np.tensordot(bra, state.tensor(), axes=(list(range(len(axes))), list(axes)))


def _select(probs: np.ndarray, outcome, rng, names: Sequence) -> int:
    if outcome is not None:
        k = list(names).index(outcome)
        if probs[k] <= IMPOSSIBLE_TOL:
            raise ImpossibleOutcomeError(
                f"outcome {outcome!r} has probability {probs[k]:.3g}"
            )
        return k
    if rng is None:
        certain = np.flatnonzero(probs >= 1.0 - NORM_TOL)
        if certain.size:
            return int(certain[0])
        raise ValueError("either a forced outcome or an rng must be given")
    p = np.clip(probs, 0.0, None)
    return int(rng.choice(len(p), p=p / p.sum()))


def _bras(basis) -> np.ndarray:
    if isinstance(basis, str):
        if basis not in _NAMED_BRAS:
            raise ValueError(f"unknown basis {basis!r}")
        return _NAMED_BRAS[basis]
    kets = np.asarray(basis, dtype=complex)
    if kets.shape != (2, 2) or not np.allclose(
        kets.conj().T @ kets, np.eye(2), atol=NORM_TOL, rtol=0
    ):
        raise ValueError("basis must be a 2x2 unitary with the kets as columns")
    return kets.conj().T


_NAMED_BRAS = {name: np.asarray(kets, dtype=complex).conj().T for name, kets in BASES.items()}


def probabilities(state: StateVector, label: str, basis="Z") -> np.ndarray:
    """Born probabilities of outcomes 0 and 1 for a single-qubit measurement."""
    axis = state.index(label)
    bras = _bras(basis)
    return np.array(
        [np.sum(np.abs(_project(state, [axis], bras[k])) ** 2) for k in range(2)]
    )


def measure(
    state: StateVector,
    label: str,
    basis="Z",
    *,
    outcome: int | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[int, float, StateVector]:
    """Projectively measure one qubit.

    ``basis`` is ``"Z"``, ``"X"`` or a 2x2 unitary whose columns are the
    outcome kets.

    Either force ``outcome`` or pass ``rng`` to sample it with Born weights.
    Returns ``(outcome, probability, collapsed)``; the measured qubit is
    removed from the collapsed register. Outcome 0 means ``|0>`` (Z) or
    ``|+>`` (X).
    """
    axis = state.index(label)
    bras = _bras(basis)
    branches = [_project(state, [axis], bras[k]) for k in range(2)]
    probs = np.array([np.sum(np.abs(b) ** 2) for b in branches])
    k = _select(probs, outcome, rng, (0, 1))
    rest = state.labels[:axis] + state.labels[axis + 1 :]
    collapsed = StateVector(rest, branches[k] / np.sqrt(probs[k]), normalize=True)
    return k, float(probs[k]), collapsed


def bell_probabilities(state: StateVector, label1: str, label2: str) -> dict[str, float]:
    axes = [state.index(label1), state.index(label2)]
    return {
        name: float(np.sum(np.abs(_project(state, axes, vec.conj())) ** 2))
        for name, vec in BELL_VECTORS.items()
    }


def measure_bell(
    state: StateVector,
    label1: str,
    label2: str,
    *,
    outcome: str | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[str, float, StateVector]:
    """Joint Bell measurement on ``(label1, label2)``.

    Outcomes are named ``"Psi+"``, ``"Psi-"``, ``"Phi+"``, ``"Phi-"`` with
    Psi = (|00> +- |11>)/sqrt2 and Phi = (|01> +- |10>)/sqrt2, the first bit
    belonging to ``label1``.
    """
    if label1 == label2:
        raise LabelError("Bell measurement needs two distinct qubits")
    axes = [state.index(label1), state.index(label2)]
    names = list(BELL_VECTORS)
    branches = [_project(state, axes, BELL_VECTORS[n].conj()) for n in names]
    probs = np.array([np.sum(np.abs(b) ** 2) for b in branches])
    k = _select(probs, outcome, rng, names)
    rest = tuple(lab for lab in state.labels if lab not in (label1, label2))
    collapsed = StateVector(rest, branches[k] / np.sqrt(probs[k]), normalize=True)
    return names[k], float(probs[k]), collapsed


class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix on named qubits."""

    __slots__ = ("labels", "matrix")

    def __init__(self, labels: Sequence[str], matrix, *, check: bool = True):
        labels = tuple(labels)
        m = np.asarray(matrix, dtype=complex)
        dim = 2 ** len(labels)
        if m.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {m.shape}")
        if check:
            if np.max(np.abs(m - m.conj().T)) > NORM_TOL:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(m) - 1.0) > NORM_TOL:
                raise ValueError("density matrix trace is not 1")
            if np.min(hermitian_eigvalsh(m)) < -NORM_TOL:
                raise ValueError("density matrix has a negative eigenvalue")
        self.labels = labels
        self.matrix = _frozen(m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"DensityMatrix(labels={self.labels}, matrix={self.matrix!r})"


def partial_trace(state: StateVector, keep: Iterable[str]) -> DensityMatrix:
    """Reduced density matrix on ``keep``, in the register order of ``state``."""
    keep_set = set(keep)
    if not keep_set:
        raise LabelError("keep-set must not be empty")
    unknown = keep_set - set(state.labels)
    if unknown:
        raise LabelError(f"unknown qubit labels {sorted(unknown)}")
    kept = [i for i, lab in enumerate(state.labels) if lab in keep_set]
    traced = [i for i, lab in enumerate(state.labels) if lab not in keep_set]
    psi = np.transpose(state.tensor(), kept + traced).reshape(2 ** len(kept), -1)
    rho = psi @ psi.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix([state.labels[i] for i in kept], rho)


def projector(state: StateVector) -> DensityMatrix:
    return DensityMatrix(state.labels, np.outer(state.amps, state.amps.conj()))


def fidelity_pure(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, after aligning the register order of ``b`` to ``a``."""
    if set(a.labels) != set(b.labels):
        raise LabelError(f"registers differ: {a.labels} vs {b.labels}")
    if a.labels != b.labels:
        b = b.reorder(a.labels)
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)


def equal_up_to_phase(a: StateVector, b: StateVector, tol: float = NORM_TOL) -> bool:
    if set(a.labels) != set(b.labels):
        return False
    b = b.reorder(a.labels)
    return bool(np.max(np.abs(a.canonical() - b.canonical())) <= tol)


def hermitian_eigvalsh(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a small Hermitian matrix, ascending.

    2x2 matrices use the closed form; larger ones go through LAPACK.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape == (2, 2):
        a, d = m[0, 0].real, m[1, 1].real
        mean = (a + d) / 2
        radius = np.hypot((a - d) / 2, abs(m[0, 1]))
        return np.array([mean - radius, mean + radius])
    return np.linalg.eigvalsh(m)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in bits; eigenvalues below zero are clamped."""
    p = np.clip(hermitian_eigvalsh(rho.matrix), 0.0, None)
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def entanglement_entropy(state: StateVector, cut: Iterable[str]) -> float:
    cut = set(cut)
    if not cut or cut >= set(state.labels):
        raise LabelError("cut must be a proper nonempty subset of the register")
    # the smaller side gives the smaller matrix; both have the same spectrum
    other = set(state.labels) - cut
    side = cut if len(cut) <= len(other) else other
    return von_neumann_entropy(partial_trace(state, side))


def max_bipartite_entropy(state: StateVector) -> float:
    """Largest entanglement entropy over all bipartitions of the register."""
    labels = state.labels
    n = len(labels)
    best = 0.0
    for mask in range(1, 2 ** (n - 1)):
        cut = [labels[i] for i in range(n) if mask >> i & 1]
        best = max(best, entanglement_entropy(state, cut))
    return best


def bipartite_entropies(state: StateVector) -> list[float]:
    labels = state.labels
    n = len(labels)
    return [
        entanglement_entropy(state, [labels[i] for i in range(n) if mask >> i & 1])
        for mask in range(1, 2 ** (n - 1))
    ]


def haar_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-random 2x2 unitary via QR of a complex Ginibre matrix."""
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))
