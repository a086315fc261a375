"""Which coalitions can rebuild the secret, found by optimization.

A strategy fixes a measurement basis (Z or X) for every cooperating helper
and a recovery unitary for every branch (Bell outcome, helper outcomes).
Helpers outside the coalition are traced out.  For a fixed branch the
average fidelity is a quadratic form in the recovery unitary,

    f(U) = Re sum_{abcd} U[a,b] conj(U[d,c]) T[a,b,c,d],
    T[a,b,c,d] = mean_k conj(x_k[a]) rho_k[b,c] x_k[d],

where x_k is secret k and rho_k the receiver's unnormalized branch state,
so each branch is optimized independently over ZYZ Euler angles.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels, qmath
from .protocol import (
    AGENT_QUBIT,
    DIANA_X_TABLE,
    DIANA_ZZ_TABLE,
    BOB_TABLE,
    RECEIVERS,
    BellOutcome,
    Correction,
    HelperBasis,
    SecretSpec,
    build_chi,
    build_secret,
    compose_system,
    ghz,
    random_secrets,
)

INITIAL_STEP = np.pi / 8
MIN_STEP = 1e-6
MAX_EVALS = 2000
REACHABLE_TOL = 1e-14


class StrategyError(ValueError):
    """A strategy misses a reachable branch or is otherwise malformed."""


# --- single-qubit unitaries ------------------------------------------------


def euler_zyz(theta: float, phi: float, lam: float) -> np.ndarray:
    """Rz(phi) Ry(theta) Rz(lam)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [
            [np.exp(-0.5j * (phi + lam)) * c, -np.exp(-0.5j * (phi - lam)) * s],
            [np.exp(0.5j * (phi - lam)) * s, np.exp(0.5j * (phi + lam)) * c],
        ]
    )


def zyz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """Euler angles of a 2x2 unitary, ignoring its global phase."""
    u = np.asarray(u, dtype=complex)
    v = u / np.sqrt(np.linalg.det(u))
    a, b = v[0, 0], v[1, 0]
    theta = 2 * np.arctan2(abs(b), abs(a))
    total = -2 * np.angle(a) if abs(a) > 1e-12 else 0.0  # phi + lam
    diff = 2 * np.angle(b) if abs(b) > 1e-12 else 0.0  # phi - lam
    if abs(a) <= 1e-12:
        # theta = pi: only phi - lam is defined
        return float(theta), float(diff), 0.0
    if abs(b) <= 1e-12:
        return float(theta), float(total), 0.0
    return float(theta), float((total + diff) / 2), float((total - diff) / 2)


def _canonical_unitary(u: np.ndarray) -> tuple:
    flat = u.reshape(-1)
    k = int(np.argmax(np.abs(flat) > 1e-9))
    w = flat * (abs(flat[k]) / flat[k])
    return tuple(np.round(w, 9).tolist())


def clifford_group() -> list[np.ndarray]:
    """The 24 single-qubit Clifford operations modulo phase, in BFS order from I."""
    gens = [qmath.H.matrix, qmath.S.matrix]
    found = {_canonical_unitary(np.eye(2, dtype=complex)): np.eye(2, dtype=complex)}
    frontier = [np.eye(2, dtype=complex)]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                w = g @ u
                key = _canonical_unitary(w)
                if key not in found:
                    found[key] = w
                    nxt.append(w)
        frontier = nxt
    return list(found.values())


CLIFFORDS = clifford_group()
CLIFFORD_ANGLES = [zyz_angles(u) for u in CLIFFORDS]


# --- coalitions and strategies ---------------------------------------------


@dataclass(frozen=True)
class Coalition:
    receiver: str
    helpers: tuple[str, ...] = ()

    def __post_init__(self):
        if self.receiver not in RECEIVERS:
            raise ValueError(f"receiver must be one of {RECEIVERS}")
        helpers = tuple(sorted(set(self.helpers), key=lambda a: AGENT_QUBIT[a]))
        for h in helpers:
            if h not in RECEIVERS or h == self.receiver:
                raise ValueError(f"{h!r} cannot help {self.receiver}")
        object.__setattr__(self, "helpers", helpers)

    @property
    def bystanders(self) -> tuple[str, ...]:
        return tuple(
            a for a in RECEIVERS if a != self.receiver and a not in self.helpers
        )

    def relabel_bc(self) -> Coalition:
        swap = {"bob": "charlie", "charlie": "bob", "diana": "diana"}
        return Coalition(swap[self.receiver], tuple(swap[h] for h in self.helpers))

    def __str__(self) -> str:
        return f"{self.receiver}+{{{','.join(self.helpers)}}}"


def all_coalitions() -> list[Coalition]:
    out = []
    for r in RECEIVERS:
        others = [a for a in RECEIVERS if a != r]
        for n in range(len(others) + 1):
            for hs in itertools.combinations(others, n):
                out.append(Coalition(r, hs))
    return out


BranchKey = tuple[BellOutcome, tuple[int, ...]]


def branch_keys(coalition: Coalition) -> list[BranchKey]:
    return [
        (b, outs)
        for b in BellOutcome
        for outs in itertools.product((0, 1), repeat=len(coalition.helpers))
    ]


@dataclass
class Strategy:
    bases: dict[str, HelperBasis]
    recovery: dict[BranchKey, tuple[float, float, float]] = field(default_factory=dict)

    def unitary(self, key: BranchKey) -> np.ndarray:
        try:
            return euler_zyz(*self.recovery[key])
        except KeyError:
            raise StrategyError(f"strategy has no recovery for branch {key}") from None

    def to_dict(self) -> dict:
        return {
            "bases": {h: b.value for h, b in self.bases.items()},
            "recovery": [
                {"bell": k[0].value, "outcomes": list(k[1]), "euler_zyz": list(v)}
                for k, v in self.recovery.items()
            ],
        }


def paper_strategy(coalition: Coalition) -> Strategy:
    """The tabulated corrections as a strategy, where the tables apply."""
    r, hs = coalition.receiver, coalition.helpers
    if r in ("bob", "charlie") and len(hs) == 2:
        bases = {h: HelperBasis.Z for h in hs}

        # helpers sort as (other supervisor, diana), the table's key order
        def word(b, o):
            return BOB_TABLE[b, o[0], o[1]]

    elif r == "diana" and len(hs) == 2:
        bases = {h: HelperBasis.Z for h in hs}

        def word(b, o):
            return DIANA_ZZ_TABLE[b, o[0] ^ o[1]]

    elif r == "diana" and len(hs) == 1:
        bases = {hs[0]: HelperBasis.X}

        def word(b, o):
            return DIANA_X_TABLE[b, o[0]]

    else:
        raise StrategyError(f"no tabulated correction for {coalition}")
    recovery = {
        key: zyz_angles(Correction.parse(word(*key)).matrix) for key in branch_keys(coalition)
    }
    return Strategy(bases, recovery)


# --- fidelity, simulated route ---------------------------------------------


def avg_fidelity(coalition: Coalition, strategy: Strategy, secrets: list[SecretSpec]) -> float:
    """Born-weighted mean fidelity, by explicit measurement simulation."""
    for h in coalition.helpers:
        if h not in strategy.bases:
            raise StrategyError(f"strategy gives no basis for helper {h}")
    chi = build_chi()
    rlabel = AGENT_QUBIT[coalition.receiver]
    total = 0.0
    for spec in secrets:
        xi = spec.amplitudes
        system = compose_system(build_secret(spec), chi)
        for bell in BellOutcome:
            _, p_bell, after_bell = qmath.measure_bell(system, "S", "A", outcome=bell.value)
            for outs in itertools.product((0, 1), repeat=len(coalition.helpers)):
                state, prob = after_bell, p_bell
                for h, o in zip(coalition.helpers, outs):
                    probs = qmath.probabilities(state, AGENT_QUBIT[h], strategy.bases[h].value)
                    if probs[o] <= REACHABLE_TOL:
                        prob = 0.0
                        break
                    _, p, state = qmath.measure(
                        state, AGENT_QUBIT[h], strategy.bases[h].value, outcome=o
                    )
                    prob *= p
                if prob == 0.0:
                    continue
                u = strategy.unitary((bell, outs))
                rho = qmath.partial_trace(state, [rlabel]).matrix
                fid = np.real(np.conj(xi) @ u @ rho @ u.conj().T @ xi)
                total += prob * fid
    return float(total / len(secrets))


# --- fidelity, vectorized route used by the optimizer ----------------------


def _secret_array(secrets: list[SecretSpec]) -> np.ndarray:
    return np.array([s.amplitudes for s in secrets])


def branch_tensors(
    coalition: Coalition, bases: dict[str, HelperBasis], secrets: list[SecretSpec]
) -> dict[BranchKey, np.ndarray]:
    """Quadratic-form tensor T (shape 2x2x2x2) for every branch."""
    xs = _secret_array(secrets)
    chi = build_chi().tensor()  # axes A, B, C, D
    # psi[k, s, a, b, c, d]
    psi = np.einsum("ks,abcd->ksabcd", xs, chi)
    bcd = "BCD"
    rax = bcd.index(AGENT_QUBIT[coalition.receiver])
    out = {}
    for bell in BellOutcome:
        bra = qmath.BELL_VECTORS[bell.value].conj().reshape(2, 2)
        after = np.einsum("sa,ksabcd->kbcd", bra, psi)
        for outs in itertools.product((0, 1), repeat=len(coalition.helpers)):
            state = after
            removed = []
            for h, o in zip(coalition.helpers, outs):
                ax = bcd.index(AGENT_QUBIT[h])
                pos = 1 + ax - sum(1 for r in removed if r < ax)
                vec = qmath.BASES[bases[h].value][:, o].conj()
                state = np.tensordot(state, vec, axes=([pos], [0]))
                removed.append(ax)
            rpos = rax - sum(1 for r in removed if r < rax)
            state = np.moveaxis(state, 1 + rpos, 1).reshape(len(secrets), 2, -1)
            rho = np.einsum("kbi,kci->kbc", state, state.conj())
            t = np.einsum("ka,kbc,kd->abcd", xs.conj(), rho, xs) / len(secrets)
            out[(bell, outs)] = np.ascontiguousarray(t)
    return out


def strategy_value(tensors: dict[BranchKey, np.ndarray], strategy: Strategy) -> float:
    return float(sum(kernels.objective(t, *strategy.recovery[k]) for k, t in tensors.items()))


def optimize_branch(t: np.ndarray) -> tuple[tuple[float, float, float], float, int]:
    """Best Clifford seed, then coordinate search over Euler angles."""
    best_angles, best_val = CLIFFORD_ANGLES[0], -np.inf
    for angles in CLIFFORD_ANGLES:
        val = kernels.objective(t, *angles)
        if val > best_val + 1e-15:
            best_angles, best_val = angles, val
    angles, val, evals = kernels.coordinate_search(
        t, best_angles, INITIAL_STEP, MIN_STEP, MAX_EVALS
    )
    if val < best_val:
        angles, val = best_angles, best_val
    return tuple(float(a) for a in angles), float(val), len(CLIFFORD_ANGLES) + int(evals)


@dataclass
class AuditResult:
    coalition: Coalition
    best_avg_fidelity: float
    best_strategy: Strategy
    n_secret_samples: int
    optimizer_iterations: int

    def to_dict(self) -> dict:
        return {
            "coalition": {
                "receiver": self.coalition.receiver,
                "helpers": list(self.coalition.helpers),
            },
            "best_avg_fidelity": self.best_avg_fidelity,
            "best_strategy": self.best_strategy.to_dict(),
            "n_secret_samples": self.n_secret_samples,
            "optimizer_iterations": self.optimizer_iterations,
        }


def _audit_with_secrets(coalition: Coalition, secrets: list[SecretSpec]) -> AuditResult:
    best = None
    iterations = 0
    for combo in itertools.product(HelperBasis, repeat=len(coalition.helpers)):
        bases = dict(zip(coalition.helpers, combo))
        strategy = Strategy(bases)
        value = 0.0
        for key, t in branch_tensors(coalition, bases, secrets).items():
            weight = np.real(t[0, 0, 0, 0] + t[0, 1, 1, 0] + t[1, 0, 0, 1] + t[1, 1, 1, 1])
            if weight <= REACHABLE_TOL:
                # unreachable branch; any unitary will do
                strategy.recovery[key] = (0.0, 0.0, 0.0)
                continue
            angles, val, evals = optimize_branch(t)
            strategy.recovery[key] = angles
            value += val
            iterations += evals
        if best is None or value > best[0] + 1e-12:
            best = (value, strategy)
    return AuditResult(
        coalition=coalition,
        best_avg_fidelity=float(best[0]),
        best_strategy=best[1],
        n_secret_samples=len(secrets),
        optimizer_iterations=iterations,
    )


def audit_access(coalition: Coalition, n_secrets: int = 128, seed: int = 0) -> AuditResult:
    """Best average fidelity the coalition reaches over Haar-random secrets."""
    if n_secrets < 32:
        raise ValueError("the audit needs at least 32 secrets")
    secrets = random_secrets(n_secrets, np.random.default_rng(seed))
    return _audit_with_secrets(coalition, secrets)


def hierarchy_report(n_secrets: int = 128, seed: int = 0) -> list[AuditResult]:
    """Audit all 12 coalitions on one shared secret sample, best first."""
    if n_secrets < 32:
        raise ValueError("the audit needs at least 32 secrets")
    secrets = random_secrets(n_secrets, np.random.default_rng(seed))
    results = [_audit_with_secrets(c, secrets) for c in all_coalitions()]
    order = {c: i for i, c in enumerate(all_coalitions())}
    return sorted(
        results, key=lambda r: (-round(r.best_avg_fidelity, 9), order[r.coalition])
    )


# --- persistency of entanglement -------------------------------------------


@dataclass
class PersistencyReport:
    chi_min_residual_entropy: float
    chi_worst_case: dict
    chi_measurements: int
    ghz_max_residual_entropy: float
    ghz_measurements: int
    threshold: float = 0.5
    ghz_tolerance: float = 1e-10

    @property
    def chi_persistent(self) -> bool:
        return self.chi_min_residual_entropy > self.threshold

    @property
    def ghz_disentangled(self) -> bool:
        return self.ghz_max_residual_entropy < self.ghz_tolerance

    @property
    def passed(self) -> bool:
        return self.chi_persistent and self.ghz_disentangled

    def to_dict(self) -> dict:
        return {
            "chi_min_residual_entropy": self.chi_min_residual_entropy,
            "chi_worst_case": self.chi_worst_case,
            "chi_measurements": self.chi_measurements,
            "ghz_max_residual_entropy": self.ghz_max_residual_entropy,
            "ghz_measurements": self.ghz_measurements,
            "chi_persistent": self.chi_persistent,
            "ghz_disentangled": self.ghz_disentangled,
        }


def residual_entropies(state: qmath.StateVector, label: str, basis) -> list[float]:
    """Max bipartite entropy of each possible post-measurement residual."""
    probs = qmath.probabilities(state, label, basis)
    out = []
    for k in (0, 1):
        if probs[k] <= qmath.IMPOSSIBLE_TOL:
            continue
        _, _, residual = qmath.measure(state, label, basis, outcome=k)
        out.append(qmath.max_bipartite_entropy(residual))
    return out


def persistency_check(n_random_bases: int = 20, seed: int = 0) -> PersistencyReport:
    """One local measurement leaves the channel state entangled but kills GHZ.

    Every qubit of the channel state is measured in Z and in
    ``n_random_bases`` Haar-random bases; every residual must keep more than
    half a bit of entanglement across its best cut.  The 4-qubit GHZ state
    must come out fully product after a Z measurement on any qubit.
    """
    if n_random_bases < 1:
        raise ValueError("need at least one random basis")
    rng = np.random.default_rng(seed)
    chi = build_chi()
    worst = (np.inf, {})
    count = 0
    for label in chi.labels:
        bases = [("Z", qmath.BASES["Z"])]
        bases += [(f"haar{i}", qmath.haar_unitary(rng)) for i in range(n_random_bases)]
        for name, basis in bases:
            for ent in residual_entropies(chi, label, basis):
                count += 1
                if ent < worst[0]:
                    worst = (ent, {"qubit": label, "basis": name})
    g = ghz(4)
    ghz_max = 0.0
    ghz_count = 0
    for label in g.labels:
        for k in (0, 1):
            _, _, residual = qmath.measure(g, label, "Z", outcome=k)
            ghz_max = max(ghz_max, max(qmath.bipartite_entropies(residual)))
            ghz_count += 1
    return PersistencyReport(
        chi_min_residual_entropy=float(worst[0]),
        chi_worst_case=worst[1],
        chi_measurements=count,
        ghz_max_residual_entropy=float(ghz_max),
        ghz_measurements=ghz_count,
    )
