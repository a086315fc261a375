"""Hierarchical splitting of one qubit among three agents.

Alice holds the secret qubit S and qubit A of the four-qubit channel state
shared with Bob (B), Charlie (C) and Diana (D).  After her Bell measurement
on (S, A) the secret can be rebuilt by

* Bob, if Charlie and Diana both measure in Z and report;
* Charlie, symmetrically, with Bob and Diana;
* Diana, with both Bob and Charlie reporting Z outcomes, or with a single
  X-basis report from either of them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping, Sequence

import numpy as np

from . import qmath
from .qmath import DensityMatrix, StateVector

AGENT_QUBIT = {"alice": "A", "bob": "B", "charlie": "C", "diana": "D"}
QUBIT_AGENT = {q: a for a, q in AGENT_QUBIT.items()}
RECEIVERS = ("bob", "charlie", "diana")

FIDELITY_TOL = 1e-10


class InvalidCoalitionError(ValueError):
    """The requested helpers cannot let the receiver rebuild the secret."""


class BellOutcome(str, enum.Enum):
    PSI_PLUS = "Psi+"
    PSI_MINUS = "Psi-"
    PHI_PLUS = "Phi+"
    PHI_MINUS = "Phi-"

    @property
    def outcome_class(self) -> str:
        """``"plus"`` for Psi+ and Phi-, ``"minus"`` for Psi- and Phi+.

        Diana's marginal carries the + sign in the first class and the - sign
        in the second.
        """
        return "plus" if self in (BellOutcome.PSI_PLUS, BellOutcome.PHI_MINUS) else "minus"

    def __str__(self) -> str:
        return self.value


class HelperBasis(str, enum.Enum):
    Z = "Z"
    X = "X"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SecretSpec:
    """Unknown qubit alpha|0> + beta|1>, stored with alpha real and >= 0."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        if not all(np.isfinite([a.real, a.imag, b.real, b.imag])):
            raise ValueError("secret amplitudes must be finite")
        norm2 = abs(a) ** 2 + abs(b) ** 2
        if abs(norm2 - 1.0) > qmath.NORM_TOL:
            raise ValueError(f"secret is not normalized (|a|^2+|b|^2={norm2!r})")
        ref = a if abs(a) > 0 else b
        phase = np.conj(ref) / abs(ref)
        a, b = a * phase, b * phase
        object.__setattr__(self, "alpha", complex(a.real, 0.0) if abs(a) > 0 else 0j)
        object.__setattr__(self, "beta", complex(b) if abs(a) > 0 else complex(b.real, 0.0))

    @classmethod
    def from_lambda(cls, lam: complex) -> SecretSpec:
        lam = complex(lam)
        norm = np.sqrt(1.0 + abs(lam) ** 2)
        return cls(1.0 / norm, lam / norm)

    @classmethod
    def from_amplitudes(cls, alpha: complex, beta: complex) -> SecretSpec:
        """Normalize an arbitrary nonzero pair."""
        norm = np.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        if norm == 0:
            raise ValueError("secret amplitudes cannot both vanish")
        return cls(complex(alpha) / norm, complex(beta) / norm)

    @classmethod
    def random(cls, rng: np.random.Generator) -> SecretSpec:
        """Haar-uniform point on the Bloch sphere."""
        g = rng.normal(size=4)
        return cls.from_amplitudes(complex(g[0], g[1]), complex(g[2], g[3]))

    @property
    def lambda_view(self) -> complex | None:
        return None if self.alpha == 0 else self.beta / self.alpha

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)


def random_secrets(n: int, rng: np.random.Generator) -> list[SecretSpec]:
    return [SecretSpec.random(rng) for _ in range(n)]


GENERATORS = {
    "I": qmath.I2.matrix,
    "X": qmath.X.matrix,
    "Z": qmath.Z.matrix,
    "H": qmath.H.matrix,
}


@dataclass(frozen=True)
class Correction:
    """Product of generators, written left to right and applied right to left.

    ``Correction(("X", "Z", "H"))`` is sigma_x sigma_z H: H acts first.
    Two corrections are equal when their matrices agree up to global phase.
    """

    word: tuple[str, ...]

    def __post_init__(self):
        word = tuple(self.word) or ("I",)
        bad = [g for g in word if g not in GENERATORS]
        if bad:
            raise ValueError(f"unknown generators {bad}")
        object.__setattr__(self, "word", word)

    @classmethod
    def parse(cls, text: str) -> Correction:
        return cls(tuple(text))

    @property
    def name(self) -> str:
        return "".join(self.word)

    @property
    def matrix(self) -> np.ndarray:
        return reduce(np.matmul, (GENERATORS[g] for g in self.word))

    @property
    def op(self) -> qmath.SingleQubitOp:
        return qmath.SingleQubitOp(self.matrix, name=self.name)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Correction):
            return NotImplemented
        return same_up_to_phase(self.matrix, other.matrix)

    def __hash__(self) -> int:
        return hash(self.name)

    def __str__(self) -> str:
        return self.name


def same_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-10) -> bool:
    """True if u = e^{i theta} v for 2x2 unitaries."""
    overlap = abs(np.trace(np.conj(u).T @ v)) / 2
    return bool(abs(overlap - 1.0) <= tol)


# --- channel and secret ----------------------------------------------------


def _ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def phi0() -> StateVector:
    amps = (_ket("000") - _ket("011") - _ket("101") + _ket("110")) / 2
    return StateVector("BCD", amps)


def phi1() -> StateVector:
    amps = (_ket("001") + _ket("010") + _ket("100") + _ket("111")) / 2
    return StateVector("BCD", amps)


def build_chi() -> StateVector:
    """Four-qubit channel state on (A, B, C, D)."""
    return _CHI


_CHI = StateVector("ABCD", np.concatenate([phi0().amps, phi1().amps]) / qmath.SQRT2)


def ghz(n: int = 4, labels: Sequence[str] | None = None) -> StateVector:
    labels = tuple(labels) if labels is not None else tuple(f"q{i}" for i in range(n))
    amps = (_ket("0" * len(labels)) + _ket("1" * len(labels))) / qmath.SQRT2
    return StateVector(labels, amps)


def build_secret(spec: SecretSpec) -> StateVector:
    return StateVector("S", spec.amplitudes)


def compose_system(secret: StateVector, channel: StateVector) -> StateVector:
    return qmath.tensor(secret, channel)


# --- Alice's measurement ---------------------------------------------------


def alice_bell_measure(
    system: StateVector,
    *,
    outcome: BellOutcome | str | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[BellOutcome, float, StateVector]:
    """Bell measurement on (S, A); returns the outcome, its probability and
    the collapsed state on the remaining qubits."""
    forced = None if outcome is None else BellOutcome(outcome).value
    name, prob, collapsed = qmath.measure_bell(system, "S", "A", outcome=forced, rng=rng)
    return BellOutcome(name), prob, collapsed


def analytic_collapse(outcome: BellOutcome | str, spec: SecretSpec) -> StateVector:
    """Post-measurement state on (B, C, D) built directly from phi0/phi1.

    Written in (alpha, beta) so that alpha = 0 is covered:
    Psi+- -> alpha phi0 +- beta phi1, Phi+- -> alpha phi1 +- beta phi0.
    """
    outcome = BellOutcome(outcome)
    p0, p1 = phi0().amps, phi1().amps
    a, b = spec.alpha, spec.beta
    sign = 1 if outcome in (BellOutcome.PSI_PLUS, BellOutcome.PHI_PLUS) else -1
    if outcome in (BellOutcome.PSI_PLUS, BellOutcome.PSI_MINUS):
        amps = a * p0 + sign * b * p1
    else:
        amps = a * p1 + sign * b * p0
    return StateVector("BCD", amps)


def reduced_state(outcome_class: str, spec: SecretSpec, agent: str) -> DensityMatrix:
    """Closed-form single-agent marginal after Alice's measurement.

    ``agent`` is an agent name or qubit label among B, C, D.
    """
    label = AGENT_QUBIT.get(agent, agent)
    if label not in ("B", "C", "D"):
        raise ValueError(f"no marginal for agent {agent!r}")
    if outcome_class not in ("plus", "minus"):
        raise ValueError(f"outcome class must be 'plus' or 'minus', not {outcome_class!r}")
    rho = np.eye(2, dtype=complex) / 2
    if label == "D":
        # Im(lambda)/(1+|lambda|^2) = Im(beta conj(alpha)), also valid at alpha = 0
        c = (spec.beta * np.conj(spec.alpha)).imag
        sign = 1 if outcome_class == "plus" else -1
        rho[1, 0] += sign * 1j * c
        rho[0, 1] -= sign * 1j * c
    return DensityMatrix(label, rho)


# --- correction tables -----------------------------------------------------

_P, _M = BellOutcome.PSI_PLUS, BellOutcome.PSI_MINUS
_FP, _FM = BellOutcome.PHI_PLUS, BellOutcome.PHI_MINUS

# (bell, c_out, d_out) for Bob receiving; (bell, b_out, d_out) for Charlie
BOB_TABLE: dict[tuple[BellOutcome, int, int], str] = {
    (_P, 0, 0): "I",   (_FP, 0, 0): "X",
    (_P, 0, 1): "XZ",  (_FP, 0, 1): "Z",
    (_P, 1, 0): "X",   (_FP, 1, 0): "I",
    (_P, 1, 1): "Z",   (_FP, 1, 1): "XZ",
    (_M, 0, 0): "Z",   (_FM, 0, 0): "XZ",
    (_M, 0, 1): "X",   (_FM, 0, 1): "I",
    (_M, 1, 0): "XZ",  (_FM, 1, 0): "Z",
    (_M, 1, 1): "I",   (_FM, 1, 1): "X",
}  # fmt: skip

# (bell, b_out xor c_out)
DIANA_ZZ_TABLE: dict[tuple[BellOutcome, int], str] = {
    (_P, 0): "I",   (_FP, 0): "X",
    (_P, 1): "XZ",  (_FP, 1): "Z",
    (_M, 0): "Z",   (_FM, 0): "XZ",
    (_M, 1): "X",   (_FM, 1): "I",
}  # fmt: skip

# (bell, x_out) with x_out 0 for |+>, 1 for |->
DIANA_X_TABLE: dict[tuple[BellOutcome, int], str] = {
    (_P, 0): "XH",   (_FP, 0): "H",
    (_P, 1): "ZH",   (_FP, 1): "XZH",
    (_M, 0): "XZH",  (_FM, 0): "ZH",
    (_M, 1): "H",    (_FM, 1): "XH",
}  # fmt: skip


def _bit(value) -> int:
    if value in (0, 1, "0", "1"):
        return int(value)
    if value in ("+", "-"):
        return 0 if value == "+" else 1
    raise ValueError(f"not a measurement outcome: {value!r}")


def correction_bob(bell: BellOutcome | str, c_out: int, d_out: int) -> Correction:
    """Bob's fix-up from Charlie's and Diana's Z outcomes.

    Charlie uses the same table with Bob's outcome in place of Charlie's.
    """
    return Correction.parse(BOB_TABLE[BellOutcome(bell), _bit(c_out), _bit(d_out)])


def correction_diana_zz(bell: BellOutcome | str, b_out: int, c_out: int) -> Correction:
    return Correction.parse(DIANA_ZZ_TABLE[BellOutcome(bell), _bit(b_out) ^ _bit(c_out)])


def correction_diana_x(bell: BellOutcome | str, x_out) -> Correction:
    """Diana's fix-up from one X outcome (``0``/``"+"`` or ``1``/``"-"``)."""
    return Correction.parse(DIANA_X_TABLE[BellOutcome(bell), _bit(x_out)])


# --- end-to-end runs -------------------------------------------------------


@dataclass(frozen=True)
class HelperEvent:
    agent: str
    basis: HelperBasis
    outcome: int
    delivered: bool


@dataclass(frozen=True)
class ProtocolTranscript:
    receiver: str
    secret: SecretSpec
    bell: BellOutcome
    helper_events: tuple[HelperEvent, ...]
    correction: Correction
    fidelity: float
    rng_seed: int | None = None
    branch_probability: float = field(default=1.0)

    def to_dict(self) -> dict:
        return {
            "receiver": self.receiver,
            "secret": {
                "alpha": [self.secret.alpha.real, self.secret.alpha.imag],
                "beta": [self.secret.beta.real, self.secret.beta.imag],
            },
            "bell": self.bell.value,
            "helper_events": [
                {
                    "agent": e.agent,
                    "basis": e.basis.value,
                    "outcome": e.outcome,
                    "delivered": e.delivered,
                }
                for e in self.helper_events
            ],
            "correction": self.correction.name,
            "fidelity": self.fidelity,
            "rng_seed": self.rng_seed,
            "branch_probability": self.branch_probability,
        }


def helpers_of(receiver: str) -> tuple[str, str]:
    return tuple(a for a in RECEIVERS if a != receiver)  # type: ignore[return-value]


def choose_correction(
    receiver: str,
    bell: BellOutcome,
    bases: Mapping[str, HelperBasis],
    outcomes: Mapping[str, int],
    delivered: Mapping[str, bool],
) -> Correction:
    """Pick the table entry for the receiver, or raise InvalidCoalitionError.

    Only the delivered outcomes are read.
    """
    if receiver not in RECEIVERS:
        raise ValueError(f"receiver must be one of {RECEIVERS}, not {receiver!r}")
    h1, h2 = helpers_of(receiver)
    if receiver in ("bob", "charlie"):
        for h in (h1, h2):
            if not delivered[h]:
                raise InvalidCoalitionError(
                    f"{receiver} needs both other agents to cooperate; "
                    f"the message from {h} was dropped"
                )
            if bases[h] is not HelperBasis.Z:
                raise InvalidCoalitionError(
                    f"{receiver} can only use Z-basis reports; {h} measured in X"
                )
        # h1 is the other supervisor, h2 is diana
        return correction_bob(bell, outcomes[h1], outcomes[h2])

    got = [h for h in (h1, h2) if delivered[h]]
    if not got:
        raise InvalidCoalitionError("diana needs at least one of bob or charlie to cooperate")
    if len(got) == 2:
        b1, b2 = bases[h1], bases[h2]
        if b1 is HelperBasis.Z and b2 is HelperBasis.Z:
            return correction_diana_zz(bell, outcomes[h1], outcomes[h2])
        if b1 is HelperBasis.X and b2 is HelperBasis.X:
            if outcomes[h1] != outcomes[h2]:
                raise AssertionError(
                    f"X outcomes of bob ({outcomes[h1]}) and charlie ({outcomes[h2]}) disagree"
                )
            return correction_diana_x(bell, outcomes[h1])
        raise InvalidCoalitionError(
            "no correction is tabulated for diana when one helper measures Z and the other X"
        )
    (h,) = got
    if bases[h] is not HelperBasis.X:
        raise InvalidCoalitionError(
            f"with only {h} reporting, diana needs an X-basis outcome; {h} measured in Z"
        )
    return correction_diana_x(bell, outcomes[h])


def run_protocol(
    receiver: str,
    spec: SecretSpec,
    bases: Mapping[str, HelperBasis | str] | None = None,
    delivered: Mapping[str, bool] | None = None,
    *,
    rng: np.random.Generator | None = None,
    bell: BellOutcome | str | None = None,
    outcomes: Mapping[str, int] | None = None,
    rng_seed: int | None = None,
) -> ProtocolTranscript:
    """Run the protocol once and score the receiver's qubit against the secret.

    ``bases`` and ``delivered`` are keyed by helper name and default to Z and
    True.  Outcomes are drawn from ``rng`` unless forced through ``bell`` and
    ``outcomes``.  Helpers measure in register order whether or not their
    message later arrives.
    """
    if receiver not in RECEIVERS:
        raise ValueError(f"receiver must be one of {RECEIVERS}, not {receiver!r}")
    helpers = helpers_of(receiver)
    bases = {h: HelperBasis(str((bases or {}).get(h, "Z")).upper()) for h in helpers}
    delivered = {h: bool((delivered or {}).get(h, True)) for h in helpers}
    outcomes = dict(outcomes or {})
    for h in outcomes:
        if h not in helpers:
            raise ValueError(f"{h!r} is not a helper of {receiver}")

    # validate the coalition before touching any state; outcomes do not matter here
    choose_correction(receiver, BellOutcome.PSI_PLUS, bases, {h: 0 for h in helpers}, delivered)

    system = compose_system(build_secret(spec), build_chi())
    bell_out, prob, state = alice_bell_measure(system, outcome=bell, rng=rng)

    events = []
    measured: dict[str, int] = {}
    for h in sorted(helpers, key=lambda a: AGENT_QUBIT[a]):
        forced = outcomes.get(h)
        k, p, state = qmath.measure(
            state,
            AGENT_QUBIT[h],
            bases[h].value,
            outcome=None if forced is None else _bit(forced),
            rng=rng,
        )
        prob *= p
        measured[h] = k
        events.append(HelperEvent(h, bases[h], k, delivered[h]))

    correction = choose_correction(receiver, bell_out, bases, measured, delivered)
    state = qmath.apply_single(state, AGENT_QUBIT[receiver], correction.op)
    fid = qmath.fidelity_pure(build_secret(spec), state.relabel({AGENT_QUBIT[receiver]: "S"}))
    return ProtocolTranscript(
        receiver=receiver,
        secret=spec,
        bell=bell_out,
        helper_events=tuple(events),
        correction=correction,
        fidelity=fid,
        rng_seed=rng_seed,
        branch_probability=prob,
    )


def enumerate_branches(receiver: str, scenario: str):
    """Forced-outcome branch list ``(bases, delivered, bell, outcomes)``.

    ``scenario`` is ``"zz"`` for two Z reports, or ``"x-bob"`` /
    ``"x-charlie"`` for a single delivered X report from that helper (the
    other helper also measures X, its message dropped).
    """
    helpers = helpers_of(receiver)
    if scenario == "zz":
        bases = {h: HelperBasis.Z for h in helpers}
        delivered = {h: True for h in helpers}
        for b in BellOutcome:
            for o1 in (0, 1):
                for o2 in (0, 1):
                    yield bases, delivered, b, {helpers[0]: o1, helpers[1]: o2}
        return
    if scenario.startswith("x-") and receiver == "diana":
        sender = scenario[2:]
        other = next(h for h in helpers if h != sender)
        bases = {h: HelperBasis.X for h in helpers}
        delivered = {sender: True, other: False}
        for b in BellOutcome:
            for o in (0, 1):
                # X outcomes of bob and charlie always agree
                yield bases, delivered, b, {sender: o, other: o}
        return
    raise ValueError(f"unknown scenario {scenario!r} for receiver {receiver!r}")
