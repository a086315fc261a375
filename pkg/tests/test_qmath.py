import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hqis import qmath
from hqis.protocol import SecretSpec, analytic_collapse, build_chi, phi0
from hqis.qmath import StateVector

SQ2 = np.sqrt(2)


def ket(labels, amps):
    return StateVector(labels, amps, normalize=True)


@st.composite
def states(draw, n_min=1, n_max=4):
    n = draw(st.integers(n_min, n_max))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector([f"q{i}" for i in range(n)], amps, normalize=True)


# --- tensor ----------------------------------------------------------------


def test_tensor_basis_product():
    s = qmath.tensor(StateVector.basis("a", "0"), StateVector.basis("b", "0"))
    assert s.labels == ("a", "b")
    np.testing.assert_allclose(s.amps, [1, 0, 0, 0])


def test_tensor_separable_expansion():
    xi = ket("S", [1, 1])
    s = qmath.tensor(xi, StateVector.basis("b", "0"))
    np.testing.assert_allclose(s.amps, np.array([1, 0, 1, 0]) / SQ2, atol=1e-15)


def test_tensor_matches_hand_expansion_for_lambda_i():
    lam = 1j
    phi0_terms = {"000": 1, "011": -1, "101": -1, "110": 1}
    phi1_terms = {"001": 1, "010": 1, "100": 1, "111": 1}
    pref = 1 / np.sqrt(2 * (1 + abs(lam) ** 2))
    # the four groups of the written-out joint state, each with its BCD factor
    groups = {
        ("0", "0"): (1, phi0_terms),
        ("0", "1"): (1, phi1_terms),
        ("1", "0"): (lam, phi0_terms),
        ("1", "1"): (lam, phi1_terms),
    }
    expected = np.zeros(32, dtype=complex)
    for (s, a), (coef, terms) in groups.items():
        for bcd, sign in terms.items():
            expected[int(s + a + bcd, 2)] += pref * coef * sign / 2
    xi = StateVector("S", SecretSpec.from_lambda(lam).amplitudes)
    got = qmath.tensor(xi, build_chi())
    assert got.labels == tuple("SABCD")
    np.testing.assert_allclose(got.amps, expected, atol=1e-15)


def test_tensor_rejects_duplicate_labels():
    with pytest.raises(qmath.LabelError):
        qmath.tensor(StateVector.basis("a", "0"), StateVector.basis("a", "1"))


# --- apply_single ----------------------------------------------------------


def test_pauli_x_flips():
    out = qmath.apply_single(StateVector.basis("q", "0"), "q", qmath.X)
    np.testing.assert_allclose(out.amps, [0, 1])


def test_hadamard_makes_plus():
    out = qmath.apply_single(StateVector.basis("q", "0"), "q", qmath.H)
    np.testing.assert_allclose(out.amps, np.array([1, 1]) / SQ2)


def test_xz_restores_secret_branch():
    lam = 0.3 - 1.7j
    n = np.sqrt(1 + abs(lam) ** 2)
    branch = StateVector("B", np.array([-lam, 1]) / n)
    out = qmath.apply_single(branch, "B", qmath.X @ qmath.Z)
    target = StateVector("B", np.array([1, lam]) / n)
    assert qmath.equal_up_to_phase(out, target)
    np.testing.assert_allclose(out.amps, -target.amps, atol=1e-15)


def test_apply_single_unknown_label():
    with pytest.raises(qmath.LabelError):
        qmath.apply_single(StateVector.basis("q", "0"), "r", qmath.X)


def test_non_unitary_flag_is_checked():
    with pytest.raises(ValueError):
        qmath.SingleQubitOp([[1, 1], [0, 1]])
    proj = qmath.SingleQubitOp([[1, 0], [0, 0]], unitary=False)
    out = qmath.apply_single(ket("q", [1, 1]), "q", proj)
    np.testing.assert_allclose(out.amps, [1, 0])


@given(states(), st.integers(0, 3), st.sampled_from(["X", "Z", "H", "S"]))
def test_apply_single_preserves_norm(state, idx, name):
    label = state.labels[idx % state.n_qubits]
    out = qmath.apply_single(state, label, getattr(qmath, name))
    assert abs(np.linalg.norm(out.amps) - 1) <= 1e-12


# --- measure ---------------------------------------------------------------


def test_measure_plus_in_z():
    k, p, rest = qmath.measure(ket("q", [1, 1]), "q", "Z", outcome=0)
    assert (k, rest.labels) == (0, ())
    assert p == pytest.approx(0.5, abs=1e-15)


def test_measure_c_of_psi_plus():
    lam = 0.4 + 0.9j
    spec = SecretSpec.from_lambda(lam)
    psi = analytic_collapse("Psi+", spec)
    k, p, rest = qmath.measure(psi, "C", "Z", outcome=0)
    assert p == pytest.approx(0.5, abs=1e-12)
    assert rest.labels == ("B", "D")
    # (|0_B> + lam|1_B>)|0_D> - (|1_B> - lam|0_B>)|1_D>, basis order B D
    expected = ket("BD", [1, -(-lam), lam, -1])
    assert qmath.equal_up_to_phase(rest, expected)


def test_x_measurements_on_b_and_c_are_correlated():
    spec = SecretSpec.from_lambda(1.3 - 0.2j)
    psi = analytic_collapse("Psi+", spec)
    _, p_plus, rest = qmath.measure(psi, "B", "X", outcome=0)
    probs = qmath.probabilities(rest, "C", "X")
    assert p_plus * probs[1] <= 1e-12
    assert probs[0] == pytest.approx(1.0, abs=1e-12)


def test_forced_impossible_outcome_raises():
    with pytest.raises(qmath.ImpossibleOutcomeError):
        qmath.measure(StateVector.basis("q", "0"), "q", "Z", outcome=1)


def test_measure_needs_outcome_or_rng():
    with pytest.raises(ValueError):
        qmath.measure(ket("q", [1, 1]), "q", "Z")
    # a certain outcome needs neither
    assert qmath.measure(StateVector.basis("q", "1"), "q", "Z")[0] == 1


def test_sampled_measure_is_seeded():
    s = ket("ab", [1, 1, 1, 1j])
    a = [qmath.measure(s, "a", "X", rng=np.random.default_rng(5))[0] for _ in range(3)]
    b = [qmath.measure(s, "a", "X", rng=np.random.default_rng(5))[0] for _ in range(3)]
    assert a == b


@given(states(), st.integers(0, 3), st.sampled_from(["Z", "X"]))
def test_measurement_completeness(state, idx, basis):
    label = state.labels[idx % state.n_qubits]
    assert qmath.probabilities(state, label, basis).sum() == pytest.approx(1.0, abs=1e-12)


@given(states(n_min=2))
def test_bell_completeness(state):
    probs = qmath.bell_probabilities(state, state.labels[0], state.labels[1])
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50)
@given(states(n_min=2), st.sampled_from(["Z", "X"]))
def test_collapse_is_repeatable(state, basis):
    label = state.labels[0]
    probs = qmath.probabilities(state, label, basis)
    k = int(np.argmax(probs))
    _, p, rest = qmath.measure(state, label, basis, outcome=k)
    # re-insert the measured qubit in its post-measurement ket and measure again
    kets = qmath.BASES[basis][:, k]
    again = qmath.tensor(StateVector([label], kets), rest)
    assert qmath.probabilities(again, label, basis)[k] == pytest.approx(1.0, abs=1e-12)


# --- Bell measurement ------------------------------------------------------


def test_bell_eigenstate():
    psi = StateVector("ab", qmath.BELL_VECTORS["Psi+"])
    name, p, rest = qmath.measure_bell(psi, "a", "b", outcome="Psi+")
    assert name == "Psi+" and p == pytest.approx(1.0) and rest.labels == ()


def test_bell_same_label_rejected():
    psi = StateVector("ab", qmath.BELL_VECTORS["Psi+"])
    with pytest.raises(qmath.LabelError):
        qmath.measure_bell(psi, "a", "a", outcome="Psi+")


# --- partial trace ---------------------------------------------------------


def test_partial_trace_of_pure_pair():
    psi = StateVector("ab", qmath.BELL_VECTORS["Psi+"])
    rho = qmath.partial_trace(psi, "ab").matrix
    np.testing.assert_allclose(rho, np.outer(psi.amps, psi.amps.conj()), atol=1e-15)


@pytest.mark.parametrize("bell", ["Psi+", "Psi-", "Phi+", "Phi-"])
def test_partial_trace_b_is_maximally_mixed(bell):
    spec = SecretSpec.from_lambda(0.8 - 0.6j)
    rho = qmath.partial_trace(analytic_collapse(bell, spec), ["B"]).matrix
    np.testing.assert_allclose(rho, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_d_for_lambda_i():
    spec = SecretSpec.from_lambda(1j)
    rho = qmath.partial_trace(analytic_collapse("Psi+", spec), ["D"]).matrix
    np.testing.assert_allclose(rho, [[0.5, -0.5j], [0.5j, 0.5]], atol=1e-12)


def test_partial_trace_errors():
    psi = StateVector("ab", qmath.BELL_VECTORS["Psi+"])
    with pytest.raises(qmath.LabelError):
        qmath.partial_trace(psi, [])
    with pytest.raises(qmath.LabelError):
        qmath.partial_trace(psi, ["z"])


@given(states(n_min=2))
def test_partial_trace_invariants(state):
    rho = qmath.partial_trace(state, [state.labels[-1], state.labels[0]])
    m = rho.matrix
    assert rho.labels == (state.labels[0], state.labels[-1])
    assert np.max(np.abs(m - m.conj().T)) <= 1e-12
    assert abs(np.trace(m) - 1) <= 1e-12
    assert np.min(np.linalg.eigvalsh(m)) >= -1e-12


@given(states())
def test_full_partial_trace_is_projector(state):
    rho = qmath.partial_trace(state, state.labels).matrix
    np.testing.assert_allclose(rho, qmath.projector(state).matrix, atol=1e-12)


# --- fidelity --------------------------------------------------------------


def test_fidelity_basics():
    zero, one = StateVector.basis("q", "0"), StateVector.basis("q", "1")
    assert qmath.fidelity_pure(zero, zero) == 1.0
    assert qmath.fidelity_pure(zero, one) == 0.0


def test_fidelity_mismatched_registers():
    with pytest.raises(qmath.LabelError):
        qmath.fidelity_pure(StateVector.basis("q", "0"), StateVector.basis("r", "0"))


def test_fidelity_reorders():
    a = ket("ab", [1, 2, 3, 4])
    assert qmath.fidelity_pure(a, a.reorder("ba")) == pytest.approx(1.0)


@given(states(), states(), st.floats(0, 2 * np.pi))
def test_fidelity_symmetric_and_phase_invariant(a, b, theta):
    if a.labels != b.labels:
        b = StateVector(a.labels, np.resize(b.amps, a.amps.size), normalize=True)
    f = qmath.fidelity_pure(a, b)
    assert 0 <= f <= 1 + 1e-12
    assert f == pytest.approx(qmath.fidelity_pure(b, a), abs=1e-12)
    rotated = StateVector(a.labels, np.exp(1j * theta) * a.amps)
    assert qmath.fidelity_pure(rotated, a) == pytest.approx(1.0, abs=1e-12)


# --- entropy ---------------------------------------------------------------


def test_entropy_of_bell_pair():
    psi = StateVector("ab", qmath.BELL_VECTORS["Psi+"])
    assert qmath.entanglement_entropy(psi, ["a"]) == pytest.approx(1.0, abs=1e-12)


def test_entropy_of_product():
    s = qmath.tensor(StateVector.basis("a", "0"), ket("b", [1, 1]))
    assert qmath.entanglement_entropy(s, ["a"]) == pytest.approx(0.0, abs=1e-12)


def test_entropy_of_phi0_across_b():
    # phi0 = (|0_B>|00 - 11>_CD + |1_B>|10 - 01>_CD)/2: two orthogonal
    # Schmidt vectors with weights 1/2 each
    assert qmath.entanglement_entropy(phi0(), ["B"]) == pytest.approx(1.0, abs=1e-12)


def test_entropy_rejects_bad_cut():
    psi = StateVector("ab", qmath.BELL_VECTORS["Psi+"])
    with pytest.raises(qmath.LabelError):
        qmath.entanglement_entropy(psi, ["a", "b"])


@given(states(n_min=2))
def test_entropy_symmetric_under_complement(state):
    cut = state.labels[: state.n_qubits // 2 or 1]
    rest = [lab for lab in state.labels if lab not in cut]
    assert qmath.entanglement_entropy(state, cut) == pytest.approx(
        qmath.von_neumann_entropy(qmath.partial_trace(state, rest)), abs=1e-10
    )


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.01, 1))
def test_closed_form_eigvalsh_matches_lapack(a, b, c, d):
    m = np.array([[a, b + 1j * c], [b - 1j * c, d]])
    np.testing.assert_allclose(qmath.hermitian_eigvalsh(m), np.linalg.eigvalsh(m), atol=1e-12)


def test_state_validation():
    with pytest.raises(ValueError):
        StateVector("ab", [1, 0, 0])
    with pytest.raises(ValueError):
        StateVector("a", [1, 1])
    with pytest.raises(ValueError):
        StateVector("a", [np.nan, 1], normalize=True)
    with pytest.raises(qmath.LabelError):
        StateVector("aa", [1, 0, 0, 0])


def test_canonical_phase():
    s = StateVector("a", np.array([1j, 1]) / SQ2)
    c = s.canonical()
    assert c[0] == pytest.approx(1 / SQ2)
