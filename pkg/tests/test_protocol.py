import math

import numpy as np
import pytest

from qsdistill.dynamics import BathParams, published_distilled_forms, thermal_solution, vacuum_solution
from qsdistill.errors import DomainError, ProtocolFailure, ValidationError
from qsdistill.linalg import tensor
from qsdistill.protocol import (
    SOURCE_NOT_BOTH,
    SOURCE_NOT_STRICT,
    VACUUM_CONFIG,
    NotTarget,
    Outcome,
    Policy,
    ProtocolConfig,
    bilateral_cnot,
    bilateral_cnot_unitary,
    measure_ancilla,
    predicted_rank2,
    run_protocol,
    sz_rotation,
    unilateral_not,
)
from qsdistill.states import BellState, DensityMatrix, concurrence, fidelity_with_pure, ket, projector, rank2_state

from conftest import random_density

P1_GRID = np.round(np.arange(1, 100) / 100, 2)


def _joint_vector(src, anc):
    return np.kron(src, anc)


def _cnot_on_vector(v):
    """Apply both CNOTs amplitude by amplitude: target flips when control bit is 1 (|->)."""
    out = np.zeros(16, dtype=complex)
    for i, amp in enumerate(v):
        a_s, b_s, a_a, b_a = (i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1
        out[8 * a_s + 4 * b_s + 2 * (a_a ^ a_s) + (b_a ^ b_s)] += amp
    return out


def test_unilateral_not_examples():
    out = unilateral_not(DensityMatrix(projector(ket("++"))))
    np.testing.assert_array_equal(out.m, projector(ket("-+")))
    p1 = 0.35
    expect = (1 - p1) * projector(ket("-+")) + p1 * BellState.PSI_PLUS.projector.m
    np.testing.assert_allclose(unilateral_not(rank2_state(p1)).m, expect, atol=1e-15)


def test_sz_rotation_examples():
    out = sz_rotation(DensityMatrix(BellState.PHI_PLUS.projector))
    np.testing.assert_allclose(out.m, BellState.PHI_MINUS.projector, atol=1e-15)
    np.testing.assert_array_equal(sz_rotation(DensityMatrix(projector(ket("++")))).m, projector(ket("++")))


def test_local_gates_are_involutions(rng):
    for _ in range(20):
        rho = DensityMatrix(random_density(rng))
        np.testing.assert_allclose(unilateral_not(unilateral_not(rho)).m, rho.m, atol=1e-15)
        np.testing.assert_allclose(sz_rotation(sz_rotation(rho)).m, rho.m, atol=1e-15)


def test_cnot_single_branch():
    v = _joint_vector(ket("-+"), ket("++"))
    out = bilateral_cnot(projector(v))
    np.testing.assert_array_equal(out, projector(_joint_vector(ket("-+"), ket("-+"))))


def test_cnot_bell_pair_invariant():
    v = _joint_vector(BellState.PSI_PLUS.vector, BellState.PHI_PLUS.vector)
    np.testing.assert_allclose(bilateral_cnot(projector(v)), projector(v), atol=1e-15)


def test_cnot_all_plus_unchanged():
    v = _joint_vector(ket("++"), ket("++"))
    np.testing.assert_array_equal(bilateral_cnot(projector(v)), projector(v))


def test_cnot_matches_state_vector_oracle(rng):
    for _ in range(50):
        v = rng.normal(size=16) + 1j * rng.normal(size=16)
        v /= np.linalg.norm(v)
        np.testing.assert_allclose(bilateral_cnot(projector(v)), projector(_cnot_on_vector(v)), atol=1e-14)


def test_cnot_rejects_wrong_dimension():
    with pytest.raises(ValidationError):
        bilateral_cnot(np.eye(4) / 4)


def test_gate_unitarity(rng):
    u = bilateral_cnot_unitary()
    np.testing.assert_array_equal(u @ u.conj().T, np.eye(16))
    for _ in range(20):
        rho = DensityMatrix(random_density(rng))
        for gate in (unilateral_not, sz_rotation):
            out = gate(rho)
            assert np.trace(out.m).real == pytest.approx(1.0, abs=1e-10)
            np.testing.assert_allclose(out.eigenvalues, rho.eigenvalues, atol=1e-10)
        joint = tensor(random_density(rng), random_density(rng))
        out = bilateral_cnot(joint)
        np.testing.assert_allclose(out, out.conj().T, atol=1e-15)
        np.testing.assert_allclose(np.linalg.eigvalsh(out), np.linalg.eigvalsh(joint), atol=1e-10)


def test_measure_collapsed_ancilla(rng):
    rho = random_density(rng)
    br = measure_ancilla(tensor(rho, projector(ket("+-"))))
    assert br[Outcome.PM].prob == pytest.approx(1.0)
    np.testing.assert_allclose(br[Outcome.PM].state.m, rho, atol=1e-15)
    for o in (Outcome.PP, Outcome.MP, Outcome.MM):
        assert br[o].prob == 0.0
        assert br[o].state is None


def test_measure_outcomes_sum_to_one(rng):
    for _ in range(100):
        joint = bilateral_cnot(tensor(random_density(rng), random_density(rng)))
        br = measure_ancilla(joint)
        assert sum(b.prob for b in br.values()) == pytest.approx(1.0, abs=1e-12)


def test_maximally_mixed_pair_is_uniform():
    res = run_protocol(DensityMatrix(np.eye(4) / 4), DensityMatrix(np.eye(4) / 4))
    for o in Outcome:
        assert res.outcome_probs[o] == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("p1", [0.25, 0.5, 0.9])
def test_rank2_strict_gives_psi_plus(p1):
    rho = rank2_state(p1)
    res = run_protocol(rho, rho, SOURCE_NOT_STRICT)
    assert res.accepted_prob == pytest.approx(p1 * p1 / 2, abs=1e-12)
    np.testing.assert_allclose(res.distilled.m, BellState.PSI_PLUS.projector, atol=1e-12)
    np.testing.assert_allclose(res.conditional_sources[Outcome.PM].m, BellState.PSI_PLUS.projector, atol=1e-12)


def test_rank2_both_policy_example():
    rho = rank2_state(0.6)
    res = run_protocol(rho, rho, SOURCE_NOT_BOTH)
    assert res.accepted_prob == pytest.approx(0.52, abs=1e-12)
    assert res.distilled_concurrence == pytest.approx(0.36 / 0.52, abs=1e-12)


@pytest.mark.parametrize("policy", list(Policy))
def test_rank2_grid_matches_closed_form(policy):
    cfg = ProtocolConfig.from_policy(policy)
    for p1 in P1_GRID:
        rho = rank2_state(p1)
        res = run_protocol(rho, rho, cfg)
        prob, conc = predicted_rank2(p1, policy)
        assert abs(res.accepted_prob - prob) <= 1e-10
        assert abs(res.distilled_concurrence - conc) <= 1e-10


def test_predicted_rank2_examples():
    assert predicted_rank2(0.5, Policy.BOTH_PM_MP) == pytest.approx((0.5, 0.5))
    assert predicted_rank2(0.3, Policy.BOTH_PM_MP) == pytest.approx((0.58, 0.09 / 0.58))
    assert predicted_rank2(1 - 1e-12, Policy.STRICT_PM) == pytest.approx((0.5, 1.0))
    with pytest.raises(DomainError):
        predicted_rank2(1.0, Policy.STRICT_PM)


def test_opposite_cnot_convention_breaks_rank2_probability():
    rho = rank2_state(0.5)
    wrong = run_protocol(rho, rho, SOURCE_NOT_STRICT, control_on_minus=False)
    right = run_protocol(rho, rho, SOURCE_NOT_STRICT)
    assert right.accepted_prob == pytest.approx(0.125, abs=1e-12)
    assert abs(wrong.accepted_prob - 0.125) > 0.1


def test_both_policy_gain_exactly_above_half():
    for p1 in P1_GRID:
        if abs(p1 - 0.5) < 1e-10:
            continue
        rho = rank2_state(p1)
        res = run_protocol(rho, rho, SOURCE_NOT_BOTH)
        assert (res.distilled_concurrence > concurrence(rho)) == (p1 > 0.5)


@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.5])
def test_vacuum_configuration_yields_singlet(t):
    rho = vacuum_solution(t)
    res = run_protocol(rho, rho, VACUUM_CONFIG)
    assert res.accepted_prob == pytest.approx(math.exp(-2 * t) / 2, abs=1e-12)
    assert fidelity_with_pure(res.distilled, BellState.PHI_MINUS.vector) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("nbar", [0.001, 0.01, 0.1])
@pytest.mark.parametrize("tau", [0.0, 0.1, 0.3, 1.0])
def test_thermal_vacuum_configuration_matches_derived_closed_form(nbar, tau):
    p = BathParams(1.0, nbar)
    f = published_distilled_forms(tau, p)
    p_sim = 2 * f.p1 * f.p2 + (f.p3 + f.p4) ** 2 / 2
    c_sim = ((f.p3 - f.p4) ** 2 / 2 - 2 * f.p1 * f.p2) / p_sim
    rho = thermal_solution(tau, p)
    res = run_protocol(rho, rho, VACUUM_CONFIG)
    assert res.accepted_prob == pytest.approx(p_sim, abs=1e-12)
    assert res.distilled_concurrence == pytest.approx(max(0.0, c_sim), abs=1e-10)


def test_published_success_probability_diverges_from_simulation():
    p = BathParams(1.0, 0.001)
    for tau, agree in ((0.0, True), (0.3, False)):
        rho = thermal_solution(tau, p)
        sim = run_protocol(rho, rho, VACUUM_CONFIG).accepted_prob
        published = published_distilled_forms(tau, p).P
        assert (abs(sim - published) <= 1e-9) == agree


def test_protocol_failure_on_impossible_outcome():
    rho = DensityMatrix(projector(ket("++")))
    with pytest.raises(ProtocolFailure):
        run_protocol(rho, rho, SOURCE_NOT_STRICT)


def test_config_rejects_empty_accepted_set():
    with pytest.raises(ValidationError):
        ProtocolConfig(NotTarget.SOURCE, frozenset())


def test_result_invariants(rng):
    for _ in range(20):
        src, anc = DensityMatrix(random_density(rng)), DensityMatrix(random_density(rng))
        res = run_protocol(src, anc, SOURCE_NOT_BOTH)
        assert res.accepted_prob == pytest.approx(
            res.outcome_probs[Outcome.PM] + res.outcome_probs[Outcome.MP], abs=1e-15
        )
        expect = sum(res.outcome_probs[o] * res.conditional_sources[o].m for o in (Outcome.PM, Outcome.MP))
        np.testing.assert_allclose(res.distilled.m, expect / res.accepted_prob, atol=1e-12)
