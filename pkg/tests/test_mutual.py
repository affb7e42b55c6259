import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magicmps.engines import brute_force_sre
from magicmps.errors import PreconditionError
from magicmps.mps import UniformMps, normalize, ring_statevector
from magicmps.mutual import (
    asymptotic_constants,
    mixed_state_sre,
    mutual_sre,
    predicted_msre,
    single_site_rdm,
    transfer_modes,
    two_site_rdm,
)
from magicmps.states import product_mps

LOG2 = math.log(2.0)


def random_state(seed, chi):
    rng = np.random.default_rng(seed)
    r = rng.random((2, chi, chi))
    ph = rng.random((2, chi, chi))
    return normalize(UniformMps(r * np.exp(2j * np.pi * ph)))


def qubit(theta, phi):
    return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])


# ---------------------------------------------------------------------------
# mixed-state SRE


def test_maximally_mixed_states_have_zero_net_magic():
    for n in (1, 2, 3):
        res = mixed_state_sre(np.eye(2**n) / 2**n)
        assert res.m2 == pytest.approx(n * LOG2, abs=1e-12)
        assert res.s2 == pytest.approx(n * LOG2, abs=1e-12)
        assert res.m2_tilde == pytest.approx(0.0, abs=1e-12)


def test_pure_t_state_projector():
    t = np.array([1.0, np.exp(1j * np.pi / 4)]) / math.sqrt(2)
    res = mixed_state_sre(np.outer(t, t.conj()))
    assert res.m2 == pytest.approx(math.log(4 / 3), abs=1e-12)
    assert res.s2 == pytest.approx(0.0, abs=1e-12)
    assert res.m2_tilde == pytest.approx(res.m2, abs=1e-12)


def test_pure_projector_matches_statevector_engine():
    rng = np.random.default_rng(3)
    psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    psi /= np.linalg.norm(psi)
    res = mixed_state_sre(np.outer(psi, psi.conj()))
    assert res.m2 == pytest.approx(brute_force_sre(psi).value_m2, abs=1e-10)


def test_mixed_sre_is_additive_over_tensor_products():
    rng = np.random.default_rng(4)
    rhos = []
    for _ in range(2):
        b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        rho = b @ b.conj().T
        rhos.append(rho / np.trace(rho))
    joint = mixed_state_sre(np.kron(rhos[0], rhos[1]))
    parts = [mixed_state_sre(r) for r in rhos]
    assert joint.m2 == pytest.approx(parts[0].m2 + parts[1].m2, abs=1e-10)
    assert joint.s2 == pytest.approx(parts[0].s2 + parts[1].s2, abs=1e-10)
    assert joint.m2_tilde == pytest.approx(
        parts[0].m2_tilde + parts[1].m2_tilde, abs=1e-10
    )


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_pure_two_qubit_bounds(seed):
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    psi /= np.linalg.norm(psi)
    res = mixed_state_sre(np.outer(psi, psi.conj()))
    assert res.s2 == pytest.approx(0.0, abs=1e-10)
    assert -1e-10 <= res.m2 <= math.log(5.0 / 2.0) + 1e-10


def test_mixed_sre_input_validation():
    with pytest.raises(PreconditionError):
        mixed_state_sre(np.ones((2, 3)))
    with pytest.raises(PreconditionError):
        mixed_state_sre(np.eye(3) / 3)
    with pytest.raises(PreconditionError):
        mixed_state_sre(np.eye(32) / 32)  # five qubits
    bad = np.eye(2) / 2
    bad = bad + np.array([[0, 0.1], [-0.1, 0]])  # anti-Hermitian part
    with pytest.raises(PreconditionError):
        mixed_state_sre(bad)
    with pytest.raises(PreconditionError):
        mixed_state_sre(np.eye(2))  # trace 2


# ---------------------------------------------------------------------------
# reduced density matrices


def test_single_site_rdm_of_product_state_is_projector():
    theta, phi = 1.2, 0.7
    state = product_mps(theta, phi)
    rho = single_site_rdm(state)
    q = qubit(theta, phi)
    assert np.max(np.abs(rho - np.outer(q, q.conj()))) < 1e-12


@pytest.mark.parametrize("separation", [0, 3])
def test_two_site_rdm_partial_traces(separation):
    state = random_state(8, chi=3)
    rho_a = single_site_rdm(state)
    rho = two_site_rdm(state, separation)
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert min(np.linalg.eigvalsh(rho)) > -1e-12
    four = rho.reshape(2, 2, 2, 2)
    tr_b = np.einsum("asbs->ab", four)
    tr_a = np.einsum("sasb->ab", four)
    assert np.max(np.abs(tr_b - rho_a)) < 1e-12
    assert np.max(np.abs(tr_a - rho_a)) < 1e-12


def test_two_site_rdm_factorises_at_large_separation():
    state = random_state(9, chi=2)
    rho_a = single_site_rdm(state)
    rho = two_site_rdm(state, 200)
    assert np.max(np.abs(rho - np.kron(rho_a, rho_a))) < 1e-12


def test_two_site_rdm_against_ring_statevector():
    # weakly correlated state: the wrap-around error of a 20-site ring is
    # below the comparison tolerance only if the transfer gap is large
    rng = np.random.default_rng(17)
    tensor = np.zeros((2, 2, 2), dtype=complex)
    tensor[0] = np.array([[1.0, 0.05], [0.04, 0.1]])
    tensor[1] = np.array([[0.6, 0.02], [0.05, -0.08]])
    tensor += 0.01 * (rng.standard_normal((2, 2, 2)))
    state = normalize(UniformMps(tensor))
    lams = np.sort(
        np.abs(np.linalg.eigvals(np.kron(state.tensor[0], state.tensor[0].conj())
                                 + np.kron(state.tensor[1], state.tensor[1].conj())))
    )[::-1]
    assert lams[1] < 0.32, "test state drifted; retune"

    psi = ring_statevector(state, 20)
    m = psi.reshape(4, -1)
    rho_ring = m @ m.conj().T
    rho_inf = two_site_rdm(state, 0)
    assert np.max(np.abs(rho_ring - rho_inf)) < 1e-8


def test_two_site_rdm_rejects_negative_separation():
    with pytest.raises(PreconditionError):
        two_site_rdm(random_state(1, 2), -1)


# ---------------------------------------------------------------------------
# mode decomposition


@pytest.mark.parametrize("seed,chi", [(5, 2), (6, 3)])
def test_mode_sum_reconstructs_pair_rdm(seed, chi):
    state = random_state(seed, chi)
    modes = transfer_modes(state)
    for r in (0, 1, 4, 9):
        direct = two_site_rdm(state, r)
        assert np.max(np.abs(modes.pair_rdm(r) - direct)) < 1e-10, r


def test_dominant_mode_is_the_product_part():
    state = random_state(7, chi=2)
    modes = transfer_modes(state)
    rho_a = single_site_rdm(state)
    lead = np.kron(modes.rho_l[0], modes.rho_r[0])
    assert abs(modes.lams[0] - 1.0) < 1e-10
    assert np.max(np.abs(lead - np.kron(rho_a, rho_a))) < 1e-10


# ---------------------------------------------------------------------------
# mutual SRE


def test_product_state_has_zero_mutual_sre():
    state = product_mps(0.9, 2.2)
    for r in (0, 2, 7):
        comp = mutual_sre(state, r)
        assert comp.total == pytest.approx(0.0, abs=1e-12)
        assert comp.magic_part == pytest.approx(0.0, abs=1e-12)
        assert comp.entropy_part == pytest.approx(0.0, abs=1e-12)


def test_mutual_sre_components_recompose():
    state = random_state(10, chi=2)
    comp = mutual_sre(state, 2)
    pair = mixed_state_sre(two_site_rdm(state, 2))
    one = mixed_state_sre(single_site_rdm(state))
    assert comp.total == pytest.approx(
        pair.m2_tilde - 2 * one.m2_tilde, abs=1e-12
    )
    assert comp.total == pytest.approx(comp.magic_part + comp.entropy_part, abs=1e-12)


def test_mutual_sre_decays_to_zero():
    state = random_state(11, chi=2)
    assert abs(mutual_sre(state, 300).total) < 1e-12


@pytest.mark.parametrize("seed,chi", [(12, 2), (13, 3)])
def test_prediction_matches_measured_curve(seed, chi):
    state = random_state(seed, chi)
    fit = asymptotic_constants(state)
    assert fit.max_residual < 1e-8
    # a separation where the leading mode term is ~0.04
    r = max(1, math.ceil(math.log(0.04) / math.log(fit.lambda1_abs)))
    measured = mutual_sre(state, r).total
    assert predicted_msre(fit, r) == pytest.approx(measured, abs=2e-5)
    r_far = 3 * r
    assert predicted_msre(fit, r_far) == pytest.approx(
        mutual_sre(state, r_far).total, abs=1e-9
    )


def test_prediction_orders_converge_with_distance():
    state = random_state(14, chi=2)
    fit = asymptotic_constants(state)
    r = max(2, math.ceil(math.log(0.01) / math.log(fit.lambda1_abs)))
    measured = mutual_sre(state, r).total
    err1 = abs(predicted_msre(fit, r, order=1) - measured)
    err2 = abs(predicted_msre(fit, r, order=2) - measured)
    assert err2 <= err1 + 1e-12
    with pytest.raises(PreconditionError):
        predicted_msre(fit, r, order=3)


def test_trivial_chain_has_no_modes():
    fit = asymptotic_constants(product_mps(1.0, 0.3))
    assert fit.lambda1_abs == 0.0
    assert fit.xi == 0.0
    assert predicted_msre(fit, 5) == 0.0
