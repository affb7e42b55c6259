import math

import numpy as np
import pytest

from magicmps.engines import (
    BondDmrgConfig,
    PauliImpsConfig,
    QuarticTransfer,
    bond_dmrg_sre,
    brute_force_sre,
    build_bond_mpo,
    dense_d_sre,
    finite_mps_sre,
    pauli_imps_sre,
)
from magicmps.errors import ConvergenceError, PreconditionError
from magicmps.mps import UniformMps, normalize, ring_statevector, finite_statevector
from magicmps.states import (
    NamedState,
    closed_form_sre,
    dicke_mps,
    ghz_mps,
    max_magic_angles,
    single_qubit_m2,
    w_mps,
)

LOG2 = math.log(2.0)


def qubit(theta, phi):
    return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])


def random_state(seed, chi):
    rng = np.random.default_rng(seed)
    r = rng.random((2, chi, chi))
    ph = rng.random((2, chi, chi))
    return normalize(UniformMps(r * np.exp(2j * np.pi * ph)))


# ---------------------------------------------------------------------------
# brute force


def test_brute_force_stabilizer_states_have_zero_m2():
    zeros = np.zeros(8)
    zeros[0] = 1.0
    assert brute_force_sre(zeros).value_m2 == pytest.approx(0.0, abs=1e-12)


def test_brute_force_t_state():
    psi = np.array([1.0, np.exp(1j * np.pi / 4)]) / math.sqrt(2)
    res = brute_force_sre(psi)
    assert res.value_m2 == pytest.approx(math.log(4 / 3), abs=1e-12)
    assert res.density_m2 == res.value_m2
    assert res.renyi_index == 2


def test_brute_force_product_additivity():
    th1, ph1, th2, ph2 = 0.7, 1.1, 2.0, 4.9
    psi = np.kron(qubit(th1, ph1), qubit(th2, ph2))
    expect = single_qubit_m2(th1, ph1) + single_qubit_m2(th2, ph2)
    assert brute_force_sre(psi).value_m2 == pytest.approx(expect, abs=1e-10)


def test_brute_force_clifford_invariance():
    rng = np.random.default_rng(5)
    psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    psi /= np.linalg.norm(psi)
    base = brute_force_sre(psi).value_m2
    hadamard = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    phase = np.diag([1.0, 1j])
    u = np.kron(np.kron(hadamard, phase), hadamard @ phase)
    assert brute_force_sre(u @ psi).value_m2 == pytest.approx(base, abs=1e-9)


def test_brute_force_input_validation():
    with pytest.raises(PreconditionError):
        brute_force_sre(np.ones(3) / math.sqrt(3))
    with pytest.raises(PreconditionError):
        brute_force_sre(np.array([1.0, 1.0]))  # not normalised
    big = np.zeros(2**11)
    big[0] = 1.0
    with pytest.raises(PreconditionError):
        brute_force_sre(big)


# ---------------------------------------------------------------------------
# finite chains, periodic


def test_pbc_ghz_matches_closed_form_and_brute():
    state = NamedState("ghz", n=4, theta=np.pi / 2, phi=0.0)
    mps = ghz_mps(np.pi / 2, 0.0, 4)
    res = finite_mps_sre(mps, n=4)
    assert res.value_m2 == pytest.approx(closed_form_sre(state), abs=1e-10)
    brute = brute_force_sre(ring_statevector(mps, 4)).value_m2
    assert res.value_m2 == pytest.approx(brute, abs=1e-10)
    assert res.engine == "finite-pbc"


def test_pbc_ghz_value_independent_of_n():
    theta, phi = 1.1, 2.4
    expect = single_qubit_m2(theta, phi)
    for n in (2, 6, 31):  # n=31 exercises the spectrum route past the string sum
        res = finite_mps_sre(ghz_mps(theta, phi, n), n=n)
        assert res.value_m2 == pytest.approx(expect, abs=1e-9), n


def test_pbc_random_chi3_matches_brute():
    state = random_state(11, chi=3)
    res = finite_mps_sre(state, n=6)
    brute = brute_force_sre(ring_statevector(state, 6)).value_m2
    assert res.value_m2 == pytest.approx(brute, abs=1e-9)


def test_pbc_random_chi2_matches_brute():
    state = random_state(12, chi=2)
    res = finite_mps_sre(state, n=8)
    brute = brute_force_sre(ring_statevector(state, 8)).value_m2
    assert res.value_m2 == pytest.approx(brute, abs=1e-9)


def test_pbc_norm_correction_logged_for_unnormalised_input():
    state = random_state(13, chi=2)
    scaled = UniformMps(1.7 * state.tensor)
    res = finite_mps_sre(scaled, n=5)
    ref = finite_mps_sre(state, n=5)
    # SRE is scale invariant; the correction is absorbed internally
    assert res.value_m2 == pytest.approx(ref.value_m2, abs=1e-9)
    assert "norm_correction" in res.diagnostics


def test_boundary_dispatch_errors():
    uniform = random_state(1, chi=2)
    finite = w_mps(4)
    with pytest.raises(PreconditionError):
        finite_mps_sre(uniform, n=4, boundary="obc")
    with pytest.raises(PreconditionError):
        finite_mps_sre(uniform)  # pbc needs n
    with pytest.raises(PreconditionError):
        finite_mps_sre(finite, boundary="pbc")
    with pytest.raises(PreconditionError):
        finite_mps_sre(finite, n=5)  # state has n=4


# ---------------------------------------------------------------------------
# finite chains, open


def test_obc_w_state():
    n = 6
    res = finite_mps_sre(w_mps(n))
    expect = 3 * math.log(n) - math.log(7 * n - 6)
    assert res.value_m2 == pytest.approx(expect, abs=1e-10)
    assert res.engine == "finite-obc"
    brute = brute_force_sre(finite_statevector(w_mps(n))).value_m2
    assert res.value_m2 == pytest.approx(brute, abs=1e-10)


def test_obc_dicke_two_excitations():
    state = NamedState("dicke", n=6, k=2)
    res = finite_mps_sre(dicke_mps(6, 2))
    assert res.value_m2 == pytest.approx(closed_form_sre(state), abs=1e-9)


def test_obc_dicke_three_excitations_wide_bond():
    state = NamedState("dicke", n=7, k=3)
    res = finite_mps_sre(dicke_mps(7, 3))
    assert res.value_m2 == pytest.approx(closed_form_sre(state), abs=1e-9)


def test_obc_all_down_chain_is_stabilizer():
    res = finite_mps_sre(dicke_mps(5, 0))
    assert res.value_m2 == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# dense quartic engine


def test_dense_product_state_at_magic_maximum():
    theta, phi = max_magic_angles()
    state = UniformMps(
        np.array([[[math.cos(theta / 2)]], [[np.exp(1j * phi) * math.sin(theta / 2)]]])
    )
    res = dense_d_sre(state)
    assert res.density_m2 == pytest.approx(math.log(1.5), abs=1e-12)
    assert res.diagnostics["upper_bound_ok"]


def test_dense_ghz_density_vanishes():
    res = dense_d_sre(normalize(ghz_mps(np.pi / 2, 0.0, 2)))
    assert res.density_m2 == pytest.approx(0.0, abs=1e-10)


def test_dense_rejects_unnormalised_and_wide():
    state = random_state(3, chi=2)
    with pytest.raises(PreconditionError):
        dense_d_sre(UniformMps(2.0 * state.tensor))
    with pytest.raises(PreconditionError):
        dense_d_sre(UniformMps(np.zeros((2, 4, 4)) + np.eye(4)))


def test_quartic_transfer_matvec_matches_materialised():
    state = random_state(21, chi=2)
    qt = QuarticTransfer.from_state(state)
    d = qt.materialize()
    rng = np.random.default_rng(0)
    v = rng.standard_normal(qt.size) + 1j * rng.standard_normal(qt.size)
    assert np.max(np.abs(qt.matvec(v) - d @ v)) < 1e-12


def test_dense_density_matches_long_ring():
    # a gapped random state: the per-site value of a long ring approaches
    # the thermodynamic density
    state = random_state(30, chi=2)
    inf = dense_d_sre(state).density_m2
    long_ring = finite_mps_sre(state, n=64).density_m2
    assert inf == pytest.approx(long_ring, abs=1e-3)


# ---------------------------------------------------------------------------
# compressed engine


def test_pauli_imps_exact_mode_matches_dense():
    for seed, chi in ((4, 2), (5, 3)):
        state = random_state(seed, chi)
        a = dense_d_sre(state).density_m2
        b = pauli_imps_sre(state, PauliImpsConfig(eps1=0.0, eps2=0.0)).density_m2
        assert b == pytest.approx(a, abs=1e-9), (seed, chi)


def test_pauli_imps_default_cutoffs_on_generic_state():
    state = random_state(6, chi=3)
    res = pauli_imps_sre(state)
    assert res.density_m2 == pytest.approx(dense_d_sre(state).density_m2, abs=1e-7)
    assert not res.diagnostics["unstable"]
    assert res.diagnostics["kept_double"] <= 81


def test_pauli_imps_flags_heavy_truncation():
    state = random_state(6, chi=3)
    res = pauli_imps_sre(state, PauliImpsConfig(eps1=0.0, eps2=0.2))
    assert res.diagnostics["unstable"]
    assert res.diagnostics["discarded_weight_2"] > 1e-6


def test_pauli_imps_rejects_degenerate_state():
    with pytest.raises(PreconditionError):
        pauli_imps_sre(normalize(ghz_mps(np.pi / 2, 0.0, 2)))


def test_pauli_imps_config_validation():
    with pytest.raises(PreconditionError):
        PauliImpsConfig(eps1=-1e-3)
    with pytest.raises(PreconditionError):
        PauliImpsConfig(eps2=1.5)


# ---------------------------------------------------------------------------
# MPO factorisation


def test_mpo_scalar_chain_reproduces_quartic_operator():
    state = UniformMps(np.array([[[1.0]], [[0.0]]]))  # |0...0>
    mpo = build_bond_mpo(state)
    dense = mpo.contract_dense()
    assert dense.shape == (1, 1)
    assert dense[0, 0] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("chi", [1, 2])
def test_mpo_contraction_matches_dense_quartic(chi):
    state = random_state(40 + chi, chi)
    mpo = build_bond_mpo(state)
    dense = QuarticTransfer.from_state(state).materialize()
    assert np.max(np.abs(mpo.contract_dense() - dense)) < 1e-12


def test_mpo_bond_dimensions_capped_at_eight():
    mpo = build_bond_mpo(random_state(1, 2))
    assert mpo.bond_dims == (1, 4, 4, 8, 4, 8, 4, 4, 1)
    assert max(mpo.bond_dims) == 8
    assert mpo.prefactor == 0.5


# ---------------------------------------------------------------------------
# bond-DMRG


def test_bond_dmrg_scalar_states():
    zero = UniformMps(np.array([[[1.0]], [[0.0]]]))
    res = bond_dmrg_sre(zero)
    assert res.density_m2 == pytest.approx(0.0, abs=1e-10)
    assert res.diagnostics["converged"]

    t_state = normalize(
        UniformMps(np.array([[[1.0]], [[np.exp(1j * np.pi / 4)]]]) / math.sqrt(2))
    )
    res = bond_dmrg_sre(t_state)
    assert res.density_m2 == pytest.approx(math.log(4 / 3), abs=1e-10)


def test_bond_dmrg_ghz_density_vanishes():
    res = bond_dmrg_sre(normalize(ghz_mps(np.pi / 2, 0.0, 2)))
    assert res.density_m2 == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("seed,chi", [(7, 2), (8, 2), (9, 3)])
def test_cross_engine_agreement(seed, chi):
    state = random_state(seed, chi)
    dense = dense_d_sre(state).density_m2
    compressed = pauli_imps_sre(state, PauliImpsConfig(eps1=0.0, eps2=0.0)).density_m2
    dmrg = bond_dmrg_sre(state).density_m2
    assert compressed == pytest.approx(dense, abs=1e-8)
    assert dmrg == pytest.approx(dense, abs=1e-8)
    assert dense < LOG2 + 1e-9


def test_bond_dmrg_warm_start_reconverges_quickly():
    state = random_state(14, chi=2)
    first = bond_dmrg_sre(state)
    again = bond_dmrg_sre(state, initial=first.eigenvector)
    assert again.density_m2 == pytest.approx(first.density_m2, abs=1e-9)
    assert again.diagnostics["sweeps"] <= 3


def test_bond_dmrg_kappa_exhaustion_raises():
    state = random_state(15, chi=2)
    with pytest.raises(ConvergenceError):
        bond_dmrg_sre(state, BondDmrgConfig(kappa=1, sweeps=6))


def test_bond_dmrg_config_validation():
    with pytest.raises(PreconditionError):
        BondDmrgConfig(kappa=0)
    with pytest.raises(PreconditionError):
        BondDmrgConfig(sweeps=0)


def test_bond_dmrg_exact_regime_beats_nonnormal_truncation_trap():
    # a right-vector-only SVD cut of weight w on this non-normal operator
    # moves λ0 by ~√w times its condition number; this particular state
    # stalls 5e-4 away from the true eigenvalue under the default cut and
    # must (a) self-report the inconsistency and (b) be exact at full rank
    from magicmps.nonlocal_sre import random_imps

    state = random_imps(3, 49)
    reference = dense_d_sre(state).density_m2
    loose = bond_dmrg_sre(state, BondDmrgConfig(kappa=81))
    gap = abs(loose.density_m2 - reference)
    if gap > 1e-8:
        assert loose.diagnostics["lambda_spread"] > 0.1 * gap * abs(
            loose.diagnostics["lambda0"]
        )
    exact = bond_dmrg_sre(state, BondDmrgConfig(kappa=81, trunc_tol=0.0))
    assert exact.density_m2 == pytest.approx(reference, abs=1e-9)
    assert exact.diagnostics["lambda_spread"] < 1e-10
