import itertools

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from qagi_lab.errors import DimensionError, PreconditionError
from qagi_lab.foundations import (
    DELTA_CLONE,
    TSIRELSON,
    ChshSetting,
    CopyObservationChannel,
    RaySystem,
    chsh_lhv_max,
    chsh_quantum,
    classical_identity_check,
    clone_fidelity_optimize,
    indistinguishability_check,
    ks_assignment_search,
    load_ray_system,
    noninjectivity_witness,
    nocloning_check,
    separability_gap,
    single_basis_system,
)
from qagi_lab.foundations.chsh import chsh_value
from qagi_lab.foundations.cloning import MeasurePrepare, UnitaryAncilla
from qagi_lab.foundations.identity import separability_gap_split
from qagi_lab.qmath import (
    DEFAULT_TOL,
    maximally_mixed,
    partial_trace,
    pure_state,
    tensor,
    trace_distance,
    validate_density,
)
from qagi_lab.registers import Alphabet, Povm, measurement_channel
from qagi_lab.standard import KET0, KET1, KET_MINUS, KET_PLUS, Z, bell_state, singlet

from conftest import random_density, random_unit, random_unitary

seeds = st.integers(min_value=0, max_value=2**32 - 1)
OPTIMAL = (0.0, np.pi / 2, np.pi / 4, -np.pi / 4)


# CHSH -------------------------------------------------------------------------

def test_singlet_reaches_tsirelson():
    s = chsh_quantum(ChshSetting(singlet(), OPTIMAL))
    assert abs(abs(s) - 2 * np.sqrt(2)) <= 1e-9


def test_analytic_singlet_correlators():
    # E(a, b) = -cos(a - b) for the singlet
    from qagi_lab.foundations import correlator
    for a, b in itertools.product(OPTIMAL, OPTIMAL):
        assert correlator(singlet(), a, b) == pytest.approx(-np.cos(a - b), abs=1e-12)


def test_product_state_within_lhv():
    for angles in [OPTIMAL, (0.1, 2.0, -1.0, 0.5)]:
        assert abs(chsh_quantum(ChshSetting(pure_state(np.kron(KET0, KET0), (2, 2)), angles))) <= 2 + 1e-8


def test_mixed_state_has_zero_chsh():
    assert chsh_quantum(ChshSetting(maximally_mixed([2, 2]), OPTIMAL)) == pytest.approx(0, abs=1e-15)


def test_lhv_enumeration():
    res = chsh_lhv_max(OPTIMAL)
    assert res.value == 2 and res.n_strategies == 16 and len(res.values) == 16
    assert chsh_value(1, 1, 1, 1) == 2
    assert sorted(set(res.values)) == [-2.0, 2.0]


@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_lhv_value_is_angle_independent(angles):
    assert chsh_lhv_max(angles).value == 2


@given(seeds, st.lists(st.floats(-np.pi, np.pi), min_size=4, max_size=4))
def test_tsirelson_bound_on_random_states(seed, angles):
    rho = random_density(np.random.default_rng(seed), 4, dims=(2, 2))
    assert abs(chsh_quantum(ChshSetting(rho, angles))) <= TSIRELSON + DEFAULT_TOL.num


@given(seeds, st.lists(st.floats(-np.pi, np.pi), min_size=4, max_size=4))
def test_separable_states_obey_lhv(seed, angles):
    r = np.random.default_rng(seed)
    rho = tensor(random_density(r, 2), random_density(r, 2))
    assert abs(chsh_quantum(ChshSetting(rho, angles))) <= 2 + DEFAULT_TOL.num


def test_chsh_needs_two_qubits():
    with pytest.raises(DimensionError):
        ChshSetting(maximally_mixed([4]), OPTIMAL)
    with pytest.raises(PreconditionError):
        ChshSetting(singlet(), (0.0, 1.0, np.nan, 0.0))


# Kochen-Specker -------------------------------------------------------------------

def brute_force_assignments(system: RaySystem):
    """Every {0,1} vector satisfying the constraints, by enumerating 2^n candidates."""
    n = system.n_rays
    if n == 0:
        return [()]
    codes = np.arange(2 ** n, dtype=np.uint32)
    bits = ((codes[:, None] >> np.arange(n, dtype=np.uint32)) & 1).astype(np.uint8)
    ok = np.ones(len(codes), dtype=bool)
    for b in system.bases:
        ok &= bits[:, list(b)].sum(axis=1) == 1
    for i, j in system.orthogonal_pairs():
        ok &= ~((bits[:, i] == 1) & (bits[:, j] == 1))
    return sorted((tuple(int(x) for x in row) for row in bits[ok]), reverse=True)


def test_shipped_system_is_valid():
    ks = load_ray_system()
    assert (ks.dimension, ks.n_rays, len(ks.bases)) == (4, 18, 9)
    counts = np.bincount([i for b in ks.bases for i in b], minlength=18)
    assert np.all(counts == 2)


def test_shipped_system_unsat_with_certificate():
    res = ks_assignment_search(load_ray_system())
    assert res.verdict == "UNSAT" and res.assignments == []
    cert = res.certificate
    assert cert["search_space"] == 2 ** 18 and cert["exhaustive"]
    assert cert["n_rays"] == 18 and cert["n_bases"] == 9 and cert["nodes"] > 0


def test_shipped_system_unsat_by_brute_force():
    assert brute_force_assignments(load_ray_system()) == []


@pytest.mark.parametrize("d", [3, 4, 5])
def test_single_basis_has_d_assignments(d):
    res = ks_assignment_search(single_basis_system(d))
    assert res.satisfiable and len(res.assignments) == d
    assert sorted(map(sum, res.assignments)) == [1] * d


def test_empty_system_is_vacuously_sat():
    res = ks_assignment_search(RaySystem(3, np.zeros((0, 3)), ()))
    assert res.satisfiable and res.assignments == [()]


def test_ray_system_validation():
    with pytest.raises(PreconditionError):
        RaySystem(3, np.eye(3) * 2, ((0, 1, 2),))
    with pytest.raises(PreconditionError):
        RaySystem(3, np.array([[1, 0, 0], [1, 1, 0] / np.sqrt(2), [0, 0, 1]]), ((0, 1, 2),))
    with pytest.raises(DimensionError):
        RaySystem(3, np.eye(3), ((0, 1, 5),))


@given(st.lists(st.integers(0, 8), unique=True, max_size=8), st.integers(0, 8))
def test_adding_basis_shrinks_assignment_set(subset, extra):
    full = load_ray_system()
    small = full.with_bases([full.bases[i] for i in subset])
    big = full.with_bases([full.bases[i] for i in sorted(set(subset) | {extra})])
    a_small = set(ks_assignment_search(small).assignments)
    a_big = set(ks_assignment_search(big).assignments)
    assert a_big <= a_small


@given(st.lists(st.integers(0, 8), unique=True, min_size=1, max_size=6))
def test_search_matches_brute_force_on_subsystems(subset):
    full = load_ray_system()
    sub = full.with_bases([full.bases[i] for i in subset])
    assert ks_assignment_search(sub).assignments == brute_force_assignments(sub)


# no-cloning ------------------------------------------------------------------------

def test_nocloning_examples():
    assert nocloning_check(KET0, KET1).feasible
    v = nocloning_check(KET0, KET_PLUS)
    assert not v.feasible
    assert v.overlap == pytest.approx(2 ** -0.5, abs=1e-15)
    assert v.overlap_squared == pytest.approx(0.5, abs=1e-15)
    assert "witness" in v.to_json()
    assert nocloning_check(KET_PLUS, KET_PLUS).feasible


@given(seeds, st.integers(2, 4))
def test_nocloning_infeasible_exactly_for_partial_overlap(seed, d):
    r = np.random.default_rng(seed)
    psi, phi = random_unit(r, d), random_unit(r, d)
    s = abs(np.vdot(psi, phi))
    assert nocloning_check(psi, phi).feasible == (s <= 1e-8 or s >= 1 - 1e-8)
    assert nocloning_check(psi, np.exp(0.7j) * psi).feasible


def sdp_clone_optimum(states):
    """Exact maximin clone fidelity over all CPTP maps C^d -> C^d (x) C^d via the Choi matrix."""
    d = len(states[0])
    J = cp.Variable((d * d * d, d * d * d), hermitian=True)
    t = cp.Variable()
    cons = [J >> 0, cp.partial_trace(J, [d, d * d], axis=1) == np.eye(d)]
    for psi in states:
        twin = np.kron(psi, psi)
        w = np.kron(np.outer(psi.conj(), psi), np.outer(twin, twin.conj()))
        cons.append(cp.real(cp.trace(J @ w)) >= t)
    cp.Problem(cp.Maximize(t), cons).solve(solver=cp.CLARABEL)
    return float(t.value)


def test_clone_optimum_zero_plus_matches_sdp():
    states = [KET0, KET_PLUS]
    sdp = sdp_clone_optimum(states)
    s = 2 ** -0.5
    analytic = 0.5 * (1 + s ** 3 + np.sqrt(1 - s ** 2) * np.sqrt(1 - s ** 4))
    assert sdp == pytest.approx(analytic, abs=1e-6)
    res = clone_fidelity_optimize(states, seed=0)
    assert res.worst_fidelity < 1 - DELTA_CLONE and res.bound_respected
    assert res.worst_fidelity <= sdp + 1e-6
    assert res.worst_fidelity >= sdp - 1e-4


def test_clone_orthogonal_pair_is_perfect():
    res = clone_fidelity_optimize([KET0, KET1], seed=0)
    assert res.worst_fidelity >= 1 - 1e-9 and not res.has_overlapping_pair


def test_clone_single_state_is_perfect():
    res = clone_fidelity_optimize([KET_MINUS], seed=0)
    assert res.worst_fidelity >= 1 - 1e-9


def test_clone_kraus_is_channel_and_reproduces_fidelity():
    states = [KET0, KET_PLUS]
    res = clone_fidelity_optimize(states, seed=1, restarts=1)
    s = sum(k.conj().T @ k for k in res.kraus)
    assert np.allclose(s, np.eye(2), atol=1e-8)
    for psi, f in zip(states, res.fidelities):
        rho = np.outer(psi, psi.conj())
        out = sum(k @ rho @ k.conj().T for k in res.kraus)
        twin = np.kron(psi, psi)
        assert np.real(twin.conj() @ out @ twin) == pytest.approx(f, abs=1e-9)


@pytest.mark.parametrize("fam", [MeasurePrepare(2), UnitaryAncilla(2)])
def test_families_stay_below_sdp_bound(fam):
    r = np.random.default_rng(5)
    states = np.array([KET0, KET_PLUS])
    for _ in range(50):
        assert fam.fidelities(r.normal(size=fam.n_params), states).min() <= 0.9829629131445342 + 1e-9


def test_clone_seed_reproducible():
    a = clone_fidelity_optimize([KET0, KET_PLUS], seed=3, restarts=1, iters=50)
    b = clone_fidelity_optimize([KET0, KET_PLUS], seed=3, restarts=1, iters=50)
    assert a.worst_fidelity == b.worst_fidelity and a.family == b.family


# indistinguishability ------------------------------------------------------------------

def test_indistinguishability_examples():
    plus = (np.kron(KET0, KET1) + np.kron(KET1, KET0)) / np.sqrt(2)
    minus = (np.kron(KET0, KET1) - np.kron(KET1, KET0)) / np.sqrt(2)
    r1 = indistinguishability_check(plus, Z)
    assert r1.symmetry == "symmetric" and r1.max_spread < 1e-9
    assert r1.expectations == pytest.approx((0, 0), abs=1e-12)
    r2 = indistinguishability_check(minus, Z)
    assert r2.symmetry == "antisymmetric" and r2.max_spread < 1e-9
    r3 = indistinguishability_check(np.kron(KET0, KET1), Z)
    assert r3.symmetry == "neither"
    assert r3.expectations == pytest.approx((1, -1)) and r3.max_spread == pytest.approx(2)


@given(seeds, st.integers(2, 3), st.integers(2, 3))
def test_symmetrized_states_have_equal_local_expectations(seed, d, n):
    r = np.random.default_rng(seed)
    psi = random_unit(r, d ** n)
    t = psi.reshape((d,) * n)
    sym = sum(np.transpose(t, p) for p in itertools.permutations(range(n))).reshape(-1)
    if np.linalg.norm(sym) < 1e-6:
        return
    sym /= np.linalg.norm(sym)
    g = r.normal(size=(d, d)) + 1j * r.normal(size=(d, d))
    rep = indistinguishability_check(sym, g + g.conj().T)
    assert rep.symmetry == "symmetric" and rep.max_spread < 1e-9


def test_ghz_three_sites():
    ghz = np.zeros(8)
    ghz[[0, 7]] = 2 ** -0.5
    rep = indistinguishability_check(ghz, Z)
    assert rep.n_sites == 3 and rep.symmetry == "symmetric"


def test_indistinguishability_dimension_checks():
    with pytest.raises(DimensionError):
        indistinguishability_check(np.ones(6) / np.sqrt(6), Z)
    with pytest.raises(DimensionError):
        indistinguishability_check(KET0, Z)


# identity ----------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 4, 7, 16])
@pytest.mark.parametrize("f", ["parity", "constant", "identity"])
def test_classical_round_trip(n, f):
    alph = Alphabet.of_size(n)
    fn = {"parity": lambda s: str(int(s) % 2), "constant": lambda s: "c", "identity": lambda s: s}[f]
    outs = Alphabet(sorted({fn(s) for s in alph}))
    rep = classical_identity_check(CopyObservationChannel(alph, outs, fn))
    assert rep.verified and rep.checked == n
    assert all(rep.left_inverse[(s, fn(s))] == s for s in alph)


def test_copy_channel_rejects_unknown_readout():
    lc = CopyObservationChannel(Alphabet.of_size(2), Alphabet(["x"]), {"0": "x", "1": "y"})
    with pytest.raises(PreconditionError):
        classical_identity_check(lc)


def test_z_measurement_witness_is_plus_and_mixed():
    w = noninjectivity_witness(Povm.computational(2))
    assert w.verdict == "Witness"
    assert w.rho1.allclose(pure_state(KET_PLUS)) and w.rho2.allclose(maximally_mixed([2]))
    o1 = measurement_channel(Povm.computational(2), w.rho1)
    o2 = measurement_channel(Povm.computational(2), w.rho2)
    assert np.max(np.abs(o1.matrix - o2.matrix)) <= 1e-9


def test_x_measurement_witness_is_zero_and_mixed():
    w = noninjectivity_witness(Povm.from_basis([KET_PLUS, KET_MINUS]))
    assert w.rho1.allclose(pure_state(KET0)) and w.rho2.allclose(maximally_mixed([2]))


def test_trivial_measurement_reports_injective():
    w = noninjectivity_witness(Povm(Alphabet(["0"]), {"0": np.eye(2)}))
    assert w.verdict == "Injective" and w.pairs_checked > 0
    assert "no witness in the searched family" in w.to_json()["note"]


@given(seeds, st.integers(2, 4))
def test_projective_measurements_have_witnesses(seed, d):
    u = random_unitary(np.random.default_rng(seed), d)
    p = Povm.from_basis(list(u.T))
    w = noninjectivity_witness(p, seed=seed)
    assert w.verdict == "Witness"
    assert trace_distance(w.rho1, w.rho2) > 1e-6
    assert np.max(np.abs(measurement_channel(p, w.rho1).matrix
                         - measurement_channel(p, w.rho2).matrix)) <= 1e-9


# separability gap ------------------------------------------------------------------------

def test_gap_examples():
    assert separability_gap(tensor(pure_state(KET0), pure_state(KET_PLUS))) <= 1e-15
    assert abs(separability_gap(bell_state("phi+")) - 0.75) <= 1e-12
    cc = validate_density(np.diag([0.5, 0, 0, 0.5]), (2, 2))
    # diag(1/2,0,0,1/2) - I/4 has eigenvalues (1/4, -1/4, -1/4, 1/4)
    assert separability_gap(cc) == pytest.approx(0.5, abs=1e-12)


@given(seeds, st.integers(2, 3), st.integers(2, 3))
def test_gap_zero_iff_product(seed, da, db):
    r = np.random.default_rng(seed)
    a, b = random_density(r, da), random_density(r, db)
    assert separability_gap(tensor(a, b)) <= DEFAULT_TOL.num
    joint = random_density(r, da * db, dims=(da, db))
    product = tensor(partial_trace(joint, [0]), partial_trace(joint, [1]))
    is_product = np.max(np.abs(joint.matrix - product.matrix)) <= DEFAULT_TOL.num
    assert (separability_gap(joint) <= DEFAULT_TOL.num) == is_product


def test_gap_split_and_arity():
    rho = tensor(bell_state("phi+"), pure_state(KET0))
    assert separability_gap_split(rho, 2) <= 1e-12
    assert separability_gap_split(rho, 1) == pytest.approx(0.75, abs=1e-12)
    with pytest.raises(DimensionError):
        separability_gap(rho)
