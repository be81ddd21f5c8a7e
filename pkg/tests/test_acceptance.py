"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline.
"""

import itertools
import time
from pathlib import Path

import numpy as np
import pytest

from qagi_lab.agents import (
    History,
    InstrumentAction,
    PolicyConfig,
    QagiAgent,
    UnitaryAction,
    action_values,
    aixi_policy,
    posterior_update,
    prior_weights,
    qagi_step,
    reencode_update,
    run_qagi_quantum,
)
from qagi_lab.foundations import (
    ChshSetting,
    CopyObservationChannel,
    chsh_lhv_max,
    chsh_quantum,
    classical_identity_check,
    clone_fidelity_optimize,
    indistinguishability_check,
    ks_assignment_search,
    load_ray_system,
    noninjectivity_witness,
    nocloning_check,
    single_basis_system,
)
from qagi_lab.harness import run_scenario
from qagi_lab.qmath import maximally_mixed, partial_trace, pure_state, tensor, validate_density
from qagi_lab.registers import Alphabet, Instrument, Povm, QtqChannel, measurement_channel
from qagi_lab.rng import stream
from qagi_lab.standard import CNOT, I2, KET0, KET1, KET_PLUS, Z

from conftest import random_density, random_kraus, random_unitary
from oracles import brute_force_action_values, lowest_argmax, random_environment_class, sample_history

SCEN = Path(__file__).resolve().parents[1] / "scenarios"
OPTIMAL = (0.0, np.pi / 2, np.pi / 4, -np.pi / 4)
BIT = {"0": 0.0, "1": 1.0}


@pytest.fixture
def verdict(capsys):
    def emit(n, text, checks):
        failed = [name for name, ok in checks if not ok]
        line = f"{'PASS' if not failed else 'FAIL'} criterion {n}: {text}"
        if failed:
            line += f" (failed: {', '.join(failed)})"
        with capsys.disabled():
            print("\n" + line)
        assert not failed, line
    return emit


def test_criterion_1_chsh(verdict):
    t0 = time.perf_counter()
    s = chsh_quantum(ChshSetting(pure_state((np.kron(KET0, KET1) - np.kron(KET1, KET0)) / np.sqrt(2), (2, 2)),
                                 OPTIMAL))
    lhv = chsh_lhv_max(OPTIMAL)
    elapsed = time.perf_counter() - t0
    verdict(1, f"|S| = {abs(s):.17g}, LHV max = {lhv.value} over {lhv.n_strategies} strategies, "
               f"{elapsed:.3f} s", [
        ("|S| = 2 sqrt 2 within 1e-9", abs(abs(s) - 2 * np.sqrt(2)) <= 1e-9),
        ("LHV max exactly 2", lhv.value == 2),
        ("16 strategies", lhv.n_strategies == 16),
        ("runtime < 1 s", elapsed < 1.0),
    ])


def test_criterion_2_kochen_specker(verdict):
    t0 = time.perf_counter()
    res = ks_assignment_search(load_ray_system())
    single = ks_assignment_search(single_basis_system(3))
    elapsed = time.perf_counter() - t0
    cert = res.certificate
    verdict(2, f"shipped system {res.verdict} after {cert['nodes']} nodes of {cert['search_space']}, "
               f"single basis has {len(single.assignments)} assignments, {elapsed:.3f} s", [
        ("UNSAT", res.verdict == "UNSAT"),
        ("certificate covers 2^18", cert["search_space"] == 2 ** 18 and cert["exhaustive"]),
        ("single basis gives 3", len(single.assignments) == 3),
        ("runtime < 10 s", elapsed < 10.0),
    ])


def test_criterion_3_nocloning(verdict):
    v = nocloning_check(KET0, KET_PLUS)
    opt = clone_fidelity_optimize([KET0, KET_PLUS], seed=0)
    orth_check = nocloning_check(KET0, KET1)
    orth = clone_fidelity_optimize([KET0, KET1], seed=0)
    verdict(3, f"overlap {v.overlap:.17g} vs square {v.overlap_squared:.17g}, "
               f"worst fidelity {opt.worst_fidelity:.17g}, orthogonal {orth.worst_fidelity:.17g}", [
        ("infeasible", not v.feasible),
        ("overlap 2^-1/2", abs(v.overlap - 2 ** -0.5) <= 1e-12),
        ("square 1/2", abs(v.overlap_squared - 0.5) <= 1e-12),
        ("worst fidelity < 0.999", opt.worst_fidelity < 0.999),
        ("orthogonal feasible", orth_check.feasible),
        ("orthogonal fidelity 1", orth.worst_fidelity >= 1 - 1e-9),
    ])


def test_criterion_4_indistinguishability(verdict):
    a, b = np.kron(KET0, KET1), np.kron(KET1, KET0)
    sym = indistinguishability_check((a + b) / np.sqrt(2), Z)
    anti = indistinguishability_check((a - b) / np.sqrt(2), Z)
    neither = indistinguishability_check(a, Z)
    diff = neither.expectations[0] - neither.expectations[1]
    verdict(4, f"{sym.symmetry}/{anti.symmetry}/{neither.symmetry}, spreads "
               f"{sym.max_spread:.3g}/{anti.max_spread:.3g}, <Z1>-<Z2> = {diff:.17g}", [
        ("symmetric", sym.symmetry == "symmetric" and sym.max_spread < 1e-9),
        ("antisymmetric", anti.symmetry == "antisymmetric" and anti.max_spread < 1e-9),
        ("neither", neither.symmetry == "neither"),
        ("difference 2", abs(diff - 2) <= 1e-12),
    ])


def test_criterion_5_identity_channels(verdict):
    readouts = {"identity": lambda s: s, "parity": lambda s: str(int(s) % 2), "constant": lambda s: "c"}
    round_trips = 0
    all_ok = True
    for n, (name, f) in itertools.product(range(1, 17), readouts.items()):
        alph = Alphabet.of_size(n)
        outs = Alphabet(sorted({f(s) for s in alph}))
        rep = classical_identity_check(CopyObservationChannel(alph, outs, f))
        all_ok &= rep.verified and rep.checked == n
        round_trips += rep.checked
    povm = Povm.computational(2)
    w = noninjectivity_witness(povm)
    diff = np.max(np.abs(measurement_channel(povm, w.rho1).matrix - measurement_channel(povm, w.rho2).matrix))
    verdict(5, f"{round_trips} classical round trips over |alphabet| 1..16, Z witness "
               f"({w.labels[0]}, {w.labels[1]}) with output difference {diff:.3g}", [
        ("classical round trips", all_ok),
        ("witness found", w.verdict == "Witness"),
        ("pair is (|+><+|, I/2)", w.rho1.allclose(pure_state(KET_PLUS)) and w.rho2.allclose(maximally_mixed([2]))),
        ("outputs equal within 1e-9", diff <= 1e-9),
    ])


def test_criterion_6_micro_aixi(verdict):
    worst, argmax_ok, n_inst = 0.0, True, 0
    for n_env, n_act, n_per, m in itertools.product(range(1, 4), range(1, 4), range(1, 4), range(1, 4)):
        for rep in range(3):
            r = np.random.default_rng([n_env, n_act, n_per, m, rep])
            envs = random_environment_class(r, n_env, n_act, n_per)
            prior = prior_weights(envs)
            h = sample_history(r, envs, prior.weights, rep)
            mix, hh = prior, History()
            for step in h:
                mix = posterior_update(mix, hh, step.action, step.observation)
                hh = hh.append(step.action, step.observation, step.reward)
            cfg = PolicyConfig(horizon=m)
            q = action_values(mix, h, cfg)
            oracle = brute_force_action_values(envs, prior.weights, h, m)
            worst = max(worst, float(np.max(np.abs(q - oracle))))
            argmax_ok &= aixi_policy(mix, h, cfg)[0] == envs[0].actions[lowest_argmax(oracle)]
            n_inst += 1
    good = 0
    for seed in range(100):
        rec = run_scenario(SCEN / "bandit_cagi.json", seed=seed).records
        good += all(x["action"] == "A" for x in rec[-10:])
    verdict(6, f"{n_inst} instances, max |V - oracle| = {worst:.3g}, argmax agreement {argmax_ok}; "
               f"bandit better arm in final 10 steps for {good}/100 seeds", [
        ("values within 1e-9", worst <= 1e-9),
        ("argmax agrees", argmax_ok),
        ("bandit >= 95/100", good >= 95),
    ])


def _env_marginal(joint):
    return partial_trace(joint, [1])


def random_qagi_case(r):
    d_a, d_e = int(r.integers(1, 4)), int(r.integers(2, 4))
    n_out, per = int(r.integers(1, 4)), int(r.integers(1, 3))
    ops = random_kraus(r, d_e, n_out * per)
    instr = Instrument(Alphabet.of_size(n_out),
                       {str(k): tuple(ops[k * per:(k + 1) * per]) for k in range(n_out)})
    rank = int(r.integers(1, d_a * d_e + 1))
    joint = random_density(r, d_a * d_e, rank=rank, dims=(d_a, d_e))
    agent = QagiAgent(random_density(r, d_a), {"m": InstrumentAction(instr)},
                      {str(k): float(k) for k in range(n_out)})
    return agent, joint, instr


def test_criterion_7_qagi_loop(verdict):
    r = np.random.default_rng(7)
    worst_sum, post_ok, n_cases = 0.0, True, 0
    for case in range(1000):
        agent, joint, instr = random_qagi_case(r)
        p = instr.probabilities(_env_marginal(joint))
        worst_sum = max(worst_sum, abs(float(p.sum()) - 1.0))
        res = qagi_step(agent, joint, "m", case)
        validate_density(res.joint.matrix, res.joint.dims)
        validate_density(res.internal.matrix, res.internal.dims)
        post_ok &= res.prob > 0
        n_cases += 1
    n_draws = 100_000
    worst_freq = 0.0
    for inst in range(2):
        agent, joint, instr = random_qagi_case(np.random.default_rng([77, inst]))
        exact = instr.probabilities(_env_marginal(joint))
        counts = dict.fromkeys(instr.outcome_alphabet, 0)
        for i in range(n_draws):
            counts[qagi_step(agent, joint, "m", stream(inst, i)).observation] += 1
        freq = np.array([counts[k] for k in instr.outcome_alphabet]) / n_draws
        worst_freq = max(worst_freq, float(np.max(np.abs(freq - exact))))
    verdict(7, f"{n_cases} random cases, max |sum Pr - 1| = {worst_sum:.3g}, post-states valid; "
               f"Monte Carlo at N = {n_draws} deviates by at most {worst_freq:.4f}", [
        (">= 1000 cases", n_cases >= 1000),
        ("probabilities sum to 1", worst_sum <= 1e-9),
        ("post-states valid", post_ok),
        ("frequencies within 0.01", worst_freq <= 0.01),
    ])


def test_criterion_8_entanglement(verdict):
    cnot_agent = QagiAgent(pure_state(KET_PLUS), {"cnot": UnitaryAction(QtqChannel.unitary(CNOT), "AE")}, {})
    gap = run_qagi_quantum(cnot_agent, pure_state(KET0), ["cnot"], 1, seed=0).records[0].separability_gap
    scen_gap = run_scenario(SCEN / "qagi_cnot.json").records[0]["separability_gap"]
    worst_product = 0.0
    for ep in range(50):
        r = np.random.default_rng([8, ep])
        z = Instrument.from_povm(Povm.from_basis(list(random_unitary(r, 2).T)))
        ag = QagiAgent(pure_state(random_unitary(r, 2)[:, 0]),
                       {"u": UnitaryAction(QtqChannel.unitary(random_unitary(r, 2)), "E"),
                        "v": UnitaryAction(QtqChannel.unitary(np.kron(random_unitary(r, 2), I2)), "AE"),
                        "m": InstrumentAction(z)}, BIT, reencode_update(2, Alphabet(["0", "1"])))
        actions = [str(a) for a in r.choice(["u", "v", "m"], size=6)]
        tr = run_qagi_quantum(ag, pure_state(random_unitary(r, 2)[:, 0]), actions, 6, seed=ep)
        worst_product = max(worst_product, max(x.separability_gap for x in tr.records))
    verdict(8, f"CNOT on |+0> gap {gap:.17g} (scenario {scen_gap:.17g}); "
               f"max gap over 50 product episodes {worst_product:.3g}", [
        ("gap 0.75 within 1e-9", abs(gap - 0.75) <= 1e-9 and abs(scen_gap - 0.75) <= 1e-9),
        ("product episodes < 1e-9", worst_product < 1e-9),
    ])


def test_criterion_9_reproducibility(verdict):
    checks = []
    for path in sorted(SCEN.glob("*.json")):
        a = run_scenario(path, seed=11)
        b = run_scenario(path, seed=11)
        checks.append((path.stem, a.records_bytes() == b.records_bytes()))
    agent, joint, _ = random_qagi_case(np.random.default_rng(9))
    draws = [[qagi_step(agent, joint, "m", stream(5, i)).observation for i in range(200)] for _ in range(2)]
    checks.append(("qagi_step draws", draws[0] == draws[1]))
    c1 = clone_fidelity_optimize([KET0, KET_PLUS], seed=4, restarts=1, iters=80)
    c2 = clone_fidelity_optimize([KET0, KET_PLUS], seed=4, restarts=1, iters=80)
    checks.append(("clone optimizer", c1.worst_fidelity == c2.worst_fidelity))
    w1 = noninjectivity_witness(Povm.from_basis(list(random_unitary(np.random.default_rng(3), 3).T)), seed=3)
    w2 = noninjectivity_witness(Povm.from_basis(list(random_unitary(np.random.default_rng(3), 3).T)), seed=3)
    checks.append(("witness search", w1.rho1.allclose(w2.rho1, atol=0) and w1.rho2.allclose(w2.rho2, atol=0)))
    verdict(9, f"{len(checks)} stochastic runs repeated with their seeds, "
               f"{sum(ok for _, ok in checks)} byte-identical", checks)
