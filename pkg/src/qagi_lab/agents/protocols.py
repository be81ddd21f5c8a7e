"""The four agent-environment interaction protocols.

=================  ==========================================================
``cagi_classical``  classical agent, classical environment (CTC loop)
``cagi_quantum``    classical agent, quantum environment (CTQ control, QTC readout)
``qagi_quantum``    quantum agent, quantum environment (QTQ / instruments)
``qagi_classical``  quantum agent, classical environment (QTC out, CTQ in)
=================  ==========================================================

Every runner takes one 64-bit seed. Step ``t`` draws from the Philox stream
``(t, lane)`` so records are reproducible and independent of earlier steps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import DimensionError, PreconditionError
from ..qmath import DensityOperator, density_to_json, partial_trace, tensor
from ..registers import (
    ClassicalDistribution,
    CtqChannel,
    Povm,
    QtqChannel,
    apply_ctq,
    apply_qtq,
    qtc_sample,
)
from ..rng import normalize_seed, sample_index, stream
from .aixi import CagiAgent, MixtureState, PolicyConfig
from .environment import EnvironmentModel
from .qagi import QagiAgent, joint_state, qagi_step

LANE_ENV = 0
LANE_AGENT = 1


@dataclass(frozen=True, eq=False)
class StepRecord:
    t: int
    action: str
    observation: str | None
    reward: float
    prob: float
    weights: Mapping[str, float] | None = None
    separability_gap: float | None = None
    state: DensityOperator | None = None

    def to_json(self) -> dict:
        out = {
            "t": self.t,
            "action": self.action,
            "observation": self.observation,
            "reward": float(self.reward),
            "prob": float(self.prob),
        }
        if self.weights is not None:
            out["weights"] = {k: float(v) for k, v in self.weights.items()}
        if self.separability_gap is not None:
            out["separability_gap"] = float(self.separability_gap)
        if self.state is not None:
            out["state"] = density_to_json(self.state)
        return out


@dataclass(eq=False)
class InteractionTrace:
    protocol: str
    seed: int
    records: list[StepRecord] = field(default_factory=list)
    initial_weights: Mapping[str, float] | None = None
    final_state: DensityOperator | None = None

    def __len__(self):
        return len(self.records)

    @property
    def actions(self) -> list[str]:
        return [r.action for r in self.records]

    @property
    def observations(self) -> list[str | None]:
        return [r.observation for r in self.records]

    @property
    def percepts(self) -> list[str]:
        return [r.observation for r in self.records if r.observation is not None]

    def to_records(self) -> list[dict]:
        return [r.to_json() for r in self.records]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.to_records())


def _rng(seed, t, lane):
    return stream(seed, t, lane)


# --------------------------------------------------------------------------
# classical agent
# --------------------------------------------------------------------------

def run_cagi_classical(mix: MixtureState, true_env: EnvironmentModel, cfg: PolicyConfig,
                       steps: int, seed: int) -> InteractionTrace:
    """Plan, act, perceive and update for ``steps`` rounds against ``true_env``."""
    seed = normalize_seed(seed)
    first = mix.environments[0]
    if true_env.actions != first.actions or true_env.percepts != first.percepts:
        raise PreconditionError("true environment alphabets differ from the mixture's")
    agent = CagiAgent(mix, cfg)
    trace = InteractionTrace("cagi_classical", seed, initial_weights=mix.as_dict())
    env_state = true_env.initial_state
    for t in range(steps):
        action, _ = agent.act()
        law = true_env.law(env_state, action)
        j = sample_index(law, _rng(seed, t, LANE_ENV))
        obs = true_env.percepts[j]
        env_state = true_env.next_state(env_state, action, j)
        agent.observe(action, obs)
        trace.records.append(StepRecord(t, action, obs, true_env.reward(obs), float(law[j]),
                                        weights=agent.mixture.as_dict()))
    return trace


@dataclass(frozen=True, eq=False)
class QuantumEnvironment:
    """Quantum environment driven by a classical controller.

    Each action is encoded by ``control`` into a control register, which is
    coupled to the environment by ``coupling`` (a channel on control (x) env;
    ``None`` means no coupling) and then discarded. The percept is a QTC
    readout of the environment, which leaves the environment in its
    post-measurement state.
    """

    state: DensityOperator
    control: CtqChannel
    readout: Povm
    reward_table: Mapping[str, float]
    coupling: QtqChannel | None = None

    def __post_init__(self):
        if self.readout.dim != self.state.dim:
            raise DimensionError("readout does not act on the environment")
        if self.coupling is not None:
            d = int(np.prod(self.control.dims)) * self.state.dim
            if self.coupling.dim != d:
                raise DimensionError(f"coupling must act on control (x) env, dimension {d}")
        missing = [k for k in self.readout.outcome_alphabet if k not in self.reward_table]
        if missing:
            raise PreconditionError(f"no reward for readout outcome(s) {missing}")

    def evolve(self, env_state: DensityOperator, action: str) -> DensityOperator:
        """Environment state after the action's control coupling, before readout."""
        if self.coupling is None:
            return env_state
        ctrl = apply_ctq(self.control, ClassicalDistribution.point(self.control.in_alphabet, action))
        joint = apply_qtq(self.coupling, tensor(ctrl, env_state))
        return partial_trace(joint, range(len(ctrl.dims), joint.n_subsystems))

    def step(self, env_state: DensityOperator, action: str, rng) -> tuple[str, float, DensityOperator]:
        """Apply the action and read out; returns ``(outcome, Pr(outcome), post-state)``."""
        pre = self.evolve(env_state, action)
        probs = self.readout.probabilities(pre)
        obs, post = qtc_sample(self.readout, pre, rng)
        return obs, float(probs[self.readout.outcome_alphabet.index(obs)] / probs.sum()), post


def run_cagi_quantum(mix: MixtureState, true_env: QuantumEnvironment, cfg: PolicyConfig,
                     steps: int, seed: int) -> InteractionTrace:
    """Classical AIXI agent against a quantum environment.

    The agent's candidate environments are classical percept laws; the true
    environment is quantum and its state collapses under every readout. The
    agent itself only ever holds classical data.
    """
    seed = normalize_seed(seed)
    first = mix.environments[0]
    if list(first.percepts) != list(true_env.readout.outcome_alphabet):
        raise PreconditionError("mixture percepts must equal the readout outcomes")
    if list(first.actions) != list(true_env.control.in_alphabet):
        raise PreconditionError("mixture actions must equal the control alphabet")
    agent = CagiAgent(mix, cfg)
    trace = InteractionTrace("cagi_quantum", seed, initial_weights=mix.as_dict())
    env_state = true_env.state
    for t in range(steps):
        action, _ = agent.act()
        obs, prob, env_state = true_env.step(env_state, action, _rng(seed, t, LANE_ENV))
        agent.observe(action, obs)
        trace.records.append(StepRecord(t, action, obs, float(true_env.reward_table[obs]),
                                        prob, weights=agent.mixture.as_dict()))
    return trace


# --------------------------------------------------------------------------
# quantum agent
# --------------------------------------------------------------------------

Policy = Sequence[str] | Callable[[int, list], str]


def _choose(policy: Policy, t: int, records: list) -> str:
    if callable(policy):
        return policy(t, records)
    if t >= len(policy):
        raise PreconditionError(f"action sequence has {len(policy)} entries, step {t} requested")
    return policy[t]


def run_qagi_quantum(agent: QagiAgent, env_init: DensityOperator, policy: Policy,
                     steps: int, seed: int, keep_states: bool = False) -> InteractionTrace:
    """Quantum agent acting coherently or by instruments on a quantum environment.

    ``policy`` is a list of action labels or a callable ``(t, records) -> label``.
    Each record carries the separability gap of the joint state; percepts only
    appear on instrument steps.
    """
    from ..foundations.identity import separability_gap_split

    seed = normalize_seed(seed)
    joint = joint_state(agent, env_init)
    n_a = agent.internal_state.n_subsystems
    trace = InteractionTrace("qagi_quantum", seed)
    for t in range(steps):
        action = _choose(policy, t, trace.records)
        res = qagi_step(agent, joint, action, _rng(seed, t, LANE_ENV))
        joint = res.joint
        agent = agent.with_state(res.internal)
        trace.records.append(StepRecord(
            t, action, res.observation, res.reward, res.prob,
            separability_gap=separability_gap_split(joint, n_a),
            state=joint if keep_states else None))
    trace.final_state = joint
    return trace


def run_qagi_classical(agent: QagiAgent | DensityOperator, env: EnvironmentModel,
                       memory_readout: Povm, percept_encoder: CtqChannel, steps: int, seed: int,
                       action_map: Mapping[str, str] | None = None,
                       processing: QtqChannel | None = None) -> InteractionTrace:
    """Quantum agent with a classical environment.

    Each step: a QTC readout of the agent memory yields the classical action
    (outcome ``i`` maps to action ``i`` unless ``action_map`` says otherwise),
    the environment replies with a classical percept, and the percept is
    written back into memory through the CTQ ``percept_encoder``. An optional
    ``processing`` channel then evolves the memory (QTQ).
    """
    seed = normalize_seed(seed)
    memory = agent.internal_state if isinstance(agent, QagiAgent) else agent
    outcomes = list(memory_readout.outcome_alphabet)
    if action_map is None:
        if len(outcomes) != len(env.actions):
            raise PreconditionError(
                f"{len(outcomes)} readout outcomes cannot index {len(env.actions)} actions")
        action_map = dict(zip(outcomes, env.actions))
    unknown = [a for a in action_map.values() if a not in env.actions]
    if unknown or set(action_map) != set(outcomes):
        raise PreconditionError("action_map must send every readout outcome to a known action")
    if list(percept_encoder.in_alphabet) != list(env.percepts):
        raise PreconditionError("percept encoder alphabet must equal the environment's percepts")
    if percept_encoder.dims != memory.dims or memory_readout.dim != memory.dim:
        raise DimensionError("readout and encoder must act on the agent memory")

    trace = InteractionTrace("qagi_classical", seed)
    env_state = env.initial_state
    for t in range(steps):
        probs = memory_readout.probabilities(memory)
        k, _ = qtc_sample(memory_readout, memory, _rng(seed, t, LANE_AGENT))
        action = action_map[k]
        p_action = float(probs[memory_readout.outcome_alphabet.index(k)] / probs.sum())
        law = env.law(env_state, action)
        j = sample_index(law, _rng(seed, t, LANE_ENV))
        obs = env.percepts[j]
        env_state = env.next_state(env_state, action, j)
        memory = percept_encoder.encodings[obs]
        if processing is not None:
            memory = apply_qtq(processing, memory)
        trace.records.append(StepRecord(t, action, obs, env.reward(obs), p_action * float(law[j])))
    trace.final_state = memory
    return trace
