"""Quantum agent whose actions are unitaries or instruments on a joint state.

The joint state ``rho_AE`` orders the agent's subsystems first and the
environment's after. An instrument action ``a`` with branches ``E_k`` acts on
the environment part: outcome ``k`` has probability ``Tr E_k(Tr_A rho_AE)``
and the joint state becomes ``(id_A (x) E_k)(rho_AE) / Pr(k)``, whose
environment marginal is ``E_k(Tr_A rho_AE) / Pr(k)``. Agent-environment
correlations survive the measurement. A unitary action conjugates either the
environment part or the whole joint state and produces no percept.

After every step the agent applies its internal update channel
``Phi_(a, o, r)`` to its own subsystems.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from ..errors import ChannelError, DimensionError, PreconditionError
from ..qmath import (
    DEFAULT_TOL,
    DensityOperator,
    Tolerances,
    dagger,
    partial_trace,
    tensor,
    validate_density,
)
from ..registers import Alphabet, Instrument, QtqChannel
from ..rng import sample_index, stream


@dataclass(frozen=True, eq=False)
class UnitaryAction:
    channel: QtqChannel
    target: str = "E"

    def __post_init__(self):
        if self.target not in ("E", "AE"):
            raise PreconditionError(f"unitary target must be 'E' or 'AE', got {self.target!r}")
        if not self.channel.is_unitary:
            raise ChannelError("unitary action needs a single unitary Kraus operator")


@dataclass(frozen=True, eq=False)
class InstrumentAction:
    instrument: Instrument


UpdateRule = Callable[[str, "str | None", float], "QtqChannel | None"]


def identity_update(action, observation, reward):
    return None


def reencode_update(dim_a: int, outcomes: Alphabet) -> UpdateRule:
    """Replace the agent state by ``|index(o)><index(o)|`` after each percept.

    Steps without a percept (unitary actions) leave the agent untouched.
    """
    if dim_a < len(outcomes):
        raise DimensionError(f"agent dimension {dim_a} cannot encode {len(outcomes)} outcomes")
    channels = {}
    for i, o in enumerate(outcomes):
        kraus = []
        for j in range(dim_a):
            k = np.zeros((dim_a, dim_a), dtype=np.complex128)
            k[i, j] = 1.0
            kraus.append(k)
        channels[o] = QtqChannel(tuple(kraus))

    def rule(action, observation, reward):
        if observation is None:
            return None
        return channels[observation]

    rule.kind = "reencode"
    return rule


def table_update(table: Mapping[tuple[str, "str | None"], QtqChannel]) -> UpdateRule:
    """Update looked up by ``(action, observation)``; missing keys mean identity."""
    table = dict(table)

    def rule(action, observation, reward):
        return table.get((action, observation))

    rule.kind = "table"
    return rule


@dataclass(frozen=True, eq=False)
class QagiAgent:
    internal_state: DensityOperator
    action_table: Mapping[str, UnitaryAction | InstrumentAction]
    reward_table: Mapping[str, float] = field(default_factory=dict)
    update_rule: UpdateRule | None = None

    def __post_init__(self):
        for label, act in self.action_table.items():
            if not isinstance(act, (UnitaryAction, InstrumentAction)):
                raise PreconditionError(f"action {label!r} is neither unitary nor instrument")
            if isinstance(act, InstrumentAction):
                missing = [k for k in act.instrument.outcome_alphabet if k not in self.reward_table]
                if missing:
                    raise PreconditionError(f"action {label!r}: no reward for outcome(s) {missing}")
        if self.update_rule is None:
            outcomes = _all_outcomes(self.action_table)
            if outcomes and self.internal_state.dim >= len(outcomes):
                rule = reencode_update(self.internal_state.dim, Alphabet(outcomes))
            else:
                rule = identity_update
            object.__setattr__(self, "update_rule", rule)

    @property
    def dim(self) -> int:
        return self.internal_state.dim

    def with_state(self, rho_a: DensityOperator) -> QagiAgent:
        return replace(self, internal_state=rho_a)


def _all_outcomes(table) -> list[str]:
    out: list[str] = []
    for act in table.values():
        if isinstance(act, InstrumentAction):
            for k in act.instrument.outcome_alphabet:
                if k not in out:
                    out.append(k)
    return out


@dataclass(frozen=True, eq=False)
class QagiStepResult:
    observation: str | None
    reward: float
    prob: float
    joint: DensityOperator
    internal: DensityOperator


def _split(agent: QagiAgent, joint: DensityOperator) -> tuple[int, int, list[int], list[int]]:
    n_a = agent.internal_state.n_subsystems
    if joint.n_subsystems <= n_a or joint.dims[:n_a] != agent.internal_state.dims:
        raise DimensionError(
            f"joint dims {list(joint.dims)} must start with agent dims {list(agent.internal_state.dims)}"
            " and include an environment part")
    a_idx = list(range(n_a))
    e_idx = list(range(n_a, joint.n_subsystems))
    d_a = agent.dim
    return d_a, joint.dim // d_a, a_idx, e_idx


def _conjugate_all(kraus, m):
    return sum(k @ m @ dagger(k) for k in kraus)


def qagi_step(agent: QagiAgent, joint: DensityOperator, action: str, seed,
              tol: Tolerances = DEFAULT_TOL) -> QagiStepResult:
    """One interaction step of the quantum agent on ``joint``.

    ``seed`` is an integer or Generator used to sample the instrument outcome.
    Returns the percept (``None`` for unitary actions), reward, outcome
    probability, updated joint state and the agent's reduced state.
    """
    if action not in agent.action_table:
        raise PreconditionError(f"unknown action {action!r}; known: {list(agent.action_table)}")
    act = agent.action_table[action]
    d_a, d_e, a_idx, e_idx = _split(agent, joint)
    eye_a = np.eye(d_a, dtype=np.complex128)
    eye_e = np.eye(d_e, dtype=np.complex128)

    if isinstance(act, UnitaryAction):
        u = act.channel.kraus[0]
        if act.target == "E":
            if u.shape[0] != d_e:
                raise DimensionError(f"unitary of dim {u.shape[0]} on environment of dim {d_e}")
            u = np.kron(eye_a, u)
        elif u.shape[0] != joint.dim:
            raise DimensionError(f"unitary of dim {u.shape[0]} on joint of dim {joint.dim}")
        m = u @ joint.matrix @ dagger(u)
        observation, reward, prob = None, 0.0, 1.0
    else:
        instr = act.instrument
        if instr.dim != d_e:
            raise DimensionError(f"instrument of dim {instr.dim} on environment of dim {d_e}")
        rho_e = partial_trace(joint, e_idx)
        probs = instr.probabilities(rho_e)
        if abs(probs.sum() - 1.0) > tol.tr:
            raise ChannelError(f"instrument probabilities sum to {probs.sum():.12g}")
        i = sample_index(probs, stream(seed), tol.prob)
        observation = instr.outcome_alphabet[i]
        prob = float(probs[i])
        lifted = [np.kron(eye_a, k) for k in instr.branches[observation]]
        m = _conjugate_all(lifted, joint.matrix) / prob
        reward = float(agent.reward_table[observation])

    update = agent.update_rule(action, observation, reward)
    if update is not None:
        if update.dim != d_a:
            raise DimensionError(f"update channel of dim {update.dim} on agent of dim {d_a}")
        m = _conjugate_all([np.kron(k, eye_e) for k in update.kraus], m)
    new_joint = validate_density(m, joint.dims, tol)
    internal = partial_trace(new_joint, a_idx)
    internal = validate_density(internal.matrix, internal.dims, tol)
    return QagiStepResult(observation, reward, prob, new_joint, internal)


def joint_state(agent: QagiAgent, env: DensityOperator) -> DensityOperator:
    return tensor(agent.internal_state, env)
