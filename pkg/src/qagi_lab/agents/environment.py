"""Finite table-driven chronological environments and interaction histories."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import PreconditionError
from ..registers import Alphabet, ClassicalDistribution
from ..qmath import DEFAULT_TOL


@dataclass(frozen=True)
class Step:
    action: str
    observation: str | None
    reward: float


@dataclass(frozen=True)
class History:
    """Append-only sequence of ``(action, observation, reward)`` steps."""

    steps: tuple[Step, ...] = ()

    def append(self, action: str, observation: str | None, reward: float) -> History:
        return History(self.steps + (Step(str(action), observation, float(reward)),))

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


@dataclass(frozen=True, eq=False)
class EnvironmentModel:
    """A percept law ``nu(e_t | h_<t, a_t)`` driven by a finite state machine.

    The hidden state is a deterministic function of the history (replayed
    from ``initial_state``), so the model is chronological by construction.
    Percepts are observation labels; each observation carries the fixed reward
    ``rewards[o]``.

    ``laws[state][action]`` is the probability vector over ``percepts`` and
    ``successors[state][action][i]`` the next state after percept ``i``.
    """

    id: str
    actions: Alphabet
    percepts: Alphabet
    rewards: Mapping[str, float]
    description_bits: int
    laws: Mapping[str, Mapping[str, np.ndarray]]
    successors: Mapping[str, Mapping[str, tuple[str, ...]]]
    initial_state: str

    def __post_init__(self):
        if int(self.description_bits) < 1:
            raise PreconditionError(f"{self.id}: description_bits must be a positive integer")
        missing = [o for o in self.percepts if o not in self.rewards]
        if missing:
            raise PreconditionError(f"{self.id}: no reward for percept(s) {missing}")
        if self.initial_state not in self.laws:
            raise PreconditionError(f"{self.id}: unknown initial state {self.initial_state!r}")
        for s, row in self.laws.items():
            for a in self.actions:
                if a not in row:
                    raise PreconditionError(f"{self.id}: state {s!r} has no law for action {a!r}")
                p = row[a]
                if p.shape != (len(self.percepts),) or not np.all(np.isfinite(p)) or np.any(p < 0) \
                        or abs(p.sum() - 1.0) > DEFAULT_TOL.tr:
                    raise PreconditionError(
                        f"{self.id}: law for ({s!r}, {a!r}) is not a distribution over percepts")
                for nxt in self.successors[s][a]:
                    if nxt not in self.laws:
                        raise PreconditionError(f"{self.id}: unknown successor state {nxt!r}")

    # per-state access used by the planner
    def law(self, state: str, action: str) -> np.ndarray:
        return self.laws[state][action]

    def next_state(self, state: str, action: str, percept_index: int) -> str:
        return self.successors[state][action][percept_index]

    def reward(self, observation: str) -> float:
        return float(self.rewards[observation])

    def state_after(self, history: History) -> str:
        s = self.initial_state
        for step in history:
            s = self.next_state(s, step.action, self.percepts.index(step.observation))
        return s

    def predict(self, history: History, action: str) -> ClassicalDistribution:
        return ClassicalDistribution(self.percepts, self.law(self.state_after(history), str(action)))

    # construction helpers
    @classmethod
    def stationary(cls, id: str, description_bits: int, actions: Sequence[str],
                   percepts: Sequence[str], rewards: Mapping[str, float],
                   laws: Mapping[str, Sequence[float]]) -> EnvironmentModel:
        """Single-state environment: the percept law depends on the action only."""
        acts, pers = Alphabet(actions), Alphabet(percepts)
        row = {str(a): np.asarray(laws[a], dtype=float) for a in acts}
        succ = {str(a): ("s",) * len(pers) for a in acts}
        return cls(str(id), acts, pers, {str(k): float(v) for k, v in rewards.items()},
                   int(description_bits), {"s": row}, {"s": succ}, "s")

    @classmethod
    def from_json(cls, obj: Mapping) -> EnvironmentModel:
        """Build from an environment-class file entry.

        Either ``"laws": {action: {percept: p}}`` for a single-state
        environment, or ``"transitions": {state: {action: {"probs": {...},
        "next": state | {percept: state}}}}`` with optional ``initial_state``.
        """
        try:
            env_id = str(obj["id"])
            acts, pers = Alphabet(obj["actions"]), Alphabet(obj["percepts"])
            rewards = {str(k): float(v) for k, v in obj["rewards"].items()}
        except KeyError as exc:
            raise PreconditionError(f"environment entry missing field {exc}") from None
        bits = obj.get("K_bits")
        if bits is None:
            bits = canonical_description_bits(obj)

        def vec(probs):
            unknown = [k for k in probs if k not in pers]
            if unknown:
                raise PreconditionError(f"{env_id}: unknown percept(s) {unknown}")
            return np.array([float(probs.get(o, 0.0)) for o in pers])

        if "transitions" in obj:
            table = obj["transitions"]
            laws, succ = {}, {}
            for s, row in table.items():
                laws[s], succ[s] = {}, {}
                for a in acts:
                    if a not in row:
                        raise PreconditionError(f"{env_id}: state {s!r} has no entry for action {a!r}")
                    entry = row[a]
                    laws[s][a] = vec(entry["probs"])
                    nxt = entry.get("next", s)
                    if isinstance(nxt, Mapping):
                        succ[s][a] = tuple(str(nxt.get(o, s)) for o in pers)
                    else:
                        succ[s][a] = (str(nxt),) * len(pers)
            initial = str(obj.get("initial_state", next(iter(table))))
            return cls(env_id, acts, pers, rewards, int(bits), laws, succ, initial)
        if "laws" in obj:
            laws = {a: vec(obj["laws"][a]) for a in acts if a in obj["laws"]}
            if len(laws) != len(acts):
                raise PreconditionError(f"{env_id}: 'laws' must cover every action")
            return cls.stationary(env_id, int(bits), list(acts), list(pers), rewards, laws)
        raise PreconditionError(f"{env_id}: needs 'laws' or 'transitions'")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "K_bits": int(self.description_bits),
            "actions": list(self.actions),
            "percepts": list(self.percepts),
            "rewards": dict(self.rewards),
            "initial_state": self.initial_state,
            "transitions": {
                s: {a: {"probs": {o: float(p) for o, p in zip(self.percepts, self.laws[s][a])},
                        "next": dict(zip(self.percepts, self.successors[s][a]))}
                    for a in self.actions}
                for s in self.laws
            },
        }


def canonical_description_bits(obj: Mapping) -> int:
    """Bits in the canonical JSON form of an environment's tables (id and K_bits excluded)."""
    body = {k: v for k, v in obj.items() if k not in ("id", "K_bits")}
    return 8 * len(json.dumps(body, sort_keys=True, separators=(",", ":")).encode())


def load_environment_class(entries: Sequence[Mapping]) -> list[EnvironmentModel]:
    """Parse a list of environment entries and check they form one class.

    All members must share actions, percepts and rewards, and either all or
    none must state ``K_bits`` explicitly.
    """
    if not entries:
        raise PreconditionError("environment class is empty")
    explicit = {("K_bits" in e) for e in entries}
    if len(explicit) != 1:
        raise PreconditionError("K_bits must be given for every environment or for none")
    envs = [EnvironmentModel.from_json(e) for e in entries]
    ids = [e.id for e in envs]
    if len(set(ids)) != len(ids):
        raise PreconditionError(f"duplicate environment ids in {ids}")
    check_compatible(envs)
    return envs


def check_compatible(envs: Sequence[EnvironmentModel]):
    first = envs[0]
    for e in envs[1:]:
        if e.actions != first.actions or e.percepts != first.percepts:
            raise PreconditionError(f"environment {e.id!r} has different alphabets from {first.id!r}")
        if dict(e.rewards) != dict(first.rewards):
            raise PreconditionError(f"environment {e.id!r} has a different reward table")
