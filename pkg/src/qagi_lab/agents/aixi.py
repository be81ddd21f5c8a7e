"""Micro-AIXI: exact expectimax over a finite Bayesian mixture of environments.

Prior weights are ``2^-K(nu)`` with ``K`` the environment's declared
description length in bits. The planner alternates a max over actions with an
expectation over percepts under the posterior mixture, to a fixed horizon,
accumulating the discounted return ``sum_j gamma^(j-t) r_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..errors import BudgetExceededError, InconsistentPerceptError, PreconditionError
from .environment import EnvironmentModel, History, check_compatible

DEFAULT_BUDGET = 10**6


@dataclass(frozen=True, eq=False)
class MixtureState:
    environments: tuple[EnvironmentModel, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (len(self.environments),):
            raise PreconditionError("one weight per environment required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise PreconditionError(f"mixture weights must be a distribution, got {w}")
        w.setflags(write=False)
        object.__setattr__(self, "environments", tuple(self.environments))
        object.__setattr__(self, "weights", w)

    def weight_of(self, env_id: str) -> float:
        for e, w in zip(self.environments, self.weights):
            if e.id == env_id:
                return float(w)
        raise KeyError(env_id)

    def as_dict(self) -> dict[str, float]:
        return {e.id: float(w) for e, w in zip(self.environments, self.weights)}


@dataclass(frozen=True)
class PolicyConfig:
    horizon: int = 1
    discount: float = 1.0
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.horizon < 1:
            raise PreconditionError("horizon must be >= 1")
        if not 0.0 < self.discount <= 1.0:
            raise PreconditionError("discount must lie in (0, 1]")


def prior_weights(envs: Sequence[EnvironmentModel]) -> MixtureState:
    """Normalized ``2^-K(nu)`` prior over ``envs``."""
    if not envs:
        raise PreconditionError("environment list is empty")
    check_compatible(envs)
    bits = np.array([e.description_bits for e in envs], dtype=float)
    # shift by the minimum so long descriptions do not underflow
    w = np.exp2(-(bits - bits.min()))
    return MixtureState(tuple(envs), w / w.sum())


def posterior_update(mix: MixtureState, h: History, a: str, e: str) -> MixtureState:
    """Bayes update ``w' ∝ w * nu(e | h, a)``."""
    lik = np.array([env.predict(h, a).prob(e) for env in mix.environments])
    return _reweight(mix, lik)


def _reweight(mix: MixtureState, lik: np.ndarray) -> MixtureState:
    w = mix.weights * lik
    total = w.sum()
    if total <= 0:
        raise InconsistentPerceptError("percept has zero likelihood under every environment")
    return MixtureState(mix.environments, w / total)


def _better(q: float, best: float) -> bool:
    # strict improvement beyond rounding noise; ties go to the earlier action
    return q > best + 1e-12 * max(1.0, abs(best))


def check_budget(n_actions: int, n_percepts: int, cfg: PolicyConfig):
    size = (n_actions * n_percepts) ** cfg.horizon
    if size > cfg.budget:
        raise BudgetExceededError(
            f"expectimax tree has |A|^m * |E|^m = {size} leaves, budget is {cfg.budget}")


def action_values(mix: MixtureState, h: History, cfg: PolicyConfig) -> np.ndarray:
    """Expectimax value of each first action, in action-alphabet order."""
    envs = mix.environments
    actions, percepts = envs[0].actions, envs[0].percepts
    check_budget(len(actions), len(percepts), cfg)
    rewards = np.array([envs[0].reward(o) for o in percepts])
    gamma = cfg.discount

    def q_value(w, states, a, depth):
        # laws[i, j] = nu_i(percept j | state_i, a)
        laws = np.array([env.law(s, a) for env, s in zip(envs, states)])
        xi = w @ laws
        total = 0.0
        for j, pj in enumerate(xi):
            if pj <= 0.0:
                continue
            ret = rewards[j]
            if depth > 1:
                w2 = w * laws[:, j] / pj
                s2 = [env.next_state(s, a, j) for env, s in zip(envs, states)]
                ret += gamma * value(w2, s2, depth - 1)
            total += pj * ret
        return total

    def value(w, states, depth):
        best = None
        for a in actions:
            q = q_value(w, states, a, depth)
            if best is None or _better(q, best):
                best = q
        return best

    states = [env.state_after(h) for env in envs]
    return np.array([q_value(mix.weights, states, a, cfg.horizon) for a in actions])


def aixi_policy(mix: MixtureState, h: History, cfg: PolicyConfig) -> tuple[str, float]:
    """Best first action and its expectimax value.

    Ties are broken towards the lowest index in the action alphabet.

    Raises
    ------
    BudgetExceededError
        If ``(|A| * |E|)^horizon`` exceeds ``cfg.budget``; the tree is never
        silently truncated.
    """
    q = action_values(mix, h, cfg)
    best = 0
    for i in range(1, len(q)):
        if _better(q[i], q[best]):
            best = i
    return mix.environments[0].actions[best], float(q[best])


@dataclass
class CagiAgent:
    """Classical agent: a mixture, a history and a planner config.

    Holds only classical data; it has no quantum register.
    """

    mixture: MixtureState
    config: PolicyConfig = field(default_factory=PolicyConfig)
    history: History = field(default_factory=History)

    def act(self) -> tuple[str, float]:
        return aixi_policy(self.mixture, self.history, self.config)

    def observe(self, action: str, observation: str) -> None:
        reward = self.mixture.environments[0].reward(observation)
        self.mixture = posterior_update(self.mixture, self.history, action, observation)
        self.history = self.history.append(action, observation, reward)

    def with_config(self, **kw) -> CagiAgent:
        return CagiAgent(self.mixture, replace(self.config, **kw), self.history)
