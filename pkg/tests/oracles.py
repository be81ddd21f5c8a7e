"""Independent reference implementations used by several test files."""

import itertools

import numpy as np

from qagi_lab.agents import EnvironmentModel, History


def brute_force_action_values(envs, prior, history, horizon, discount=1.0):
    """Expectimax by summing over every percept sequence with joint likelihoods.

    Each environment carries ``prior * prod nu(e_t | h_<t a_t)`` along the
    branch; values are normalized only once, by the joint likelihood of
    ``history``. No posterior is ever formed, so this shares no code path with
    the planner beyond ``EnvironmentModel.predict``.
    """
    actions, percepts = list(envs[0].actions), list(envs[0].percepts)
    joint0 = np.array(prior, dtype=float)
    h = History()
    for step in history:
        joint0 = joint0 * [e.predict(h, step.action).prob(step.observation) for e in envs]
        h = h.append(step.action, step.observation, step.reward)
    norm = joint0.sum()

    def node(h, joint, depth, k):
        # max over actions of the unnormalized return below h
        return max(edge(h, joint, a, depth, k) for a in actions)

    def edge(h, joint, a, depth, k):
        total = 0.0
        for e in percepts:
            j2 = joint * [env.predict(h, a).prob(e) for env in envs]
            mass = j2.sum()
            if mass == 0:
                continue
            r = envs[0].reward(e)
            total += mass * (discount ** k) * r
            if depth > 1:
                total += node(h.append(a, e, r), j2, depth - 1, k + 1)
        return total

    return np.array([edge(h, joint0, a, horizon, 0) / norm for a in actions])


def lowest_argmax(values, rel=1e-12):
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best] + rel * max(1.0, abs(values[best])):
            best = i
    return best


def random_environment_class(rng, n_envs, n_actions, n_percepts, max_states=2):
    """Random stateful environments sharing alphabets and a reward table."""
    actions = [f"a{i}" for i in range(n_actions)]
    percepts = [f"e{i}" for i in range(n_percepts)]
    rewards = {p: float(np.round(rng.uniform(-1, 1), 3)) for p in percepts}
    envs = []
    for k in range(n_envs):
        states = [f"s{i}" for i in range(int(rng.integers(1, max_states + 1)))]
        transitions = {}
        for s in states:
            row = {}
            for a in actions:
                p = rng.dirichlet(np.ones(n_percepts))
                if n_percepts > 1 and rng.random() < 0.25:
                    p[rng.integers(n_percepts)] = 0.0
                    p = p / p.sum()
                nxt = {o: states[int(rng.integers(len(states)))] for o in percepts}
                row[a] = {"probs": dict(zip(percepts, p.tolist())), "next": nxt}
            transitions[s] = row
        envs.append(EnvironmentModel.from_json({
            "id": f"nu{k}", "K_bits": int(rng.integers(1, 6)), "actions": actions,
            "percepts": percepts, "rewards": rewards, "transitions": transitions,
            "initial_state": states[0]}))
    return envs


def sample_history(rng, envs, weights, length):
    """A history whose percepts have positive mixture probability."""
    h = History()
    joint = np.array(weights, dtype=float)
    for _ in range(length):
        a = str(envs[0].actions[int(rng.integers(len(envs[0].actions)))])
        laws = np.array([e.predict(h, a).probs for e in envs])
        xi = joint @ laws
        j = int(rng.choice(len(xi), p=xi / xi.sum()))
        joint = joint * laws[:, j]
        o = envs[0].percepts[j]
        h = h.append(a, o, envs[0].reward(o))
    return h


def bandit_class():
    """Hypotheses ``P(win | arm)`` on a {0.1, 0.5, 0.9}^2 grid, equal prior bits."""
    grid = (0.1, 0.5, 0.9)
    out = []
    for pa, pb in itertools.product(grid, grid):
        out.append(EnvironmentModel.stationary(
            f"pA{pa}-pB{pb}", 8, ["A", "B"], ["win", "lose"], {"win": 1.0, "lose": 0.0},
            {"A": [pa, 1 - pa], "B": [pb, 1 - pb]}))
    return out
