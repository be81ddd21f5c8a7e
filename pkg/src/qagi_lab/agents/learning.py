"""Two learning modes for the quantum agent.

* Variational: classical parameters are tuned by a derivative-free optimizer
  and re-encoded into the quantum register each evaluation.
* Coherent: agent and environment evolve jointly once and the agent register
  is queried against a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import DimensionError, OptimizationError, PreconditionError
from ..qmath import DensityOperator, partial_trace, tensor
from ..registers import (
    ClassicalDistribution,
    CtqChannel,
    Povm,
    QtqChannel,
    apply_ctq,
    apply_qtq,
    qtc_distribution,
)
from ..rng import stream

GRID_POINTS = 17


@dataclass(eq=False)
class VariationalResult:
    theta: np.ndarray
    score: float
    history: list[float] = field(default_factory=list)
    evaluations: int = 0


def variational_learn(family: Callable[[np.ndarray], QtqChannel],
                      objective: tuple[Povm, str],
                      encoder: CtqChannel,
                      iters: int,
                      seed: int = 0,
                      init: Sequence[float] | None = None,
                      n_params: int | None = None,
                      bounds: tuple[float, float] = (0.0, 2 * np.pi),
                      encoder_input: str | None = None) -> VariationalResult:
    """Maximize the probability of a target readout outcome over ``theta``.

    The register is prepared by ``encoder`` from ``encoder_input`` (default:
    the encoder's first symbol), evolved by ``family(theta)`` and read out by
    the objective's POVM. Each iteration is one coordinate sweep: a
    17-point grid over ``bounds`` picks a bracket, a bounded scalar search
    refines it, and the move is accepted only if it raises the score.

    ``init`` defaults to a seeded uniform draw in ``bounds`` of length
    ``n_params``. With ``iters == 0`` the initialization is returned as is.
    """
    povm, target = objective
    if target not in povm.outcome_alphabet:
        raise PreconditionError(f"target outcome {target!r} not in readout alphabet")
    symbol = encoder_input if encoder_input is not None else encoder.in_alphabet[0]
    rho_in = apply_ctq(encoder, ClassicalDistribution.point(encoder.in_alphabet, symbol))
    lo, hi = bounds
    if init is None:
        if n_params is None:
            raise PreconditionError("give either init or n_params")
        theta = stream(seed, 0, 0).uniform(lo, hi, size=int(n_params))
    else:
        theta = np.array(init, dtype=float).reshape(-1)
    if not np.all(np.isfinite(theta)):
        raise OptimizationError("initial parameters are not finite")

    n_eval = 0

    def score(th) -> float:
        nonlocal n_eval
        n_eval += 1
        s = qtc_distribution(povm, apply_qtq(family(np.asarray(th)), rho_in)).prob(target)
        if not np.isfinite(s):
            raise OptimizationError(f"non-finite score at theta={th}")
        return s

    best = score(theta)
    history = [best]
    grid = np.linspace(lo, hi, GRID_POINTS)
    for _ in range(iters):
        for i in range(theta.size):
            def along(x, i=i):
                th = theta.copy()
                th[i] = x
                return score(th)

            vals = np.array([along(x) for x in grid])
            j = int(np.argmax(vals))
            cand_x, cand_s = grid[j], vals[j]
            a, b = grid[max(j - 1, 0)], grid[min(j + 1, GRID_POINTS - 1)]
            res = minimize_scalar(lambda x: -along(x), bounds=(a, b), method="bounded",
                                  options={"xatol": 1e-10})
            if np.isfinite(res.fun) and -res.fun > cand_s:
                cand_x, cand_s = float(res.x), float(-res.fun)
            if cand_s > best:
                theta[i] = cand_x
                best = cand_s
        history.append(best)
    return VariationalResult(theta, float(best), history, n_eval)


@dataclass(frozen=True)
class CoherentLearnResult:
    learned: bool
    probability: float

    def __bool__(self):
        return self.learned


def coherent_learn_check(joint_unitary: QtqChannel, agent_init: DensityOperator,
                         env_init: DensityOperator, query: Povm, threshold: float,
                         target: str = "1") -> CoherentLearnResult:
    """Evolve ``agent (x) env`` once and test ``Pr(target)`` on the agent's marginal."""
    joint = tensor(agent_init, env_init)
    if joint_unitary.dim != joint.dim:
        raise DimensionError(f"joint channel of dim {joint_unitary.dim} on joint state of dim {joint.dim}")
    if query.dim != agent_init.dim:
        raise DimensionError("query must act on the agent subsystem")
    evolved = apply_qtq(joint_unitary, joint)
    rho_a = partial_trace(evolved, range(agent_init.n_subsystems))
    p = qtc_distribution(query, rho_a).prob(target)
    return CoherentLearnResult(bool(p >= threshold), float(p))
