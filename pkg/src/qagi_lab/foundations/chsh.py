"""CHSH correlations: quantum value versus local deterministic strategies."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, PreconditionError
from ..qmath import DensityOperator
from ..standard import X, Z

TSIRELSON = 2 * np.sqrt(2)


def observable(theta: float) -> np.ndarray:
    """``cos(theta) Z + sin(theta) X``, a +-1 valued observable in the X-Z plane."""
    return np.cos(theta) * Z + np.sin(theta) * X


@dataclass(frozen=True, eq=False)
class ChshSetting:
    state: DensityOperator
    angles: tuple[float, float, float, float]

    def __post_init__(self):
        if self.state.dims != (2, 2):
            raise DimensionError(f"CHSH needs a two-qubit state, got dims {list(self.state.dims)}")
        angles = tuple(float(a) for a in self.angles)
        if len(angles) != 4 or not all(np.isfinite(angles)):
            raise PreconditionError("angles must be four finite numbers (a, a', b, b')")
        object.__setattr__(self, "angles", angles)


def correlator(state: DensityOperator, theta_a: float, theta_b: float) -> float:
    """``E(a, b) = Tr[(A_a (x) B_b) rho]``."""
    return state.expect(np.kron(observable(theta_a), observable(theta_b)))


def chsh_quantum(s: ChshSetting) -> float:
    """``S = E(a,b) + E(a,b') + E(a',b) - E(a',b')``."""
    a, a2, b, b2 = s.angles
    rho = s.state
    return (correlator(rho, a, b) + correlator(rho, a, b2)
            + correlator(rho, a2, b) - correlator(rho, a2, b2))


@dataclass(frozen=True)
class LhvResult:
    value: float
    n_strategies: int
    best_strategy: tuple[int, int, int, int]
    values: tuple[float, ...]


def chsh_value(A: int, A2: int, B: int, B2: int) -> int:
    return A * B + A * B2 + A2 * B - A2 * B2


def chsh_lhv_max(angles=None) -> LhvResult:
    """Maximum CHSH value over the 16 deterministic local strategies.

    A strategy fixes the +-1 outcome of each of the four settings. The angles
    are accepted for symmetry with :func:`chsh_quantum` but do not enter:
    deterministic outcomes ignore measurement geometry.
    """
    values, best, best_v = [], None, None
    for strat in itertools.product((1, -1), repeat=4):
        v = chsh_value(*strat)
        values.append(float(v))
        if best_v is None or v > best_v:
            best, best_v = strat, v
    return LhvResult(float(best_v), len(values), best, tuple(values))
