"""No-cloning: exact feasibility of unitary copying and numerical clone fidelity.

A unitary ``U`` with ``U|psi>|0> = |psi>|psi>`` and ``U|phi>|0> = |phi>|phi>``
preserves inner products, forcing ``<psi|phi> = <psi|phi>^2``. That only holds
for ``|<psi|phi>|`` equal to 0 or 1, so two distinct non-orthogonal states can
never both be copied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from ..errors import DimensionError, OptimizationError, PreconditionError
from ..qmath import DEFAULT_TOL
from ..rng import stream

DELTA_CLONE = 1e-3


def _unit(v, name="state") -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > DEFAULT_TOL.num:
        raise PreconditionError(f"{name} must be a unit vector, norm is {n:.12g}")
    return v


@dataclass(frozen=True)
class CloningVerdict:
    feasible: bool
    overlap: float
    overlap_squared: float

    @property
    def verdict(self) -> str:
        return "Feasible" if self.feasible else "Infeasible"

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "overlap": self.overlap,
               "overlap_squared": self.overlap_squared}
        if not self.feasible:
            out["witness"] = (f"unitarity requires |<psi|phi>| = |<psi|phi>|^2, "
                              f"but {self.overlap!r} != {self.overlap_squared!r}")
        return out


def nocloning_check(psi, phi, atol: float = DEFAULT_TOL.num) -> CloningVerdict:
    """Whether one unitary can copy both ``psi`` and ``phi``."""
    psi, phi = _unit(psi, "psi"), _unit(phi, "phi")
    if psi.size != phi.size:
        raise DimensionError(f"states have dimensions {psi.size} and {phi.size}")
    s = float(min(1.0, abs(np.vdot(psi, phi))))
    feasible = s <= atol or s >= 1.0 - atol
    return CloningVerdict(feasible, s, s * s)


# --------------------------------------------------------------------------
# parametrized cloning channels  S -> S (x) B
# --------------------------------------------------------------------------

def unitary_from_params(p: np.ndarray, n: int) -> np.ndarray:
    """Map ``2 n^2`` reals to an ``n x n`` unitary via a phase-fixed QR."""
    a = (p[: n * n] + 1j * p[n * n: 2 * n * n]).reshape(n, n)
    q, r = np.linalg.qr(a)
    d = np.diag(r)
    return q * np.where(np.abs(d) > 0, d / np.abs(d), 1.0)


class MeasurePrepare:
    """Measure in a parametrized basis ``{v_k}``, prepare a two-copy state ``chi_k``."""

    name = "measure_prepare"

    def __init__(self, d: int):
        self.d = d
        self.n_params = 2 * d * d + d * 2 * d * d

    def parts(self, p):
        d = self.d
        v = unitary_from_params(p, d)
        chi = p[2 * d * d:].reshape(d, 2, d * d)
        chi = chi[:, 0] + 1j * chi[:, 1]
        norms = np.linalg.norm(chi, axis=1, keepdims=True)
        chi = chi / np.where(norms > 0, norms, 1.0)
        return v, chi

    def fidelities(self, p, states: np.ndarray) -> np.ndarray:
        v, chi = self.parts(p)
        meas = np.abs(states.conj() @ v) ** 2            # [state, k] = |<v_k|psi>|^2
        twins = np.einsum("si,sj->sij", states, states).reshape(len(states), -1)
        prep = np.abs(twins.conj() @ chi.T) ** 2         # [state, k] = |<psi psi|chi_k>|^2
        return np.sum(meas * prep, axis=1)

    def kraus(self, p) -> list[np.ndarray]:
        v, chi = self.parts(p)
        return [np.outer(chi[k], v[:, k].conj()) for k in range(self.d)]

    def params_for(self, basis: np.ndarray, prepared: np.ndarray) -> np.ndarray:
        """Parameters reproducing measurement ``basis`` (columns) and states ``prepared``."""
        d = self.d
        chi = np.asarray(prepared).reshape(d, d * d)
        return np.concatenate([basis.real.reshape(-1), basis.imag.reshape(-1),
                               np.stack([chi.real, chi.imag], axis=1).reshape(-1)])


class UnitaryAncilla:
    """``U`` on source (x) blank (x) ancilla from ``|psi 0 0>``, ancilla traced out."""

    name = "unitary_ancilla"

    def __init__(self, d: int, d_anc: int | None = None):
        self.d = d
        self.d_anc = d if d_anc is None else d_anc
        self.n = d * d * self.d_anc
        self.n_params = 2 * self.n * self.n

    def fidelities(self, p, states: np.ndarray) -> np.ndarray:
        u = unitary_from_params(p, self.n)
        d, da = self.d, self.d_anc
        # column index of |psi, 0, 0> is i * d * da
        inputs = u[:, :: d * da] @ states.T              # [out, state]
        out = inputs.reshape(d * d, da, len(states))
        twins = np.einsum("si,sj->sij", states, states).reshape(len(states), -1)
        amp = np.einsum("sx,xas->sa", twins.conj(), out)
        return np.sum(np.abs(amp) ** 2, axis=1)

    def kraus(self, p) -> list[np.ndarray]:
        u = unitary_from_params(p, self.n)
        d, da = self.d, self.d_anc
        iso = u[:, :: d * da].reshape(d * d, da, d)
        return [iso[:, a, :] for a in range(da)]


@dataclass(eq=False)
class CloneResult:
    family: str
    params: np.ndarray
    worst_fidelity: float
    fidelities: np.ndarray
    kraus: list[np.ndarray] = field(default_factory=list)
    has_overlapping_pair: bool = False

    @property
    def bound_respected(self) -> bool:
        """Worst-case fidelity stays below ``1 - DELTA_CLONE`` whenever copying is impossible."""
        return (not self.has_overlapping_pair) or self.worst_fidelity < 1.0 - DELTA_CLONE

    def to_json(self) -> dict:
        return {"family": self.family, "worst_fidelity": float(self.worst_fidelity),
                "fidelities": [float(f) for f in self.fidelities],
                "has_overlapping_pair": self.has_overlapping_pair,
                "bound_respected": self.bound_respected,
                "params": [float(x) for x in self.params]}


def _structured_starts(fam: MeasurePrepare, states: np.ndarray) -> list[np.ndarray]:
    d = fam.d
    # basis from the input states (Gram-Schmidt, padded), prepare copies of each
    q, _ = np.linalg.qr(np.column_stack([states.T, np.eye(d)])[:, : max(d, len(states))])
    q = q[:, :d]
    starts = [fam.params_for(q, np.stack([np.kron(q[:, k], q[:, k]) for k in range(d)]))]
    # prepare the first state's copy regardless of outcome
    twin = np.kron(states[0], states[0])
    starts.append(fam.params_for(np.eye(d), np.stack([twin] * d)))
    return starts


def clone_fidelity_optimize(states: Sequence, iters: int = 300, seed: int = 0,
                            restarts: int = 3) -> CloneResult:
    """Maximize the worst-case clone fidelity ``min_psi <psi psi| Phi(psi) |psi psi>``.

    Searches two families of channels from one system to two copies:
    measure-and-prepare and a unitary on system, blank and ancilla. Each
    family is optimized from structured and seeded random starts with SLSQP
    on the epigraph form ``max t s.t. F_i(theta) >= t``; ``iters`` caps the
    SLSQP iterations per start. The best value found is reported, along with
    the channel's Kraus operators.
    """
    vecs = np.array([_unit(s, f"state {i}") for i, s in enumerate(states)])
    if vecs.ndim != 2 or len(vecs) == 0:
        raise PreconditionError("need at least one state")
    d = vecs.shape[1]
    overlapping = any(not nocloning_check(a, b).feasible
                      for i, a in enumerate(vecs) for b in vecs[i + 1:])
    rng = stream(seed, 0, 0)
    families = [MeasurePrepare(d), UnitaryAncilla(d)]
    best: CloneResult | None = None

    for fam in families:
        starts = _structured_starts(fam, vecs) if isinstance(fam, MeasurePrepare) else []
        starts += [rng.normal(size=fam.n_params) for _ in range(restarts)]
        for x0 in starts:
            x, f = _maximin(fam, vecs, x0, iters)
            if best is None or f.min() > best.worst_fidelity:
                best = CloneResult(fam.name, x, float(f.min()), f, fam.kraus(x), overlapping)
    return best


def _maximin(fam, vecs, x0, iters):
    def fids(x):
        f = fam.fidelities(x, vecs)
        if not np.all(np.isfinite(f)):
            raise OptimizationError("non-finite fidelity during optimization")
        return f

    f0 = fids(x0)
    z0 = np.concatenate([x0, [f0.min()]])
    cons = {"type": "ineq", "fun": lambda z: fids(z[:-1]) - z[-1]}
    res = minimize(lambda z: -z[-1], z0, jac=lambda z: np.r_[np.zeros(len(z) - 1), -1.0],
                   constraints=[cons], method="SLSQP", options={"maxiter": iters, "ftol": 1e-12})
    x = res.x[:-1] if np.all(np.isfinite(res.x)) else x0
    f = fids(x)
    if f.min() < f0.min():
        return x0, f0
    return x, f
