"""Identity of components: exchange symmetry, copy-observation channels and
the non-injectivity of measurement channels, plus the separability gap."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import DimensionError, PreconditionError
from ..qmath import (
    DEFAULT_TOL,
    DensityOperator,
    as_matrix,
    density_to_json,
    maximally_mixed,
    partial_trace,
    pure_state,
    tensor,
    trace_distance,
    validate_density,
)
from ..registers import Alphabet, Povm, measurement_channel
from ..rng import stream

EPS_WITNESS = 1e-6


# --------------------------------------------------------------------------
# indistinguishable subsystems
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IndistinguishabilityReport:
    symmetry: str
    n_sites: int
    local_dim: int
    expectations: tuple[float, ...]
    max_spread: float

    def to_json(self) -> dict:
        return {"symmetry": self.symmetry, "n_sites": self.n_sites,
                "local_dim": self.local_dim, "expectations": list(self.expectations),
                "max_spread": self.max_spread}


def _n_sites(total: int, d: int) -> int:
    n = round(math.log(total) / math.log(d)) if d > 1 else 0
    if d < 2 or n < 2 or d ** n != total:
        raise DimensionError(f"state dimension {total} is not an N-fold power (N >= 2) of {d}")
    return n


def swap_sites(psi: np.ndarray, d: int, n: int, i: int, j: int) -> np.ndarray:
    """Apply the transposition of sites ``i`` and ``j`` to a state vector."""
    t = psi.reshape((d,) * n)
    return np.swapaxes(t, i, j).reshape(-1)


def indistinguishability_check(psi, observable, atol: float = DEFAULT_TOL.num) -> IndistinguishabilityReport:
    """Classify ``psi`` under all site swaps and compute per-site ``<O_k>``.

    ``symmetry`` is ``"symmetric"`` if every swap fixes ``psi``,
    ``"antisymmetric"`` if every swap negates it, else ``"neither"``.
    """
    o = as_matrix(observable, "observable")
    if o.shape[0] != o.shape[1]:
        raise DimensionError("observable must be square")
    v = np.asarray(psi, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(v) - 1.0) > atol:
        raise PreconditionError("state must be a unit vector")
    d = o.shape[0]
    n = _n_sites(v.size, d)
    sym = anti = True
    for i, j in itertools.combinations(range(n), 2):
        w = swap_sites(v, d, n, i, j)
        sym = sym and np.max(np.abs(w - v)) <= atol
        anti = anti and np.max(np.abs(w + v)) <= atol
    symmetry = "symmetric" if sym else "antisymmetric" if anti else "neither"
    t = v.reshape((d,) * n)
    exps = []
    for k in range(n):
        ot = np.tensordot(o, t, axes=([1], [k]))      # O acting on site k, that axis moved first
        ot = np.moveaxis(ot, 0, k)
        exps.append(float(np.real(np.vdot(t, ot))))
    spread = float(max(exps) - min(exps))
    return IndistinguishabilityReport(symmetry, n, d, tuple(exps), spread)


# --------------------------------------------------------------------------
# classical copy-observation channel
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CopyObservationChannel:
    """``s -> (s, f(s))``: keeps the state and appends a read-out."""

    state_alphabet: Alphabet
    readout_alphabet: Alphabet
    readout: Callable[[str], str] | Mapping[str, str]

    def f(self, s: str) -> str:
        out = self.readout[s] if isinstance(self.readout, Mapping) else self.readout(s)
        out = str(out)
        if out not in self.readout_alphabet:
            raise PreconditionError(f"read-out {out!r} of {s!r} is not in the read-out alphabet")
        return out

    def __call__(self, s: str) -> tuple[str, str]:
        s = str(s)
        if s not in self.state_alphabet:
            raise PreconditionError(f"{s!r} is not a state symbol")
        return s, self.f(s)


@dataclass(frozen=True)
class ClassicalIdentityReport:
    left_inverse: Mapping[tuple[str, str], str]
    verified: bool
    checked: int
    failures: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"verified": self.verified, "checked": self.checked,
                "left_inverse": [{"record": list(k), "state": v} for k, v in self.left_inverse.items()],
                "failures": list(self.failures)}


def classical_identity_check(lc: CopyObservationChannel) -> ClassicalIdentityReport:
    """Build the left inverse that discards the read-out and verify the round trip on every symbol."""
    inverse = {}
    for s in lc.state_alphabet:
        rec = lc(s)
        inverse[rec] = rec[0]
    failures = tuple(s for s in lc.state_alphabet if inverse[lc(s)] != s)
    return ClassicalIdentityReport(inverse, not failures, len(lc.state_alphabet), failures)


# --------------------------------------------------------------------------
# quantum measurement channel
# --------------------------------------------------------------------------

@dataclass(eq=False)
class NoninjectivityResult:
    """Witness pair with equal measurement-channel outputs, or none in the searched family.

    ``injective`` only means that no witness was found among the
    ``pairs_checked`` candidates; it is not a proof of injectivity.
    """

    injective: bool
    rho1: DensityOperator | None
    rho2: DensityOperator | None
    output: DensityOperator | None
    labels: tuple[str, str] | None
    pairs_checked: int
    candidates: int
    output_difference: float | None = None
    family: str = "basis projectors, uniform mixture, superposition projectors, " \
                  "effect-eigenvector superpositions, dephased candidates, seeded random states"

    @property
    def verdict(self) -> str:
        return "Injective" if self.injective else "Witness"

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "pairs_checked": self.pairs_checked,
               "candidates": self.candidates, "family": self.family,
               "note": "bounded search: 'Injective' means no witness in the searched family"}
        if not self.injective:
            out.update({"labels": list(self.labels), "rho1": density_to_json(self.rho1),
                        "rho2": density_to_json(self.rho2), "output": density_to_json(self.output),
                        "output_difference": self.output_difference})
        return out


def _superpositions(vecs: Sequence[np.ndarray], tag: str):
    out = []
    for (i, a), (j, b) in itertools.combinations(enumerate(vecs), 2):
        for name, ph in (("+", 1), ("-", -1), ("+i", 1j), ("-i", -1j)):
            v = a + ph * b
            nv = np.linalg.norm(v)
            if nv > 1e-9:
                out.append((f"{tag}({i}{name}{j})", v / nv))
    return out


def _candidates(p: Povm, seed: int, n_random: int):
    d = p.dim
    basis = [(f"|{i}>", np.eye(d)[i]) for i in range(d)]
    structured = [(lbl, pure_state(v)) for lbl, v in basis + _superpositions([v for _, v in basis], "sup")]
    eigvecs = []
    for k, m in p.elements.items():
        w, v = np.linalg.eigh(m.conj().T @ m)
        eigvecs += [v[:, i] for i in range(d) if w[i] > 1e-9]
    adapted = [(lbl, pure_state(v)) for lbl, v in _superpositions(eigvecs, "eff")]
    rng = stream(seed, 0, 0)
    rand = []
    for r in range(n_random):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        m = g @ g.conj().T if r % 2 else np.outer(g[:, 0], g[:, 0].conj())
        rand.append((f"rand{r}", validate_density(m / np.trace(m))))
    return structured, adapted, rand


def noninjectivity_witness(p: Povm, seed: int = 0, n_random: int = 16,
                           atol: float = DEFAULT_TOL.num) -> NoninjectivityResult:
    """Search for ``rho1 != rho2`` with the same measurement-channel output.

    Pairs are tried in a fixed order: each structured candidate against the
    uniform mixture, then structured pairs, then each candidate against its
    dephased image ``sum_k M_k rho M_k^dag``, then seeded random pairs. Two
    states count as distinct when their trace distance exceeds
    ``EPS_WITNESS`` and as colliding when the outputs agree entrywise within
    ``atol``.
    """
    d = p.dim
    structured, adapted, rand = _candidates(p, seed, n_random)
    mixed = ("I/d", maximally_mixed((d,)))
    # keyed by id(); the state is stored alongside so its id is never reused
    cache: dict[int, tuple[DensityOperator, DensityOperator]] = {}

    def out(rho):
        key = id(rho)
        if key not in cache:
            cache[key] = (measurement_channel(p, rho), rho)
        return cache[key][0]

    def dephase(rho):
        m = sum(e @ rho.matrix @ e.conj().T for e in p.elements.values())
        return validate_density(m)

    def pairs():
        for c in structured + adapted:
            yield c, mixed
        pool = structured + adapted
        for j in range(len(pool)):
            for i in range(j):
                yield pool[j], pool[i]
        for lbl, rho in pool + rand:
            yield (lbl, rho), (f"dephased {lbl}", dephase(rho))
        full = pool + [mixed] + rand
        for a in rand:
            for b in full:
                if a is not b:
                    yield a, b

    checked = 0
    for (l1, r1), (l2, r2) in pairs():
        checked += 1
        if trace_distance(r1, r2) <= EPS_WITNESS:
            continue
        o1, o2 = out(r1), out(r2)
        diff = float(np.max(np.abs(o1.matrix - o2.matrix)))
        if diff <= atol:
            return NoninjectivityResult(False, r1, r2, o1, (l1, l2), checked,
                                        len(structured) + len(adapted) + len(rand) + 1, diff)
    return NoninjectivityResult(True, None, None, None, None, checked,
                                len(structured) + len(adapted) + len(rand) + 1)


# --------------------------------------------------------------------------
# separability gap
# --------------------------------------------------------------------------

def separability_gap_split(joint: DensityOperator, n_first: int) -> float:
    """Trace distance from ``joint`` to the product of its two marginals,
    splitting after the first ``n_first`` subsystems."""
    n = joint.n_subsystems
    if not 0 < n_first < n:
        raise DimensionError(f"cannot split {n} subsystems after {n_first}")
    a = partial_trace(joint, range(n_first))
    e = partial_trace(joint, range(n_first, n))
    return trace_distance(joint, tensor(a, e))


def separability_gap(joint: DensityOperator) -> float:
    """``T(rho_AE, rho_A (x) rho_E)`` for a state with exactly two subsystems.

    Zero exactly for product states. This measures non-productness, so
    classically correlated states also have a positive gap.
    """
    if joint.n_subsystems != 2:
        raise DimensionError(f"separability_gap needs exactly two subsystems, got {joint.n_subsystems}")
    return separability_gap_split(joint, 1)
