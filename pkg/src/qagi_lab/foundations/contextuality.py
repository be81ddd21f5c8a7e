"""Kochen-Specker ray systems and exhaustive non-contextual assignment search.

A non-contextual {0, 1} assignment gives every ray a value such that each
listed orthonormal basis has exactly one ray valued 1 and no two orthogonal
rays are both 1. The search enumerates every such assignment by
backtracking with unit propagation; an empty result is a proof (by
exhaustion) that the ray system is contextual.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DimensionError, PreconditionError
from ..qmath import DEFAULT_TOL, vector_from_json


@dataclass(frozen=True, eq=False)
class RaySystem:
    dimension: int
    rays: np.ndarray
    bases: tuple[tuple[int, ...], ...]
    name: str = ""

    def __post_init__(self):
        d = int(self.dimension)
        if d < 3:
            raise PreconditionError(f"ray systems need dimension >= 3, got {d}")
        rays = np.array(self.rays, dtype=np.complex128).reshape(-1, d) if len(self.rays) \
            else np.zeros((0, d), dtype=np.complex128)
        norms = np.linalg.norm(rays, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > DEFAULT_TOL.num)
        if bad.size:
            raise PreconditionError(f"rays {bad.tolist()} are not unit vectors")
        bases = tuple(tuple(int(i) for i in b) for b in self.bases)
        for bi, b in enumerate(bases):
            if len(b) != d or len(set(b)) != d:
                raise PreconditionError(f"basis {bi} must list {d} distinct rays, got {list(b)}")
            if any(not 0 <= i < len(rays) for i in b):
                raise DimensionError(f"basis {bi} refers to a ray index out of range")
            gram = rays[list(b)].conj() @ rays[list(b)].T
            if np.max(np.abs(gram - np.eye(d))) > DEFAULT_TOL.num:
                raise PreconditionError(f"basis {bi} is not orthonormal")
        rays.setflags(write=False)
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "bases", bases)

    @property
    def n_rays(self) -> int:
        return self.rays.shape[0]

    def orthogonal_pairs(self, atol: float = DEFAULT_TOL.num) -> list[tuple[int, int]]:
        gram = np.abs(self.rays.conj() @ self.rays.T)
        n = self.n_rays
        return [(i, j) for i in range(n) for j in range(i + 1, n) if gram[i, j] <= atol]

    def with_bases(self, bases: Sequence[Sequence[int]]) -> RaySystem:
        return RaySystem(self.dimension, self.rays, tuple(map(tuple, bases)), self.name)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "dimension": self.dimension,
            "rays": [[[float(z.real), float(z.imag)] for z in r] for r in self.rays],
            "bases": [list(b) for b in self.bases],
        }


def ray_system_from_json(obj: dict) -> RaySystem:
    """Parse ``{dimension, rays: [[[re, im], ...], ...], bases: [[i, ...], ...]}``.

    Ray components may be unnormalized; each ray is scaled to unit length.
    """
    try:
        d = int(obj["dimension"])
        raw_rays, bases = obj["rays"], obj["bases"]
    except KeyError as exc:
        raise PreconditionError(f"ray system missing field {exc}") from None
    rays = []
    for i, r in enumerate(raw_rays):
        v = vector_from_json(r)
        if v.size != d:
            raise DimensionError(f"ray {i} has {v.size} components, dimension is {d}")
        n = np.linalg.norm(v)
        if n == 0:
            raise PreconditionError(f"ray {i} is the zero vector")
        rays.append(v / n)
    return RaySystem(d, np.array(rays) if rays else np.zeros((0, d)), tuple(map(tuple, bases)),
                     str(obj.get("name", "")))


def load_ray_system(path: str | Path | None = None) -> RaySystem:
    """Load a ray-system file; with no path, the shipped 18-ray set in dimension 4."""
    if path is None:
        text = resources.files("qagi_lab").joinpath("data/ks_cabello_18.json").read_text()
    else:
        text = Path(path).read_text()
    return ray_system_from_json(json.loads(text))


def single_basis_system(d: int = 3) -> RaySystem:
    return RaySystem(d, np.eye(d), (tuple(range(d)),), f"standard-basis-{d}")


@dataclass(eq=False)
class KsResult:
    satisfiable: bool
    assignments: list[tuple[int, ...]]
    certificate: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "SAT" if self.satisfiable else "UNSAT"

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "n_assignments": len(self.assignments),
                "assignments": [list(a) for a in self.assignments],
                "certificate": dict(self.certificate)}


def ks_assignment_search(r: RaySystem) -> KsResult:
    """Enumerate every non-contextual {0, 1} assignment of ``r``.

    The certificate records the number of rays and bases, the orthogonal
    pairs used as exclusivity constraints, the raw search space ``2^n``, the
    search-tree nodes visited, conflicts hit and basis checks performed.
    """
    n = r.n_rays
    pairs = r.orthogonal_pairs()
    neighbours = [[] for _ in range(n)]
    for i, j in pairs:
        neighbours[i].append(j)
        neighbours[j].append(i)
    in_bases = [[] for _ in range(n)]
    for bi, b in enumerate(r.bases):
        for i in b:
            in_bases[i].append(bi)

    stats = {"nodes": 0, "conflicts": 0, "bases_checked": 0}
    solutions: list[tuple[int, ...]] = []

    def propagate(vals: list[int], queue: list[int]) -> bool:
        while queue:
            i = queue.pop()
            if vals[i] == 1:
                for j in neighbours[i]:
                    if vals[j] == 1:
                        return False
                    if vals[j] == -1:
                        vals[j] = 0
                        queue.append(j)
            for bi in in_bases[i]:
                stats["bases_checked"] += 1
                b = r.bases[bi]
                ones = sum(1 for k in b if vals[k] == 1)
                free = [k for k in b if vals[k] == -1]
                if ones > 1 or (ones == 0 and not free):
                    return False
                if ones == 0 and len(free) == 1:
                    vals[free[0]] = 1
                    queue.append(free[0])
                elif ones == 1:
                    for k in free:
                        vals[k] = 0
                        queue.append(k)
        return True

    def pick(vals: list[int]) -> int:
        # prefer a free ray in a basis that still lacks its 1
        for b in r.bases:
            if not any(vals[k] == 1 for k in b):
                for k in b:
                    if vals[k] == -1:
                        return k
        return vals.index(-1)

    def search(vals: list[int]):
        stats["nodes"] += 1
        if -1 not in vals:
            solutions.append(tuple(vals))
            return
        i = pick(vals)
        for v in (1, 0):
            child = vals.copy()
            child[i] = v
            if propagate(child, [i]):
                search(child)
            else:
                stats["conflicts"] += 1

    search([-1] * n)
    solutions.sort(reverse=True)
    cert = {
        "ray_system": r.name,
        "dimension": r.dimension,
        "n_rays": n,
        "n_bases": len(r.bases),
        "orthogonal_pairs": len(pairs),
        "search_space": 2 ** n,
        "nodes": stats["nodes"],
        "conflicts": stats["conflicts"],
        "bases_checked": stats["bases_checked"],
        "exhaustive": True,
    }
    return KsResult(bool(solutions), solutions, cert)
