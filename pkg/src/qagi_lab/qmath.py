"""Dense complex linear algebra for desk-scale quantum states.

Matrices are plain ``numpy`` complex arrays. :class:`DensityOperator` wraps a
validated matrix together with its subsystem dimensions, which are always
explicit so that partial traces are unambiguous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InvalidDensityError, PreconditionError


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances used across the package.

    Every function that checks an invariant accepts a ``tol`` argument; pass
    a modified copy (``dataclasses.replace(DEFAULT_TOL, psd=1e-7)``) to
    loosen or tighten checks for one call.
    """

    herm: float = 1e-9
    tr: float = 1e-9
    psd: float = 1e-9
    eig: float = 1e-8
    num: float = 1e-8
    cptp: float = 1e-9
    prob: float = 1e-12
    unitary: float = 1e-8


DEFAULT_TOL = Tolerances()


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a finite 2-D complex128 array."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if a.size == 0:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(a)):
        raise PreconditionError(f"{name} contains non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def kron(a, b) -> np.ndarray:
    """Kronecker product; dimensions multiply."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def kron_all(mats: Iterable) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def is_hermitian(m: np.ndarray, atol: float = DEFAULT_TOL.herm) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - dagger(m))) <= atol)


def is_unitary(m: np.ndarray, atol: float = DEFAULT_TOL.unitary) -> bool:
    m = np.asarray(m)
    if m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(dagger(m) @ m - np.eye(m.shape[0]))) <= atol)


def hermitian_eigen(m, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues real and in
    descending order; ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``.
    Equal eigenvalues keep the order produced by the LAPACK solver.

    Raises
    ------
    PreconditionError
        If ``m`` is not square or not Hermitian within ``tol.herm``.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise PreconditionError(f"matrix must be square, got {m.shape}")
    if not is_hermitian(m, tol.herm):
        raise PreconditionError("matrix is not Hermitian")
    w, v = np.linalg.eigh((m + dagger(m)) / 2)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A validated density operator with declared subsystem dimensions.

    Build instances with :func:`validate_density` (or the helpers
    :func:`pure_state`, :func:`basis_state`, :func:`maximally_mixed`), which
    check the Hermitian, unit-trace and PSD invariants. The stored matrix is
    read-only.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = field(default=())

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def expect(self, op) -> float:
        """Real part of ``Tr(op @ rho)``."""
        return float(np.real(np.trace(as_matrix(op) @ self.matrix)))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def allclose(self, other: DensityOperator, atol: float = DEFAULT_TOL.num) -> bool:
        return self.dims == other.dims and bool(
            np.max(np.abs(self.matrix - other.matrix)) <= atol
        )

    def __repr__(self):
        return f"DensityOperator(dims={list(self.dims)}, dim={self.dim})"


def _check_dims(dims: Sequence[int], size: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise DimensionError("dims must list at least one subsystem")
    if any(d < 1 for d in dims):
        raise DimensionError(f"subsystem dimensions must be positive, got {list(dims)}")
    if math.prod(dims) != size:
        raise DimensionError(
            f"product of dims {list(dims)} is {math.prod(dims)}, matrix size is {size}"
        )
    return dims


def validate_density(m, dims: Sequence[int] | None = None,
                     tol: Tolerances = DEFAULT_TOL) -> DensityOperator:
    """Check ``m`` against the density-operator invariants.

    Raises :class:`InvalidDensityError` whose ``violation`` names the first
    failed invariant: ``hermitian``, ``trace`` or ``psd``.
    """
    try:
        m = as_matrix(m)
    except PreconditionError as exc:
        raise InvalidDensityError("finite", str(exc)) from None
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"density matrix must be square, got {m.shape}")
    dims = _check_dims(dims if dims is not None else (m.shape[0],), m.shape[0])
    herm_err = float(np.max(np.abs(m - dagger(m))))
    if herm_err > tol.herm:
        raise InvalidDensityError("hermitian", f"max |m - m^dag| = {herm_err:.3e}")
    tr = np.trace(m)
    if abs(tr - 1.0) > tol.tr:
        raise InvalidDensityError("trace", f"trace = {tr.real:.12g}{tr.imag:+.3g}j")
    h = (m + dagger(m)) / 2
    lam_min = float(np.linalg.eigvalsh(h)[0])
    if lam_min < -tol.psd:
        raise InvalidDensityError("psd", f"negative eigenvalue {lam_min:.6g}")
    return DensityOperator(h, dims)


def pure_state(psi, dims: Sequence[int] | None = None,
               tol: Tolerances = DEFAULT_TOL) -> DensityOperator:
    """``|psi><psi|`` for a unit vector ``psi``."""
    v = np.asarray(psi, dtype=np.complex128).reshape(-1)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > tol.num:
        raise PreconditionError(f"state vector must have unit norm, got {n:.12g}")
    return validate_density(np.outer(v, v.conj()), dims, tol)


def basis_state(index: int, dim: int, dims: Sequence[int] | None = None) -> DensityOperator:
    if not 0 <= index < dim:
        raise DimensionError(f"basis index {index} out of range for dimension {dim}")
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[index, index] = 1.0
    return DensityOperator(m, tuple(dims) if dims is not None else (dim,))


def maximally_mixed(dims: Sequence[int]) -> DensityOperator:
    d = math.prod(dims)
    return DensityOperator(np.eye(d, dtype=np.complex128) / d, tuple(dims))


def tensor(*states: DensityOperator) -> DensityOperator:
    """Tensor product of states; subsystem dims are concatenated."""
    dims: tuple[int, ...] = ()
    for s in states:
        dims += s.dims
    return DensityOperator(kron_all(s.matrix for s in states), dims)


def _normalize_indices(indices: Iterable[int], n: int) -> list[int]:
    out = sorted({int(i) for i in indices})
    for i in out:
        if not 0 <= i < n:
            raise DimensionError(f"subsystem index {i} out of range for {n} subsystems")
    return out


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Reduced state on the subsystems listed in ``keep`` (0-based).

    Kept subsystems stay in their original order.
    """
    n = rho.n_subsystems
    keep = _normalize_indices(keep, n)
    if not keep:
        raise DimensionError("keep must name at least one subsystem")
    if len(keep) == n:
        return rho
    dims = rho.dims
    t = rho.matrix.reshape(dims + dims)
    # einsum subscripts: row indices a.., column indices A..; traced pairs share a letter
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise DimensionError("too many subsystems for partial_trace")
    rows = [letters[i] for i in range(n)]
    cols = [letters[i] if i not in keep else letters[n + i] for i in range(n)]
    out = [rows[i] for i in keep] + [cols[i] for i in keep]
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + "".join(out), t)
    kd = tuple(dims[i] for i in keep)
    d = math.prod(kd)
    return DensityOperator(reduced.reshape(d, d), kd)


def permute_subsystems(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of operator ``m``: output factor ``j`` is input ``perm[j]``."""
    dims = tuple(dims)
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise DimensionError(f"{list(perm)} is not a permutation of {n} subsystems")
    d = math.prod(dims)
    t = np.asarray(m).reshape(dims + dims)
    t = np.transpose(t, list(perm) + [n + p for p in perm])
    return t.reshape(d, d)


def embed_operator(op, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Lift ``op`` acting on subsystems ``targets`` (in that order) to the full space."""
    op = as_matrix(op, "op")
    dims = tuple(dims)
    n = len(dims)
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets) or any(not 0 <= t < n for t in targets):
        raise DimensionError(f"bad target subsystems {targets} for dims {list(dims)}")
    dt = math.prod(dims[t] for t in targets)
    if op.shape != (dt, dt):
        raise DimensionError(f"operator shape {op.shape} does not match targets of dim {dt}")
    rest = [i for i in range(n) if i not in targets]
    drest = math.prod(dims[i] for i in rest) if rest else 1
    full = np.kron(op, np.eye(drest, dtype=np.complex128))
    # full is ordered (targets..., rest...); undo that ordering
    order = targets + rest
    inverse = [order.index(i) for i in range(n)]
    return permute_subsystems(full, [dims[i] for i in order], inverse)


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Half the trace norm of ``rho - sigma``."""
    if rho.dim != sigma.dim:
        raise DimensionError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    a, b = rho.matrix, sigma.matrix
    if a.tobytes() > b.tobytes():
        a, b = b, a  # canonical order makes T exactly symmetric
    diff = a - b
    lam = np.linalg.eigvalsh((diff + dagger(diff)) / 2)
    return float(min(1.0, 0.5 * np.sum(np.abs(lam))))


# --------------------------------------------------------------------------
# JSON matrix format: {"rows": n, "cols": m, "entries": [[re, im], ...]}
# --------------------------------------------------------------------------

def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=np.complex128)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in a.reshape(-1)],
    }


def _entries(raw, name):
    try:
        vals = [complex(float(e[0]), float(e[1])) if isinstance(e, (list, tuple))
                else complex(float(e), 0.0) for e in raw]
    except (TypeError, ValueError, IndexError):
        raise PreconditionError(f"{name}: entries must be [re, im] pairs or reals") from None
    return np.array(vals, dtype=np.complex128)


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, raw = int(obj["rows"]), int(obj["cols"]), obj["entries"]
    except (KeyError, TypeError) as exc:
        raise PreconditionError(f"matrix object missing field {exc}") from None
    vals = _entries(raw, "matrix")
    if vals.size != rows * cols:
        raise DimensionError(f"matrix has {vals.size} entries, expected {rows}x{cols}")
    return as_matrix(vals.reshape(rows, cols))


def density_to_json(rho: DensityOperator) -> dict:
    out = matrix_to_json(rho.matrix)
    out["dims"] = list(rho.dims)
    return out


def density_from_json(obj: dict, tol: Tolerances = DEFAULT_TOL) -> DensityOperator:
    m = matrix_from_json(obj)
    return validate_density(m, obj.get("dims"), tol)


def vector_from_json(raw) -> np.ndarray:
    """A state vector given as a list of ``[re, im]`` pairs (or reals)."""
    if isinstance(raw, dict):
        raw = raw["entries"]
    return _entries(raw, "vector")


def vector_to_json(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=np.complex128)]
