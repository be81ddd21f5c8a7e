"""Classical and quantum registers and the channels between them.

Four channel classes move information between register types:

* :class:`CtcChannel`   classical -> classical (column-stochastic kernel)
* :class:`CtqChannel`   classical -> quantum   (symbol -> density operator)
* :class:`Povm`         quantum -> classical   (measurement with Kraus effects)
* :class:`QtqChannel`   quantum -> quantum     (Kraus form CPTP map)

plus :class:`Instrument`, an outcome-indexed family of CP maps that yields a
classical outcome together with a post-measurement state.

Kernels are column-stochastic: column ``j`` is the output law for input
symbol ``j``, so a distribution vector is pushed forward by left
multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ChannelError, DimensionError, PreconditionError
from .qmath import (
    DEFAULT_TOL,
    DensityOperator,
    Tolerances,
    as_matrix,
    dagger,
    density_from_json,
    density_to_json,
    is_unitary,
    matrix_from_json,
    matrix_to_json,
    validate_density,
)
from .rng import sample_index, stream


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct string labels."""

    symbols: tuple[str, ...]

    def __init__(self, symbols: Iterable):
        syms = tuple(str(s) for s in symbols)
        if not syms:
            raise PreconditionError("alphabet must be nonempty")
        if len(set(syms)) != len(syms):
            raise PreconditionError(f"alphabet labels must be unique: {list(syms)}")
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def of_size(cls, n: int) -> Alphabet:
        return cls(str(i) for i in range(n))

    def index(self, symbol) -> int:
        try:
            return self.symbols.index(str(symbol))
        except ValueError:
            raise PreconditionError(f"symbol {symbol!r} not in alphabet {list(self.symbols)}") from None

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, symbol):
        return str(symbol) in self.symbols

    def __getitem__(self, i):
        return self.symbols[i]


@dataclass(frozen=True, eq=False)
class ClassicalDistribution:
    alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).reshape(-1)
        if p.size != len(self.alphabet):
            raise DimensionError(f"{p.size} probabilities for {len(self.alphabet)} symbols")
        if not np.all(np.isfinite(p)) or np.any(p < -DEFAULT_TOL.tr):
            raise PreconditionError(f"probabilities must be finite and non-negative: {p}")
        if abs(p.sum() - 1.0) > DEFAULT_TOL.tr:
            raise PreconditionError(f"probabilities sum to {p.sum():.12g}, not 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def point(cls, alphabet: Alphabet, symbol) -> ClassicalDistribution:
        p = np.zeros(len(alphabet))
        p[alphabet.index(symbol)] = 1.0
        return cls(alphabet, p)

    @classmethod
    def uniform(cls, alphabet: Alphabet) -> ClassicalDistribution:
        return cls(alphabet, np.full(len(alphabet), 1.0 / len(alphabet)))

    def prob(self, symbol) -> float:
        return float(self.probs[self.alphabet.index(symbol)])

    def as_dict(self) -> dict[str, float]:
        return {s: float(p) for s, p in zip(self.alphabet, self.probs)}


# --------------------------------------------------------------------------
# channel types
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CptpReport:
    """Outcome of :func:`validate_cptp`; truthy iff the family is trace preserving."""

    ok: bool
    deviation: float
    deficit: float
    message: str

    def __bool__(self):
        return self.ok


def _kraus_list(kraus, name="Kraus operator") -> list[np.ndarray]:
    ops = [as_matrix(k, name) for k in kraus]
    if not ops:
        raise PreconditionError("Kraus family must be nonempty")
    shape = ops[0].shape
    for k in ops:
        if k.shape != shape:
            raise DimensionError(f"{name}s have unequal shapes {shape} and {k.shape}")
    return ops


def validate_cptp(kraus: Sequence, tol: Tolerances = DEFAULT_TOL) -> CptpReport:
    """Check the completeness relation ``sum_i K_i^dag K_i = I``.

    ``deviation`` is the max-entry error of the sum against the identity and
    ``deficit`` is ``1 - lambda_min(sum)``, the largest probability that can
    leak out of the channel on some input.
    """
    ops = _kraus_list(kraus)
    d_in = ops[0].shape[1]
    s = sum(dagger(k) @ k for k in ops)
    dev = float(np.max(np.abs(s - np.eye(d_in))))
    lam = np.linalg.eigvalsh((s + dagger(s)) / 2)
    deficit = float(1.0 - lam[0])
    ok = dev <= tol.cptp
    if ok:
        msg = "trace preserving"
    elif lam[-1] <= 1.0 + tol.cptp:
        msg = f"trace deficit {deficit:.6g} (sum K^dag K has min eigenvalue {lam[0]:.6g})"
    else:
        msg = f"trace increasing: sum K^dag K has max eigenvalue {lam[-1]:.6g}"
    return CptpReport(ok, dev, deficit, msg)


@dataclass(frozen=True, eq=False)
class CtcChannel:
    in_alphabet: Alphabet
    out_alphabet: Alphabet
    kernel: np.ndarray

    def __post_init__(self):
        k = np.array(self.kernel, dtype=float)
        if k.shape != (len(self.out_alphabet), len(self.in_alphabet)):
            raise DimensionError(
                f"kernel shape {k.shape} must be (|out|, |in|) = "
                f"({len(self.out_alphabet)}, {len(self.in_alphabet)})"
            )
        if np.any(k < 0) or not np.all(np.isfinite(k)):
            raise ChannelError("kernel entries must be finite and non-negative")
        sums = k.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1.0) > DEFAULT_TOL.tr)
        if bad.size:
            raise ChannelError(f"kernel column(s) {bad.tolist()} sum to {sums[bad].tolist()}, not 1")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    @classmethod
    def identity(cls, alphabet: Alphabet) -> CtcChannel:
        return cls(alphabet, alphabet, np.eye(len(alphabet)))


@dataclass(frozen=True, eq=False)
class CtqChannel:
    in_alphabet: Alphabet
    encodings: Mapping[str, DensityOperator]

    def __post_init__(self):
        enc = {}
        for s in self.in_alphabet:
            if s not in self.encodings:
                raise ChannelError(f"no encoding for symbol {s!r}")
            rho = self.encodings[s]
            if not isinstance(rho, DensityOperator):
                rho = validate_density(rho)
            enc[s] = rho
        dims = {rho.dims for rho in enc.values()}
        if len(dims) != 1:
            raise ChannelError(f"encodings have unequal dims {sorted(dims)}")
        object.__setattr__(self, "encodings", enc)

    @property
    def dims(self) -> tuple[int, ...]:
        return next(iter(self.encodings.values())).dims

    @classmethod
    def basis_encoding(cls, alphabet: Alphabet, dim: int | None = None) -> CtqChannel:
        """Symbol ``i`` -> ``|i><i|`` in dimension ``dim`` (default ``|alphabet|``)."""
        from .qmath import basis_state

        dim = len(alphabet) if dim is None else dim
        if dim < len(alphabet):
            raise DimensionError(f"dimension {dim} too small to encode {len(alphabet)} symbols")
        return cls(alphabet, {s: basis_state(i, dim) for i, s in enumerate(alphabet)})


@dataclass(frozen=True, eq=False)
class Povm:
    """Measurement given by Kraus effects ``M_k`` with ``sum_k M_k^dag M_k = I``.

    Outcome probabilities follow the Born rule ``Tr(M_k rho M_k^dag)``.
    """

    outcome_alphabet: Alphabet
    elements: Mapping[str, np.ndarray]

    def __post_init__(self):
        els = {}
        for k in self.outcome_alphabet:
            if k not in self.elements:
                raise ChannelError(f"no measurement operator for outcome {k!r}")
            els[k] = as_matrix(self.elements[k], f"element {k!r}")
            els[k].setflags(write=False)
        report = validate_cptp(list(els.values()))
        if not report:
            raise ChannelError(f"POVM effects do not complete to identity: {report.message}")
        object.__setattr__(self, "elements", els)

    @property
    def dim(self) -> int:
        return next(iter(self.elements.values())).shape[1]

    @classmethod
    def from_basis(cls, vectors: Sequence, alphabet: Alphabet | None = None) -> Povm:
        """Projective measurement onto the orthonormal ``vectors``."""
        vecs = [np.asarray(v, dtype=np.complex128).reshape(-1) for v in vectors]
        alphabet = alphabet or Alphabet.of_size(len(vecs))
        return cls(alphabet, {k: np.outer(v, v.conj()) for k, v in zip(alphabet, vecs)})

    @classmethod
    def computational(cls, dim: int = 2) -> Povm:
        return cls.from_basis(np.eye(dim))

    def probabilities(self, rho: DensityOperator) -> np.ndarray:
        _check_dim(self.dim, rho)
        p = np.array([np.real(np.trace(m @ rho.matrix @ dagger(m)))
                      for m in self.elements.values()])
        return np.clip(p, 0.0, None)


@dataclass(frozen=True, eq=False)
class QtqChannel:
    """CPTP map in Kraus form ``rho -> sum_i K_i rho K_i^dag``."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = _kraus_list(self.kraus)
        if ops[0].shape[0] != ops[0].shape[1]:
            raise DimensionError("QTQ channels here map a space to itself; Kraus ops must be square")
        report = validate_cptp(ops)
        if not report:
            raise ChannelError(f"Kraus family is not trace preserving: {report.message}")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", tuple(ops))

    @classmethod
    def unitary(cls, u, tol: Tolerances = DEFAULT_TOL) -> QtqChannel:
        u = as_matrix(u, "unitary")
        if not is_unitary(u, tol.unitary):
            raise ChannelError("matrix is not unitary")
        return cls((u,))

    @classmethod
    def identity(cls, dim: int) -> QtqChannel:
        return cls((np.eye(dim, dtype=np.complex128),))

    @classmethod
    def depolarizing(cls, p: float, dim: int = 2) -> QtqChannel:
        """``rho -> (1-p) rho + p I/d`` via the Weyl operator basis; ``p = 1`` is fully depolarizing."""
        if not 0.0 <= p <= 1.0 + 1.0 / (dim * dim - 1):
            raise PreconditionError(f"depolarizing parameter {p} out of range")
        shift = np.roll(np.eye(dim), 1, axis=0)
        clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
        ops = []
        for a in range(dim):
            for b in range(dim):
                w = np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
                weight = 1 - p + p / dim**2 if (a, b) == (0, 0) else p / dim**2
                if weight > 0:
                    ops.append(np.sqrt(weight) * w)
        return cls(tuple(ops))

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def is_unitary(self) -> bool:
        return len(self.kraus) == 1 and is_unitary(self.kraus[0])

    def then(self, other: QtqChannel) -> QtqChannel:
        """The channel that applies ``self`` first and ``other`` second."""
        if other.dim != self.dim:
            raise DimensionError(f"cannot compose dimensions {self.dim} and {other.dim}")
        return QtqChannel(tuple(b @ a for b in other.kraus for a in self.kraus))


@dataclass(frozen=True, eq=False)
class Instrument:
    """Outcome-indexed CP maps ``E_k``, each in Kraus form, summing to a CPTP map."""

    outcome_alphabet: Alphabet
    branches: Mapping[str, tuple[np.ndarray, ...]]

    def __post_init__(self):
        br = {}
        for k in self.outcome_alphabet:
            if k not in self.branches:
                raise ChannelError(f"no branch for outcome {k!r}")
            br[k] = tuple(_kraus_list(self.branches[k], f"branch {k!r} Kraus operator"))
            for op in br[k]:
                op.setflags(write=False)
        report = validate_cptp([op for ops in br.values() for op in ops])
        if not report:
            raise ChannelError(f"instrument branches do not sum to a trace-preserving map: {report.message}")
        object.__setattr__(self, "branches", br)

    @classmethod
    def from_povm(cls, povm: Povm) -> Instrument:
        return cls(povm.outcome_alphabet, {k: (m,) for k, m in povm.elements.items()})

    @property
    def dim(self) -> int:
        return next(iter(self.branches.values()))[0].shape[1]

    def branch(self, k: str, rho: DensityOperator) -> np.ndarray:
        """Unnormalized ``E_k(rho)``."""
        return sum(op @ rho.matrix @ dagger(op) for op in self.branches[k])

    def probabilities(self, rho: DensityOperator) -> np.ndarray:
        _check_dim(self.dim, rho)
        p = np.array([np.real(np.trace(self.branch(k, rho))) for k in self.outcome_alphabet])
        return np.clip(p, 0.0, None)


def _check_dim(dim: int, rho: DensityOperator):
    if rho.dim != dim:
        raise DimensionError(f"operator acts on dimension {dim}, state has dimension {rho.dim}")


def _check_alphabet(expected: Alphabet, got: Alphabet):
    if expected.symbols != got.symbols:
        raise PreconditionError(f"alphabet mismatch: {list(expected)} vs {list(got)}")


# --------------------------------------------------------------------------
# applying channels
# --------------------------------------------------------------------------

def apply_ctc(ch: CtcChannel, d: ClassicalDistribution) -> ClassicalDistribution:
    _check_alphabet(ch.in_alphabet, d.alphabet)
    return ClassicalDistribution(ch.out_alphabet, ch.kernel @ d.probs)


def apply_ctq(ch: CtqChannel, d: ClassicalDistribution,
              tol: Tolerances = DEFAULT_TOL) -> DensityOperator:
    _check_alphabet(ch.in_alphabet, d.alphabet)
    m = sum(p * ch.encodings[s].matrix for s, p in zip(d.alphabet, d.probs))
    return validate_density(m, ch.dims, tol)


def qtc_distribution(p: Povm, rho: DensityOperator) -> ClassicalDistribution:
    probs = p.probabilities(rho)
    return ClassicalDistribution(p.outcome_alphabet, probs / probs.sum())


def qtc_sample(p: Povm, rho: DensityOperator, rng_seed,
               tol: Tolerances = DEFAULT_TOL) -> tuple[str, DensityOperator]:
    """Measure ``rho`` once.

    Returns the outcome label and the post-measurement state
    ``M_k rho M_k^dag / Pr(k)``. ``rng_seed`` is an integer seed or a
    ``numpy`` Generator; the same seed always gives the same result.
    """
    probs = p.probabilities(rho)
    i = sample_index(probs, stream(rng_seed), tol.prob)
    k = p.outcome_alphabet[i]
    m = p.elements[k]
    post = m @ rho.matrix @ dagger(m) / probs[i]
    return k, validate_density(post, rho.dims, tol)


def apply_qtq(ch: QtqChannel, rho: DensityOperator,
              tol: Tolerances = DEFAULT_TOL) -> DensityOperator:
    _check_dim(ch.dim, rho)
    m = sum(k @ rho.matrix @ dagger(k) for k in ch.kraus)
    return validate_density(m, rho.dims, tol)


def apply_instrument(instr: Instrument, rho: DensityOperator, rng_seed,
                     tol: Tolerances = DEFAULT_TOL) -> tuple[str, float, DensityOperator]:
    """Sample an instrument outcome.

    Returns ``(k, Pr(k), E_k(rho)/Pr(k))`` with ``Pr(k) = Tr E_k(rho)``.
    """
    probs = instr.probabilities(rho)
    if abs(probs.sum() - 1.0) > tol.tr:
        raise ChannelError(f"instrument outcome probabilities sum to {probs.sum():.12g}")
    i = sample_index(probs, stream(rng_seed), tol.prob)
    k = instr.outcome_alphabet[i]
    post = instr.branch(k, rho) / probs[i]
    return k, float(probs[i]), validate_density(post, rho.dims, tol)


def measurement_channel(p: Povm, rho: DensityOperator,
                        tol: Tolerances = DEFAULT_TOL) -> DensityOperator:
    """``rho -> sum_k M_k rho M_k^dag (x) |k><k|`` on system (x) outcome pointer.

    The pointer is a fresh register of dimension ``|outcomes|`` whose basis
    state ``|k>`` records outcome ``k``; it is the last subsystem.
    """
    _check_dim(p.dim, rho)
    n = len(p.outcome_alphabet)
    out = np.zeros((rho.dim * n, rho.dim * n), dtype=np.complex128)
    for i, k in enumerate(p.outcome_alphabet):
        m = p.elements[k]
        ptr = np.zeros((n, n))
        ptr[i, i] = 1.0
        out += np.kron(m @ rho.matrix @ dagger(m), ptr)
    return validate_density(out, rho.dims + (n,), tol)


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------

CHANNEL_KINDS = ("ctc", "ctq", "qtc", "qtq", "instrument")


def channel_to_json(ch) -> dict:
    if isinstance(ch, CtcChannel):
        return {"kind": "ctc", "in_alphabet": list(ch.in_alphabet),
                "out_alphabet": list(ch.out_alphabet), "kernel": matrix_to_json(ch.kernel)}
    if isinstance(ch, CtqChannel):
        return {"kind": "ctq", "in_alphabet": list(ch.in_alphabet),
                "encodings": {s: density_to_json(r) for s, r in ch.encodings.items()}}
    if isinstance(ch, Povm):
        return {"kind": "qtc", "outcomes": list(ch.outcome_alphabet),
                "elements": {k: matrix_to_json(m) for k, m in ch.elements.items()}}
    if isinstance(ch, QtqChannel):
        return {"kind": "qtq", "kraus": [matrix_to_json(k) for k in ch.kraus]}
    if isinstance(ch, Instrument):
        return {"kind": "instrument", "outcomes": list(ch.outcome_alphabet),
                "branches": {k: [matrix_to_json(op) for op in ops]
                             for k, ops in ch.branches.items()}}
    raise TypeError(f"not a channel: {type(ch).__name__}")


def channel_from_json(obj: Mapping):
    """Inverse of :func:`channel_to_json`, dispatching on ``obj["kind"]``."""
    kind = obj.get("kind")
    try:
        if kind == "ctc":
            return CtcChannel(Alphabet(obj["in_alphabet"]), Alphabet(obj["out_alphabet"]),
                              np.real(matrix_from_json(obj["kernel"])))
        if kind == "ctq":
            return CtqChannel(Alphabet(obj["in_alphabet"]),
                              {s: density_from_json(r) for s, r in obj["encodings"].items()})
        if kind == "qtc":
            return Povm(Alphabet(obj["outcomes"]),
                        {k: matrix_from_json(m) for k, m in obj["elements"].items()})
        if kind == "qtq":
            return QtqChannel(tuple(matrix_from_json(k) for k in obj["kraus"]))
        if kind == "instrument":
            return Instrument(Alphabet(obj["outcomes"]),
                              {k: tuple(matrix_from_json(m) for m in ops)
                               for k, ops in obj["branches"].items()})
    except KeyError as exc:
        raise PreconditionError(f"{kind} channel missing field {exc}") from None
    raise PreconditionError(f"unknown channel kind {kind!r}; expected one of {list(CHANNEL_KINDS)}")
