"""Scenario files: loading, validation and dispatch to the library.

A scenario is a JSON object with a ``kind`` and kind-specific fields. Any
string value ending in ``.json`` is an asset reference, resolved relative to
the file that contains it and inlined before validation, so the digest
covers every input. Small named presets (``"Z"``, ``"+0"``, ``"singlet"``,
...) stand in for common matrices, states and measurements.
"""

from __future__ import annotations

import json
import math
import os
import re
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from ..agents import (
    InstrumentAction,
    PolicyConfig,
    QagiAgent,
    QuantumEnvironment,
    UnitaryAction,
    coherent_learn_check,
    identity_update,
    load_environment_class,
    prior_weights,
    reencode_update,
    run_cagi_classical,
    run_cagi_quantum,
    run_qagi_classical,
    run_qagi_quantum,
    table_update,
    variational_learn,
)
from ..agents.aixi import check_budget
from ..errors import BudgetExceededError, QagiLabError, ScenarioError
from ..foundations import (
    TSIRELSON,
    ChshSetting,
    CopyObservationChannel,
    chsh_lhv_max,
    chsh_quantum,
    classical_identity_check,
    clone_fidelity_optimize,
    correlator,
    indistinguishability_check,
    ks_assignment_search,
    load_ray_system,
    noninjectivity_witness,
    nocloning_check,
    ray_system_from_json,
    single_basis_system,
)
from ..qmath import (
    DensityOperator,
    as_matrix,
    density_from_json,
    density_to_json,
    matrix_from_json,
    maximally_mixed,
    pure_state,
    vector_from_json,
)
from ..registers import (
    Alphabet,
    CtqChannel,
    Instrument,
    Povm,
    QtqChannel,
    channel_from_json,
)
from ..rng import normalize_seed
from .. import standard
from .report import Report, canonical_digest, emit_report

KINDS = ("cagi_classical", "cagi_quantum", "qagi_classical", "qagi_quantum",
         "chsh", "ks", "noclone", "indist", "identity", "variational", "coherent_learn")
STOCHASTIC = ("cagi_classical", "cagi_quantum", "qagi_classical", "qagi_quantum")
SEED_ENV = "QAGI_LAB_SEED"
COMMON_FIELDS = {"id", "kind", "seed", "steps", "description", "output"}
_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")
_MAX_DEPTH = 8


@dataclass(eq=False)
class Scenario:
    id: str
    kind: str
    data: dict
    path: Path | None = None
    text: str = ""
    seed: int | None = None
    steps: int | None = None
    output: dict = field(default_factory=dict)

    def line_of(self, name: str | None) -> int | None:
        return _line_of(self.text, name)

    def error(self, message: str, name: str | None = None) -> ScenarioError:
        return ScenarioError(message, self.path, name, self.line_of(name))


def _line_of(text: str, name: str | None) -> int | None:
    if not text or not name:
        return None
    key = str(name).split(".")[-1]
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if m is None:
        return None
    return text.count("\n", 0, m.start()) + 1


# --------------------------------------------------------------------------
# loading
# --------------------------------------------------------------------------

def _inline(obj: Any, base: Path, root: Path | None, depth: int = 0) -> Any:
    if isinstance(obj, str) and obj.endswith(".json"):
        if depth >= _MAX_DEPTH:
            raise ScenarioError(f"asset references nested deeper than {_MAX_DEPTH}", root)
        p = (base / obj).resolve()
        if not p.is_file():
            raise ScenarioError(f"referenced file {obj!r} does not exist (looked in {base})", root)
        try:
            loaded = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON: {exc.msg}", p, None, exc.lineno) from None
        return _inline(loaded, p.parent, root, depth + 1)
    if isinstance(obj, dict):
        return {k: _inline(v, base, root, depth) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_inline(v, base, root, depth) for v in obj]
    return obj


def scenario_from_dict(obj: Mapping, base_dir: str | Path | None = None,
                       path: str | Path | None = None, text: str = "") -> Scenario:
    """Build a :class:`Scenario` from an already-parsed object."""
    path = Path(path) if path is not None else None
    base = Path(base_dir) if base_dir is not None else (path.parent if path else Path.cwd())
    if not isinstance(obj, Mapping):
        raise ScenarioError("scenario must be a JSON object", path)
    probe = Scenario("", "", dict(obj), path, text)
    kind = obj.get("kind")
    if kind is None:
        raise probe.error("missing required field", "kind")
    if kind not in KINDS:
        raise probe.error(f"unknown kind {kind!r}; expected one of {list(KINDS)}", "kind")
    default_id = path.stem if path is not None else kind
    sid = str(obj.get("id", default_id))
    if not _ID_RE.match(sid):
        raise probe.error(f"id {sid!r} must be alphanumeric with '_', '-' or '.'", "id")
    unknown = sorted(set(obj) - COMMON_FIELDS - set(_FIELDS[kind]))
    if unknown:
        raise probe.error(f"unknown field for kind {kind!r} (allowed: "
                          f"{sorted(COMMON_FIELDS | set(_FIELDS[kind]))})", unknown[0])
    seed = obj.get("seed")
    if seed is not None:
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise probe.error(f"seed must be an unsigned 64-bit integer, got {seed!r}", "seed")
    steps = obj.get("steps")
    if steps is not None and (isinstance(steps, bool) or not isinstance(steps, int) or steps < 0):
        raise probe.error(f"steps must be a non-negative integer, got {steps!r}", "steps")
    output = obj.get("output", {})
    if not isinstance(output, Mapping):
        raise probe.error("output must be an object", "output")
    data = _inline(dict(obj), base, path)
    return Scenario(sid, kind, data, path, text, seed, steps, dict(output))


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ScenarioError("scenario file does not exist", path)
    text = path.read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", path, None, exc.lineno) from None
    return scenario_from_dict(obj, path.parent, path, text)


def resolve_seed(override: int | None, sc: Scenario) -> int:
    """Seed precedence: explicit override, scenario ``seed``, ``$QAGI_LAB_SEED``, then 0."""
    if override is not None:
        return normalize_seed(override)
    if sc.seed is not None:
        return normalize_seed(sc.seed)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return normalize_seed(int(env, 0))
        except ValueError:
            raise ScenarioError(f"${SEED_ENV}={env!r} is not an unsigned integer") from None
    return 0


# --------------------------------------------------------------------------
# presets and asset parsers
# --------------------------------------------------------------------------

MATRIX_PRESETS = {"I": standard.I2, "X": standard.X, "Y": standard.Y, "Z": standard.Z,
                  "H": standard.H, "CNOT": standard.CNOT, "SWAP": standard.SWAP}
_KETS = {"0": standard.KET0, "1": standard.KET1, "+": standard.KET_PLUS, "-": standard.KET_MINUS}


def parse_matrix(spec) -> np.ndarray:
    if isinstance(spec, str):
        if spec not in MATRIX_PRESETS:
            raise ValueError(f"unknown matrix preset {spec!r}; known: {sorted(MATRIX_PRESETS)}")
        return MATRIX_PRESETS[spec]
    if isinstance(spec, Mapping):
        return matrix_from_json(spec)
    return as_matrix(np.array(spec, dtype=np.complex128))


def parse_vector(spec) -> np.ndarray:
    """A state vector: ``[[re, im], ...]``, a ket string over ``0 1 + -`` or a Bell name."""
    if isinstance(spec, str):
        if spec in ("phi+", "phi-", "psi+", "psi-"):
            return standard.bell_vector(spec)
        if spec == "singlet":
            return standard.bell_vector("psi-")
        if spec and all(c in _KETS for c in spec):
            v = np.ones(1, dtype=np.complex128)
            for c in spec:
                v = np.kron(v, _KETS[c])
            return v
        raise ValueError(f"unknown state preset {spec!r}")
    return vector_from_json(spec)


def parse_state(spec, dims=None) -> DensityOperator:
    """Density operator from a matrix object, a vector or preset, or ``"I/d"``."""
    if isinstance(spec, str):
        m = re.fullmatch(r"I/(\d+)", spec)
        if m:
            return maximally_mixed((int(m.group(1)),))
        v = parse_vector(spec)
        if dims is None and v.size == 2 ** len(spec) and all(c in _KETS for c in spec):
            dims = (2,) * len(spec)
        if dims is None and spec in ("phi+", "phi-", "psi+", "psi-", "singlet"):
            dims = (2, 2)
        return pure_state(v, dims)
    if isinstance(spec, Mapping):
        if "vector" in spec:
            return pure_state(parse_vector(spec["vector"]), spec.get("dims", dims))
        return density_from_json(spec)
    return pure_state(parse_vector(spec), dims)


def parse_povm(spec) -> Povm:
    if isinstance(spec, str):
        if spec == "Z":
            return Povm.computational(2)
        if spec == "X":
            return Povm.from_basis([standard.KET_PLUS, standard.KET_MINUS])
        m = re.fullmatch(r"computational:(\d+)", spec)
        if m:
            return Povm.computational(int(m.group(1)))
        raise ValueError(f"unknown measurement preset {spec!r}")
    if isinstance(spec, Mapping) and "basis" in spec:
        alph = Alphabet(spec["outcomes"]) if "outcomes" in spec else None
        return Povm.from_basis([parse_vector(v) for v in spec["basis"]], alph)
    ch = channel_from_json(spec)
    if not isinstance(ch, Povm):
        raise ValueError(f"expected a qtc channel, got kind {spec.get('kind')!r}")
    return ch


def parse_qtq(spec) -> QtqChannel:
    if isinstance(spec, str):
        return QtqChannel.unitary(parse_matrix(spec))
    if isinstance(spec, Mapping) and spec.get("kind") == "qtq":
        return channel_from_json(spec)
    if isinstance(spec, Mapping) and "depolarizing" in spec:
        return QtqChannel.depolarizing(float(spec["depolarizing"]), int(spec.get("dim", 2)))
    return QtqChannel.unitary(parse_matrix(spec))


def parse_instrument(spec) -> Instrument:
    if isinstance(spec, Mapping) and spec.get("kind") == "instrument":
        return channel_from_json(spec)
    return Instrument.from_povm(parse_povm(spec))


def parse_ctq(spec, alphabet=None, dims=None) -> CtqChannel:
    """A CTQ encoding; ``"basis"`` maps symbol ``i`` to ``|i><i|``."""
    if spec is None or spec == "basis":
        if alphabet is None:
            raise ValueError("basis encoding needs an alphabet")
        dim = int(np.prod(dims)) if dims is not None else None
        ch = CtqChannel.basis_encoding(Alphabet(alphabet), dim)
        if dims is not None and tuple(ch.dims) != tuple(dims):
            enc = {s: DensityOperator(r.matrix, tuple(dims)) for s, r in ch.encodings.items()}
            ch = CtqChannel(ch.in_alphabet, enc)
        return ch
    if isinstance(spec, Mapping) and spec.get("kind") == "ctq":
        return channel_from_json(spec)
    if isinstance(spec, Mapping):
        enc = {str(s): parse_state(v, dims) for s, v in spec.items()}
        return CtqChannel(Alphabet(list(enc)), enc)
    raise ValueError("encoding must be 'basis', a ctq channel or {symbol: state}")


def parse_agent(spec: Mapping) -> QagiAgent:
    """Quantum agent from ``{internal_state, action_table, reward_table, update_rule}``."""
    if not isinstance(spec, Mapping):
        raise ValueError("agent must be an object")
    rho_a = parse_state(spec["internal_state"], spec.get("dims"))
    actions = {}
    for label, entry in spec["action_table"].items():
        typ = entry.get("type")
        if typ == "unitary":
            actions[str(label)] = UnitaryAction(parse_qtq(entry["channel"]), entry.get("target", "E"))
        elif typ == "instrument":
            src = entry["channel"] if "channel" in entry else entry["povm"]
            actions[str(label)] = InstrumentAction(parse_instrument(src))
        else:
            raise ValueError(f"action {label!r}: type must be 'unitary' or 'instrument', got {typ!r}")
    rewards = {str(k): float(v) for k, v in spec.get("reward_table", {}).items()}
    rule = spec.get("update_rule")
    if rule is None:
        update = None
    elif rule == "identity":
        update = identity_update
    elif rule == "reencode":
        outcomes = []
        for act in actions.values():
            if isinstance(act, InstrumentAction):
                outcomes += [k for k in act.instrument.outcome_alphabet if k not in outcomes]
        update = reencode_update(rho_a.dim, Alphabet(outcomes))
    elif isinstance(rule, Mapping) and "table" in rule:
        update = table_update({(e["action"], e.get("observation")): parse_qtq(e["channel"])
                               for e in rule["table"]})
    else:
        raise ValueError(f"update_rule must be 'reencode', 'identity' or {{'table': [...]}}, got {rule!r}")
    return QagiAgent(rho_a, actions, rewards, update)


def parse_environments(spec) -> list:
    entries = spec["environments"] if isinstance(spec, Mapping) and "environments" in spec else spec
    if isinstance(entries, Mapping):
        entries = [entries]
    return load_environment_class(entries)


def _family(name: str):
    """Preset parametrized unitaries for variational learning."""
    families = {
        "ry": (1, lambda th: QtqChannel.unitary(standard.ry(th[0]))),
        "rx": (1, lambda th: QtqChannel.unitary(standard.rx(th[0]))),
        "ry_rz": (2, lambda th: QtqChannel.unitary(standard.rz(th[1]) @ standard.ry(th[0]))),
    }
    if name not in families:
        raise ValueError(f"unknown family {name!r}; known: {sorted(families)}")
    return families[name]


# --------------------------------------------------------------------------
# kinds: each builder validates inputs and returns a runner(seed, steps)
# --------------------------------------------------------------------------

Runner = Callable[[int, "int | None"], tuple[list, dict]]


@contextmanager
def _field(sc: Scenario, name: str):
    """Turn any parse failure inside the block into a ScenarioError naming ``name``."""
    try:
        yield
    except (ScenarioError, BudgetExceededError):
        raise
    except (QagiLabError, ValueError, KeyError, TypeError, IndexError) as exc:
        msg = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        raise sc.error(msg, name) from None


def _require(sc: Scenario, *names: str):
    for n in names:
        if n not in sc.data:
            raise sc.error(f"required for kind {sc.kind!r}", n)


def _steps(sc: Scenario, steps: int | None) -> int:
    n = steps if steps is not None else sc.steps
    if n is None:
        raise sc.error(f"required for kind {sc.kind!r}", "steps")
    return int(n)


def _trace_summary(trace) -> dict:
    counts: dict[str, int] = {}
    for a in trace.actions:
        counts[a] = counts.get(a, 0) + 1
    rewards = [r.reward for r in trace.records]
    out = {"steps": len(trace.records), "total_reward": float(sum(rewards)),
           "mean_reward": float(np.mean(rewards)) if rewards else 0.0,
           "action_counts": counts}
    if trace.records and trace.records[-1].weights is not None:
        out["final_weights"] = dict(trace.records[-1].weights)
    if trace.initial_weights is not None:
        out["initial_weights"] = dict(trace.initial_weights)
    return out


def _build_chsh(sc: Scenario) -> Runner:
    d = sc.data
    with _field(sc, "state"):
        state = parse_state(d.get("state", "singlet"), (2, 2))
    with _field(sc, "angles"):
        angles = d.get("angles", [0.0, math.pi / 2, math.pi / 4, -math.pi / 4])
        setting = ChshSetting(state, tuple(float(a) for a in angles))

    def run(seed, steps):
        s = chsh_quantum(setting)
        lhv = chsh_lhv_max(setting.angles)
        a, a2, b, b2 = setting.angles
        corr = {"E_ab": correlator(state, a, b), "E_ab'": correlator(state, a, b2),
                "E_a'b": correlator(state, a2, b), "E_a'b'": correlator(state, a2, b2)}
        summary = {"S": s, "abs_S": abs(s), "tsirelson": float(TSIRELSON),
                   "lhv_max": lhv.value, "n_strategies": lhv.n_strategies,
                   "best_strategy": list(lhv.best_strategy),
                   "violates_lhv": abs(s) > lhv.value + 1e-9,
                   "angles": list(setting.angles), "correlators": corr}
        return [dict(check="chsh", **{k: summary[k] for k in ("S", "abs_S", "lhv_max")})], summary
    return run


def _build_ks(sc: Scenario) -> Runner:
    d = sc.data
    with _field(sc, "rays"):
        if d.get("rays") == "single_basis" or d.get("system") == "single_basis":
            system = single_basis_system(int(d.get("dimension", 3)))
        elif "rays" in d:
            system = ray_system_from_json(d["rays"])
        else:
            system = load_ray_system()
    if "bases" in d:
        with _field(sc, "bases"):
            system = system.with_bases(d["bases"])

    def run(seed, steps):
        res = ks_assignment_search(system)
        summary = {"verdict": res.verdict, "n_assignments": len(res.assignments),
                   "certificate": res.certificate}
        rec = res.to_json()
        return [dict(check="ks", **rec)], summary
    return run


def _build_noclone(sc: Scenario) -> Runner:
    d = sc.data
    with _field(sc, "states"):
        states = [parse_vector(s) for s in d.get("states", ["0", "+"])]
        for s in states:
            if abs(np.linalg.norm(s) - 1) > 1e-8:
                raise ValueError("states must be unit vectors")
    optimize = bool(d.get("optimize", True))
    iters, restarts = int(d.get("iters", 300)), int(d.get("restarts", 3))

    def run(seed, steps):
        records = []
        for i in range(len(states)):
            for j in range(i + 1, len(states)):
                v = nocloning_check(states[i], states[j])
                records.append(dict(check="nocloning", pair=[i, j], **v.to_json()))
        summary = {"all_pairs_feasible": all(r["verdict"] == "Feasible" for r in records)}
        if optimize:
            best = clone_fidelity_optimize(states, iters=iters, seed=seed, restarts=restarts)
            opt = best.to_json()
            opt.pop("params")
            records.append(dict(check="clone_fidelity", **opt))
            summary.update(worst_fidelity=best.worst_fidelity, family=best.family,
                           bound_respected=best.bound_respected)
        return records, summary
    return run


def _build_indist(sc: Scenario) -> Runner:
    _require(sc, "state")
    d = sc.data
    with _field(sc, "state"):
        psi = parse_vector(d["state"])
    with _field(sc, "observable"):
        obs = parse_matrix(d.get("observable", "Z"))

    def run(seed, steps):
        with _field(sc, "state"):
            rep = indistinguishability_check(psi, obs)
        out = rep.to_json()
        return [dict(check="indistinguishability", **out)], out
    return run


_READOUTS = {
    "identity": lambda s: s,
    "constant": lambda s: "0",
    "parity": lambda s: str(sum(map(int, re.findall(r"\d", s))) % 2),
}


def _build_identity(sc: Scenario) -> Runner:
    d = sc.data
    if "alphabet" not in d and "povm" not in d:
        raise sc.error("identity scenarios need 'alphabet' and/or 'povm'", "alphabet")
    lc = None
    if "alphabet" in d:
        with _field(sc, "alphabet"):
            raw = d["alphabet"]
            alph = Alphabet.of_size(raw) if isinstance(raw, int) else Alphabet(raw)
        with _field(sc, "readout"):
            ro = d.get("readout", "parity")
            if isinstance(ro, str):
                if ro not in _READOUTS:
                    raise ValueError(f"readout preset must be one of {sorted(_READOUTS)}")
                fn = _READOUTS[ro]
                table = {s: fn(s) for s in alph}
            else:
                table = {str(k): str(v) for k, v in ro.items()}
            outs = Alphabet(sorted(set(table.values())))
            lc = CopyObservationChannel(alph, outs, table)
            for s in alph:
                lc(s)
    povm = None
    if "povm" in d:
        with _field(sc, "povm"):
            povm = parse_povm(d["povm"])
    n_random = int(d.get("n_random", 16))

    def run(seed, steps):
        records, summary = [], {}
        if lc is not None:
            rep = classical_identity_check(lc)
            records.append(dict(check="classical_identity", **rep.to_json()))
            summary["classical_round_trip"] = rep.verified
            summary["alphabet_size"] = rep.checked
        if povm is not None:
            w = noninjectivity_witness(povm, seed=seed, n_random=n_random)
            records.append(dict(check="noninjectivity", **w.to_json()))
            summary["measurement_verdict"] = w.verdict
            if w.labels is not None:
                summary["witness_labels"] = list(w.labels)
                summary["output_difference"] = w.output_difference
        return records, summary
    return run


def _cagi_config(sc: Scenario) -> PolicyConfig:
    d = sc.data
    with _field(sc, "horizon"):
        return PolicyConfig(horizon=int(d.get("horizon", 1)), discount=float(d.get("discount", 1.0)),
                            budget=int(d.get("budget", 10 ** 6)))


def _build_cagi_classical(sc: Scenario) -> Runner:
    _require(sc, "environments")
    d = sc.data
    with _field(sc, "environments"):
        envs = parse_environments(d["environments"])
    by_id = {e.id: e for e in envs}
    true_id = d.get("true_env", envs[0].id)
    if true_id not in by_id:
        raise sc.error(f"unknown environment id {true_id!r}; known: {list(by_id)}", "true_env")
    cfg = _cagi_config(sc)
    check_budget(len(envs[0].actions), len(envs[0].percepts), cfg)
    mix = prior_weights(envs)

    def run(seed, steps):
        trace = run_cagi_classical(mix, by_id[true_id], cfg, _steps(sc, steps), seed)
        summary = _trace_summary(trace)
        summary["true_env"] = true_id
        return trace.to_records(), summary
    return run


def _build_cagi_quantum(sc: Scenario) -> Runner:
    _require(sc, "environments", "quantum_env")
    d = sc.data
    with _field(sc, "environments"):
        envs = parse_environments(d["environments"])
    q = d["quantum_env"]
    with _field(sc, "quantum_env"):
        state = parse_state(q["state"])
        readout = parse_povm(q.get("readout", f"computational:{state.dim}"))
        control = parse_ctq(q.get("control", "basis"), list(envs[0].actions))
        coupling = parse_qtq(q["coupling"]) if "coupling" in q else None
        rewards = q.get("reward_table", dict(envs[0].rewards))
        qenv = QuantumEnvironment(state, control, readout,
                                  {str(k): float(v) for k, v in rewards.items()}, coupling)
    cfg = _cagi_config(sc)
    check_budget(len(envs[0].actions), len(envs[0].percepts), cfg)
    mix = prior_weights(envs)

    def run(seed, steps):
        with _field(sc, "quantum_env"):
            trace = run_cagi_quantum(mix, qenv, cfg, _steps(sc, steps), seed)
        return trace.to_records(), _trace_summary(trace)
    return run


def _build_qagi_quantum(sc: Scenario) -> Runner:
    _require(sc, "agent", "env_state", "actions")
    d = sc.data
    with _field(sc, "agent"):
        agent = parse_agent(d["agent"])
    with _field(sc, "env_state"):
        env = parse_state(d["env_state"])
    actions = d["actions"]
    if not isinstance(actions, list) or any(a not in agent.action_table for a in actions):
        raise sc.error(f"actions must be a list of labels from {list(agent.action_table)}", "actions")
    keep = bool(d.get("keep_states", False))

    def run(seed, steps):
        n = steps if steps is not None else (sc.steps if sc.steps is not None else len(actions))
        if n > len(actions):
            raise sc.error(f"{n} steps requested but only {len(actions)} actions listed", "steps")
        with _field(sc, "agent"):
            trace = run_qagi_quantum(agent, env, actions, n, seed, keep_states=keep)
        summary = _trace_summary(trace)
        gaps = [r.separability_gap for r in trace.records]
        summary["final_separability_gap"] = gaps[-1] if gaps else 0.0
        summary["max_separability_gap"] = max(gaps) if gaps else 0.0
        summary["final_state"] = density_to_json(trace.final_state)
        return trace.to_records(), summary
    return run


def _build_qagi_classical(sc: Scenario) -> Runner:
    _require(sc, "memory", "environment")
    d = sc.data
    with _field(sc, "environment"):
        envs = parse_environments(d["environment"])
        by_id = {e.id: e for e in envs}
        env = by_id[d.get("true_env", envs[0].id)]
    with _field(sc, "memory"):
        memory = parse_state(d["memory"])
    with _field(sc, "readout"):
        readout = parse_povm(d.get("readout", f"computational:{memory.dim}"))
    with _field(sc, "encoder"):
        encoder = parse_ctq(d.get("encoder", "basis"), list(env.percepts), memory.dims)
    with _field(sc, "processing"):
        processing = parse_qtq(d["processing"]) if "processing" in d else None
    action_map = d.get("action_map")

    def run(seed, steps):
        with _field(sc, "memory"):
            trace = run_qagi_classical(memory, env, readout, encoder, _steps(sc, steps), seed,
                                       action_map=action_map, processing=processing)
        summary = _trace_summary(trace)
        summary["final_memory"] = density_to_json(trace.final_state)
        return trace.to_records(), summary
    return run


def _build_variational(sc: Scenario) -> Runner:
    d = sc.data
    with _field(sc, "family"):
        n_params, family = _family(d.get("family", "ry"))
    with _field(sc, "readout"):
        povm = parse_povm(d.get("readout", "Z"))
    target = str(d.get("target", "1"))
    if target not in povm.outcome_alphabet:
        raise sc.error(f"target {target!r} is not a readout outcome", "target")
    with _field(sc, "encoder"):
        encoder = parse_ctq(d.get("encoder", "basis"), d.get("alphabet", ["0", "1"]), (povm.dim,))
    init = d.get("init")
    iters = int(d.get("iters", 3))

    def run(seed, steps):
        res = variational_learn(family, (povm, target), encoder, iters, seed=seed, init=init,
                                n_params=n_params, encoder_input=d.get("input"))
        records = [{"iteration": i, "score": s} for i, s in enumerate(res.history)]
        summary = {"theta": [float(x) for x in res.theta], "score": res.score,
                   "evaluations": res.evaluations, "target": target}
        return records, summary
    return run


def _build_coherent_learn(sc: Scenario) -> Runner:
    _require(sc, "unitary", "agent_init", "env_init")
    d = sc.data
    with _field(sc, "unitary"):
        u = parse_qtq(d["unitary"])
    with _field(sc, "agent_init"):
        a0 = parse_state(d["agent_init"])
    with _field(sc, "env_init"):
        e0 = parse_state(d["env_init"])
    with _field(sc, "query"):
        query = parse_povm(d.get("query", f"computational:{a0.dim}"))
    threshold = float(d.get("threshold", 0.5))
    target = str(d.get("target", "1"))

    def run(seed, steps):
        with _field(sc, "unitary"):
            res = coherent_learn_check(u, a0, e0, query, threshold, target)
        out = {"learned": res.learned, "probability": res.probability,
               "threshold": threshold, "target": target}
        return [dict(check="coherent_learn", **out)], out
    return run


_BUILDERS = {
    "chsh": _build_chsh, "ks": _build_ks, "noclone": _build_noclone, "indist": _build_indist,
    "identity": _build_identity, "cagi_classical": _build_cagi_classical,
    "cagi_quantum": _build_cagi_quantum, "qagi_quantum": _build_qagi_quantum,
    "qagi_classical": _build_qagi_classical, "variational": _build_variational,
    "coherent_learn": _build_coherent_learn,
}

_FIELDS = {
    "chsh": ("state", "angles"),
    "ks": ("rays", "bases", "system", "dimension"),
    "noclone": ("states", "optimize", "iters", "restarts"),
    "indist": ("state", "observable"),
    "identity": ("alphabet", "readout", "povm", "n_random"),
    "cagi_classical": ("environments", "true_env", "horizon", "discount", "budget"),
    "cagi_quantum": ("environments", "quantum_env", "horizon", "discount", "budget"),
    "qagi_quantum": ("agent", "env_state", "actions", "keep_states"),
    "qagi_classical": ("memory", "environment", "true_env", "readout", "encoder",
                       "processing", "action_map"),
    "variational": ("family", "readout", "target", "encoder", "alphabet", "input", "init", "iters"),
    "coherent_learn": ("unitary", "agent_init", "env_init", "query", "threshold", "target"),
}


# --------------------------------------------------------------------------
# entry points
# --------------------------------------------------------------------------

def validate_scenario(source: str | Path | Scenario) -> Scenario:
    """Load and fully build a scenario without running it."""
    sc = source if isinstance(source, Scenario) else load_scenario(source)
    _BUILDERS[sc.kind](sc)
    return sc


def run_scenario(source: str | Path | Scenario, seed: int | None = None,
                 out_dir: str | Path | None = None, formats=None,
                 steps: int | None = None) -> Report:
    """Validate, run and (if an output directory is known) write the report.

    ``out_dir`` falls back to the scenario's ``output.dir``; with neither,
    nothing is written. ``formats`` falls back to ``output.formats`` and then
    to JSON only.
    """
    sc = source if isinstance(source, Scenario) else load_scenario(source)
    runner = _BUILDERS[sc.kind](sc)
    seed = resolve_seed(seed, sc)
    t0 = time.perf_counter()
    records, summary = runner(seed, steps)
    wall = time.perf_counter() - t0
    effective_steps = steps if steps is not None else sc.steps
    digest = canonical_digest({"scenario": sc.data, "steps": effective_steps})
    report = Report(sc.id, sc.kind, digest, seed, records, summary, wall)
    out_dir = out_dir if out_dir is not None else sc.output.get("dir")
    if out_dir is not None:
        fmts = formats if formats is not None else sc.output.get("formats", ["json"])
        if isinstance(fmts, str):
            fmts = [fmts]
        emit_report(report, out_dir, fmts)
    return report
