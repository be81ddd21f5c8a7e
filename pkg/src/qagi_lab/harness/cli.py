"""Command-line interface: ``qagi-lab <command> [options]``.

Exit codes: 0 success, 2 validation error, 3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .. import __version__
from ..errors import BudgetExceededError, QagiLabError, ScenarioError
from .report import SCHEMA_VERSION, dumps
from .scenario import load_scenario, run_scenario, scenario_from_dict, validate_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"{v} is outside the unsigned 64-bit range")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qagi-lab",
                                description="Run agent-environment scenarios and foundations checks.")
    p.add_argument("--version", action="version",
                   version=f"qagi-lab {__version__} (report schema {SCHEMA_VERSION})")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_required: bool):
        sp.add_argument("--scenario", type=Path, required=scenario_required,
                        help="scenario JSON file")
        sp.add_argument("--seed", type=_u64, help="unsigned 64-bit seed (overrides the scenario)")
        sp.add_argument("--out", type=Path, help="output directory for reports")
        sp.add_argument("--format", choices=("json", "csv"), default="json",
                        help="csv additionally writes trace.csv next to report.json")
        sp.add_argument("--steps", type=_nonneg, help="override the scenario step count")

    common(sub.add_parser("run", help="run any scenario file"), True)
    sp = sub.add_parser("chsh", help="CHSH value of a two-qubit state (default: singlet)")
    common(sp, False)
    sp.add_argument("--angles", type=float, nargs=4, metavar=("A", "A2", "B", "B2"))
    sp = sub.add_parser("ks", help="exhaustive Kochen-Specker assignment search")
    common(sp, False)
    sp.add_argument("--rays", type=Path, help="ray-system JSON (default: shipped 18-ray set)")
    common(sub.add_parser("noclone", help="no-cloning check and clone-fidelity optimization"), False)
    common(sub.add_parser("aixi", help="classical expectimax agent scenario"), True)
    sp = sub.add_parser("validate", help="validate a scenario without running it")
    sp.add_argument("--scenario", type=Path, required=True)
    return p


def _scenario_for(args):
    """Scenario from ``--scenario`` or a built-in default for the checker commands."""
    if args.scenario is not None:
        sc = load_scenario(args.scenario)
        expected = {"chsh": ("chsh",), "ks": ("ks",), "noclone": ("noclone",),
                    "aixi": ("cagi_classical", "cagi_quantum")}.get(args.command)
        if expected and sc.kind not in expected:
            raise ScenarioError(f"'{args.command}' needs kind {' or '.join(expected)}, got {sc.kind!r}",
                                sc.path, "kind", sc.line_of("kind"))
        return sc
    obj = {"id": args.command, "kind": args.command}
    if args.command == "chsh" and args.angles is not None:
        obj["angles"] = list(args.angles)
    if args.command == "ks" and args.rays is not None:
        obj["rays"] = str(args.rays.resolve())
    return scenario_from_dict(obj, Path.cwd())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            sc = validate_scenario(args.scenario)
            print(f"OK {sc.path} kind={sc.kind} id={sc.id}")
            return EXIT_OK
        sc = _scenario_for(args)
        if getattr(args, "angles", None) is not None and args.scenario is not None:
            sc.data["angles"] = list(args.angles)
        report = run_scenario(sc, seed=args.seed, out_dir=args.out,
                              formats=[args.format], steps=args.steps)
    except BudgetExceededError as exc:
        print(f"error: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ScenarioError, QagiLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(dumps({"scenario_id": report.scenario_id, "kind": report.kind, "seed": report.seed,
                 "summary": report.summary}, indent=2))
    if args.out is not None:
        print(f"report written to {args.out / report.scenario_id}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
