"""The evaluation harness.

Runs migrations over a suite and applies a multi-stage classification to
each program: (1) was it rejected, (2) does the migrated program crash
with a new dynamic type error on the manifest inputs, (3) is a migrated
function unusable (stuck on every input the original accepted), and
(4) is it restricted to fewer contexts than the original, certified by a
distinguishing context, or compatible, certified against a hand-written
migration.  Later stages only apply to the survivors of earlier ones.

Every restricted verdict carries a machine-checked certificate produced
by actually running original and migrated programs in the witness
context; compatibility certificates check the migration is no more
precise than the hand-written witness.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from . import terms as t
from .coercions import coerce
from .manifest import ManifestError, ProgramEntry, SuiteManifest, load_manifest
from .migrate import MigrationMode, MigrationResult, migrate
from .parser import parse
from .printer import Style, print_expr
from .runtime import (
    Machine,
    Observation,
    Outcome,
    StuckCoercion,
    Timeout,
    Val,
    insert_coercions,
)
from .session import SolverOptions
from .terms import expr_precision
from .types import ANY, Arrow, Typ, Unknown


class Classification(Enum):
    REJECTED = "rejected"
    NEW_DYNAMIC_ERROR = "new-dynamic-error"
    UNUSABLE_FUNCTION = "unusable-function"
    RESTRICTED = "restricted"
    COMPATIBLE_IMPROVED = "compatible-improved"


class WitnessRefuted(Exception):
    """The manifest witness fails to demonstrate its claim: a suite defect,
    not a tool failure."""


@dataclass
class Certificate:
    kind: str  # "restricted" | "compatible"
    detail: str


@dataclass
class RunRecord:
    args: list[str]
    original: str  # outcome kind
    migrated: str
    agreed: bool


@dataclass
class ProgramReport:
    id: str
    mode: str
    classification: Optional[Classification] = None
    annotations_total: int = 0
    annotations_improved: int = 0
    wall_ms: float = 0.0
    migrated_source: str = ""
    program_type: str = ""
    weights_satisfied: int = 0
    runs: list[RunRecord] = field(default_factory=list)
    certificate: Optional[Certificate] = None
    expect_match: Optional[bool] = None
    error: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "classification": self.classification.value if self.classification else None,
            "annotations_total": self.annotations_total,
            "annotations_improved": self.annotations_improved,
            "wall_ms": round(self.wall_ms, 3),
            "migrated_source": self.migrated_source,
            "program_type": self.program_type,
            "weights_satisfied": self.weights_satisfied,
            "runs": [vars(r) for r in self.runs],
            "certificate": vars(self.certificate) if self.certificate else None,
            "expect_match": self.expect_match,
            "error": self.error,
        }


@dataclass
class Report:
    suite: str
    mode: str
    programs: list[ProgramReport]
    wall_ms: float

    @property
    def totals(self) -> dict:
        total = len(self.programs)
        rejected = sum(1 for p in self.programs if p.classification is Classification.REJECTED)
        remaining1 = total - rejected
        new_dyn = sum(
            1 for p in self.programs if p.classification is Classification.NEW_DYNAMIC_ERROR
        )
        remaining2 = remaining1 - new_dyn
        unusable = sum(
            1 for p in self.programs if p.classification is Classification.UNUSABLE_FUNCTION
        )
        remaining3 = remaining2 - unusable
        restricted = sum(
            1 for p in self.programs if p.classification is Classification.RESTRICTED
        )
        survivors = [
            p
            for p in self.programs
            if p.classification
            in (Classification.RESTRICTED, Classification.COMPATIBLE_IMPROVED)
        ]
        anns_total = sum(p.annotations_total for p in survivors)
        improved = sum(p.annotations_improved for p in survivors)
        return {
            "rejected": [rejected, total],
            "new_dynamic_errors": [new_dyn, remaining1],
            "unusable_functions": [unusable, remaining2],
            "restricted_functions": [restricted, remaining3],
            "not_improved": [anns_total - improved, anns_total],
            "wall_ms": round(self.wall_ms, 3),
        }

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "mode": self.mode,
            "programs": [p.to_json() for p in self.programs],
            "totals": self.totals,
        }

    def table(self) -> str:
        totals = self.totals
        head = f"suite {self.suite}, mode {self.mode} ({totals['wall_ms']:.0f} ms)"
        cols = [
            ("Rejected", "rejected"),
            ("NewDynErr", "new_dynamic_errors"),
            ("Unusable", "unusable_functions"),
            ("Restricted", "restricted_functions"),
            ("NotImproved", "not_improved"),
        ]
        summary = "  ".join(f"{label} {totals[key][0]}/{totals[key][1]}" for label, key in cols)
        lines = [head, summary]
        for p in self.programs:
            status = p.classification.value if p.classification else f"error: {p.error}"
            extra = ""
            if p.expect_match is not None:
                extra = "  golden=" + ("ok" if p.expect_match else "DIFFERS")
            lines.append(
                f"  {p.id:24s} {status:20s} improved {p.annotations_improved}/{p.annotations_total}{extra}"
            )
        return "\n".join(lines)


# Execution helpers


def plug_hole(context: t.Expr, filling: t.Expr) -> t.Expr:
    """Replace the single HOLE variable in a context program."""
    count = _count_holes(context)
    if count != 1:
        raise ManifestError(f"context must contain exactly one HOLE, found {count}")
    return _replace_hole(context, filling)


def _count_holes(e: t.Expr) -> int:
    if isinstance(e, t.Var) and e.name == "HOLE":
        return 1
    return sum(_count_holes(c) for c in t.children(e))


def _replace_hole(e: t.Expr, filling: t.Expr) -> t.Expr:
    if isinstance(e, t.Var) and e.name == "HOLE":
        return filling
    match e:
        case t.Var() | t.Lit():
            return e
        case t.Fun(x, ann, b):
            return t.Fun(x, ann, _replace_hole(b, filling))
        case t.Fix(x, ann, b):
            return t.Fix(x, ann, _replace_hole(b, filling))
        case t.Let(x, a, b):
            return t.Let(x, _replace_hole(a, filling), _replace_hole(b, filling))
        case _:
            kids = [_replace_hole(c, filling) for c in t.children(e)]
            return type(e)(*kids)


def apply_chain(program: t.Expr, args: list[t.Expr]) -> t.Expr:
    out = program
    for a in args:
        out = t.App(out, a)
    return out


def run_with_inputs(
    program: t.Expr, args: list[t.Expr], step_limit: int = 1_000_000
) -> tuple[Outcome, Optional[Observation]]:
    """Coercion-insert and evaluate ``program args...``; the program may
    contain an Embedded (already migrated) subterm."""
    machine = Machine()
    coerced, _ = insert_coercions({}, apply_chain(program, args))
    outcome = machine.eval(coerced, step_limit)
    obs = machine.observe(outcome.value) if isinstance(outcome, Val) else None
    return outcome, obs


def outcomes_agree(
    o1: Outcome, obs1: Optional[Observation], o2: Outcome, obs2: Optional[Observation]
) -> bool:
    """Observational agreement: equal observations for values, stuck
    matches stuck (all errors collapse), timeout matches timeout."""
    if isinstance(o1, Val) and isinstance(o2, Val):
        return obs1 == obs2
    if isinstance(o1, Timeout) or isinstance(o2, Timeout):
        return isinstance(o1, Timeout) and isinstance(o2, Timeout)
    return not isinstance(o1, Val) and not isinstance(o2, Val)


def _outcome_kind(o: Outcome) -> str:
    return {
        "Val": "value",
        "StuckCoercion": "stuck-coercion",
        "StuckOther": "stuck",
        "Timeout": "timeout",
    }[type(o).__name__]


def embedded_migration(result: MigrationResult) -> t.Expr:
    """The migrated program as a typed leaf for plugging into contexts.
    Running the coerced form keeps migrations executable even when their
    surface annotations no longer typecheck as a surface program."""
    return t.Embedded(result.migrated_coerced, result.program_type)


def verify_witness(
    original: t.Expr, result: MigrationResult, entry: ProgramEntry, mode: str
) -> Optional[Certificate]:
    """Check the manifest witness for this mode, if any."""
    spec = entry.mode(mode)
    if spec.context is not None:
        context = parse(spec.context.read_text())
        o1, obs1 = run_with_inputs(plug_hole(context, original), [])
        o2, obs2 = run_with_inputs(plug_hole(context, embedded_migration(result)), [])
        if outcomes_agree(o1, obs1, o2, obs2):
            raise WitnessRefuted(
                f"{entry.id}: context did not distinguish original from migration "
                f"({_outcome_kind(o1)} vs {_outcome_kind(o2)})"
            )
        return Certificate(
            "restricted",
            f"context distinguishes: original {_outcome_kind(o1)} {obs1}, "
            f"migrated {_outcome_kind(o2)} {obs2}",
        )
    if spec.witness is not None:
        witness = parse(spec.witness.read_text())
        if not expr_precision(result.migrated_surface, witness):
            raise WitnessRefuted(
                f"{entry.id}: migration is not below the hand-written compatible witness"
            )
        return Certificate("compatible", "migration is at most as precise as the witness")
    return None


def count_annotations(original: t.Expr, migrated: t.Expr) -> tuple[int, int]:
    """(unknown annotations in the original, of which improved)."""
    before = t.binder_annotations(original)
    after = t.binder_annotations(migrated)
    total = sum(1 for a in before if isinstance(a, Unknown))
    improved = sum(
        1
        for a, b in zip(before, after)
        if isinstance(a, Unknown) and not isinstance(b, Unknown)
    )
    return total, improved


def classify(
    entry: ProgramEntry, mode: MigrationMode, options: SolverOptions | None = None
) -> ProgramReport:
    report = ProgramReport(id=entry.id, mode=mode.value)
    started = time.monotonic()
    try:
        original = parse(entry.source.read_text())
        try:
            result = migrate(mode, original, options=options)
        except Exception as exc:
            report.classification = Classification.REJECTED
            report.error = str(exc)
            return report

        report.migrated_source = print_expr(result.migrated_surface)
        from .printer import print_typ

        report.program_type = print_typ(result.program_type)
        report.weights_satisfied = result.weights_satisfied
        total, improved = count_annotations(original, result.migrated_surface)
        report.annotations_total = total
        report.annotations_improved = improved

        spec = entry.mode(mode.value)
        if spec.expect is not None:
            report.expect_match = print_expr(result.migrated_surface) == spec.expect.strip()

        migrated = embedded_migration(result)
        new_dynamic_error = False
        stuck_on_all_applied = True
        original_succeeds_somewhere = False
        any_applied = False
        for raw_args in entry.apply_inputs:
            args = [parse(a) for a in raw_args]
            o1, obs1 = run_with_inputs(original, args)
            o2, obs2 = run_with_inputs(migrated, args)
            report.runs.append(
                RunRecord(raw_args, _outcome_kind(o1), _outcome_kind(o2),
                          outcomes_agree(o1, obs1, o2, obs2))
            )
            if isinstance(o1, (Val, Timeout)) and isinstance(o2, StuckCoercion):
                new_dynamic_error = True
            if raw_args:
                any_applied = True
                if isinstance(o2, Val):
                    stuck_on_all_applied = False
                if isinstance(o1, Val):
                    original_succeeds_somewhere = True

        if new_dynamic_error:
            report.classification = Classification.NEW_DYNAMIC_ERROR
            return report
        if any_applied and stuck_on_all_applied and original_succeeds_somewhere:
            report.classification = Classification.UNUSABLE_FUNCTION
            return report

        report.certificate = verify_witness(original, result, entry, mode.value)
        if report.certificate is not None and report.certificate.kind == "restricted":
            report.classification = Classification.RESTRICTED
        else:
            report.classification = Classification.COMPATIBLE_IMPROVED
        return report
    except Exception as exc:
        report.error = f"{type(exc).__name__}: {exc}"
        return report
    finally:
        report.wall_ms = (time.monotonic() - started) * 1000.0


def _classify_task(args) -> ProgramReport:
    entry, mode_value = args
    return classify(entry, MigrationMode(mode_value))


def run_suite(
    manifest: SuiteManifest | str | Path,
    modes: list[MigrationMode],
    jobs: int = 1,
    options: SolverOptions | None = None,
) -> list[Report]:
    if not isinstance(manifest, SuiteManifest):
        manifest = load_manifest(manifest)
    reports = []
    for mode in modes:
        started = time.monotonic()
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(
                    pool.map(_classify_task, [(e, mode.value) for e in manifest.entries])
                )
        else:
            rows = [classify(e, mode, options) for e in manifest.entries]
        rows.sort(key=lambda r: [e.id for e in manifest.entries].index(r.id))
        reports.append(
            Report(
                suite=str(manifest.path),
                mode=mode.value,
                programs=rows,
                wall_ms=(time.monotonic() - started) * 1000.0,
            )
        )
    return reports
