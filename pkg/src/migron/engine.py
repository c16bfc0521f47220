"""A small MaxSMT engine for the theory fragment the migration uses:
boolean combinations of equalities over the algebraic datatype of types,
boolean weight variables with unit soft assertions, and accessor-chain
equalities from the weakening phase.

The formula produced by constraint generation is a conjunction of small
per-node "cells", each a disjunction whose branches fix that cell's weight
variable.  The engine compiles every conjunct to disjunctive normal form
and runs a branch-and-bound search over branch choices, maximizing the
number of true soft weights.  Unification with an occurs check decides
each candidate; accessor atoms are deferred until a full assignment is
reached, where they either project through a known constructor or are
vacuously satisfiable.

The search is deterministic: cells keep their emission order (pure
structural cells first), branches within a cell try weight-true first,
and the first optimum found is the one reported.  Unconstrained
metavariables resolve to the unknown type.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .constraints import (
    GROUNDISH,
    SELECTORS,
    And,
    Constraint,
    IsGround,
    Not,
    Or,
    SelEq,
    TRUE_T,
    TypEq,
    Weight,
)
from .types import ANY, Arrow, Metavar, Pair, Ref, Typ, Vector


class EngineUnsupported(Exception):
    """The constraint uses a form outside the supported fragment
    (e.g. negation of a type equality)."""


class EngineTimeout(Exception):
    pass


@dataclass
class EngineResult:
    status: str  # "sat" | "unsat"
    types: dict[int, Typ]
    weights: dict[int, bool]
    satisfied: int


@dataclass(frozen=True)
class _Branch:
    weights: tuple[tuple[int, bool], ...]
    eqs: tuple[tuple[Typ, Typ], ...]
    sels: tuple[SelEq, ...]

    def ntrue(self, soft: frozenset[int]) -> int:
        return sum(1 for w, v in self.weights if v and w in soft)


_EMPTY = _Branch((), (), ())


def _merge(a: _Branch, b: _Branch) -> Optional[_Branch]:
    wa = dict(a.weights)
    for wid, val in b.weights:
        if wa.get(wid, val) != val:
            return None
        wa[wid] = val
    return _Branch(tuple(sorted(wa.items())), a.eqs + b.eqs, a.sels + b.sels)


def _dnf(c: Constraint) -> list[_Branch]:
    match c:
        case TRUE_T():
            return [_EMPTY]
        case TypEq(l, r):
            return [_Branch((), ((l, r),), ())]
        case Weight(i):
            return [_Branch(((i, True),), (), ())]
        case Not(Weight(i)):
            return [_Branch(((i, False),), (), ())]
        case Not(TRUE_T()):
            return []
        case And(l, r):
            out = []
            right = _dnf(r)
            for bl in _dnf(l):
                for br in right:
                    m = _merge(bl, br)
                    if m is not None:
                        out.append(m)
            return out
        case Or(l, r):
            return _dnf(l) + _dnf(r)
        case IsGround(t):
            return [_Branch((), ((t, g),), ()) for g in GROUNDISH]
        case SelEq():
            return [_Branch((), (), (c,))]
    raise EngineUnsupported(f"unsupported constraint form: {c!r}")


def _flatten(c: Constraint, out: list[Constraint]) -> None:
    if isinstance(c, And):
        _flatten(c.left, out)
        _flatten(c.right, out)
    elif not isinstance(c, TRUE_T):
        out.append(c)


class _Unifier:
    """Union-find over metavariable ids with a trail for backtracking."""

    def __init__(self) -> None:
        self.bindings: dict[int, Typ] = {}
        self.trail: list[int] = []

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            del self.bindings[self.trail.pop()]

    def find(self, t: Typ) -> Typ:
        while isinstance(t, Metavar):
            bound = self.bindings.get(t.id)
            if bound is None:
                return t
            t = bound
        return t

    def occurs(self, vid: int, t: Typ) -> bool:
        t = self.find(t)
        match t:
            case Metavar(i):
                return i == vid
            case Arrow(a, b) | Pair(a, b):
                return self.occurs(vid, a) or self.occurs(vid, b)
            case Ref(a) | Vector(a):
                return self.occurs(vid, a)
            case _:
                return False

    def bind(self, vid: int, t: Typ) -> None:
        self.bindings[vid] = t
        self.trail.append(vid)

    def unify(self, s: Typ, t: Typ) -> bool:
        s, t = self.find(s), self.find(t)
        if s == t:
            return True
        if isinstance(s, Metavar):
            if self.occurs(s.id, t):
                return False
            self.bind(s.id, t)
            return True
        if isinstance(t, Metavar):
            if self.occurs(t.id, s):
                return False
            self.bind(t.id, s)
            return True
        match (s, t):
            case (Arrow(a1, b1), Arrow(a2, b2)) | (Pair(a1, b1), Pair(a2, b2)):
                return self.unify(a1, a2) and self.unify(b1, b2)
            case (Ref(a1), Ref(a2)) | (Vector(a1), Vector(a2)):
                return self.unify(a1, a2)
            case _:
                return False

    def resolve(self, t: Typ) -> Typ:
        """Fully resolve to a closed type; unbound metavariables default
        to the unknown type."""
        t = self.find(t)
        match t:
            case Metavar():
                return ANY
            case Arrow(a, b):
                return Arrow(self.resolve(a), self.resolve(b))
            case Ref(a):
                return Ref(self.resolve(a))
            case Pair(a, b):
                return Pair(self.resolve(a), self.resolve(b))
            case Vector(a):
                return Vector(self.resolve(a))
            case _:
                return t


@dataclass
class _Cell:
    branches: list[_Branch]
    max_true: int


def maxsmt(
    constraint: Constraint,
    metavars: list[int],
    weights: list[int],
    timeout_ms: int = 10_000,
    soft: list[int] | None = None,
) -> EngineResult:
    """Maximize the number of true soft weights subject to the constraint.
    By default every weight is soft with unit weight."""
    deadline = time.monotonic() + timeout_ms / 1000.0
    soft_set = frozenset(weights if soft is None else soft)
    conjuncts: list[Constraint] = []
    _flatten(constraint, conjuncts)

    uf = _Unifier()
    base_sels: list[SelEq] = []
    cells: list[_Cell] = []
    for c in conjuncts:
        branches = _dnf(c)
        if not branches:
            return EngineResult("unsat", {}, {}, 0)
        if len(branches) == 1 and not branches[0].weights:
            # Hard structural fact: apply once, up front.
            only = branches[0]
            for l, r in only.eqs:
                if not uf.unify(l, r):
                    return EngineResult("unsat", {}, {}, 0)
            base_sels.extend(only.sels)
            continue
        order = sorted(
            range(len(branches)), key=lambda i: (-branches[i].ntrue(soft_set), i)
        )
        cells.append(
            _Cell(
                [branches[i] for i in order],
                max(b.ntrue(soft_set) for b in branches),
            )
        )

    # Structure-only cells first for earlier propagation.  Weighted cells are
    # decided in reverse emission order, which makes the first optimum found
    # the one that falsifies the earliest-introduced weights; this settles
    # ties between equal-count optima deterministically.
    structural = [c for c in cells if c.max_true == 0]
    weighted = [c for c in cells if c.max_true > 0]
    cells = structural + list(reversed(weighted))

    suffix = [0] * (len(cells) + 1)
    for i in range(len(cells) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + cells[i].max_true

    free_weights = set(soft_set)
    for cell in cells:
        for b in cell.branches:
            free_weights.difference_update(w for w, _ in b.weights)
    nfree = len(free_weights)

    best_count = -1
    best_types: dict[int, Typ] | None = None
    best_weights: dict[int, bool] | None = None
    ticks = 0
    chosen: dict[int, bool] = {}

    def check_time() -> None:
        nonlocal ticks
        ticks += 1
        if ticks % 256 == 0 and time.monotonic() > deadline:
            raise EngineTimeout()

    def settle_sels(sels: list[SelEq]) -> bool:
        """Fixpoint-apply accessor atoms; False on contradiction.  An atom
        whose base never takes the right constructor shape is vacuous."""
        todo = list(sels)
        while todo:
            progressed = False
            keep: list[SelEq] = []
            for sel in todo:
                value: Typ | None = sel.base
                undetermined = False
                for name in sel.path:
                    cls, fieldname = SELECTORS[name]
                    value = uf.find(value)
                    if isinstance(value, Metavar):
                        undetermined = True
                        break
                    if not isinstance(value, cls):
                        value = None
                        break
                    value = getattr(value, fieldname)
                if undetermined:
                    keep.append(sel)
                    continue
                progressed = True
                if value is not None and not uf.unify(value, sel.target):
                    return False
            if not progressed:
                break  # remaining bases stay unconstrained: they default to
                # the unknown type, which never matches a selector
            todo = keep
        return True

    def snapshot(count: int) -> None:
        nonlocal best_count, best_types, best_weights
        best_count = count
        best_types = {mid: uf.resolve(Metavar(mid)) for mid in metavars}
        wmap = dict(chosen)
        for w in weights:
            wmap.setdefault(w, True)
        best_weights = wmap

    def search(i: int, count: int, sels: list[SelEq], probe: bool) -> bool:
        check_time()
        if not probe and count + suffix[i] + nfree <= best_count:
            return False
        if i == len(cells):
            mark = uf.mark()
            ok = settle_sels(sels)
            if ok:
                total = count + nfree
                if total > best_count:
                    snapshot(total)
                uf.undo(mark)
                return probe
            uf.undo(mark)
            return False
        for branch in cells[i].branches:
            if probe and any(not v for w, v in branch.weights if w in soft_set):
                continue
            if any(chosen.get(w, v) != v for w, v in branch.weights):
                continue
            mark = uf.mark()
            if all(uf.unify(l, r) for l, r in branch.eqs):
                added = [w for w, _ in branch.weights if w not in chosen]
                for w, v in branch.weights:
                    chosen[w] = v
                done = search(
                    i + 1,
                    count + branch.ntrue(soft_set),
                    sels + list(branch.sels) if branch.sels else sels,
                    probe,
                )
                for w in added:
                    del chosen[w]
                if done:
                    uf.undo(mark)
                    return True
            uf.undo(mark)
        return False

    # Fast path: if every weight can be true simultaneously, that is the
    # optimum outright.
    if search(0, 0, base_sels, probe=True):
        return EngineResult("sat", best_types, best_weights, best_count)

    search(0, 0, base_sels, probe=False)
    if best_count < 0:
        return EngineResult("unsat", {}, {}, 0)
    return EngineResult("sat", best_types, best_weights, best_count)
