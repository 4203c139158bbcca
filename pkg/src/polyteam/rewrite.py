"""Constructive formula transformations between the atom vocabularies.

The translation rules carry opaque identifiers e1..e6 and e8 (there is no
e7), matching the CLI's ``rewrite --rule`` names:

    e1  dependence          ->  independence
    e2  dependence          ->  all/exclusion split (per consequent position)
    e3  inclusion           ->  pure independence
    e4  inclusion           ->  all/exclusion + single-team inclusion
    e5  exclusion           ->  exists/dependence with an equality contrast
    e6  exclusion           ->  exists/inclusion + single-team exclusion
    e8  independence        ->  all/exists dependence + exclusion + inclusion

``eliminate_global_disjunction`` removes every global disjunction (and every
multi-sort local disjunction) in favour of single-sort local disjunctions;
the output is equivalent on structures with at least two elements, which is
signalled with a CardinalityWarning.  ``decompose_by_sort`` splits a formula
whose atoms are all single-sorted into one ordinary team-semantics formula
per sort.
"""

from __future__ import annotations

import warnings
from typing import Optional

from .errors import RewriteError
from .model import Sort, Variable
from .syntax import (
    And, AtomF, Eq, Exists, Forall, Formula, GeneralizedAtom, Neq, NegRel,
    OrGlobal, OrLocal, PolyDep, PolyExc, PolyInc, PolyInd, Rel, Truth,
    all_variables, atom_sorts, atom_variables, mentioned_sorts, walk,
    FRESH_PREFIX,
)


class CardinalityWarning(UserWarning):
    """The rewritten formula is equivalent only on domains with >= 2 values."""


class FreshNameSource:
    """Generates variables never colliding with a reserved name set."""

    def __init__(self, taken=()):
        self.taken = {(v.sort, v.name) for v in taken}
        self.counter = 0

    @classmethod
    def for_formula(cls, phi: Formula) -> "FreshNameSource":
        return cls(all_variables(phi))

    def fresh(self, sort: Sort) -> Variable:
        while True:
            var = Variable(sort, f"{FRESH_PREFIX}{self.counter}")
            self.counter += 1
            if (var.sort, var.name) not in self.taken:
                self.taken.add((var.sort, var.name))
                return var

    def fresh_tuple(self, sort: Sort, count: int):
        return tuple(self.fresh(sort) for _ in range(count))


def _exists_chain(variables, body: Formula) -> Formula:
    for var in reversed(variables):
        body = Exists(var, body)
    return body


def _forall_chain(variables, body: Formula) -> Formula:
    for var in reversed(variables):
        body = Forall(var, body)
    return body


def _and_chain(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return Truth()
    result = parts[0]
    for p in parts[1:]:
        result = And(result, p)
    return result


# ---------------------------------------------------------------------------
# Atom translations

def _e1(atom: PolyDep, fresh) -> Formula:
    return AtomF(PolyInd(atom.sort_i, atom.x, atom.y,
                         atom.sort_j, atom.u, atom.v,
                         atom.sort_i, atom.x, atom.y, atom.y))


def _e2(atom: PolyDep, fresh) -> Formula:
    conjuncts = []
    for yk, vk in zip(atom.y, atom.v):
        z = fresh.fresh(atom.sort_i)
        exclusion = AtomF(PolyExc(atom.sort_i, atom.x + (z,),
                                  atom.sort_j, atom.u + (vk,)))
        conjuncts.append(Forall(z, OrLocal(frozenset((atom.sort_i,)),
                                           Eq(yk, z), exclusion)))
    return _and_chain(conjuncts)


def _e3(atom: PolyInc, fresh) -> Formula:
    # the conditioning group is empty; its sort defaults to the left sort so
    # that an empty right-hand team still falsifies the inclusion
    return AtomF(PolyInd(atom.sort_i, (), atom.x,
                         atom.sort_i, (), (),
                         atom.sort_j, (), atom.y, ()))


def _e4(atom: PolyInc, fresh) -> Formula:
    probe = fresh.fresh_tuple(atom.sort_j, len(atom.x))
    exclusion = AtomF(PolyExc(atom.sort_i, atom.x, atom.sort_j, probe))
    inclusion = AtomF(PolyInc(atom.sort_j, probe, atom.sort_j, atom.y))
    return _forall_chain(probe, OrLocal(frozenset((atom.sort_j,)),
                                        exclusion, inclusion))


def _e5(atom: PolyExc, fresh) -> Formula:
    if atom.sort_i == atom.sort_j:
        raise RewriteError("e5 needs a cross-sort exclusion atom: the dependence "
                           "atom it builds would be a same-sort shorthand")
    y = fresh.fresh(atom.sort_i)
    z = fresh.fresh(atom.sort_i)
    v = fresh.fresh(atom.sort_j)
    w = fresh.fresh(atom.sort_j)
    dep = AtomF(PolyDep(atom.sort_i, atom.x, (y, z), atom.sort_j, atom.y, (v, w)))
    return _exists_chain((y, z, v, w), _and_chain((dep, Eq(y, z), Neq(v, w))))


def _e6(atom: PolyExc, fresh) -> Formula:
    mirror = fresh.fresh_tuple(atom.sort_i, len(atom.y))
    inclusion = AtomF(PolyInc(atom.sort_j, atom.y, atom.sort_i, mirror))
    exclusion = AtomF(PolyExc(atom.sort_i, atom.x, atom.sort_i, mirror))
    return _exists_chain(mirror, And(inclusion, exclusion))


def _e8(atom: PolyInd, fresh) -> Formula:
    i, j, k = atom.sort_i, atom.sort_j, atom.sort_k
    if i == j:
        raise RewriteError("e8 needs distinct first and second group sorts: the "
                           "dependence atom it builds would be a same-sort shorthand")
    pi = fresh.fresh_tuple(i, len(atom.x))
    qi = fresh.fresh_tuple(i, len(atom.y))
    ui, vi = fresh.fresh(i), fresh.fresh(i)
    pj = fresh.fresh_tuple(j, len(atom.a))
    qj = fresh.fresh_tuple(j, len(atom.y))
    rj = fresh.fresh_tuple(j, len(atom.b))
    uj, vj = fresh.fresh(j), fresh.fresh(j)
    transfer = AtomF(PolyDep(i, pi + qi, (ui, vi), j, pj + qj, (uj, vj)))
    # the local splits happen at the team the guessed tuples live in
    left_guard = OrLocal(frozenset((i,)), Eq(ui, vi),
                         And(Neq(ui, vi),
                             AtomF(PolyExc(i, atom.x + atom.y, i, pi + qi))))
    right_guard = OrLocal(frozenset((j,)), Neq(uj, vj),
                          OrLocal(frozenset((j,)),
                                  AtomF(PolyExc(j, atom.a + atom.b, j, pj + rj)),
                                  AtomF(PolyInc(j, pj + qj + rj,
                                                k, atom.u + atom.v + atom.w))))
    body = _and_chain((transfer, left_guard, right_guard))
    inner = _forall_chain(pj + qj + rj, _exists_chain((uj, vj), body))
    return _forall_chain(pi + qi, _exists_chain((ui, vi), inner))


_ATOM_RULES = {
    "e1": (PolyDep, _e1),
    "e2": (PolyDep, _e2),
    "e3": (PolyInc, _e3),
    "e4": (PolyInc, _e4),
    "e5": (PolyExc, _e5),
    "e6": (PolyExc, _e6),
    "e8": (PolyInd, _e8),
}

RULE_NAMES = tuple(sorted(_ATOM_RULES))


def translate_atom(atom, rule: str, fresh: Optional[FreshNameSource] = None) -> Formula:
    """Rewrite one atom instance by the named rule into an equivalent formula."""
    try:
        kind, impl = _ATOM_RULES[rule]
    except KeyError:
        raise RewriteError(f"unknown rule {rule!r}; choose from {RULE_NAMES}") from None
    if not isinstance(atom, kind):
        raise RewriteError(f"rule {rule} applies to {kind.__name__} atoms, "
                           f"not {type(atom).__name__}")
    if fresh is None:
        fresh = FreshNameSource(atom_variables(atom))
    return impl(atom, fresh)


def rewrite_formula(phi: Formula, rule: str,
                    fresh: Optional[FreshNameSource] = None) -> Formula:
    """Apply an atom translation to every atom of the rule's kind."""
    kind, _ = _ATOM_RULES.get(rule, (None, None))
    if kind is None:
        raise RewriteError(f"unknown rule {rule!r}; choose from {RULE_NAMES}")
    fresh = fresh or FreshNameSource.for_formula(phi)

    def go(f):
        if isinstance(f, AtomF) and isinstance(f.atom, kind):
            return translate_atom(f.atom, rule, fresh)
        if isinstance(f, And):
            return And(go(f.left), go(f.right))
        if isinstance(f, OrGlobal):
            return OrGlobal(go(f.left), go(f.right))
        if isinstance(f, OrLocal):
            return OrLocal(f.sorts, go(f.left), go(f.right))
        if isinstance(f, Exists):
            return Exists(f.var, go(f.body))
        if isinstance(f, Forall):
            return Forall(f.var, go(f.body))
        return f

    return go(phi)


_DIALECTS = {
    # dialect name -> rules tried per atom kind, in application order
    "pind": {PolyDep: "e1", PolyInc: "e3", PolyExc: "e5"},
    "pexc-inc": {PolyInd: "e8", PolyDep: "e2"},
    "pinc-exc": {PolyInd: "e8", PolyDep: "e2", PolyExc: "e6"},
    "pdep-inc": {PolyInd: "e8", PolyExc: "e5"},
}


def to_dialect(phi: Formula, dialect: str,
               fresh: Optional[FreshNameSource] = None) -> Formula:
    """Rewrite all atoms until only the dialect's atom kinds remain.

    Rules that introduce atoms of still-disallowed kinds are reapplied until
    the formula is stable; cross-sort preconditions of e5/e8 apply.
    """
    try:
        plan = _DIALECTS[dialect]
    except KeyError:
        raise RewriteError(f"unknown dialect {dialect!r}; "
                           f"choose from {sorted(_DIALECTS)}") from None
    fresh = fresh or FreshNameSource.for_formula(phi)
    for _ in range(8):
        changed = False
        for kind, rule in plan.items():
            if any(isinstance(n, AtomF) and isinstance(n.atom, kind)
                   for n in walk(phi)):
                phi = rewrite_formula(phi, rule, fresh)
                changed = True
        if not changed:
            return phi
    raise RewriteError(f"dialect {dialect!r} did not stabilize")


# ---------------------------------------------------------------------------
# Global-disjunction elimination

def eliminate_global_disjunction(phi: Formula,
                                 fresh: Optional[FreshNameSource] = None) -> Formula:
    """Replace every global and multi-sort local disjunction by single-sort ones.

    Globals first become local disjunctions over all mentioned sorts (exact,
    by locality), which are then unfolded into the fresh-variable split
    encoding; the unfolding is equivalent on structures with at least two
    elements (warned via CardinalityWarning).
    """
    fresh = fresh or FreshNameSource.for_formula(phi)
    scope = frozenset(mentioned_sorts(phi))
    state = {"expanded": False}

    def chain(sorts, zs, phase, core):
        # nested guard: at each sort, rows with equal (unequal) markers drop
        # out; the rest must satisfy the payload
        sort = sorts[0]
        z0, z1 = zs[sort]
        done = Eq(z0, z1) if phase == 0 else Neq(z0, z1)
        keep = Neq(z0, z1) if phase == 0 else Eq(z0, z1)
        inner = core if len(sorts) == 1 else chain(sorts[1:], zs, phase, core)
        return OrLocal(frozenset((sort,)), done, And(keep, inner))

    def expand_local(sorts, left, right):
        sorts = sorted(sorts)
        zs = {s: (fresh.fresh(s), fresh.fresh(s)) for s in sorts}
        body = And(chain(sorts, zs, 0, left), chain(sorts, zs, 1, right))
        bound = [z for s in sorts for z in zs[s]]
        state["expanded"] = True
        return _exists_chain(bound, body)

    def go(f):
        if isinstance(f, And):
            return And(go(f.left), go(f.right))
        if isinstance(f, OrGlobal):
            left, right = go(f.left), go(f.right)
            if not scope:
                return And(left, right)  # no teams are split at all
            if len(scope) == 1:
                return OrLocal(scope, left, right)
            return expand_local(scope, left, right)
        if isinstance(f, OrLocal):
            left, right = go(f.left), go(f.right)
            if len(f.sorts) == 1:
                return OrLocal(f.sorts, left, right)
            return expand_local(f.sorts, left, right)
        if isinstance(f, Exists):
            return Exists(f.var, go(f.body))
        if isinstance(f, Forall):
            return Forall(f.var, go(f.body))
        return f

    result = go(phi)
    if state["expanded"]:
        warnings.warn("the split encoding needs at least two domain elements",
                      CardinalityWarning, stacklevel=2)
    return result


# ---------------------------------------------------------------------------
# Sort-wise decomposition

def _atom_sort(atom):
    sorts = atom_sorts(atom)
    if len(sorts) != 1:
        raise RewriteError(f"cross-sort atom blocks the decomposition: {sorts}")
    return next(iter(sorts))


def decompose_by_sort(phi: Formula) -> dict:
    """Split a single-sorted-atom formula into one formula per sort.

    The polyteam satisfies the input exactly when, for every sort, that
    sort's team alone satisfies the output formula.  Requires every atom to
    be single-sorted and every disjunction to be a single-sort local one
    (run eliminate_global_disjunction first).
    """
    for node in walk(phi):
        if isinstance(node, OrGlobal):
            raise RewriteError("global disjunction present; "
                               "apply eliminate_global_disjunction first")
        if isinstance(node, OrLocal) and len(node.sorts) != 1:
            raise RewriteError("multi-sort local disjunction present; "
                               "apply eliminate_global_disjunction first")
        if isinstance(node, AtomF):
            _atom_sort(node.atom)

    def project(f, sort):
        if isinstance(f, Truth):
            return Truth()
        if isinstance(f, (Eq, Neq)):
            return f if f.left.sort == sort else Truth()
        if isinstance(f, (Rel, NegRel)):
            return f if f.args[0].sort == sort else Truth()
        if isinstance(f, AtomF):
            return f if _atom_sort(f.atom) == sort else Truth()
        if isinstance(f, And):
            return And(project(f.left, sort), project(f.right, sort))
        if isinstance(f, OrLocal):
            left, right = project(f.left, sort), project(f.right, sort)
            if sort in f.sorts:
                return OrGlobal(left, right)
            return And(left, right)
        if isinstance(f, (Exists, Forall)):
            inner = project(f.body, sort)
            if f.var.sort == sort:
                return Exists(f.var, inner) if isinstance(f, Exists) else Forall(f.var, inner)
            return inner
        raise TypeError(f"not a formula node: {f!r}")

    return {sort: project(phi, sort) for sort in sorted(mentioned_sorts(phi))}
