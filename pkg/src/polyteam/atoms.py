"""Satisfaction checkers for poly-atoms and the generalized-atom machinery.

The built-in checkers use hash-indexed joins on antecedent tuples; the
deliberately naive reference implementations live in ``polyteam.oracle``.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Tuple

from .errors import ParseError, RegistryError, SortedDomainError
from .model import Polyteam, Structure
from .syntax import GeneralizedAtom, PolyDep, PolyExc, PolyInc, PolyInd


# ---------------------------------------------------------------------------
# Built-in atom checkers

def check_polydep(structure: Structure, pt: Polyteam, atom: PolyDep) -> bool:
    xi = pt.team(atom.sort_i)
    xj = pt.team(atom.sort_j)
    index = {}
    for key in xj.relation(atom.u + atom.v):
        ante, cons = key[:len(atom.u)], key[len(atom.u):]
        index.setdefault(ante, set()).add(cons)
    for row in xi.rows:
        seen = index.get(row.values_of(atom.x))
        if seen is None:
            continue
        mine = row.values_of(atom.y)
        if any(other != mine for other in seen):
            return False
    return True


def check_polyinc(structure: Structure, pt: Polyteam, atom: PolyInc) -> bool:
    have = pt.team(atom.sort_j).relation(atom.y)
    return pt.team(atom.sort_i).relation(atom.x) <= have


def check_polyexc(structure: Structure, pt: Polyteam, atom: PolyExc) -> bool:
    left = pt.team(atom.sort_i).relation(atom.x)
    right = pt.team(atom.sort_j).relation(atom.y)
    return not (left & right)


def check_polyind(structure: Structure, pt: Polyteam, atom: PolyInd) -> bool:
    xi = pt.team(atom.sort_i)
    xj = pt.team(atom.sort_j)
    xk = pt.team(atom.sort_k)
    witnesses = xk.relation(atom.u + atom.v + atom.w)
    index = {}
    for key in xj.relation(atom.a + atom.b):
        index.setdefault(key[:len(atom.a)], set()).add(key[len(atom.a):])
    for row in xi.rows:
        bs = index.get(row.values_of(atom.x))
        if not bs:
            continue
        head = row.values_of(atom.x) + row.values_of(atom.y)
        for b_val in bs:
            if head + b_val not in witnesses:
                return False
    return True


def check_generalized(structure: Structure, pt: Polyteam, atom: GeneralizedAtom,
                      registry: "AtomRegistry") -> bool:
    try:
        q = registry[atom.name]
    except KeyError:
        raise RegistryError(f"generalized atom {atom.name!r} is not registered") from None
    arities = tuple(len(t) for t in atom.args)
    if arities != tuple(q.type):
        raise RegistryError(f"atom {atom.name!r} arities {arities} do not match "
                            f"type {tuple(q.type)}")
    relations = tuple(pt.team(tup[0].sort).relation(tup) for tup in atom.args)
    return bool(q.evaluator(structure.domain, relations))


def check_atom(structure: Structure, pt: Polyteam, atom, registry=None) -> bool:
    """Dispatch on the atom instance kind."""
    if isinstance(atom, PolyDep):
        return check_polydep(structure, pt, atom)
    if isinstance(atom, PolyInc):
        return check_polyinc(structure, pt, atom)
    if isinstance(atom, PolyExc):
        return check_polyexc(structure, pt, atom)
    if isinstance(atom, PolyInd):
        return check_polyind(structure, pt, atom)
    if isinstance(atom, GeneralizedAtom):
        if registry is None:
            raise RegistryError(f"no registry given for generalized atom {atom.name!r}")
        return check_generalized(structure, pt, atom, registry)
    raise TypeError(f"unknown atom instance: {atom!r}")


# ---------------------------------------------------------------------------
# Generalized quantifiers

@dataclass(frozen=True)
class GeneralizedQuantifier:
    """An isomorphism-closed predicate over (domain, relations).

    Isomorphism invariance is the registrant's obligation; it is spot-checked
    probabilistically by ``spot_check_isomorphism_invariance``, never enforced.
    """

    name: str
    type: Tuple[int, ...]
    evaluator: Callable


class AtomRegistry(Mapping):
    """Immutable name -> GeneralizedQuantifier lookup."""

    def __init__(self, quantifiers: Iterable[GeneralizedQuantifier] = ()):
        store = {}
        for q in quantifiers:
            if q.name in store:
                raise RegistryError(f"duplicate quantifier {q.name!r}")
            store[q.name] = q
        self._store = dict(sorted(store.items()))

    def __getitem__(self, name):
        return self._store[name]

    def __iter__(self):
        return iter(self._store)

    def __len__(self):
        return len(self._store)

    def extended(self, *quantifiers) -> "AtomRegistry":
        return AtomRegistry(list(self._store.values()) + list(quantifiers))


def spot_check_isomorphism_invariance(q: GeneralizedQuantifier, domain, relations,
                                      rng, rounds: int = 20) -> list:
    """Probe invariance under random domain bijections; returns violations."""
    domain = tuple(domain)
    baseline = bool(q.evaluator(domain, relations))
    violations = []
    for _ in range(rounds):
        image = list(domain)
        rng.shuffle(image)
        pi = dict(zip(domain, image))
        renamed = tuple(frozenset(tuple(pi[v] for v in t) for t in rel) for rel in relations)
        if bool(q.evaluator(tuple(sorted(image, key=lambda v: (type(v).__name__, str(v)))),
                            renamed)) != baseline:
            violations.append(pi)
    return violations


# ---------------------------------------------------------------------------
# Embedded dependencies

@dataclass(frozen=True)
class EDRel:
    name: str
    args: Tuple[str, ...]


@dataclass(frozen=True)
class EDEq:
    left: str
    right: str


@dataclass(frozen=True)
class EmbeddedDependency:
    """forall x̄ (antecedent -> exists ȳ consequent), conjuncts of atoms/equalities."""

    universal: Tuple[str, ...]
    antecedent: Tuple
    existential: Tuple[str, ...]
    consequent: Tuple

    def relation_occurrences(self):
        for part in (self.antecedent, self.consequent):
            for a in part:
                if isinstance(a, EDRel):
                    yield a

    def relation_order(self) -> Tuple[Tuple[str, int], ...]:
        """Distinct relations with arities, antecedent-first occurrence order."""
        seen = {}
        for a in self.relation_occurrences():
            if a.name in seen:
                if seen[a.name] != len(a.args):
                    raise ParseError(f"relation {a.name!r} used with arities "
                                     f"{seen[a.name]} and {len(a.args)}")
            else:
                seen[a.name] = len(a.args)
        return tuple(seen.items())


_ED_SPLIT = re.compile(r"\s*->\s*")


def _parse_ed_conjunction(text, where):
    text = text.strip()
    if text == "true" or not text:
        return ()
    atoms = []
    for part in text.split("&"):
        part = part.strip()
        m = re.fullmatch(r"(\w+)\s*\(\s*([\w\s,]*)\s*\)", part)
        if m:
            args = tuple(a.strip() for a in m.group(2).split(",") if a.strip())
            if not args:
                raise ParseError(f"{where}: relation atom {m.group(1)!r} without arguments")
            atoms.append(EDRel(m.group(1), args))
            continue
        m = re.fullmatch(r"(\w+)\s*=\s*(\w+)", part)
        if m:
            atoms.append(EDEq(m.group(1), m.group(2)))
            continue
        raise ParseError(f"{where}: cannot parse conjunct {part!r}")
    return tuple(atoms)


def parse_embedded_dependency(text: str) -> EmbeddedDependency:
    """Parse ``forall x, y . phi -> exists z . psi`` (either side may be ``true``)."""
    text = text.strip()
    m = re.match(r"forall\s*([\w\s,]*?)\s*\.\s*(.*)$", text, re.DOTALL)
    if not m:
        raise ParseError("embedded dependency must start with 'forall <vars> .'")
    universal = tuple(v.strip() for v in m.group(1).split(",") if v.strip())
    rest = m.group(2)
    pieces = _ED_SPLIT.split(rest, maxsplit=1)
    if len(pieces) != 2:
        raise ParseError("embedded dependency needs an '->'")
    antecedent = _parse_ed_conjunction(pieces[0], "antecedent")
    tail = pieces[1].strip()
    existential = ()
    if tail.startswith("exists"):
        m = re.match(r"exists\s*([\w\s,]*?)\s*\.\s*(.*)$", tail, re.DOTALL)
        if not m:
            raise ParseError("malformed 'exists <vars> .' head")
        existential = tuple(v.strip() for v in m.group(1).split(",") if v.strip())
        tail = m.group(2)
    consequent = _parse_ed_conjunction(tail, "consequent")
    ed = EmbeddedDependency(universal, antecedent, existential, consequent)
    bound = set(universal) | set(existential)
    for a in ed.antecedent + ed.consequent:
        names = a.args if isinstance(a, EDRel) else (a.left, a.right)
        for v in names:
            if v not in bound:
                raise ParseError(f"variable {v!r} is not quantified")
    return ed


def _conjunction_holds(atoms, env, rels):
    for a in atoms:
        if isinstance(a, EDEq):
            if env[a.left] != env[a.right]:
                return False
        else:
            if tuple(env[v] for v in a.args) not in rels[a.name]:
                return False
    return True


def compile_embedded_dependency(ed: EmbeddedDependency, name: str = "ed",
                                widen_existentials: bool = False) -> GeneralizedQuantifier:
    """Compile a dependency into a quantifier checking the forall/exists sentence.

    Universal variables range over the full structure domain.  Existential
    witnesses range over the active domain (values in the extracted relations)
    plus one fresh probe value, which is complete here because consequents are
    positive conjunctions; ``widen_existentials`` searches the whole domain.
    """
    order = ed.relation_order()
    type_ = tuple(arity for _, arity in order)
    names = tuple(n for n, _ in order)

    def evaluator(domain, relations):
        rels = dict(zip(names, relations))
        active = sorted({v for rel in relations for t in rel for v in t},
                        key=lambda v: (type(v).__name__, str(v)))
        if widen_existentials:
            witness_pool = list(domain)
        else:
            witness_pool = list(active)
            for v in domain:
                if v not in set(active):
                    witness_pool.append(v)
                    break
        env = {}

        def search_existential(idx):
            if idx == len(ed.existential):
                return _conjunction_holds(ed.consequent, env, rels)
            var = ed.existential[idx]
            for value in witness_pool:
                env[var] = value
                if search_existential(idx + 1):
                    return True
            del env[var]
            return False

        def search_universal(idx):
            if idx == len(ed.universal):
                if not _conjunction_holds(ed.antecedent, env, rels):
                    return True
                return search_existential(0)
            var = ed.universal[idx]
            for value in domain:
                env[var] = value
                if not search_universal(idx + 1):
                    return False
            del env[var]
            return True

        return search_universal(0)

    return GeneralizedQuantifier(name, type_, evaluator)


# ---------------------------------------------------------------------------
# Dependency classification

@dataclass(frozen=True)
class DependencyClassification:
    tuple_generating: bool
    equality_generating: bool
    full: bool
    one_head: bool
    uni_relational: bool
    separated: bool
    instance_class: Optional[str] = None  # "source_to_target" | "target" | "neither"


def classify(ed: EmbeddedDependency, instance_sorts=None, source=(), target=()) -> DependencyClassification:
    """Syntactic flags plus, when instantiated, the data-exchange orientation.

    ``instance_sorts`` maps relation name -> sort of the team whose tuple
    instantiates that relation slot of the compiled atom.
    """
    has_eq = any(isinstance(a, EDEq) for a in ed.antecedent + ed.consequent)
    consequent_rels = {a.name for a in ed.consequent if isinstance(a, EDRel)}
    antecedent_rels = {a.name for a in ed.antecedent if isinstance(a, EDRel)}
    all_rels = antecedent_rels | consequent_rels
    instance_class = None
    if instance_sorts is not None:
        source, target = set(source), set(target)
        ante_sorts = {instance_sorts[n] for n in antecedent_rels}
        cons_sorts = {instance_sorts[n] for n in consequent_rels}
        if ante_sorts <= source and cons_sorts <= target:
            instance_class = "source_to_target"
        elif (ante_sorts | cons_sorts) <= target:
            instance_class = "target"
        else:
            instance_class = "neither"
    return DependencyClassification(
        tuple_generating=not has_eq,
        equality_generating=bool(ed.consequent)
        and all(isinstance(a, EDEq) for a in ed.consequent),
        full=not ed.existential,
        one_head=len(ed.consequent) == 1,
        uni_relational=len(all_rels) == 1,
        separated=not (antecedent_rels & consequent_rels),
        instance_class=instance_class,
    )
