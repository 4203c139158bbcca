import itertools
import random

import pytest

from polyteam.errors import SortedDomainError
from polyteam.evaluator import (
    EXHAUSTED, FALSE, TRUE, BulkEvaluator, EvalConfig, EvalOutcome,
    enumerate_covers, eval_formula, eval_sentence,
)
from polyteam.model import (
    Assignment, Polyteam, Structure, Team, Variable, polyteam_restrict,
    polyteam_union, subteam_of,
)
from polyteam.oracle import enumerate_polyteams, enumerate_structures, naive_eval, tarski
from polyteam.syntax import (
    And, AtomF, Eq, Exists, Forall, Neq, NegRel, OrGlobal, OrLocal, PolyDep,
    PolyExc, PolyInc, Rel, Truth, free_variables, parse,
)

from conftest import (
    P, PX, PY, Q, QU, QV, FormulaSampler, assignments, random_polyteam,
)

ST = Structure((0, 1))
NO_LIMITS = EvalConfig(timeout=None)


def holds(structure, pt, phi, **kw):
    return eval_formula(structure, pt, phi, NO_LIMITS, **kw).as_bool()


def team_p(rows):
    return Team(P, (PX, PY), rows)


def row(**kv):
    return Assignment({{"x": PX, "y": PY, "u": QU, "v": QV}[k]: v
                       for k, v in kv.items()})


# ---------------------------------------------------------------------------
# Clause-level checks

def test_literal_clauses_are_universal_over_the_team():
    pt = Polyteam([team_p([row(x=0, y=0), row(x=1, y=1)])])
    assert holds(ST, pt, Eq(PX, PY))
    assert not holds(ST, pt, Neq(PX, PY))
    st = Structure((0, 1), {"R": [(0, 0), (1, 1)]})
    assert holds(st, pt, Rel("R", (PX, PY)))
    assert not holds(st, pt, NegRel("R", (PX, PY)))


def test_sentence_examples():
    assert eval_sentence(ST, parse("A P.x . (E P.y . P.x = P.y)")).as_bool()
    assert eval_sentence(ST, parse("A P.x . P.x = P.x")).as_bool()
    st = Structure((0, 1), {"R": []})
    assert not eval_sentence(st, parse("E P.x . R(P.x)")).as_bool()
    with pytest.raises(SortedDomainError):
        eval_sentence(ST, parse("P.x = P.y"))


def test_free_variables_must_be_in_team_domains():
    with pytest.raises(SortedDomainError):
        eval_formula(ST, Polyteam(), parse("P.x = P.y"))
    with pytest.raises(SortedDomainError):
        eval_formula(ST, Polyteam([Team(P, (PX,), ())]), parse("P.x = P.y"))


def test_ill_sorted_formula_is_rejected_before_evaluation():
    with pytest.raises(SortedDomainError):
        eval_formula(ST, Polyteam(), Eq(PX, QU))


def test_enumerate_covers_counts():
    assert len(list(enumerate_covers(team_p([])))) == 1
    assert len(list(enumerate_covers(team_p([row(x=0, y=0)])))) == 3
    two = team_p([row(x=0, y=0), row(x=1, y=1)])
    covers = list(enumerate_covers(two))
    assert len(covers) == 9
    assert len(set(covers)) == 9
    assert all(left.union(right) == two for left, right in covers)


def test_global_split_allows_overlap():
    # each row satisfies one disjunct; the cover routes them apart
    pt = Polyteam([team_p([row(x=0, y=0), row(x=0, y=1)])])
    phi = OrGlobal(Eq(PX, PY), Neq(PX, PY))
    assert holds(ST, pt, phi)
    assert not holds(ST, pt, Eq(PX, PY))


def test_local_split_leaves_other_sorts_whole():
    # the Q-atom inside a P-local split still sees the full Q team
    pt = Polyteam([team_p([row(x=0, y=0)]),
                   Team(Q, (QU, QV), [row(u=0, v=0), row(u=1, v=0)])])
    phi = OrLocal(frozenset((P,)), Neq(QU, QV), Neq(QU, QV))
    assert not holds(ST, pt, phi)
    # a global split may split Q as well, but Neq still fails on the cover
    assert not holds(ST, pt, OrGlobal(Neq(QU, QV), Neq(QU, QV)))


def test_local_disjunction_at_unmentioned_sort_is_conjunction():
    pt = Polyteam([team_p([row(x=0, y=0), row(x=0, y=1)])])
    phi = OrLocal(frozenset((Q,)), Eq(PX, PY), Neq(PX, PY))
    assert not holds(ST, pt, phi)


def test_forall_and_exists_clauses():
    pt = Polyteam([Team(P, (PX,), [Assignment({PX: 0})])])
    assert holds(ST, pt, Forall(PY, OrGlobal(Eq(PX, PY), Neq(PX, PY))))
    assert holds(ST, pt, Exists(PY, Eq(PX, PY)))
    assert not holds(ST, pt, Forall(PY, Eq(PX, PY)))


def test_lax_exists_provides_value_sets_not_single_values():
    # u must take both values across the expanded team for the inclusion
    pt = Polyteam([team_p([row(x=0, y=0), row(x=1, y=1)]),
                   Team(Q, (QV,), [Assignment({QV: 0})])])
    phi = Exists(QU, AtomF(PolyInc(P, (PX,), Q, (QU,))))
    assert holds(ST, pt, phi)


def test_truth_node():
    assert holds(ST, Polyteam(), Truth())


# ---------------------------------------------------------------------------
# Resource handling

def test_expansion_cap_yields_exhausted():
    config = EvalConfig(max_expanded_team_rows=3, timeout=None)
    pt = Polyteam([team_p([row(x=0, y=0), row(x=1, y=1)])])
    out = eval_formula(ST, pt, Forall(PX, Eq(PX, PX)), config)
    assert out.verdict == EXHAUSTED and out.limit == "expansion"
    with pytest.raises(RuntimeError):
        out.as_bool()


def test_split_cap_yields_exhausted():
    config = EvalConfig(max_split_assignments=1, timeout=None)
    rows = [row(x=a, y=b) for a, b in itertools.product((0, 1), repeat=2)]
    pt = Polyteam([team_p(rows), Team(Q, (QU,), [Assignment({QU: 0})])])
    # both disjuncts are opaque at P (same-sort inclusion), forcing enumeration
    inc = AtomF(PolyInc(P, (PX,), P, (PY,)))
    out = eval_formula(ST, pt, OrLocal(frozenset((P,)), inc, inc), config)
    assert out.verdict == EXHAUSTED and out.limit == "split"


def test_timeout_trips():
    config = EvalConfig(timeout=0.05, max_split_assignments=64)
    rows = [row(x=a, y=b) for a, b in itertools.product((0, 1), repeat=2)]
    pt = Polyteam([team_p(rows)])
    # two opaque, unsatisfiable same-sort disjuncts over a 32-row expansion:
    # the cover enumeration can neither succeed nor finish within the deadline
    phi = parse(r"A P.z1 . A P.z2 . A P.z3 . (pexc(P.x | P.x) \/ pexc(P.y | P.y))")
    out = eval_formula(ST, pt, phi, config)
    assert out.verdict == EXHAUSTED and out.limit == "timeout"


def test_config_validation():
    with pytest.raises(ValueError):
        EvalConfig(max_expanded_team_rows=0)
    with pytest.raises(ValueError):
        EvalConfig(timeout=0)


def test_determinism_of_outcome_and_stats():
    sampler = FormulaSampler(("eq", "pdep", "pinc", "pexc"))
    rng = random.Random(5)
    for _ in range(20):
        phi = sampler.formula(rng, 2)
        pt = random_polyteam(rng, {P: (PX, PY), Q: (QU, QV)}, (0, 1))
        first = eval_formula(ST, pt, phi, NO_LIMITS)
        second = eval_formula(ST, pt, phi, NO_LIMITS)
        assert (first.verdict, first.nodes_visited, first.cache_hits) == \
            (second.verdict, second.nodes_visited, second.cache_hits)


def test_memoization_toggle_keeps_verdicts():
    sampler = FormulaSampler(("eq", "pdep", "pinc", "pexc", "rel"))
    rng = random.Random(6)
    bare = EvalConfig(memoization=False, timeout=None)
    st = Structure((0, 1), {"R": [(0,)]})
    for _ in range(40):
        phi = sampler.formula(rng, 2)
        pt = random_polyteam(rng, {P: (PX, PY), Q: (QU, QV)}, (0, 1))
        assert eval_formula(st, pt, phi, NO_LIMITS).verdict == \
            eval_formula(st, pt, phi, bare).verdict


# ---------------------------------------------------------------------------
# Semantic properties (small versions; the acceptance suite scales them up)

def flat_sampler():
    return FormulaSampler(("eq",), connectives=("and", "or", "exists", "forall"),
                          variables=(PX, PY))


def test_flatness_matches_rowwise_tarski(rng):
    sampler = flat_sampler()
    st = Structure((0, 1), {"R": [(0,)]})
    for _ in range(150):
        phi = sampler.formula(rng, rng.randint(0, 3))
        pt = random_polyteam(rng, {P: (PX, PY)}, (0, 1), max_rows=3)
        expected = all(tarski(st, s, phi) for s in pt.team(P).rows)
        assert holds(st, pt, phi) == expected


def test_locality_restriction_invariance(rng):
    extra_p, extra_q = Variable(P, "spare"), Variable(Q, "spare")
    sampler = FormulaSampler(("eq", "neq", "pdep", "pinc", "pexc", "dep_uni"))
    for _ in range(100):
        phi = sampler.formula(rng, rng.randint(0, 2))
        wide = random_polyteam(rng, {P: (PX, PY, extra_p), Q: (QU, QV, extra_q)}, (0, 1))
        free = free_variables(phi)
        narrow = polyteam_restrict(wide, {P: free.get(P, ()), Q: free.get(Q, ())})
        assert holds(ST, wide, phi) == holds(ST, narrow, phi)


def subteams_of(pt, rng, count=3):
    for _ in range(count):
        teams = []
        for sort in (P, Q):
            team = pt.team(sort)
            rows = [r for r in team.rows if rng.random() < 0.6]
            teams.append(Team(sort, team.domain, rows))
        yield Polyteam(teams)


def test_downward_closure_for_dependence_and_exclusion(rng):
    sampler = FormulaSampler(("eq", "neq", "pdep", "pexc", "dep_uni", "exc_uni"))
    for _ in range(100):
        phi = sampler.formula(rng, rng.randint(0, 2))
        pt = random_polyteam(rng, {P: (PX, PY), Q: (QU, QV)}, (0, 1))
        if not holds(ST, pt, phi):
            continue
        for sub in subteams_of(pt, rng):
            assert subteam_of(sub, pt)
            assert holds(ST, sub, phi)


def test_union_closure_for_inclusion(rng):
    sampler = FormulaSampler(("pinc", "inc_uni"),
                             connectives=("and", "or", "orlocal", "exists", "forall"))
    for _ in range(100):
        phi = sampler.formula(rng, rng.randint(0, 2))
        one = random_polyteam(rng, {P: (PX, PY), Q: (QU, QV)}, (0, 1))
        two = random_polyteam(rng, {P: (PX, PY), Q: (QU, QV)}, (0, 1))
        if holds(ST, one, phi) and holds(ST, two, phi):
            assert holds(ST, polyteam_union(one, two), phi)


def test_empty_polyteam_satisfies_everything(rng):
    sampler = FormulaSampler(tuple(FormulaSampler.LEAVES))
    st = Structure((0, 1), {"R": [(0,)]})
    empty = Polyteam([Team(P, (PX, PY), ()), Team(Q, (QU, QV), ())])
    for _ in range(150):
        phi = sampler.formula(rng, rng.randint(0, 3))
        assert holds(st, empty, phi)


def test_cross_validation_against_naive_evaluator(rng):
    sampler = FormulaSampler(tuple(FormulaSampler.LEAVES))
    structures = list(enumerate_structures({"R": 1}, (0, 1)))
    for _ in range(120):
        phi = sampler.formula(rng, rng.randint(0, 3))
        st = rng.choice(structures)
        pt = random_polyteam(rng, {P: (PX, PY), Q: (QU, QV)}, (0, 1))
        assert holds(st, pt, phi) == naive_eval(st, pt, phi)


def test_bulk_evaluator_agrees_and_shares_cache(rng):
    sampler = FormulaSampler(("eq", "pdep", "pinc"))
    bulk = BulkEvaluator(ST)
    for _ in range(50):
        phi = sampler.formula(rng, 2)
        pt = random_polyteam(rng, {P: (PX, PY), Q: (QU, QV)}, (0, 1))
        assert bulk.holds(pt, phi) == holds(ST, pt, phi)
