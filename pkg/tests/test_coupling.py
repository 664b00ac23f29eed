from __future__ import annotations

import json
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from eqcouple.core import all_saturated_sets, build_measure, build_space
from eqcouple.coupling import (
    Coupling,
    coupling_from_json,
    cost,
    dumps_17g,
    kl8_exact_law,
    kl8_plan,
    kl8_sample,
    optimal_coupling,
    validate_coupling,
)
from eqcouple.errors import InputError, InvalidCouplingError, PlanMismatchError, SpaceMismatchError
from eqcouple.oracle import TransportProblem, equivalence_cost, solve_transport
from eqcouple.quotient import tv_invariant, tv_subsets
from oracles import vertex_enumeration_min
from strategies import instances, make

RUNNING_OPT = {("a", "b"): F(1, 5), ("c", "d"): F(1, 2), ("a", "d"): F(3, 10)}


def diagonal(m):
    return Coupling(m.space, m, m, {(x, x): m[x] for x in m.space.points})


def product(mu, nu):
    pts = mu.space.points
    return Coupling(mu.space, mu, nu, {(x, y): mu[x] * nu[y] for x in pts for y in pts})


class TestValidate:
    def test_diagonal(self, running):
        assert validate_coupling(diagonal(running.mu)).ok

    def test_product(self, running):
        assert validate_coupling(product(running.mu, running.nu)).ok

    def test_column_residual(self):
        inst = make(["a", "b"], {"a": "a", "b": "b"}, {"a": "1"}, {"a": "0.5", "b": "0.5"})
        r = validate_coupling(Coupling(inst.space, inst.mu, inst.nu, {("a", "b"): F(1)}))
        assert not r.ok
        assert r.col == {"a": F(-1, 2), "b": F(1, 2)}
        assert r.row == {"a": 0, "b": 0}

    def test_rejects_negative_and_unknown(self, running):
        with pytest.raises(InvalidCouplingError):
            Coupling(running.space, running.mu, running.nu, {("a", "b"): F(-1)})
        with pytest.raises(InputError):
            Coupling(running.space, running.mu, running.nu, {("a", "z"): F(1)})

    def test_space_mismatch(self, running):
        other = build_space(["a"], {"a": "C"})
        with pytest.raises(SpaceMismatchError):
            Coupling(other, running.mu, running.nu, {})


class TestCost:
    def test_running(self, running):
        assert cost(Coupling(running.space, running.mu, running.nu, RUNNING_OPT)) == F(3, 10)

    def test_one_class(self):
        inst = make(["a", "b"], {"a": "C", "b": "C"}, {"a": "1"}, {"b": "1"})
        assert cost(product(inst.mu, inst.nu)) == 0

    def test_diagonal(self, running):
        assert cost(diagonal(running.mu)) == 0

    def test_invalid(self, running):
        with pytest.raises(InvalidCouplingError):
            cost(Coupling(running.space, running.mu, running.nu, {("a", "a"): F(1)}))


class TestOptimalCoupling:
    def test_running(self, running):
        P = optimal_coupling(running.mu, running.nu)
        assert dict(P.joint) == RUNNING_OPT
        assert cost(P) == F(3, 10)

    def test_equal(self, running):
        P = optimal_coupling(running.nu, running.nu)
        assert cost(P) == 0 and validate_coupling(P).ok

    def test_classic(self):
        inst = make(["a", "b"], {"a": "a", "b": "b"}, {"a": "0.7", "b": "0.3"}, {"a": "0.4", "b": "0.6"})
        P = optimal_coupling(inst.mu, inst.nu)
        assert dict(P.joint) == {("a", "a"): F(2, 5), ("a", "b"): F(3, 10), ("b", "b"): F(3, 10)}
        assert cost(P) == F(3, 10) == tv_subsets(inst.mu, inst.nu)

    def test_json(self, running):
        doc = optimal_coupling(running.mu, running.nu).to_json()
        assert doc[0] == {"x": "a", "y": "b", "w": "1/5"}
        again = coupling_from_json(json.loads(json.dumps(doc)), running.mu, running.nu)
        assert dict(again.joint) == RUNNING_OPT

    @given(instances())
    def test_feasible_and_attains(self, inst):
        P = optimal_coupling(inst.mu, inst.nu)
        assert validate_coupling(P).ok
        opt = solve_transport(TransportProblem(equivalence_cost(inst.space), inst.mu, inst.nu)).value
        assert cost(P) == tv_invariant(inst.mu, inst.nu).value == opt

    @given(st.data())
    def test_lower_bound_over_saturated_sets(self, data):
        inst = data.draw(instances(max_points=6))
        pts = inst.space.points
        table = {(x, y): F(data.draw(st.integers(0, 5))) for x in pts for y in pts}
        P = solve_transport(TransportProblem(table, inst.mu, inst.nu)).argmin
        c = cost(P)
        for A in all_saturated_sets(inst.space):
            assert inst.mu.mass(A.points) - inst.nu.mass(A.points) <= c


class TestKl8:
    def test_plan_running(self, running):
        plan = kl8_plan(running.mu, running.nu)
        assert not plan.degenerate
        assert plan.tv == F(3, 10)
        assert dict(plan.stay_prob) == {"a": F(2, 5), "b": F(2, 5), "c": 1, "d": 1}
        assert dict(plan.overflow.weights) == {"a": 0, "b": 0, "c": F(5, 13), "d": F(8, 13)}
        leave = sum(running.mu[x] * (1 - plan.stay_prob[x]) for x in running.space.points)
        assert leave == F(3, 10)

    def test_degenerate(self, running):
        plan = kl8_plan(running.mu, running.mu)
        assert plan.degenerate and plan.tv == 0 and plan.overflow is None

    def test_degenerate_quotient_only(self):
        # different point laws with equal class masses
        inst = make(["a", "b"], {"a": "C", "b": "C"}, {"a": "1"}, {"b": "1"})
        plan = kl8_plan(inst.mu, inst.nu)
        assert plan.degenerate
        law, nu0 = kl8_exact_law(plan, inst.mu)
        assert dict(law.joint) == {("a", "a"): 1}
        assert nu0.mass(["a", "b"]) == 1

    def test_plan_identity_relation(self):
        inst = make(["a", "b"], {"a": "a", "b": "b"}, {"a": "0.7", "b": "0.3"}, {"a": "0.4", "b": "0.6"})
        plan = kl8_plan(inst.mu, inst.nu)
        assert dict(plan.stay_prob) == {"a": F(4, 7), "b": 1}
        assert dict(plan.overflow.weights) == {"a": 0, "b": 1}

    def test_exact_law_running(self, running):
        law, nu0 = kl8_exact_law(kl8_plan(running.mu, running.nu), running.mu)
        assert dict(nu0.weights) == {"a": F(1, 5), "b": 0, "c": F(8, 13), "d": F(12, 65)}
        assert nu0.mass(["a", "b"]) == F(1, 5) and nu0.mass(["c", "d"]) == F(4, 5)
        assert law.mass_off_diagonal() == F(3, 10)
        assert 1 - law.mass_on_relation() == F(3, 10)
        assert dict(law.joint) == {
            ("a", "a"): F(1, 5),
            ("a", "c"): F(3, 26),
            ("a", "d"): F(12, 65),
            ("c", "c"): F(1, 2),
        }

    def test_exact_law_equal(self, running):
        law, nu0 = kl8_exact_law(kl8_plan(running.mu, running.mu), running.mu)
        assert nu0.weights == running.mu.weights
        assert law.mass_off_diagonal() == 0

    def test_exact_law_identity(self):
        inst = make(["a", "b", "c"], {x: x for x in "abc"}, {"a": "1/2", "b": "1/2"}, {"b": "1/4", "c": "3/4"})
        law, nu0 = kl8_exact_law(kl8_plan(inst.mu, inst.nu), inst.mu)
        assert nu0.weights == inst.nu.weights
        assert law.mass_off_diagonal() == tv_subsets(inst.mu, inst.nu) == F(3, 4)

    def test_plan_mismatch(self, running):
        plan = kl8_plan(running.mu, running.nu)
        with pytest.raises(PlanMismatchError):
            kl8_exact_law(plan, running.nu)
        other = make(["a"], {"a": "C"}, {"a": "1"}, {"a": "1"})
        with pytest.raises(PlanMismatchError):
            kl8_exact_law(plan, other.mu)

    @given(instances())
    def test_exact_law_properties(self, inst):
        tv = tv_invariant(inst.mu, inst.nu).value
        law, nu0 = kl8_exact_law(kl8_plan(inst.mu, inst.nu), inst.mu)
        assert validate_coupling(law).ok
        assert law.mass_off_diagonal() == tv == 1 - law.mass_on_relation()
        # no mass moves within a class off the diagonal
        assert all(x == y or not inst.space.same_class(x, y) for x, y in law.joint)
        for A in all_saturated_sets(inst.space):
            assert nu0.mass(A.points) == inst.nu.mass(A.points)
        opt = solve_transport(TransportProblem(equivalence_cost(inst.space), inst.mu, nu0)).value
        assert cost(law) == opt == tv

    @settings(max_examples=25)
    @given(instances(max_points=3, max_classes=3))
    def test_minimal_against_vertex_enumeration(self, inst):
        law, nu0 = kl8_exact_law(kl8_plan(inst.mu, inst.nu), inst.mu)
        pts = inst.space.points
        c = [[0 if inst.space.same_class(x, y) else 1 for y in pts] for x in pts]
        best = vertex_enumeration_min([inst.mu[x] for x in pts], [nu0[x] for x in pts], c)
        assert cost(law) == best


class TestSample:
    def test_concentration(self, running):
        plan = kl8_plan(running.mu, running.nu)
        rep = kl8_sample(plan, running.mu, 100_000, seed=0)
        assert abs(rep.empirical_leave_rate - 0.3) <= 4 * math.sqrt(0.3 * 0.7 / 100_000)
        assert rep.empirical_leave_rate == rep.empirical_not_E_rate
        assert sum(rep.counts.values()) == 100_000

    def test_cells_match_exact_law(self, running):
        plan = kl8_plan(running.mu, running.nu)
        law, _ = kl8_exact_law(plan, running.mu)
        n = 100_000
        rep = kl8_sample(plan, running.mu, n, seed=11)
        assert set(rep.counts) <= set(law.joint)
        for cell, p in law.joint.items():
            p = float(p)
            if p >= 0.01:
                assert abs(rep.counts.get(cell, 0) / n - p) <= 4 * math.sqrt(p * (1 - p) / n)

    def test_equal_measures_never_leave(self, running):
        plan = kl8_plan(running.mu, running.mu)
        rep = kl8_sample(plan, running.mu, 5000, seed=3)
        assert rep.empirical_leave_rate == 0.0
        assert all(x == y for x, y in rep.counts)

    @pytest.mark.parametrize("workers", [1, 3])
    def test_deterministic(self, running, workers):
        plan = kl8_plan(running.mu, running.nu)
        a = kl8_sample(plan, running.mu, 20_000, seed=2**64 - 1, workers=workers)
        b = kl8_sample(plan, running.mu, 20_000, seed=2**64 - 1, workers=workers)
        assert a.dumps() == b.dumps()
        assert a.workers == workers

    def test_bad_arguments(self, running):
        plan = kl8_plan(running.mu, running.nu)
        with pytest.raises(InputError):
            kl8_sample(plan, running.mu, 0)
        with pytest.raises(InputError):
            kl8_sample(plan, running.mu, 10, seed=-1)

    def test_report_json(self, running):
        rep = kl8_sample(kl8_plan(running.mu, running.nu), running.mu, 1000, seed=5)
        doc = json.loads(rep.dumps())
        assert set(doc) == {"n", "seed", "workers", "counts", "empirical_leave_rate", "empirical_not_E_rate"}
        assert sum(c["count"] for c in doc["counts"]) == 1000


def test_dumps_17g():
    text = dumps_17g({"a": 0.3, "b": [0.1, 1], "c": "s"})
    assert "0.29999999999999999" in text and "0.10000000000000001" in text
    assert json.loads(text) == {"a": 0.3, "b": [0.1, 1], "c": "s"}
