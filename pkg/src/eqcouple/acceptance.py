"""Desk-scale acceptance suite, shared by ``eqcouple selftest`` and the test suite.

Every check is exact rational equality except the sampler criterion, which
uses a 4-sigma binomial band.
"""

from __future__ import annotations

import math
import random
import time
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from fractions import Fraction

from .certificate import find_certificate, verify_minimizer
from .core import Instance, all_saturated_sets, build_measure, build_space
from .coupling import Coupling, cost, kl8_exact_law, kl8_plan, kl8_sample, optimal_coupling, validate_coupling
from .errors import InternalInconsistencyError
from .oracle import TransportProblem, equivalence_cost, solve_transport
from .quotient import dual_envelope, support_union, tv_invariant, tv_restricted, tv_subsets

ACCEPTANCE_SEED = 20240517
N_INSTANCES = 200
N_PERTURBED = 5
SAMPLER_N = 100_000
SAMPLER_SEEDS = tuple(range(10))
DUALITY_BUDGET_S = 10.0
SAMPLER_BUDGET_S = 5.0


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}: {self.detail}"


def running_instance() -> Instance:
    space = build_space(["a", "b", "c", "d"], {"a": "C1", "b": "C1", "c": "C2", "d": "C2"})
    mu = build_measure(space, {"a": "0.5", "b": "0", "c": "0.5", "d": "0"}, "mu")
    nu = build_measure(space, {"a": "0", "b": "0.2", "c": "0", "d": "0.8"}, "nu")
    return Instance(space, mu, nu)


def random_instance(rng: random.Random) -> Instance:
    """At most 12 points and 6 classes, weights with denominators at most 100.

    The first point of each class carries positive mass under both measures,
    so every class meets both supports and non-optimal couplings exist.
    Roughly a third of the instances get at least two points of zero mass.
    """
    k = rng.randint(2, 6)
    n = rng.randint(k, 12)
    labels = [f"C{i + 1}" for i in range(k)] + [f"C{rng.randint(1, k)}" for _ in range(n - k)]
    order = list(range(n))
    rng.shuffle(order)
    points = [f"p{i}" for i in range(n)]
    class_of = {points[i]: labels[order[i]] for i in range(n)}
    anchors = {points[i] for i in range(n) if order[i] < k}
    free = [x for x in points if x not in anchors]
    null = set(rng.sample(free, rng.randint(2, len(free)))) if len(free) >= 2 and rng.random() < 1 / 3 else set()

    def counts() -> dict[str, int]:
        out = {}
        for x in points:
            if x in null:
                out[x] = 0
            elif x in anchors:
                out[x] = rng.randint(1, 8)
            else:
                out[x] = rng.randint(0, 8)
        return out

    space = build_space(points, class_of)
    ms = []
    for label in ("mu", "nu"):
        c = counts()
        total = sum(c.values())
        ms.append(build_measure(space, {x: Fraction(v, total) for x, v in c.items()}, label))
    return Instance(space, ms[0], ms[1])


def random_instances(seed: int = ACCEPTANCE_SEED, count: int = N_INSTANCES) -> list[Instance]:
    rng = random.Random(seed)
    return [random_instance(rng) for _ in range(count)]


def singleton_instance(inst: Instance) -> Instance:
    space = build_space(inst.space.points, {x: x for x in inst.space.points})
    return Instance(
        space,
        build_measure(space, dict(inst.mu.weights), "mu"),
        build_measure(space, dict(inst.nu.weights), "nu"),
    )


def oracle_value(mu, nu) -> Fraction:
    return solve_transport(TransportProblem(equivalence_cost(mu.space), mu, nu)).value


def rotations(P: Coupling, cost_table: dict, count: int = N_PERTURBED) -> Iterator[Coupling]:
    """Feasible mass rotations of P that strictly increase the cost.

    Moving eps from cells (x1, y1), (x2, y2) to (x1, y2), (x2, y1) keeps both
    marginals; the cost changes by eps times the cross minus diagonal costs.
    """
    cells = list(P.joint)
    moves = []
    for i, (x1, y1) in enumerate(cells):
        for x2, y2 in cells[i + 1 :]:
            if x1 == x2 or y1 == y2:
                continue
            delta = cost_table[(x1, y2)] + cost_table[(x2, y1)] - cost_table[(x1, y1)] - cost_table[(x2, y2)]
            if delta > 0:
                moves.append(((x1, y1), (x2, y2)))
    for j in range(count if moves else 0):
        (x1, y1), (x2, y2) = moves[j % len(moves)]
        eps = min(P[(x1, y1)], P[(x2, y2)]) * Fraction(count - j // len(moves), count + 1)
        joint = dict(P.joint)
        joint[(x1, y1)] -= eps
        joint[(x2, y2)] -= eps
        joint[(x1, y2)] = joint.get((x1, y2), Fraction(0)) + eps
        joint[(x2, y1)] = joint.get((x2, y1), Fraction(0)) + eps
        yield Coupling(P.space, P.mu, P.nu, joint)


def _tally(instances: list[Instance], check: Callable[[Instance], bool]) -> tuple[int, list[int]]:
    bad = [i for i, inst in enumerate(instances) if not check(inst)]
    return len(instances) - len(bad), bad


def criterion_duality(instances: list[Instance]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, bad = _tally(instances, lambda s: oracle_value(s.mu, s.nu) == tv_invariant(s.mu, s.nu).value)
    dt = time.perf_counter() - t0
    passed = not bad and dt < DUALITY_BUDGET_S
    return CriterionResult(1, "zero duality gap", passed, f"{ok}/{len(instances)} exact, {dt:.2f}s")


def criterion_attainment(instances: list[Instance]) -> CriterionResult:
    def check(s: Instance) -> bool:
        P = optimal_coupling(s.mu, s.nu)
        return validate_coupling(P).ok and cost(P) == oracle_value(s.mu, s.nu)

    ok, bad = _tally(instances, check)
    return CriterionResult(2, "optimal coupling attains the oracle value", not bad, f"{ok}/{len(instances)}")


def criterion_maximal_coupling(instances: list[Instance]) -> CriterionResult:
    def check(s: Instance) -> bool:
        tv = tv_invariant(s.mu, s.nu).value
        law, nu0 = kl8_exact_law(kl8_plan(s.mu, s.nu), s.mu)
        if not validate_coupling(law).ok:
            return False
        if law.mass_off_diagonal() != tv or 1 - law.mass_on_relation() != tv:
            return False
        if any(nu0.mass(A.points) != s.nu.mass(A.points) for A in all_saturated_sets(s.space)):
            return False
        return cost(law) == oracle_value(s.mu, nu0) == tv

    ok, bad = _tally(instances, check)
    return CriterionResult(3, "maximal coupling and nu0", not bad, f"{ok}/{len(instances)}")


def criterion_certificate(instances: list[Instance]) -> CriterionResult:
    certified = rejected = perturbed = inconsistent = 0
    failures = []
    for i, s in enumerate(instances):
        table = equivalence_cost(s.space)
        res = solve_transport(TransportProblem(table, s.mu, s.nu))
        try:
            if verify_minimizer(res.argmin).is_minimizer and find_certificate(res.argmin):
                certified += 1
            else:
                failures.append(i)
            bumps = list(rotations(res.argmin, table))
            if len(bumps) != N_PERTURBED:
                failures.append(i)
            for Q in bumps:
                perturbed += 1
                verdict = verify_minimizer(Q)
                if verdict.cost > res.value and not verdict.is_minimizer and find_certificate(Q) is None:
                    rejected += 1
                else:
                    failures.append(i)
        except InternalInconsistencyError:
            inconsistent += 1
            failures.append(i)
    n = len(instances)
    detail = (
        f"argmin certified {certified}/{n}, perturbed rejected {rejected}/{n * N_PERTURBED}"
        f" (generated {perturbed}), inconsistencies {inconsistent}"
    )
    return CriterionResult(4, "certificate iff optimal", not failures, detail)


def criterion_restriction(instances: list[Instance]) -> CriterionResult:
    def check(s: Instance) -> bool:
        return tv_restricted(s.mu, s.nu, support_union(s.mu, s.nu)).value == tv_invariant(s.mu, s.nu).value

    ok, bad = _tally(instances, check)
    sparse = sum(len(s.space.points) - len(support_union(s.mu, s.nu)) >= 2 for s in instances)
    passed = not bad and sparse > 0
    return CriterionResult(5, "restriction to the support", passed, f"{ok}/{len(instances)}, {sparse} with >=2 null points")


def criterion_classic(instances: list[Instance]) -> CriterionResult:
    def check(s0: Instance) -> bool:
        s = singleton_instance(s0)
        half_l1 = sum((abs(s.mu[x] - s.nu[x]) for x in s.space.points), Fraction(0)) / 2
        tv = tv_invariant(s.mu, s.nu).value
        if not tv == tv_subsets(s.mu, s.nu) == half_l1:
            return False
        law, nu0 = kl8_exact_law(kl8_plan(s.mu, s.nu), s.mu)
        return nu0.weights == s.nu.weights and law.mass_off_diagonal() == tv

    ok, bad = _tally(instances, check)
    return CriterionResult(6, "singleton classes reduce to classic TV", not bad, f"{ok}/{len(instances)}")


def criterion_envelope(instances: list[Instance]) -> CriterionResult:
    def check(s: Instance) -> bool:
        A = tv_invariant(s.mu, s.nu).A
        h = dual_envelope(s.space, {x: Fraction(int(x in A)) for x in s.space.points})
        table = equivalence_cost(s.space)
        feasible = all(h[x] - h[y] <= table[(x, y)] for x in s.space.points for y in s.space.points)
        return feasible and s.mu.integrate(h) - s.nu.integrate(h) == oracle_value(s.mu, s.nu)

    ok, bad = _tally(instances, check)
    return CriterionResult(7, "dual envelope is feasible and tight", not bad, f"{ok}/{len(instances)}")


def criterion_sampler() -> CriterionResult:
    inst = running_instance()
    plan = kl8_plan(inst.mu, inst.nu)
    band = 4 * math.sqrt(0.3 * 0.7 / SAMPLER_N)
    t0 = time.perf_counter()
    inside = 0
    repeatable = True
    for seed in SAMPLER_SEEDS:
        rep = kl8_sample(plan, inst.mu, SAMPLER_N, seed)
        inside += abs(rep.empirical_leave_rate - 0.3) <= band
        repeatable &= rep.dumps() == kl8_sample(plan, inst.mu, SAMPLER_N, seed).dumps()
    par = [kl8_sample(plan, inst.mu, SAMPLER_N, 7, workers=4).dumps() for _ in range(2)]
    repeatable &= par[0] == par[1]
    dt = time.perf_counter() - t0
    passed = inside >= 9 and repeatable and dt < SAMPLER_BUDGET_S
    detail = f"{inside}/{len(SAMPLER_SEEDS)} seeds within {band:.5f}, repeatable={repeatable}, {dt:.2f}s"
    return CriterionResult(8, "sampler concentration and determinism", passed, detail)


def run_all(instances: list[Instance] | None = None) -> list[CriterionResult]:
    if instances is None:
        instances = random_instances()
    return [
        criterion_duality(instances),
        criterion_attainment(instances),
        criterion_maximal_coupling(instances),
        criterion_certificate(instances),
        criterion_restriction(instances),
        criterion_classic(instances),
        criterion_envelope(instances),
        criterion_sampler(),
    ]
