"""Exact transport solver used as an independent referee.

Successive shortest paths on the bipartite supply/demand network. Rational
masses and costs are scaled to integers by the lcm of their denominators, so
the solve is exact and runs on Python ints. Nothing here relies on the
quotient or coupling constructions; ``duality_check`` only compares results.
"""

from __future__ import annotations

import heapq
import json
from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from pathlib import Path
from typing import Any

from .core import EquivalenceSpace, ProbMeasure, parse_rational, same_space
from .coupling import Coupling
from .errors import InfeasibleMarginalsError, InputError
from .quotient import tv_invariant

Pair = tuple[str, str]


@dataclass(frozen=True)
class TransportProblem:
    cost: Mapping[Pair, Fraction]
    mu: ProbMeasure
    nu: ProbMeasure

    def __post_init__(self) -> None:
        pts = same_space(self.mu, self.nu).points
        for x in pts:
            for y in pts:
                c = self.cost.get((x, y))
                if c is None:
                    raise InputError(f"cost table has no entry for ({x!r}, {y!r})")
                if c < 0:
                    raise InputError(f"negative cost {c} at ({x!r}, {y!r})")


@dataclass(frozen=True)
class OracleResult:
    value: Fraction
    argmin: Coupling
    iterations: int


def equivalence_cost(space: EquivalenceSpace) -> dict[Pair, Fraction]:
    """c(x, y) = 0 on same-class pairs, 1 otherwise."""
    one, zero = Fraction(1), Fraction(0)
    return {(x, y): zero if space.same_class(x, y) else one for x in space.points for y in space.points}


def load_cost_table(path: str | Path, space: EquivalenceSpace) -> dict[Pair, Fraction]:
    """Read ``{"x": {"y": "1/2", ...}, ...}``; the table must be complete."""
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise InputError("cost table must be a JSON object of objects")
    space.check_points(doc)
    table: dict[Pair, Fraction] = {}
    for x, row in doc.items():
        if not isinstance(row, dict):
            raise InputError(f"cost row {x!r} must be an object")
        space.check_points(row)
        for y, v in row.items():
            table[(x, y)] = parse_rational(v)
    return table


class _Network:
    def __init__(self, n: int) -> None:
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[int] = []

    def add(self, u: int, v: int, cap: int, cost: int) -> int:
        for a, b, c, w in ((u, v, cap, cost), (v, u, 0, -cost)):
            self.adj[a].append(len(self.to))
            self.to.append(b)
            self.cap.append(c)
            self.cost.append(w)
        return len(self.to) - 2

    def min_cost_flow(self, s: int, t: int, demand: int) -> int:
        """Push ``demand`` units from s to t; returns the number of augmentations."""
        n = len(self.adj)
        pot = [0] * n
        sent = rounds = 0
        while sent < demand:
            dist: list[int | None] = [None] * n
            prev = [-1] * n
            dist[s] = 0
            heap = [(0, s)]
            done = [False] * n
            while heap:
                d, u = heapq.heappop(heap)
                if done[u]:
                    continue
                done[u] = True
                for e in self.adj[u]:
                    if self.cap[e] <= 0:
                        continue
                    v = self.to[e]
                    nd = d + self.cost[e] + pot[u] - pot[v]
                    if dist[v] is None or nd < dist[v]:
                        dist[v] = nd
                        prev[v] = e
                        heapq.heappush(heap, (nd, v))
            if dist[t] is None:
                raise InfeasibleMarginalsError("sink unreachable before all mass was routed")
            dt = dist[t]
            for v in range(n):
                pot[v] += dt if dist[v] is None or not done[v] else min(dist[v], dt)
            push = demand - sent
            v = t
            while v != s:
                e = prev[v]
                push = min(push, self.cap[e])
                v = self.to[e ^ 1]
            v = t
            while v != s:
                e = prev[v]
                self.cap[e] -= push
                self.cap[e ^ 1] += push
                v = self.to[e ^ 1]
            sent += push
            rounds += 1
        return rounds


def solve_transport(p: TransportProblem) -> OracleResult:
    space = p.mu.space
    pts = space.points
    for m, label in ((p.mu, "mu"), (p.nu, "nu")):
        if any(w < 0 for w in m.weights.values()) or sum(m.weights.values()) != 1:
            raise InfeasibleMarginalsError(f"{label} is not a probability vector")
    scale_w = lcm(*(w.denominator for w in (*p.mu.weights.values(), *p.nu.weights.values())))
    scale_c = lcm(*(c.denominator for c in p.cost.values()))
    rows = [x for x in pts if p.mu[x] > 0]
    cols = [y for y in pts if p.nu[y] > 0]
    net = _Network(len(rows) + len(cols) + 2)
    s, t = 0, len(rows) + len(cols) + 1
    supply = {x: int(p.mu[x] * scale_w) for x in rows}
    need = {y: int(p.nu[y] * scale_w) for y in cols}
    for i, x in enumerate(rows, start=1):
        net.add(s, i, supply[x], 0)
    for j, y in enumerate(cols, start=len(rows) + 1):
        net.add(j, t, need[y], 0)
    cells: dict[Pair, int] = {}
    for i, x in enumerate(rows, start=1):
        for j, y in enumerate(cols, start=len(rows) + 1):
            cap = min(supply[x], need[y])
            cells[(x, y)] = net.add(i, j, cap, int(p.cost[(x, y)] * scale_c))
    rounds = net.min_cost_flow(s, t, scale_w)
    joint = {}
    for key, e in cells.items():
        flow = net.cap[e ^ 1]
        if flow:
            joint[key] = Fraction(flow, scale_w)
    argmin = Coupling(space, p.mu, p.nu, joint)
    value = sum((w * p.cost[key] for key, w in argmin.joint.items()), Fraction(0))
    return OracleResult(value, argmin, rounds)


@dataclass(frozen=True)
class DualityReport:
    oracle_value: Fraction
    tv_value: Fraction
    witness_classes: tuple[str, ...]
    iterations: int

    @property
    def gap(self) -> Fraction:
        return self.oracle_value - self.tv_value

    @property
    def ok(self) -> bool:
        return self.gap == 0

    def to_json(self) -> dict[str, Any]:
        return {
            "oracle_value": str(self.oracle_value),
            "tv_value": str(self.tv_value),
            "gap": str(self.gap),
            "ok": self.ok,
            "A": list(self.witness_classes),
            "iterations": self.iterations,
        }


def duality_check(mu: ProbMeasure, nu: ProbMeasure) -> DualityReport:
    """Compare min over couplings of 1 - P(E) with the invariant total variation."""
    space = same_space(mu, nu)
    res = solve_transport(TransportProblem(equivalence_cost(space), mu, nu))
    w = tv_invariant(mu, nu)
    return DualityReport(res.value, w.value, w.A.classes, res.iterations)
