from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from eqcouple.core import Instance, build_measure, build_space


@st.composite
def counts(draw, n):
    c = draw(st.lists(st.integers(0, 6), min_size=n, max_size=n))
    if not any(c):
        c[draw(st.integers(0, n - 1))] = 1
    return c


@st.composite
def instances(draw, max_points=8, max_classes=4, singleton=False):
    n = draw(st.integers(1, max_points))
    points = [f"x{i}" for i in range(n)]
    if singleton:
        labels = {x: f"K{x}" for x in points}
    else:
        k = draw(st.integers(1, max_classes))
        labels = {x: f"C{draw(st.integers(1, k))}" for x in points}
    space = build_space(points, labels)
    ms = []
    for name in ("mu", "nu"):
        c = draw(counts(n))
        total = sum(c)
        ms.append(build_measure(space, {x: Fraction(v, total) for x, v in zip(points, c)}, name))
    return Instance(space, *ms)


def make(points, labels, mu, nu):
    space = build_space(points, labels)
    return Instance(space, build_measure(space, mu, "mu"), build_measure(space, nu, "nu"))
