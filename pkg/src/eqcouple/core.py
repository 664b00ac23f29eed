"""Finite spaces partitioned by class labels, exact-rational probability measures,
and the algebra of saturated (class-invariant) sets."""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from pathlib import Path
from types import MappingProxyType
from typing import Any

from .errors import (
    DuplicatePointError,
    InputError,
    MassNotOneError,
    MissingLabelError,
    NegativeWeightError,
    SpaceMismatchError,
    UnknownPointError,
)

INSTANCE_KEYS = frozenset({"points", "classes", "mu", "nu"})


@dataclass(frozen=True, eq=False)
class EquivalenceSpace:
    """Points with a class label each; x ~ y iff their labels agree.

    Point order is the input order and classes are ordered by first
    appearance; every downstream iteration follows these orders.
    """

    points: tuple[str, ...]
    class_of: Mapping[str, str]

    @cached_property
    def classes(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.class_of[x] for x in self.points))

    @cached_property
    def fibers(self) -> Mapping[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {c: [] for c in self.classes}
        for x in self.points:
            out[self.class_of[x]].append(x)
        return MappingProxyType({c: tuple(xs) for c, xs in out.items()})

    @cached_property
    def index(self) -> Mapping[str, int]:
        return MappingProxyType({x: i for i, x in enumerate(self.points)})

    def same_class(self, x: str, y: str) -> bool:
        return self.class_of[x] == self.class_of[y]

    def check_points(self, point_set: Iterable[str]) -> frozenset[str]:
        s = frozenset(point_set)
        unknown = s - self.index.keys()
        if unknown:
            raise UnknownPointError(f"unknown points: {sorted(unknown)}")
        return s

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EquivalenceSpace):
            return NotImplemented
        return self is other or (
            self.points == other.points and dict(self.class_of) == dict(other.class_of)
        )

    def __hash__(self) -> int:
        return hash((self.points, tuple(self.class_of[x] for x in self.points)))


@dataclass(frozen=True)
class ProbMeasure:
    space: EquivalenceSpace
    weights: Mapping[str, Fraction]

    def __getitem__(self, x: str) -> Fraction:
        return self.weights[x]

    def mass(self, point_set: Iterable[str]) -> Fraction:
        return sum((self.weights[x] for x in point_set), Fraction(0))

    def integrate(self, fn: Mapping[str, Fraction]) -> Fraction:
        return sum((self.weights[x] * fn[x] for x in self.space.points), Fraction(0))

    def support(self) -> tuple[str, ...]:
        return tuple(x for x in self.space.points if self.weights[x] > 0)

    def to_json(self) -> dict[str, str]:
        return {x: str(self.weights[x]) for x in self.space.points}


@dataclass(frozen=True)
class SaturatedSet:
    space: EquivalenceSpace
    member_classes: frozenset[str] = field(default_factory=frozenset)

    @property
    def points(self) -> tuple[str, ...]:
        return tuple(x for x in self.space.points if self.space.class_of[x] in self.member_classes)

    @property
    def classes(self) -> tuple[str, ...]:
        """Member classes in canonical order."""
        return tuple(c for c in self.space.classes if c in self.member_classes)

    def __contains__(self, x: str) -> bool:
        return self.space.class_of[x] in self.member_classes

    def complement(self) -> SaturatedSet:
        return SaturatedSet(self.space, frozenset(self.space.classes) - self.member_classes)

    def union(self, other: SaturatedSet) -> SaturatedSet:
        return SaturatedSet(self.space, self.member_classes | other.member_classes)


def parse_rational(text: str | int) -> Fraction:
    """Parse ``"0.25"``, ``"1/4"`` or an int into an exact Fraction."""
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise InputError(f"weight must be a decimal or p/q string, got {text!r}")
    try:
        return Fraction(text.strip() if isinstance(text, str) else text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"cannot parse rational {text!r}") from exc


def build_space(points: Iterable[str], class_of: Mapping[str, str]) -> EquivalenceSpace:
    pts = tuple(points)
    if not pts:
        raise InputError("point list is empty")
    seen: set[str] = set()
    for x in pts:
        if x in seen:
            raise DuplicatePointError(f"duplicate point {x!r}")
        seen.add(x)
    missing = [x for x in pts if x not in class_of]
    if missing:
        raise MissingLabelError(f"points without a class label: {missing}")
    extra = set(class_of) - seen
    if extra:
        raise UnknownPointError(f"labels for unknown points: {sorted(extra)}")
    labels = {x: str(class_of[x]) for x in pts}
    return EquivalenceSpace(pts, MappingProxyType(labels))


def build_measure(
    space: EquivalenceSpace, weights: Mapping[str, str | int | Fraction], label: str = "measure"
) -> ProbMeasure:
    """Build a probability measure; points absent from ``weights`` get mass 0."""
    unknown = set(weights) - space.index.keys()
    if unknown:
        raise UnknownPointError(f"{label}: unknown points {sorted(unknown)}")
    parsed: dict[str, Fraction] = {}
    for x in space.points:
        raw = weights.get(x, 0)
        w = raw if isinstance(raw, Fraction) else parse_rational(raw)
        if w < 0:
            raise NegativeWeightError(f"{label}: weight of {x!r} is {w}")
        parsed[x] = w
    total = sum(parsed.values(), Fraction(0))
    if total != 1:
        raise MassNotOneError(total, label)
    return ProbMeasure(space, MappingProxyType(parsed))


def same_space(*measures: ProbMeasure) -> EquivalenceSpace:
    space = measures[0].space
    for m in measures[1:]:
        if m.space != space:
            raise SpaceMismatchError("measures live on different spaces")
    return space


def saturate(space: EquivalenceSpace, point_set: Iterable[str]) -> SaturatedSet:
    s = space.check_points(point_set)
    return SaturatedSet(space, frozenset(space.class_of[x] for x in s))


def is_saturated(space: EquivalenceSpace, point_set: Iterable[str]) -> bool:
    s = space.check_points(point_set)
    return s == frozenset(saturate(space, s).points)


def all_saturated_sets(space: EquivalenceSpace) -> Iterable[SaturatedSet]:
    """Every union of classes, 2**k of them, by increasing size then lexicographic."""
    for r in range(len(space.classes) + 1):
        for combo in combinations(space.classes, r):
            yield SaturatedSet(space, frozenset(combo))


@dataclass(frozen=True)
class Instance:
    space: EquivalenceSpace
    mu: ProbMeasure
    nu: ProbMeasure

    def to_json(self) -> dict[str, Any]:
        return {
            "points": list(self.space.points),
            "classes": {x: self.space.class_of[x] for x in self.space.points},
            "mu": self.mu.to_json(),
            "nu": self.nu.to_json(),
        }


def instance_from_json(doc: Any) -> Instance:
    if not isinstance(doc, dict):
        raise InputError("instance must be a JSON object")
    unknown = set(doc) - INSTANCE_KEYS
    if unknown:
        raise InputError(f"unknown instance keys: {sorted(unknown)}")
    missing = INSTANCE_KEYS - set(doc)
    if missing:
        raise InputError(f"missing instance keys: {sorted(missing)}")
    if not isinstance(doc["points"], list) or not all(isinstance(x, str) for x in doc["points"]):
        raise InputError("'points' must be a list of strings")
    for key in ("classes", "mu", "nu"):
        if not isinstance(doc[key], dict):
            raise InputError(f"'{key}' must be an object")
    space = build_space(doc["points"], doc["classes"])
    return Instance(space, build_measure(space, doc["mu"], "mu"), build_measure(space, doc["nu"], "nu"))


def load_instance(path: str | Path) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    return instance_from_json(doc)


def dump_instance(instance: Instance) -> str:
    return json.dumps(instance.to_json(), indent=2) + "\n"
