"""Total variation over the invariant sigma-field.

Densities of the two measures against their sum are taken on the quotient
(one value per class); the optimal set is the union of classes where the first
density strictly exceeds the second.
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

from .core import EquivalenceSpace, ProbMeasure, SaturatedSet, same_space
from .errors import InternalInconsistencyError, MassOutsideBError, ValueOutOfRangeError

ZERO = Fraction(0)


@dataclass(frozen=True)
class QuotientMeasure:
    space: EquivalenceSpace
    class_mass: Mapping[str, Fraction]

    def __getitem__(self, c: str) -> Fraction:
        return self.class_mass[c]


@dataclass(frozen=True)
class TVWitness:
    lambda_mass: Mapping[str, Fraction]
    f: Mapping[str, Fraction]
    g: Mapping[str, Fraction]
    A: SaturatedSet
    value: Fraction

    def to_json(self) -> dict[str, Any]:
        classes = self.A.space.classes
        return {
            "value": str(self.value),
            "A": list(self.A.classes),
            "f": {c: str(self.f[c]) for c in classes},
            "g": {c: str(self.g[c]) for c in classes},
            "lambda": {c: str(self.lambda_mass[c]) for c in classes},
        }


@dataclass(frozen=True)
class RestrictionWitness:
    B: frozenset[str]
    value: Fraction
    witness_set: frozenset[str]


def pushforward(m: ProbMeasure) -> QuotientMeasure:
    space = m.space
    return QuotientMeasure(space, {c: m.mass(space.fibers[c]) for c in space.classes})


def _densities(mu_hat: Mapping[Hashable, Fraction], nu_hat: Mapping[Hashable, Fraction]):
    lam, f, g = {}, {}, {}
    for c in mu_hat:
        lam[c] = mu_hat[c] + nu_hat[c]
        if lam[c] > 0:
            f[c] = mu_hat[c] / lam[c]
            g[c] = nu_hat[c] / lam[c]
        else:
            # null class: densities are lambda-a.e. objects, pin to 0
            f[c] = g[c] = ZERO
    return lam, f, g


def tv_invariant(mu: ProbMeasure, nu: ProbMeasure) -> TVWitness:
    space = same_space(mu, nu)
    mu_hat, nu_hat = pushforward(mu), pushforward(nu)
    lam, f, g = _densities(mu_hat.class_mass, nu_hat.class_mass)
    members = frozenset(c for c in space.classes if f[c] > g[c])
    A = SaturatedSet(space, members)
    value = mu.mass(A.points) - nu.mass(A.points)
    half_l1 = sum((abs(mu_hat[c] - nu_hat[c]) for c in space.classes), ZERO) / 2
    if value != half_l1:
        raise InternalInconsistencyError(f"witness value {value} != half L1 {half_l1}")
    return TVWitness(lam, f, g, A, value)


def tv_subsets(mu: ProbMeasure, nu: ProbMeasure) -> Fraction:
    """Total variation over the full power set."""
    space = same_space(mu, nu)
    return sum((abs(mu[x] - nu[x]) for x in space.points), ZERO) / 2


def dual_envelope(space: EquivalenceSpace, f_vals: Mapping[str, Fraction]) -> dict[str, Fraction]:
    """h(x) = max of f over the class of x."""
    space.check_points(f_vals)
    for x in space.points:
        v = f_vals[x]
        if not 0 <= v <= 1:
            raise ValueOutOfRangeError(f"value at {x!r} is {v}, outside [0, 1]")
    top = {c: max(f_vals[y] for y in space.fibers[c]) for c in space.classes}
    return {x: top[space.class_of[x]] for x in space.points}


def support_union(mu: ProbMeasure, nu: ProbMeasure) -> frozenset[str]:
    space = same_space(mu, nu)
    return frozenset(x for x in space.points if mu[x] > 0 or nu[x] > 0)


def _tv_over_blocks(
    mu: ProbMeasure, nu: ProbMeasure, block_of: Callable[[str], Hashable]
) -> tuple[Fraction, frozenset[str]]:
    points = mu.space.points
    mu_hat: dict[Hashable, Fraction] = {}
    nu_hat: dict[Hashable, Fraction] = {}
    for x in points:
        b = block_of(x)
        mu_hat[b] = mu_hat.get(b, ZERO) + mu[x]
        nu_hat[b] = nu_hat.get(b, ZERO) + nu[x]
    _, f, g = _densities(mu_hat, nu_hat)
    witness = frozenset(x for x in points if f[block_of(x)] > g[block_of(x)])
    return mu.mass(witness) - nu.mass(witness), witness


def tv_restricted(mu: ProbMeasure, nu: ProbMeasure, B: Iterable[str]) -> RestrictionWitness:
    """Total variation over sets invariant under the relation restricted to B x B.

    Points outside B become singleton classes (they carry no mass).
    """
    space = same_space(mu, nu)
    B = space.check_points(B)
    if mu.mass(B) != 1 or nu.mass(B) != 1:
        raise MassOutsideBError(f"mu(B) = {mu.mass(B)}, nu(B) = {nu.mass(B)}; both must be 1")

    def block_of(x: str) -> Hashable:
        return ("class", space.class_of[x]) if x in B else ("point", x)

    value, witness = _tv_over_blocks(mu, nu, block_of)
    full = tv_invariant(mu, nu).value
    if value != full:
        raise InternalInconsistencyError(f"restricted TV {value} != invariant TV {full}")
    return RestrictionWitness(B, value, witness)
