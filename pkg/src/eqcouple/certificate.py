"""Optimality certificates for couplings under the cost 1 - 1_E.

A coupling P is optimal iff some union of classes A has
P(E) + P(A x A^c) = 1, i.e. every unit of mass that leaves its class goes
from A to A^c.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Any

from .core import SaturatedSet
from .coupling import Coupling, cost, validate_coupling
from .errors import InternalInconsistencyError, InvalidCouplingError, TooManyClassesError
from .oracle import TransportProblem, equivalence_cost, solve_transport
from .quotient import tv_invariant

MAX_CLASSES = 20


@dataclass(frozen=True)
class Certificate:
    A: SaturatedSet
    pE: Fraction
    pAAc: Fraction

    def to_json(self) -> dict[str, Any]:
        return {"A": list(self.A.classes), "pE": str(self.pE), "pAAc": str(self.pAAc)}


def _outflow(table: dict[tuple[str, str], Fraction], members: frozenset[str]) -> Fraction:
    return sum(
        (w for (a, b), w in table.items() if a in members and b not in members), Fraction(0)
    )


def find_certificate(P: Coupling) -> Certificate | None:
    """Return the first certifying saturated set, or None if P is not optimal.

    The total-variation witness is tried first, then every union of classes by
    increasing size and lexicographic class order.
    """
    if not validate_coupling(P).ok:
        raise InvalidCouplingError("coupling marginals do not match mu and nu")
    space = P.space
    k = len(space.classes)
    if k > MAX_CLASSES:
        raise TooManyClassesError(f"{k} classes; exhaustive search is capped at {MAX_CLASSES}")
    table = P.class_table()
    pE = sum((w for (a, b), w in table.items() if a == b), Fraction(0))

    def candidates():
        yield tv_invariant(P.mu, P.nu).A.member_classes
        for r in range(k + 1):
            for combo in combinations(space.classes, r):
                yield frozenset(combo)

    for members in candidates():
        out = _outflow(table, members)
        if pE + out == 1:
            return Certificate(SaturatedSet(space, members), pE, out)
    return None


@dataclass(frozen=True)
class MinimizerVerdict:
    is_minimizer: bool
    certificate: Certificate | None
    cost: Fraction
    optimum: Fraction

    def to_json(self) -> dict[str, Any]:
        return {
            "is_minimizer": self.is_minimizer,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "cost": str(self.cost),
            "optimum": str(self.optimum),
        }


def verify_minimizer(P: Coupling) -> MinimizerVerdict:
    """Decide optimality by certificate search and by the transport oracle.

    The two answers must agree; a disagreement raises InternalInconsistencyError.
    """
    cert = find_certificate(P)
    c = cost(P)
    opt = solve_transport(TransportProblem(equivalence_cost(P.space), P.mu, P.nu)).value
    if (cert is not None) != (c == opt):
        raise InternalInconsistencyError(
            f"certificate {'found' if cert else 'not found'} but cost {c} vs optimum {opt}"
        )
    return MinimizerVerdict(cert is not None, cert, c, opt)
