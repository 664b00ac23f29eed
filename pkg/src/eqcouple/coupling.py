"""Couplings with cost 1 - P(same class), an explicit optimal coupling, and the
two-stage maximal coupling on the class quotient (exact law and sampler)."""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .core import EquivalenceSpace, ProbMeasure, build_measure, parse_rational, same_space
from .errors import (
    InputError,
    InvalidCouplingError,
    PlanMismatchError,
    SpaceMismatchError,
    UnknownPointError,
)
from .quotient import pushforward, tv_invariant

ZERO = Fraction(0)
Pair = tuple[str, str]


@dataclass(frozen=True)
class Coupling:
    """Sparse joint table over point pairs together with its intended marginals."""

    space: EquivalenceSpace
    mu: ProbMeasure
    nu: ProbMeasure
    joint: Mapping[Pair, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mu.space != self.space or self.nu.space != self.space:
            raise SpaceMismatchError("coupling marginals live on a different space")
        idx = self.space.index
        cleaned = {}
        for (x, y), w in self.joint.items():
            if x not in idx or y not in idx:
                raise UnknownPointError(f"coupling cell ({x!r}, {y!r}) has an unknown point")
            if w < 0:
                raise InvalidCouplingError(f"negative mass {w} at ({x!r}, {y!r})")
            if w:
                cleaned[(x, y)] = w
        ordered = dict(sorted(cleaned.items(), key=lambda kv: (idx[kv[0][0]], idx[kv[0][1]])))
        object.__setattr__(self, "joint", ordered)

    def __getitem__(self, pair: Pair) -> Fraction:
        return self.joint.get(pair, ZERO)

    def mass_on_relation(self) -> Fraction:
        return sum((w for (x, y), w in self.joint.items() if self.space.same_class(x, y)), ZERO)

    def mass_off_diagonal(self) -> Fraction:
        return sum((w for (x, y), w in self.joint.items() if x != y), ZERO)

    def class_table(self) -> dict[tuple[str, str], Fraction]:
        """Joint mass aggregated to (class, class) cells."""
        c = self.space.class_of
        out: dict[tuple[str, str], Fraction] = {}
        for (x, y), w in self.joint.items():
            key = (c[x], c[y])
            out[key] = out.get(key, ZERO) + w
        return out

    def to_json(self) -> list[dict[str, str]]:
        return [{"x": x, "y": y, "w": str(w)} for (x, y), w in self.joint.items()]


def coupling_from_json(doc: Any, mu: ProbMeasure, nu: ProbMeasure) -> Coupling:
    """Accepts a bare cell list or an object with a ``"coupling"`` list (such as
    the output of ``eqcouple couple``); repeated cells add up."""
    if isinstance(doc, dict) and "coupling" in doc:
        doc = doc["coupling"]
    if not isinstance(doc, list):
        raise InputError("coupling must be a list of {x, y, w} cells")
    joint: dict[Pair, Fraction] = {}
    for cell in doc:
        if not isinstance(cell, dict) or set(cell) != {"x", "y", "w"}:
            raise InputError(f"malformed coupling cell {cell!r}")
        key = (cell["x"], cell["y"])
        joint[key] = joint.get(key, ZERO) + parse_rational(cell["w"])
    return Coupling(same_space(mu, nu), mu, nu, joint)


@dataclass(frozen=True)
class CouplingResiduals:
    row: dict[str, Fraction]
    col: dict[str, Fraction]

    @property
    def ok(self) -> bool:
        return not any(self.row.values()) and not any(self.col.values())


def validate_coupling(P: Coupling) -> CouplingResiduals:
    """Exact residuals (row sums - mu, column sums - nu)."""
    rows = {x: ZERO for x in P.space.points}
    cols = {x: ZERO for x in P.space.points}
    for (x, y), w in P.joint.items():
        rows[x] += w
        cols[y] += w
    return CouplingResiduals(
        {x: rows[x] - P.mu[x] for x in P.space.points},
        {y: cols[y] - P.nu[y] for y in P.space.points},
    )


def cost(P: Coupling) -> Fraction:
    """1 - P(E) for a coupling with valid marginals."""
    if not validate_coupling(P).ok:
        raise InvalidCouplingError("coupling marginals do not match mu and nu")
    return 1 - P.mass_on_relation()


def _northwest(
    supply: Iterable[tuple[str, Fraction]], demand: Iterable[tuple[str, Fraction]]
) -> dict[Pair, Fraction]:
    rows = [[x, w] for x, w in supply if w > 0]
    cols = [[y, w] for y, w in demand if w > 0]
    out: dict[Pair, Fraction] = {}
    i = j = 0
    while i < len(rows) and j < len(cols):
        w = min(rows[i][1], cols[j][1])
        key = (rows[i][0], cols[j][0])
        out[key] = out.get(key, ZERO) + w
        rows[i][1] -= w
        cols[j][1] -= w
        if rows[i][1] == 0:
            i += 1
        if cols[j][1] == 0:
            j += 1
    return out


def optimal_coupling(mu: ProbMeasure, nu: ProbMeasure) -> Coupling:
    """A coupling whose cost equals the invariant total variation.

    Inside each class the shared mass min(mu(C), nu(C)) is matched by
    north-west corner on the scaled conditional weights; leftover mass only
    exists on classes of opposite sign and is matched across classes.
    """
    space = same_space(mu, nu)
    mu_hat, nu_hat = pushforward(mu), pushforward(nu)
    joint: dict[Pair, Fraction] = {}
    left_mu = dict(mu.weights)
    left_nu = dict(nu.weights)
    for c in space.classes:
        shared = min(mu_hat[c], nu_hat[c])
        if shared == 0:
            continue
        fiber = space.fibers[c]
        take_mu = [(x, mu[x] * shared / mu_hat[c]) for x in fiber]
        take_nu = [(y, nu[y] * shared / nu_hat[c]) for y in fiber]
        for x, w in take_mu:
            left_mu[x] -= w
        for y, w in take_nu:
            left_nu[y] -= w
        for key, w in _northwest(take_mu, take_nu).items():
            joint[key] = joint.get(key, ZERO) + w
    cross = _northwest(
        ((x, left_mu[x]) for x in space.points), ((y, left_nu[y]) for y in space.points)
    )
    for key, w in cross.items():
        joint[key] = joint.get(key, ZERO) + w
    return Coupling(space, mu, nu, joint)


@dataclass(frozen=True)
class MaximalCouplingPlan:
    """Y = X unless U > stay_prob(X), in which case Y is drawn from ``overflow``."""

    space: EquivalenceSpace
    tv: Fraction
    stay_prob: Mapping[str, Fraction]
    overflow: ProbMeasure | None
    degenerate: bool

    def to_json(self) -> dict[str, Any]:
        pts = self.space.points
        return {
            "tv": str(self.tv),
            "degenerate": self.degenerate,
            "stay_prob": {x: str(self.stay_prob[x]) for x in pts},
            "overflow": None if self.overflow is None else self.overflow.to_json(),
        }


def kl8_plan(mu: ProbMeasure, nu: ProbMeasure) -> MaximalCouplingPlan:
    space = same_space(mu, nu)
    w = tv_invariant(mu, nu)
    if w.value == 0:
        return MaximalCouplingPlan(space, ZERO, {x: Fraction(1) for x in space.points}, None, True)
    stay: dict[str, Fraction] = {}
    gamma: dict[str, Fraction] = {}
    for x in space.points:
        c = space.class_of[x]
        f, g = w.f[c], w.g[c]
        stay[x] = min(g / f, Fraction(1)) if f > 0 else Fraction(1)
        gamma[x] = max(g - f, ZERO) * (mu[x] + nu[x]) / w.value
    return MaximalCouplingPlan(space, w.value, stay, build_measure(space, gamma, "overflow"), False)


def kl8_exact_law(plan: MaximalCouplingPlan, mu: ProbMeasure) -> tuple[Coupling, ProbMeasure]:
    """Exact joint law of (X, Y) and the law of Y."""
    space = plan.space
    if mu.space != space:
        raise PlanMismatchError("plan and mu live on different spaces")
    leave = sum((mu[x] * (1 - plan.stay_prob[x]) for x in space.points), ZERO)
    if leave != plan.tv:
        raise PlanMismatchError(f"plan leave mass {leave} under mu differs from its tv {plan.tv}")
    joint: dict[Pair, Fraction] = {}
    for x in space.points:
        if mu[x] == 0:
            continue
        joint[(x, x)] = mu[x] * plan.stay_prob[x]
        out = mu[x] * (1 - plan.stay_prob[x])
        if out and plan.overflow is not None:
            for z in plan.overflow.support():
                joint[(x, z)] = joint.get((x, z), ZERO) + out * plan.overflow[z]
    second = {y: ZERO for y in space.points}
    for (_, y), w in joint.items():
        second[y] += w
    nu0 = build_measure(space, second, "nu0")
    return Coupling(space, mu, nu0, joint), nu0


@dataclass(frozen=True)
class SampleReport:
    n: int
    seed: int
    workers: int
    counts: Mapping[Pair, int]
    empirical_leave_rate: float
    empirical_not_E_rate: float

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "seed": self.seed,
            "workers": self.workers,
            "counts": [{"x": x, "y": y, "count": k} for (x, y), k in self.counts.items()],
            "empirical_leave_rate": self.empirical_leave_rate,
            "empirical_not_E_rate": self.empirical_not_E_rate,
        }

    def dumps(self) -> str:
        return dumps_17g(self.to_json())


def dumps_17g(doc: Any) -> str:
    """JSON text in which every float is written with 17 significant digits."""
    floats: list[float] = []

    def swap(obj: Any) -> Any:
        if isinstance(obj, float):
            floats.append(obj)
            return f"\x00{len(floats) - 1}\x00"
        if isinstance(obj, dict):
            return {k: swap(v) for k, v in obj.items()}
        if isinstance(obj, list):
            return [swap(v) for v in obj]
        return obj

    text = json.dumps(swap(doc), indent=2)
    for i, v in enumerate(floats):
        text = text.replace(f'"\\u0000{i}\\u0000"', format(v, ".17g"))
    return text + "\n"


def _cdf(weights: list[Fraction]) -> np.ndarray:
    cum = np.cumsum(np.array([float(w) for w in weights]))
    return cum / cum[-1]


def _worker_streams(seed: int, workers: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(workers)]


def kl8_sample(
    plan: MaximalCouplingPlan, mu: ProbMeasure, n: int, seed: int = 0, workers: int = 1
) -> SampleReport:
    """Monte Carlo draws of (X, Y); counts depend only on (seed, workers)."""
    if n < 1 or workers < 1:
        raise InputError("n and workers must be at least 1")
    if not 0 <= seed < 2**64:
        raise InputError("seed must be a 64-bit unsigned integer")
    space = plan.space
    if mu.space != space:
        raise PlanMismatchError("plan and mu live on different spaces")
    pts = space.points
    npts = len(pts)
    cdf_mu = _cdf([mu[x] for x in pts])
    stay = np.array([float(plan.stay_prob[x]) for x in pts])
    cdf_gamma = None if plan.overflow is None else _cdf([plan.overflow[x] for x in pts])
    labels = np.array([space.classes.index(space.class_of[x]) for x in pts])
    sizes = [n // workers + (i < n % workers) for i in range(workers)]

    def draw(job: tuple[np.random.Generator, int]) -> np.ndarray:
        rng, m = job
        x = np.searchsorted(cdf_mu, rng.random(m), side="right")
        u = rng.random(m)
        if cdf_gamma is None:
            return x * npts + x
        z = np.searchsorted(cdf_gamma, rng.random(m), side="right")
        # tie U == stay_prob resolves as stay
        y = np.where(u > stay[x], z, x)
        return x * npts + y

    jobs = list(zip(_worker_streams(seed, workers), sizes))
    if workers == 1:
        cells = [draw(jobs[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(draw, jobs))
    flat = np.bincount(np.concatenate(cells), minlength=npts * npts)
    counts: dict[Pair, int] = {}
    leave = not_e = 0
    for cell in np.flatnonzero(flat):
        i, j = divmod(int(cell), npts)
        k = int(flat[cell])
        counts[(pts[i], pts[j])] = k
        leave += k * (i != j)
        not_e += k * (labels[i] != labels[j])
    return SampleReport(n, seed, workers, counts, leave / n, not_e / n)
