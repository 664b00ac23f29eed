"""Equivalence couplings on finite spaces: invariant total variation, optimal
and maximal couplings, optimality certificates, and an exact transport oracle."""

from .certificate import Certificate, find_certificate, verify_minimizer
from .core import (
    EquivalenceSpace,
    Instance,
    ProbMeasure,
    SaturatedSet,
    build_measure,
    build_space,
    is_saturated,
    load_instance,
    saturate,
)
from .coupling import (
    Coupling,
    MaximalCouplingPlan,
    SampleReport,
    cost,
    kl8_exact_law,
    kl8_plan,
    kl8_sample,
    optimal_coupling,
    validate_coupling,
)
from .oracle import duality_check, equivalence_cost, solve_transport, TransportProblem
from .quotient import (
    dual_envelope,
    pushforward,
    support_union,
    tv_invariant,
    tv_restricted,
    tv_subsets,
)

__all__ = [
    "Certificate",
    "Coupling",
    "EquivalenceSpace",
    "Instance",
    "MaximalCouplingPlan",
    "ProbMeasure",
    "SampleReport",
    "SaturatedSet",
    "TransportProblem",
    "build_measure",
    "build_space",
    "cost",
    "dual_envelope",
    "duality_check",
    "equivalence_cost",
    "find_certificate",
    "is_saturated",
    "kl8_exact_law",
    "kl8_plan",
    "kl8_sample",
    "load_instance",
    "optimal_coupling",
    "pushforward",
    "saturate",
    "solve_transport",
    "support_union",
    "tv_invariant",
    "tv_restricted",
    "tv_subsets",
    "validate_coupling",
    "verify_minimizer",
]
