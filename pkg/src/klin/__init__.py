"""Certified refutation of sparse k-LIN instances over finite fields and abelian groups."""

from __future__ import annotations

from .algebra import GroupSpec, Phase, SparseVec, find_quotient_subgroup, robustness, thinness
from .deps import Dependency, find_dependency_exhaustive, find_dependency_kikuchi, verify_dependency
from .errors import DomainError, InconsistentError, KlinError, ResourceCapError, ValidationError
from .instance import Equation, KLinInstance, brute_force_val, gen_random, gen_semirandom, make_instance, val_at
from .refute import Certificate, audit_decomposition, refute, regular_decompose
from .simple import simple_refute
from .sos import build_max_entropy, to_boolean_pe, verify_pe

__version__ = "0.1.0"

__all__ = [
    "GroupSpec", "Phase", "SparseVec", "find_quotient_subgroup", "robustness", "thinness",
    "Dependency", "find_dependency_exhaustive", "find_dependency_kikuchi", "verify_dependency",
    "DomainError", "InconsistentError", "KlinError", "ResourceCapError", "ValidationError",
    "Equation", "KLinInstance", "brute_force_val", "gen_random", "gen_semirandom", "make_instance", "val_at",
    "Certificate", "audit_decomposition", "refute", "regular_decompose", "simple_refute",
    "build_max_entropy", "to_boolean_pe", "verify_pe",
]
