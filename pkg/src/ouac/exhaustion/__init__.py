"""Exhaustion decisions, generating sequences, garlands and the low-dimensional catalogs."""

from .decide import (
    AbsContinuity,
    ExhaustionVerdict,
    decide_exhaustion,
    decide_exhaustion_with_gaussian,
    gaussian_cyclic_index,
    is_controllable,
    single_shot_exhausts,
)
from .garland import Cone, GarlandCertificate, build_garland
from .heymann import heymann_sequence, is_generating_sequence, krylov_sum

__all__ = [
    "AbsContinuity",
    "Cone",
    "ExhaustionVerdict",
    "GarlandCertificate",
    "build_garland",
    "decide_exhaustion",
    "decide_exhaustion_with_gaussian",
    "gaussian_cyclic_index",
    "heymann_sequence",
    "is_controllable",
    "is_generating_sequence",
    "krylov_sum",
    "single_shot_exhausts",
]
