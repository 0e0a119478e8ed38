"""photonloc: single-photon localization on spacetime hyperplanes.

Numerical toolkit for one-photon amplitudes on spacelike (fixed-t) and
timelike (fixed-x3) hyperplanes: localized orthonormal bases, invariant
inner products and flux integrals, probability-density and photon-counting
detector arrays, and boosted-observer views of both experiments.
"""
from photonloc.spacetime import (
    BoostParameters,
    FourVector,
    Hyperplane,
    LIGHTLIKE,
    SPACELIKE,
    TIMELIKE,
    boost_hyperplane,
    boost_vector,
    classify_interval,
    compose_boosts,
    contract,
    world_line_angle,
)

__version__ = "0.1.0"

__all__ = [
    "FourVector",
    "BoostParameters",
    "Hyperplane",
    "SPACELIKE",
    "TIMELIKE",
    "LIGHTLIKE",
    "contract",
    "classify_interval",
    "boost_vector",
    "boost_hyperplane",
    "compose_boosts",
    "world_line_angle",
    "__version__",
]
