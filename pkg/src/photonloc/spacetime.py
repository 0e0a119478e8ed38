"""Minkowski geometry: four-vectors, hyperplanes, and boosts along the x3 axis.

Conventions used throughout the package: natural units (c = 1) and metric
signature (-, +, +, +), so the invariant contraction of two four-vectors is
``-a0*b0 + a1*b1 + a2*b2 + a3*b3``.

Everything here is a pure function over immutable values; there is no shared
state, so all operations are safe to call concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

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
]

# Interval / plane-kind labels.  A "spacelike" plane is a fixed-t slice with a
# timelike normal; a "timelike" plane is a fixed-x3 sheet with a spacelike normal.
TIMELIKE = "timelike"
LIGHTLIKE = "lightlike"
SPACELIKE = "spacelike"

_UNIT_NORMAL_TOL = 1e-12
_LIGHTLIKE_TOL = 1e-12


@dataclass(frozen=True)
class FourVector:
    """Contravariant four-vector (t, x1, x2, x3)."""

    t: float
    x1: float
    x2: float
    x3: float

    @property
    def spatial(self) -> tuple[float, float, float]:
        return (self.x1, self.x2, self.x3)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.t, self.x1, self.x2, self.x3)

    def scaled(self, c: float) -> "FourVector":
        return FourVector(c * self.t, c * self.x1, c * self.x2, c * self.x3)

    def __add__(self, other: "FourVector") -> "FourVector":
        return FourVector(
            self.t + other.t,
            self.x1 + other.x1,
            self.x2 + other.x2,
            self.x3 + other.x3,
        )

    def __sub__(self, other: "FourVector") -> "FourVector":
        return FourVector(
            self.t - other.t,
            self.x1 - other.x1,
            self.x2 - other.x2,
            self.x3 - other.x3,
        )


def contract(a: FourVector, b: FourVector) -> float:
    """Invariant contraction -a0*b0 + a.b under the (-,+,+,+) signature."""
    return -a.t * b.t + a.x1 * b.x1 + a.x2 * b.x2 + a.x3 * b.x3


def classify_interval(x: FourVector) -> str:
    """Classify x as timelike / lightlike / spacelike by the sign of x.x.

    The lightlike window is 1e-12 * max(1, sum of squared components) so the
    classifier is total on floating-point inputs.
    """
    s = contract(x, x)
    scale = max(1.0, x.t * x.t + x.x1 * x.x1 + x.x2 * x.x2 + x.x3 * x.x3)
    if abs(s) <= _LIGHTLIKE_TOL * scale:
        return LIGHTLIKE
    return TIMELIKE if s < 0.0 else SPACELIKE


@dataclass(frozen=True)
class BoostParameters:
    """Boost velocity beta along x3, |beta| < 1."""

    beta: float

    def __post_init__(self) -> None:
        if not abs(self.beta) < 1.0:
            raise ValueError(
                f"superluminal frame: |beta| must be < 1, got beta={self.beta}"
            )

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt((1.0 - self.beta) * (1.0 + self.beta))

    def inverse(self) -> "BoostParameters":
        return BoostParameters(-self.beta)


def boost_vector(x: FourVector, b: BoostParameters) -> FourVector:
    """Boost a four-vector along x3: returns (g(t+bz), x1, x2, g(z+bt))."""
    g = b.gamma
    return FourVector(
        g * (x.t + b.beta * x.x3),
        x.x1,
        x.x2,
        g * (x.x3 + b.beta * x.t),
    )


def compose_boosts(b1: BoostParameters, b2: BoostParameters) -> BoostParameters:
    """Relativistic velocity addition for two collinear boosts."""
    return BoostParameters((b1.beta + b2.beta) / (1.0 + b1.beta * b2.beta))


def world_line_angle(b: BoostParameters) -> float:
    """Angle (radians) a boosted detector world line makes with its rest axis."""
    return math.atan(b.beta)


@dataclass(frozen=True)
class Hyperplane:
    """A flat 3D slice of spacetime with unit normal and scalar offset.

    ``kind`` is the plane kind: SPACELIKE for a fixed-t slice (timelike
    normal), TIMELIKE for a fixed-x3 sheet (spacelike normal).  The offset is
    the plane coordinate, i.e. the value of the normal component of any event
    on the plane measured in the plane-adapted frame; it is a Lorentz scalar.
    """

    normal: FourVector
    offset: float
    kind: str

    def __post_init__(self) -> None:
        nn = contract(self.normal, self.normal)
        if abs(abs(nn) - 1.0) > _UNIT_NORMAL_TOL:
            raise ValueError(f"normal is not unit: n.n = {nn}")
        if self.kind == SPACELIKE and nn >= 0.0:
            raise ValueError("spacelike plane requires a timelike normal (n.n = -1)")
        if self.kind == TIMELIKE and nn <= 0.0:
            raise ValueError("timelike plane requires a spacelike normal (n.n = +1)")
        if self.kind not in (SPACELIKE, TIMELIKE):
            raise ValueError(f"unknown plane kind: {self.kind!r}")

    @classmethod
    def spacelike(cls, offset: float = 0.0) -> "Hyperplane":
        """Canonical t = offset plane, normal (1,0,0,0)."""
        return cls(FourVector(1.0, 0.0, 0.0, 0.0), float(offset), SPACELIKE)

    @classmethod
    def timelike(cls, offset: float = 0.0) -> "Hyperplane":
        """Canonical x3 = offset plane, normal (0,0,0,1)."""
        return cls(FourVector(0.0, 0.0, 0.0, 1.0), float(offset), TIMELIKE)

    @property
    def normal_sign(self) -> float:
        """+1 for a spacelike normal, -1 for a timelike normal.

        Multiplying the metric contraction with the normal by this sign gives
        the normal component measured in the plane-adapted frame: k0 on a
        t = a plane, k3 on an x3 = b plane, and the rest-frame frequency for
        boosted normals.
        """
        return 1.0 if self.kind == TIMELIKE else -1.0

    def plane_coordinate(self, x: FourVector) -> float:
        """Normal coordinate of an event; events on the plane return offset."""
        return self.normal_sign * contract(self.normal, x)

    def contains(self, x: FourVector, tol: float = 1e-12) -> bool:
        scale = max(1.0, abs(self.offset))
        return abs(self.plane_coordinate(x) - self.offset) <= tol * scale

    @property
    def is_canonical(self) -> bool:
        n = self.normal
        if self.kind == SPACELIKE:
            return n.t == 1.0 and n.x1 == 0.0 and n.x2 == 0.0 and n.x3 == 0.0
        return n.t == 0.0 and n.x1 == 0.0 and n.x2 == 0.0 and n.x3 == 1.0


def boost_hyperplane(plane: Hyperplane, b: BoostParameters) -> Hyperplane:
    """Boost a hyperplane: normal transforms as a four-vector, kind is kept.

    The offset is recomputed from a boosted anchor event on the plane, which
    makes it manifestly describe the same event set; since the plane
    coordinate is a scalar, the offset comes out numerically unchanged.
    """
    normal = boost_vector(plane.normal, b)
    anchor = plane.normal.scaled(plane.offset)
    sign = plane.normal_sign
    offset = sign * contract(normal, boost_vector(anchor, b))
    return Hyperplane(normal, offset, plane.kind)
