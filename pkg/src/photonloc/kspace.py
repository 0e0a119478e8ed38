"""Discretized k-space on a hyperplane: mode lattices, dispersion, measure.

A hyperplane grid samples the on-plane coordinates of a canonical plane on a
uniform, FFT-compatible lattice.  On a spacelike plane (t = a) the on-plane
axes are (x1, x2, x3) with dual wavevector components (k1, k2, k3); the
normal component is k0 = eps * omega with omega = |k|.  On a timelike plane
(x3 = b) the on-plane axes are (x1, x2, t) with duals (k1, k2, k0) -- k0
runs over both signs -- and the normal component is k3 = eps *
sqrt(k0^2 - k1^2 - k2^2), which is imaginary for evanescent modes
(k1^2 + k2^2 > k0^2).

Normal-component convention: k_sigma is the component of k along the plane
normal measured in the plane-adapted frame, i.e. ``-contract(n, k)`` for a
timelike normal and ``+contract(n, k)`` for a spacelike normal.  On the
canonical planes this is the plain component (k0 resp. k3), matching the
vacuum dispersion bookkeeping k0 = eps*omega, and it is the rest-frame
frequency for boosted normals.  The flux label eps is the sign of k_sigma
for propagating modes; for evanescent modes it labels the decay direction.

The invariant measure per lattice mode is dkappa / (2|k_sigma|), where
dkappa is the k-space cell volume.  Modes where |k_sigma| vanishes (k = 0 on
spacelike grids, the k_perp = |k0| ring on timelike grids) and evanescent
modes carry zero weight; evanescent modes participate only in plane-to-plane
transport.

The on-plane plane-wave pairing carries per-axis signs: exp(i k.x) on a
spacelike plane, exp(i(k1 x1 + k2 x2 - k0 t)) on a timelike plane.
``synthesize_on_grid`` evaluates such sums over the centered position
lattice with FFTs.

Grids and their cached mode tables are immutable after construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np

from photonloc.spacetime import FourVector, Hyperplane, SPACELIKE, contract

__all__ = [
    "EPS_VALUES",
    "LAM_VALUES",
    "KPoint",
    "PolarizationBasis",
    "HyperplaneGrid",
    "ExcludedModeError",
    "DegenerateAxisError",
    "eps_index",
    "lam_index",
    "k_sigma",
    "solve_normal_component",
    "mode_weight",
    "polarization_basis",
    "polarization_pair",
    "helicity_vectors",
    "default_reference_axis",
    "dual_grid",
    "synthesize_on_grid",
    "onplane_phase",
    "contraction_phase",
]

EPS_VALUES = (1, -1)
LAM_VALUES = (1, 2)

_DEGENERATE_AXIS_TOL = 1e-8
_FALLBACK_AXIS = (1.0, 0.0, 0.0)


class ExcludedModeError(ValueError):
    """Raised when a mode below the |k_sigma| cutoff is used in quadrature."""


class DegenerateAxisError(ValueError):
    """Raised when the polarization reference axis is parallel to k."""


def eps_index(eps: int) -> int:
    if eps == 1:
        return 0
    if eps == -1:
        return 1
    raise ValueError(f"eps must be +1 or -1, got {eps}")


def lam_index(lam: int) -> int:
    if lam in (1, 2):
        return lam - 1
    raise ValueError(f"lam must be 1 or 2, got {lam}")


@dataclass(frozen=True)
class KPoint:
    """One lattice mode: on-plane components, normal component, flux label."""

    on_plane: tuple[float, float, float]
    normal_component: complex
    eps: int

    @property
    def is_propagating(self) -> bool:
        return self.normal_component.imag == 0.0 and self.normal_component != 0.0

    @property
    def abs_normal(self) -> float:
        return abs(self.normal_component)


@dataclass(frozen=True)
class PolarizationBasis:
    """Two transverse unit polarization vectors for one mode (time parts 0)."""

    e1: np.ndarray  # shape (4,), real
    e2: np.ndarray


def k_sigma(k: FourVector, plane: Hyperplane) -> float:
    """Normal component of a four-vector k in the plane-adapted frame.

    Reduces to k0 on a canonical spacelike plane and k3 on a canonical
    timelike plane; for a boosted spacelike-plane normal it equals the
    frequency read off after boosting k to the rest frame of the normal.
    """
    return plane.normal_sign * contract(plane.normal, k)


def solve_normal_component(
    on_plane: tuple[float, float, float], plane: Hyperplane, eps: int
) -> complex:
    """Solve the vacuum dispersion relation for the normal component.

    Spacelike plane, on_plane = (k1, k2, k3): returns eps * omega.
    Timelike plane, on_plane = (k1, k2, k0): returns eps * sqrt(k0^2 - kp^2)
    by the principal branch, i.e. purely imaginary with positive imaginary
    part times eps for evanescent modes.  A zero return value marks the
    degenerate |k_sigma| = 0 point; quadrature weights exclude it.
    """
    if eps not in EPS_VALUES:
        raise ValueError(f"eps must be +1 or -1, got {eps}")
    a, b, c = on_plane
    if plane.kind == SPACELIKE:
        return complex(eps * math.sqrt(a * a + b * b + c * c))
    radicand = c * c - a * a - b * b
    if radicand >= 0.0:
        return complex(eps * math.sqrt(radicand))
    return complex(0.0, eps * math.sqrt(-radicand))


@dataclass(frozen=True)
class HyperplaneGrid:
    """Uniform FFT lattice over the on-plane coordinates of a canonical plane.

    sizes are points per axis (even, >= 2; powers of two give the fastest
    transforms but any even size is accepted), spacings the position-space
    steps.  Reciprocal spacings are dk_i = 2*pi / (N_i * spacing_i) and the
    cell measures satisfy dsigma * dkappa = (2*pi)^3 / (N1*N2*N3).
    """

    plane: Hyperplane
    sizes: tuple[int, int, int]
    spacings: tuple[float, float, float]

    def __post_init__(self) -> None:
        if not self.plane.is_canonical:
            raise ValueError(
                "grids attach to canonical planes only (t = a or x3 = b); "
                "boosted planes are handled by resampling states"
            )
        if len(self.sizes) != 3 or len(self.spacings) != 3:
            raise ValueError("sizes and spacings must have length 3")
        for n in self.sizes:
            if n < 2 or n % 2 != 0:
                raise ValueError(f"grid sizes must be even and >= 2, got {n}")
        for d in self.spacings:
            if not d > 0.0:
                raise ValueError(f"spacings must be positive, got {d}")
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "spacings", tuple(float(d) for d in self.spacings))

    # -- scalar geometry -----------------------------------------------------

    @property
    def kind(self) -> str:
        return self.plane.kind

    @property
    def n_modes(self) -> int:
        n1, n2, n3 = self.sizes
        return n1 * n2 * n3

    @cached_property
    def dk(self) -> tuple[float, float, float]:
        return tuple(
            2.0 * math.pi / (n * d) for n, d in zip(self.sizes, self.spacings)
        )

    @property
    def dsigma(self) -> float:
        d1, d2, d3 = self.spacings
        return d1 * d2 * d3

    @property
    def dkappa(self) -> float:
        k1, k2, k3 = self.dk
        return k1 * k2 * k3

    @cached_property
    def axis_signs(self) -> tuple[int, int, int]:
        """Per-axis sign in the on-plane plane-wave pairing exp(i sum s_i k_i x_i)."""
        return (1, 1, 1) if self.kind == SPACELIKE else (1, 1, -1)

    @cached_property
    def axis_names(self) -> tuple[str, str, str]:
        return ("x1", "x2", "x3") if self.kind == SPACELIKE else ("x1", "x2", "t")

    # -- lattices --------------------------------------------------------------

    @cached_property
    def k_axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """1D dual-lattice coordinates per axis, FFT frequency order."""
        return tuple(
            2.0 * math.pi * np.fft.fftfreq(n, d=dx)
            for n, dx in zip(self.sizes, self.spacings)
        )

    @cached_property
    def x_axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """1D centered position coordinates per axis: (j - N/2) * spacing."""
        return tuple(
            (np.arange(n) - n // 2) * dx for n, dx in zip(self.sizes, self.spacings)
        )

    @cached_property
    def k_mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable on-plane component meshes (sparse)."""
        a1, a2, a3 = self.k_axes
        return (
            a1.reshape(-1, 1, 1),
            a2.reshape(1, -1, 1),
            a3.reshape(1, 1, -1),
        )

    # -- dispersion and measure -------------------------------------------------

    @cached_property
    def _radicand(self) -> np.ndarray:
        """Timelike planes: k0^2 - k1^2 - k2^2 (dense)."""
        k1, k2, k0 = self.k_mesh
        return (k0 * k0 - k1 * k1 - k2 * k2) + np.zeros(self.sizes)

    @cached_property
    def abs_k_sigma(self) -> np.ndarray:
        """|k_sigma| per lattice point (eps-independent), dense and >= 0."""
        if self.kind == SPACELIKE:
            k1, k2, k3 = self.k_mesh
            return np.sqrt(k1 * k1 + k2 * k2 + k3 * k3) + np.zeros(self.sizes)
        return np.sqrt(np.abs(self._radicand))

    @cached_property
    def propagating(self) -> np.ndarray:
        """Mask of modes with a real, nonzero normal component."""
        if self.kind == SPACELIKE:
            return self.abs_k_sigma > 0.0
        return self._radicand > 0.0

    @cached_property
    def evanescent(self) -> np.ndarray:
        if self.kind == SPACELIKE:
            return np.zeros(self.sizes, dtype=bool)
        return self._radicand < 0.0

    @cached_property
    def weights(self) -> np.ndarray:
        """Invariant quadrature weight dkappa / (2|k_sigma|) per mode.

        Zero on excluded modes: the |k_sigma| = 0 degeneracy and (on timelike
        planes) the evanescent region.  The weight does not depend on eps.
        """
        w = np.zeros(self.sizes)
        p = self.propagating
        np.divide(self.dkappa, 2.0 * self.abs_k_sigma, out=w, where=p)
        return _readonly(w)

    @cached_property
    def sqrt_2ks(self) -> np.ndarray:
        """sqrt(2|k_sigma|), zeroed on non-propagating modes."""
        return _readonly(np.where(self.propagating, np.sqrt(2.0 * self.abs_k_sigma), 0.0))

    @cached_property
    def inv_sqrt_2ks(self) -> np.ndarray:
        """1 / sqrt(2|k_sigma|), zeroed on non-propagating modes."""
        out = np.zeros(self.sizes)
        p = self.propagating
        np.divide(1.0, np.sqrt(2.0 * self.abs_k_sigma, where=p, out=np.ones(self.sizes)),
                  out=out, where=p)
        return _readonly(out)

    def k_normal(self, eps: int) -> np.ndarray:
        """Normal component per mode for flux label eps (complex on timelike)."""
        _ = eps_index(eps)
        if self.kind == SPACELIKE:
            return eps * self.abs_k_sigma
        out = np.where(
            self._radicand >= 0.0,
            eps * self.abs_k_sigma + 0.0j,
            1j * eps * self.abs_k_sigma,
        )
        return out

    def k0(self, eps: int) -> np.ndarray:
        """Temporal component k0 per mode (real)."""
        _ = eps_index(eps)
        if self.kind == SPACELIKE:
            return eps * self.abs_k_sigma
        return np.broadcast_to(self.k_mesh[2], self.sizes)

    def k_spatial(self, eps: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Real spatial wavevector (k1, k2, k3); k3 valid on propagating modes."""
        k1, k2, k3n = self.k_mesh
        if self.kind == SPACELIKE:
            return (
                np.broadcast_to(k1, self.sizes),
                np.broadcast_to(k2, self.sizes),
                np.broadcast_to(k3n, self.sizes),
            )
        k3 = np.where(self.propagating, eps * self.abs_k_sigma, 0.0)
        return (
            np.broadcast_to(k1, self.sizes),
            np.broadcast_to(k2, self.sizes),
            k3,
        )

    def khat(self, eps: int) -> np.ndarray:
        """Unit spatial direction per propagating mode, shape (3, N1, N2, N3)."""
        k1, k2, k3 = self.k_spatial(eps)
        omega = np.abs(self.k0(eps))
        out = np.zeros((3,) + self.sizes)
        p = self.propagating
        np.divide(k1, omega, out=out[0], where=p)
        np.divide(k2, omega, out=out[1], where=p)
        np.divide(k3, omega, out=out[2], where=p)
        return out

    # -- polarization -----------------------------------------------------------

    def polarization(self, eps: int, axis: tuple[float, float, float]) -> np.ndarray:
        """Transverse linear polarization pair, shape (2, 3, N1, N2, N3).

        e1 = (axis x khat)/|axis x khat|, e2 = khat x e1; modes where the
        axis is degenerate with khat fall back to the x1 axis.  Entries on
        non-propagating modes are zero.
        """
        key = ("pol", eps, tuple(float(a) for a in axis))
        cache = self.__dict__.setdefault("_pol_cache", {})
        if key not in cache:
            cache[key] = _readonly(
                _polarization_field(self.khat(eps), self.propagating, axis)
            )
        return cache[key]

    # -- offsets and phases -------------------------------------------------------

    def onplane_coords(self, event: FourVector) -> tuple[float, float, float]:
        """On-plane coordinates of an event in axis order (x1, x2, x3|t)."""
        if self.kind == SPACELIKE:
            return (event.x1, event.x2, event.x3)
        return (event.x1, event.x2, event.t)

    def normal_coord(self, event: FourVector) -> float:
        return event.t if self.kind == SPACELIKE else event.x3

    def event_at(self, i1: int, i2: int, i3: int) -> FourVector:
        """Event at lattice indices, on the plane (normal coord = offset)."""
        a1, a2, a3 = self.x_axes
        c = (float(a1[i1]), float(a2[i2]), float(a3[i3]))
        if self.kind == SPACELIKE:
            return FourVector(self.plane.offset, c[0], c[1], c[2])
        return FourVector(c[2], c[0], c[1], self.plane.offset)

    def offset_phase(self, eps: int) -> np.ndarray:
        """Per-mode phase factor exp(i * normal term of k.x) for on-plane events.

        Spacelike plane t = a: exp(-i k0 a).  Timelike plane x3 = b:
        exp(+i k3 b), restricted to propagating modes (zero elsewhere; the
        evanescent continuation lives in plane-to-plane transport).
        """
        if self.kind == SPACELIKE:
            return np.exp(-1j * self.k0(eps) * self.plane.offset)
        k3 = np.where(self.propagating, eps * self.abs_k_sigma, 0.0)
        out = np.exp(1j * k3 * self.plane.offset)
        return np.where(self.propagating, out, 0.0 + 0.0j)

    # -- iteration ---------------------------------------------------------------

    def dual_lattice(self) -> Iterator[KPoint]:
        """Iterate all lattice modes paired with both flux labels."""
        a1, a2, a3 = self.k_axes
        for v1 in a1:
            for v2 in a2:
                for v3 in a3:
                    on_plane = (float(v1), float(v2), float(v3))
                    for eps in EPS_VALUES:
                        yield KPoint(
                            on_plane,
                            solve_normal_component(on_plane, self.plane, eps),
                            eps,
                        )


def dual_grid(grid: HyperplaneGrid) -> list[KPoint]:
    """Materialize the FFT-frequency lattice of a grid with both eps values."""
    return list(grid.dual_lattice())


def mode_weight(k: KPoint, grid: HyperplaneGrid, cutoff: float = 0.0) -> float:
    """Invariant measure dkappa / (2|k_sigma|) for one mode.

    Raises ExcludedModeError below the cutoff or on evanescent modes, which
    carry zero weight in on-plane quadrature.
    """
    a = k.abs_normal
    if not k.is_propagating:
        raise ExcludedModeError(
            f"mode {k.on_plane} eps={k.eps} is excluded (|k_sigma|={a}, "
            f"propagating={k.is_propagating})"
        )
    if a <= cutoff:
        raise ExcludedModeError(
            f"mode {k.on_plane} below cutoff: |k_sigma|={a} <= {cutoff}"
        )
    return grid.dkappa / (2.0 * a)


# -- polarization helpers ----------------------------------------------------------


def default_reference_axis(
    mean_direction: tuple[float, float, float] | None,
) -> tuple[float, float, float]:
    """Reference axis for the polarization basis.

    The mean propagation direction rotated by pi/2 about x1 keeps the axis
    away from the bulk of the mode directions; with no usable direction the
    fallback is the x1 axis.
    """
    if mean_direction is None:
        return _FALLBACK_AXIS
    d1, d2, d3 = mean_direction
    n = math.sqrt(d1 * d1 + d2 * d2 + d3 * d3)
    if n < 1e-12:
        return _FALLBACK_AXIS
    # Rotation by pi/2 about x1: (d1, d2, d3) -> (d1, -d3, d2).
    return (d1 / n, -d3 / n, d2 / n)


def _polarization_field(
    khat: np.ndarray, mask: np.ndarray, axis: tuple[float, float, float]
) -> np.ndarray:
    a = np.asarray(axis, dtype=float)
    na = np.linalg.norm(a)
    if na < 1e-12:
        raise DegenerateAxisError("reference axis must be nonzero")
    a = a / na

    cross = np.empty_like(khat)
    _cross3(np.broadcast_to(a.reshape(3, 1, 1, 1), khat.shape), khat, cross)
    norm = np.sqrt(np.sum(cross * cross, axis=0))
    degenerate = mask & (norm < _DEGENERATE_AXIS_TOL)
    if np.any(degenerate):
        fb = np.asarray(_FALLBACK_AXIS)
        if abs(float(np.dot(a, fb))) > 1.0 - 1e-12:
            fb = np.asarray((0.0, 1.0, 0.0))
        cross_fb = np.empty_like(khat)
        _cross3(np.broadcast_to(fb.reshape(3, 1, 1, 1), khat.shape), khat, cross_fb)
        norm_fb = np.sqrt(np.sum(cross_fb * cross_fb, axis=0))
        still = mask & degenerate & (norm_fb < _DEGENERATE_AXIS_TOL)
        if np.any(still):
            raise DegenerateAxisError(
                "reference axis and fallback axis both degenerate with some k"
            )
        cross = np.where(degenerate, cross_fb, cross)
        norm = np.where(degenerate, norm_fb, norm)

    e1 = np.zeros_like(khat)
    np.divide(cross, norm, out=e1, where=mask & (norm > 0.0))
    e2 = np.empty_like(khat)
    _cross3(khat, e1, e2)
    e2 = np.where(mask, e2, 0.0)
    return np.stack([e1, e2])


def _cross3(u: np.ndarray, v: np.ndarray, out: np.ndarray) -> None:
    out[0] = u[1] * v[2] - u[2] * v[1]
    out[1] = u[2] * v[0] - u[0] * v[2]
    out[2] = u[0] * v[1] - u[1] * v[0]


def polarization_basis(
    k: KPoint, reference_axis: tuple[float, float, float], kind: str = SPACELIKE
) -> PolarizationBasis:
    """Transverse polarization pair for a single propagating mode.

    Raises DegenerateAxisError when |axis x khat| < 1e-8; callers retry with
    a fallback axis.
    """
    if not k.is_propagating:
        raise ExcludedModeError("polarization basis requires a propagating mode")
    if kind == SPACELIKE:
        spatial = np.asarray(k.on_plane, dtype=float)
    else:
        spatial = np.asarray(
            [k.on_plane[0], k.on_plane[1], k.normal_component.real], dtype=float
        )
    khat = spatial / np.linalg.norm(spatial)
    a = np.asarray(reference_axis, dtype=float)
    a = a / np.linalg.norm(a)
    c = np.cross(a, khat)
    nc = np.linalg.norm(c)
    if nc < _DEGENERATE_AXIS_TOL:
        raise DegenerateAxisError(
            f"reference axis {tuple(a)} degenerate with khat {tuple(khat)}"
        )
    e1 = c / nc
    e2 = np.cross(khat, e1)
    return PolarizationBasis(
        e1=np.concatenate([[0.0], e1]), e2=np.concatenate([[0.0], e2])
    )


def polarization_pair(basis: PolarizationBasis, lam: int) -> np.ndarray:
    return basis.e1 if lam == 1 else basis.e2


def helicity_vectors(basis: PolarizationBasis) -> tuple[np.ndarray, np.ndarray]:
    """Helicity combinations (e1 +- i e2)/sqrt(2) derived from the linear pair."""
    plus = (basis.e1 + 1j * basis.e2) / math.sqrt(2.0)
    minus = (basis.e1 - 1j * basis.e2) / math.sqrt(2.0)
    return plus, minus


# -- FFT synthesis over the centered lattice ------------------------------------------


def _centered_twiddle(n: int) -> np.ndarray:
    # exp(-i pi m) for FFT-order integer frequencies m: the shift factor that
    # re-anchors phases to the centered position origin x = (j - N/2) * dx.
    m = np.arange(n)
    m[m >= n // 2] -= n
    return (1.0 - 2.0 * (np.abs(m) % 2)).astype(float)


def synthesize_on_grid(grid: HyperplaneGrid, gvals: np.ndarray) -> np.ndarray:
    """Evaluate field(x) = sum_k g(k) exp(i sum_i s_i k_i x_i) on the x lattice.

    g is indexed in FFT frequency order; the result is indexed by the
    centered position lattice of ``grid.x_axes``.  Exact on the band (it is
    a plain DFT), used by projections, potentials, and flux quadrature; the
    direct mode sum serves as its oracle in the tests.
    """
    f = np.asarray(gvals, dtype=np.complex128)
    if f.shape[-3:] != grid.sizes:
        raise ValueError(f"gvals trailing shape {f.shape} != grid sizes {grid.sizes}")
    n1, n2, n3 = grid.sizes
    f = f * _centered_twiddle(n1).reshape(-1, 1, 1)
    f = f * _centered_twiddle(n2).reshape(1, -1, 1)
    f = f * _centered_twiddle(n3).reshape(1, 1, -1)
    for ax, s in zip(range(-3, 0), grid.axis_signs):
        if s > 0:
            f = np.fft.ifft(f, axis=ax) * grid.sizes[ax]
        else:
            f = np.fft.fft(f, axis=ax)
    return f


def onplane_phase(
    grid: HyperplaneGrid, coords: tuple[float, float, float]
) -> np.ndarray:
    """Dense on-plane pairing sum_i s_i k_i c_i for one position (direct path)."""
    k1, k2, k3 = grid.k_mesh
    s1, s2, s3 = grid.axis_signs
    return (
        s1 * k1 * coords[0] + s2 * k2 * coords[1] + s3 * k3 * coords[2]
    ) + np.zeros(grid.sizes)


def contraction_phase(
    grid: HyperplaneGrid, eps: int, event: FourVector
) -> np.ndarray:
    """Metric contraction k.x per lattice mode at one event (real array).

    On timelike grids the normal term uses the real k3 of propagating modes
    and zero on the evanescent set; the analytic continuation of the latter
    lives in plane-to-plane transport, never in phases.
    """
    phase = onplane_phase(grid, grid.onplane_coords(event))
    if grid.kind == SPACELIKE:
        return phase - grid.k0(eps) * event.t
    k3 = np.where(grid.propagating, eps * grid.abs_k_sigma, 0.0)
    return phase + k3 * event.x3


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a
