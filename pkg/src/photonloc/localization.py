"""Localized states on a hyperplane, their projections, and completeness.

The localized basis state at on-plane position x' with polarization lam'
and flux direction eps' has mode coefficients

    chi(k) = sqrt(2|k_sigma|) exp(-i k.x') / (2pi)^{3/2}   on (lam', eps'),

zero on the other channels.  Under the invariant inner product the
sqrt(2|k_sigma|) factors cancel the measure exactly, so the overlap of two
such states is the plain lattice sum (dkappa/(2pi)^3) sum_k exp(i k.(x''-x'))
-- a discrete delta: Kronecker/dsigma at coinciding grid points, zero
otherwise.  ``overlap`` evaluates that sum in exact factorized form over the
full lattice (the cancellation is performed analytically, so the
measure-singular k = 0 point participates with its finite limit).

Projection of a state onto the whole localized family is a weighted Fourier
synthesis,

    <chi_x|psi> = sum_k dkappa exp(i k.x) psi(k) / (sqrt(2|k_sigma|) (2pi)^{3/2}),

realized as an FFT over the grid (``project_all``) with a direct mode sum
(``project_point``) as its oracle.  Summing |<chi|psi>|^2 over channels
gives the position density: the probability density on a spacelike plane,
the photon-counting density over (x1, x2, t) on a timelike plane.  Discrete
completeness -- sum_x dsigma |chi><chi| = identity -- holds to rounding by
DFT Parseval and is measured by ``completeness_defect``.

Materialized localized amplitudes put zeros on excluded modes (the
|k_sigma| = 0 point, the evanescent region); routing them through the
generic quadrature therefore differs from the exact ``overlap`` by the
excluded-mode term dkappa/(2pi)^3 per excluded lattice point.

Evanescent modes on a timelike plane never contribute to on-plane
quantities; they enter only the analytic continuation off the plane
(``transport_amplitude`` / ``plane_to_plane_amplitude``), where each mode
picks up exp(i k3 dx3), a pure phase for propagating modes and a real decay
exp(-|k3| dx3) toward the chosen side for evanescent ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from photonloc.kspace import (
    EPS_VALUES,
    HyperplaneGrid,
    LAM_VALUES,
    contraction_phase,
    default_reference_axis,
    eps_index,
    lam_index,
    onplane_phase,
    synthesize_on_grid,
)
from photonloc.spacetime import FourVector, Hyperplane, SPACELIKE, TIMELIKE
from photonloc.states import (
    PhotonAmplitude,
    TWO_PI_32,
    _check_same_grid,
)

__all__ = [
    "LocalizedStateSpec",
    "ProjectionField",
    "PotentialField",
    "OffPlaneError",
    "PlaneKindError",
    "TransportDirectionError",
    "localized_amplitude",
    "overlap",
    "project_all",
    "project_point",
    "position_density",
    "spacelike_density",
    "timelike_counting",
    "completeness_defect",
    "potential_of_localized",
    "radial_magnitude_profile",
    "fit_power_law",
    "transport_amplitude",
    "plane_to_plane_amplitude",
    "export_projection_csv",
    "export_density_csv",
]

TWO_PI_3 = (2.0 * math.pi) ** 3

_ON_PLANE_TOL = 1e-12
_NONPROP_WEIGHT_TOL = 1e-10


class OffPlaneError(ValueError):
    """A localized-state position does not lie on the grid's hyperplane."""


class PlaneKindError(ValueError):
    """Operation applied to the wrong hyperplane kind."""


class TransportDirectionError(ValueError):
    """Plane-to-plane continuation would grow exponentially."""


@dataclass(frozen=True)
class LocalizedStateSpec:
    """Position, polarization, and flux direction of one localized state."""

    position: FourVector
    lam: int = 1
    eps: int = 1


def _check_on_plane(spec: LocalizedStateSpec, grid: HyperplaneGrid) -> None:
    plane = grid.plane
    scale = max(1.0, abs(plane.offset))
    if abs(plane.plane_coordinate(spec.position) - plane.offset) > _ON_PLANE_TOL * scale:
        raise OffPlaneError(
            f"position {spec.position} is off the plane "
            f"{plane.kind} offset={plane.offset}"
        )


def localized_amplitude(spec: LocalizedStateSpec, grid: HyperplaneGrid) -> PhotonAmplitude:
    """Mode coefficients of the localized state on its (lam', eps') channel.

    Excluded modes (zero measure weight) hold zeros; exact localized-state
    algebra that needs their finite limits goes through ``overlap``.
    """
    _check_on_plane(spec, grid)
    phase = contraction_phase(grid, spec.eps, spec.position)
    vals = grid.sqrt_2ks * np.exp(-1j * phase) / TWO_PI_32
    values = np.zeros((2, 2) + grid.sizes, dtype=np.complex128)
    values[lam_index(spec.lam), eps_index(spec.eps)] = vals
    return PhotonAmplitude(grid, values)


def overlap(
    a: LocalizedStateSpec, b: LocalizedStateSpec, grid: HyperplaneGrid
) -> complex:
    """Invariant inner product <chi_a|chi_b> of two localized states.

    The sqrt(2|k_sigma|) factors cancel against the measure analytically,
    leaving (dkappa/(2pi)^3) sum_k exp(i k.(x_a - x_b)) over the full
    lattice; the sum factorizes per axis.  Distinct channels give exactly 0;
    coinciding grid points give 1/dsigma; distinct grid points vanish to
    rounding (discrete delta, Kronecker/dsigma convention).
    """
    _check_on_plane(a, grid)
    _check_on_plane(b, grid)
    if a.lam != b.lam or a.eps != b.eps:
        return 0.0 + 0.0j
    ca = grid.onplane_coords(a.position)
    cb = grid.onplane_coords(b.position)
    total = grid.dkappa / TWO_PI_3
    out = complex(total)
    for ax in range(3):
        d = ca[ax] - cb[ax]
        s = grid.axis_signs[ax]
        out *= complex(np.sum(np.exp(1j * s * grid.k_axes[ax] * d)))
    return out


@dataclass(frozen=True)
class ProjectionField:
    """<chi_{x,lam,eps}|psi> over all grid positions and channels.

    values has shape (2, 2, N1, N2, N3) indexed like amplitude channels;
    positions run over the grid's centered on-plane lattice.  Channel-wise,
    sum_x dsigma |values|^2 equals the channel norm of psi (projection is an
    isometry onto position space).
    """

    grid: HyperplaneGrid
    values: np.ndarray

    def channel(self, lam: int, eps: int) -> np.ndarray:
        return self.values[lam_index(lam), eps_index(eps)]

    def density(self) -> np.ndarray:
        """Channel-summed position density sum_{lam,eps} |<chi|psi>|^2."""
        return np.sum(np.abs(self.values) ** 2, axis=(0, 1))

    def total_probability(self) -> float:
        return float(np.sum(self.density())) * self.grid.dsigma


def _projection_g(psi: PhotonAmplitude) -> np.ndarray:
    """Per-mode synthesis coefficients dkappa * psi / (sqrt(2|ks|) (2pi)^{3/2})."""
    grid = psi.grid
    g = psi.values * (grid.dkappa * grid.inv_sqrt_2ks / TWO_PI_32)
    for ie, eps in enumerate(EPS_VALUES):
        g[:, ie] *= grid.offset_phase(eps)
    return g


def project_all(psi: PhotonAmplitude) -> ProjectionField:
    """Project psi onto every localized state of its grid (fast transform)."""
    field = synthesize_on_grid(psi.grid, _projection_g(psi))
    return ProjectionField(psi.grid, field)


def project_point(psi: PhotonAmplitude, event: FourVector, lam: int, eps: int) -> complex:
    """Direct-summation projection onto one localized state (oracle path)."""
    grid = psi.grid
    spec = LocalizedStateSpec(event, lam, eps)
    _check_on_plane(spec, grid)
    phase = contraction_phase(grid, eps, event)
    g = psi.channel(lam, eps) * (grid.dkappa * grid.inv_sqrt_2ks / TWO_PI_32)
    return complex(np.sum(g * np.exp(1j * phase)))


def position_density(psi: PhotonAmplitude) -> np.ndarray:
    """Channel-summed |<chi|psi>|^2 over the grid (either plane kind)."""
    return project_all(psi).density()


def spacelike_density(psi: PhotonAmplitude) -> np.ndarray:
    """Probability density over space at fixed t (spacelike plane only).

    Integrates to <psi|psi> over the full grid: a normalized state is found
    somewhere in space with certainty.
    """
    if psi.grid.kind != SPACELIKE:
        raise PlaneKindError("spacelike_density requires a spacelike (t = a) plane")
    return position_density(psi)


def timelike_counting(psi: PhotonAmplitude) -> np.ndarray:
    """Counting density over (x1, x2, t) on a photon-counting plane x3 = b.

    Requires propagating support: evanescent modes carry no counting weight,
    so a state leaning on them cannot be counted consistently.
    """
    grid = psi.grid
    if grid.kind != TIMELIKE:
        raise PlaneKindError("timelike_counting requires a timelike (x3 = b) plane")
    total = float(np.sum(np.abs(psi.values) ** 2))
    if total > 0.0:
        lost = float(np.sum(np.abs(psi.values[:, :, ~grid.propagating]) ** 2)) / total
        if lost > _NONPROP_WEIGHT_TOL:
            raise PlaneKindError(
                f"state carries excluded-mode weight {lost:.3e} > "
                f"{_NONPROP_WEIGHT_TOL}; counting requires propagating support"
            )
    return position_density(psi)


def completeness_defect(phi: PhotonAmplitude, psi: PhotonAmplitude) -> float:
    """Defect of the identity partition over localized states.

    Compares sum_{lam,eps} sum_x dsigma <phi|chi><chi|psi> with <phi|psi>;
    returns the relative defect, or the absolute defect when <phi|psi> is
    exactly zero (orthogonal operands).  Reductions run in extended
    precision so the result probes the transform pair, not the summation
    order.
    """
    _check_same_grid(phi, psi)
    grid = phi.grid
    pf = project_all(phi).values
    ps = project_all(psi).values
    lhs = np.sum((np.conj(pf) * ps).astype(np.clongdouble)) * grid.dsigma
    w = grid.weights.astype(np.longdouble)
    rhs = np.clongdouble(0)
    for ie in range(2):
        for il in range(2):
            rhs += np.sum(
                w * (np.conj(phi.values[il, ie]) * psi.values[il, ie]).astype(np.clongdouble)
            )
    defect = abs(complex(lhs - rhs))
    denom = abs(complex(rhs))
    if denom == 0.0:
        return float(defect)
    return float(defect / denom)


# -- the potential of a localized state -------------------------------------------


@dataclass(frozen=True)
class PotentialField:
    """Four-potential chi^mu of a localized state over grid positions.

    values has shape (4, N1, N2, N3), complex; the time component vanishes
    in the Coulomb gauge.  Finite everywhere, including at the localization
    point -- and nonzero far from it: localized states do not have localized
    potentials.
    """

    grid: HyperplaneGrid
    spec: LocalizedStateSpec
    values: np.ndarray

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=0))


def potential_of_localized(
    spec: LocalizedStateSpec,
    grid: HyperplaneGrid,
    axis: tuple[float, float, float] | None = None,
    events: list[FourVector] | None = None,
) -> PotentialField | np.ndarray:
    """chi^mu(x) = sum_k (dkappa/sqrt(2|ks|)) e_lam'^mu(k) exp(i k.(x-x')) / (2pi)^3.

    With ``events`` unset, evaluates over the grid's own position lattice by
    fast transform and returns a PotentialField; with events, evaluates a
    direct mode sum at those spacetime points and returns an array of shape
    (len(events), 4).  Propagating modes only.
    """
    _check_on_plane(spec, grid)
    if axis is None:
        axis = default_reference_axis(None)
    pol = grid.polarization(spec.eps, axis)[lam_index(spec.lam)]
    base = grid.dkappa * grid.inv_sqrt_2ks / TWO_PI_3
    phase0 = contraction_phase(grid, spec.eps, spec.position)

    if events is None:
        # On-plane grid events: the normal terms of k.x and k.x' cancel, so
        # the total phase is the on-plane pairing with x minus the full
        # contraction at x'; offset phases enter both and drop out.
        g = base * np.exp(-1j * onplane_phase(grid, grid.onplane_coords(spec.position)))
        field = np.zeros((4,) + grid.sizes, dtype=np.complex128)
        field[1:] = synthesize_on_grid(grid, pol * g)
        return PotentialField(grid, spec, field)

    out = np.zeros((len(events), 4), dtype=np.complex128)
    for j, ev in enumerate(events):
        e = np.exp(1j * (contraction_phase(grid, spec.eps, ev) - phase0))
        for mu in range(3):
            out[j, mu + 1] = np.sum(base * pol[mu] * e)
    return out


def radial_magnitude_profile(
    field: PotentialField, nbins: int = 24, r_min: float = 0.0, r_max: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Shell-averaged |chi| versus distance from the localization point.

    Returns (r_centers, mean |chi|) over logarithmic shells; empty shells
    are dropped.
    """
    grid = field.grid
    c0 = grid.onplane_coords(field.spec.position)
    axes = grid.x_axes
    d1 = (axes[0] - c0[0]).reshape(-1, 1, 1)
    d2 = (axes[1] - c0[1]).reshape(1, -1, 1)
    d3 = (axes[2] - c0[2]).reshape(1, 1, -1)
    r = np.sqrt(d1 * d1 + d2 * d2 + d3 * d3)
    mag = field.magnitude()
    if r_max is None:
        r_max = 0.5 * min(n * d for n, d in zip(grid.sizes, grid.spacings))
    if r_min <= 0.0:
        r_min = min(grid.spacings)
    edges = np.geomspace(r_min, r_max, nbins + 1)
    rs, ms = [], []
    flat_r = r.ravel()
    flat_m = mag.ravel()
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (flat_r >= lo) & (flat_r < hi)
        if np.any(sel):
            rs.append(math.sqrt(lo * hi))
            ms.append(float(np.mean(flat_m[sel])))
    return np.asarray(rs), np.asarray(ms)


def fit_power_law(
    r: np.ndarray, mag: np.ndarray, r_lo: float, r_hi: float
) -> float:
    """Least-squares log-log slope of mag(r) over [r_lo, r_hi]."""
    sel = (r >= r_lo) & (r <= r_hi) & (mag > 0.0)
    if int(np.sum(sel)) < 3:
        raise ValueError("too few profile points in the fit window")
    x = np.log(r[sel])
    y = np.log(mag[sel])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


# -- plane-to-plane transport -------------------------------------------------------


def transport_amplitude(psi: PhotonAmplitude, dx3: float) -> PhotonAmplitude:
    """Continue a timelike-plane state to the parallel plane x3 = b + dx3.

    Every mode picks up exp(i k3 dx3): a unit-modulus phase on propagating
    modes (norm is conserved exactly) and exp(-|k3| dx3) decay on evanescent
    modes toward their decay side.  Continuation that would grow any
    populated evanescent mode is rejected.
    """
    grid = psi.grid
    if grid.kind != TIMELIKE:
        raise PlaneKindError("plane-to-plane transport requires a timelike plane")
    new_values = np.empty_like(psi.values)
    for ie, eps in enumerate(EPS_VALUES):
        _check_decay_direction(psi, eps, dx3)
        # Growing-side evanescent modes are unpopulated (checked above);
        # clamping their exponent avoids inf * 0 for large shifts.
        exponent = 1j * grid.k_normal(eps) * dx3
        exponent = np.where(exponent.real > 0.0, 0.0, exponent)
        factor = np.exp(exponent)
        factor = np.where(grid.propagating | grid.evanescent, factor, 0.0)
        new_values[:, ie] = psi.values[:, ie] * factor
    new_grid = HyperplaneGrid(
        Hyperplane.timelike(grid.plane.offset + dx3), grid.sizes, grid.spacings
    )
    return PhotonAmplitude(new_grid, new_values, pol_axis=psi.pol_axis)


def _check_decay_direction(psi: PhotonAmplitude, eps: int, dx3: float) -> None:
    if dx3 == 0.0:
        return
    grid = psi.grid
    growing = grid.evanescent & (eps * dx3 < 0.0)
    if np.any(np.abs(psi.values[:, eps_index(eps)][:, growing]) > 0.0):
        raise TransportDirectionError(
            f"continuation by dx3={dx3} grows populated evanescent modes on "
            f"the eps={eps:+d} channel; transport only toward the decay side"
        )


def plane_to_plane_amplitude(
    psi: PhotonAmplitude, event: FourVector, lam: int, eps: int
) -> complex:
    """Localized-projection amplitude continued to an arbitrary point.

    For an event on the state's own plane this reproduces the on-plane
    projection; off the plane each mode carries exp(i k3 (x3 - b)), which
    includes the evanescent decay.  Evanescent modes enter with the modulus
    |k3| in the 1/sqrt(2|k3|) weight -- the one place they contribute at
    all.
    """
    grid = psi.grid
    if grid.kind != TIMELIKE:
        raise PlaneKindError("plane-to-plane amplitudes live on timelike planes")
    dx3 = event.x3 - grid.plane.offset
    _check_decay_direction(psi, eps, dx3)

    vals = psi.channel(lam, eps)
    usable = grid.propagating | grid.evanescent
    inv_root = np.zeros(grid.sizes)
    np.divide(1.0, np.sqrt(2.0 * grid.abs_k_sigma, where=usable, out=np.ones(grid.sizes)),
              out=inv_root, where=usable)
    g = vals * (grid.dkappa * inv_root / TWO_PI_32)

    onp = np.exp(1j * onplane_phase(grid, grid.onplane_coords(event)))
    k3 = grid.k_normal(eps)
    prop_phase = np.where(grid.propagating, np.exp(1j * k3.real * event.x3), 0.0 + 0.0j)
    # Same growing-side clamp as in transport: those modes hold no weight.
    evan_exp = 1j * k3 * complex(dx3)
    evan_exp = np.where(evan_exp.real > 0.0, 0.0, evan_exp)
    evan_factor = np.where(grid.evanescent, np.exp(evan_exp), 0.0 + 0.0j)
    return complex(np.sum(g * onp * (prop_phase + evan_factor)))


# -- CSV exports --------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_projection_csv(field: ProjectionField, path: str) -> None:
    """Rows (x1, x2, x3_or_t, lambda, epsilon, re, im) over the position grid."""
    grid = field.grid
    a1, a2, a3 = grid.x_axes
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("x1,x2,x3_or_t,lambda,epsilon,re,im\n")
        for lam in LAM_VALUES:
            for eps in EPS_VALUES:
                ch = field.channel(lam, eps)
                for i1 in range(grid.sizes[0]):
                    for i2 in range(grid.sizes[1]):
                        for i3 in range(grid.sizes[2]):
                            z = ch[i1, i2, i3]
                            f.write(
                                f"{_fmt(a1[i1])},{_fmt(a2[i2])},{_fmt(a3[i3])},"
                                f"{lam},{eps},{_fmt(z.real)},{_fmt(z.imag)}\n"
                            )


def export_density_csv(grid: HyperplaneGrid, density: np.ndarray, path: str) -> None:
    """Rows (x1, x2, x3_or_t, density) over the position grid."""
    a1, a2, a3 = grid.x_axes
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("x1,x2,x3_or_t,density\n")
        for i1 in range(grid.sizes[0]):
            for i2 in range(grid.sizes[1]):
                for i3 in range(grid.sizes[2]):
                    f.write(
                        f"{_fmt(a1[i1])},{_fmt(a2[i2])},{_fmt(a3[i3])},"
                        f"{_fmt(density[i1, i2, i3])}\n"
                    )
