"""One-photon amplitudes on a hyperplane grid.

An amplitude stores the complex mode coefficients psi_{lam,eps}(k) for both
polarizations (lam = 1, 2) and both flux directions (eps = +1, -1) over the
full FFT lattice of a grid.  The invariant inner product is

    <phi|psi> = sum_{lam,eps} sum_k  dkappa/(2|k_sigma|) phi* psi,

diagonal in both channel labels.  States are normalized to <psi|psi> = 1
(one photon: the photon is detected somewhere with certainty).

The four-potential of a state is synthesized as a direct mode sum

    psi_eps^mu(x) = sum_lam sum_k w(k) e_lam^mu(k) exp(i k.x) / (2pi)^{3/2}
                    * psi_{lam,eps}(k)

with k.x the metric contraction; this direct path doubles as the
correctness oracle for every FFT-based fast path in the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from photonloc.kspace import (
    EPS_VALUES,
    HyperplaneGrid,
    LAM_VALUES,
    contraction_phase,
    default_reference_axis,
    eps_index,
    lam_index,
)
from photonloc.spacetime import FourVector, SPACELIKE

__all__ = [
    "PhotonAmplitude",
    "PacketSpec",
    "GridMismatchError",
    "PacketSupportError",
    "ZeroStateError",
    "make_gaussian_packet",
    "single_mode_amplitude",
    "zero_amplitude",
    "random_amplitude",
    "inner_product",
    "norm",
    "normalize",
    "channel_view",
    "synthesize_potential",
    "spectral_mean_k",
    "bandwidth",
    "mean_direction",
    "resolve_axis",
    "export_amplitude_csv",
    "import_amplitude_csv",
]

TWO_PI_32 = (2.0 * math.pi) ** 1.5


class GridMismatchError(ValueError):
    """Operands live on different grids or hyperplanes."""


class PacketSupportError(ValueError):
    """A packet's spectral support violates a grid band or cutoff contract."""


class ZeroStateError(ValueError):
    """Normalization of a state with vanishing norm."""


@dataclass(frozen=True)
class PhotonAmplitude:
    """Complex amplitudes over (lam, eps, k-lattice); immutable.

    ``values`` has shape (2, 2, N1, N2, N3) indexed by (lam-1, eps index)
    with eps index 0 for +1 and 1 for -1.  ``pol_axis`` is the reference
    axis freezing the transverse polarization basis convention for field
    synthesis; it defaults per packet to the mean propagation direction
    rotated by pi/2 about x1.
    """

    grid: HyperplaneGrid
    values: np.ndarray
    pol_axis: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (2, 2) + self.grid.sizes:
            raise ValueError(
                f"values shape {v.shape} != (2, 2) + grid sizes {self.grid.sizes}"
            )
        if not np.all(np.isfinite(v.view(np.float64))):
            raise ValueError("amplitude values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def channel(self, lam: int, eps: int) -> np.ndarray:
        return self.values[lam_index(lam), eps_index(eps)]

    def with_values(self, values: np.ndarray) -> "PhotonAmplitude":
        return replace(self, values=values)

    def __add__(self, other: "PhotonAmplitude") -> "PhotonAmplitude":
        _check_same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "PhotonAmplitude") -> "PhotonAmplitude":
        _check_same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: complex) -> "PhotonAmplitude":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def _check_same_grid(a: PhotonAmplitude, b: PhotonAmplitude) -> None:
    if a.grid != b.grid:
        raise GridMismatchError("amplitudes live on different grids")


def zero_amplitude(grid: HyperplaneGrid) -> PhotonAmplitude:
    return PhotonAmplitude(grid, np.zeros((2, 2) + grid.sizes, dtype=np.complex128))


def inner_product(phi: PhotonAmplitude, psi: PhotonAmplitude) -> complex:
    """Invariant inner product sum_{lam,eps} sum_k w(k) phi* psi.

    Exactly zero across distinct eps or lam channels by the channel
    bookkeeping; excluded modes (|k_sigma| = 0, evanescent) carry zero
    weight.
    """
    _check_same_grid(phi, psi)
    w = phi.grid.weights
    total = 0.0 + 0.0j
    for ie in range(2):
        for il in range(2):
            total += complex(
                np.sum(w * np.conj(phi.values[il, ie]) * psi.values[il, ie])
            )
    return total


def norm(psi: PhotonAmplitude) -> float:
    return math.sqrt(max(inner_product(psi, psi).real, 0.0))


def normalize(psi: PhotonAmplitude) -> PhotonAmplitude:
    n = norm(psi)
    if n <= 0.0:
        raise ZeroStateError("cannot normalize a zero-norm state")
    return psi.with_values(psi.values / n)


def channel_view(psi: PhotonAmplitude, lam: int, eps: int) -> PhotonAmplitude:
    """Project onto one (lam, eps) channel, zeroing the other three."""
    out = np.zeros_like(psi.values)
    il, ie = lam_index(lam), eps_index(eps)
    out[il, ie] = psi.values[il, ie]
    return psi.with_values(out)


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian wave-packet parameters on a grid's on-plane axes.

    center and widths are in on-plane k coordinates, axis order
    (k1, k2, k3) on spacelike grids and (k1, k2, k0) on timelike grids.
    ``origin_event`` adds the phase exp(-i k.x0) centering the packet on
    that spacetime event.  ``cutoff_rel`` sets the |k_sigma| exclusion
    band relative to the packet center frequency; construction fails if
    the excluded or out-of-band weight exceeds 1e-10 of the packet, and,
    on timelike grids, if evanescent support exceeds 1e-10 unless
    ``allow_evanescent`` requests an evanescent study.
    """

    center: tuple[float, float, float]
    widths: tuple[float, float, float]
    lam: int = 1
    eps: int = 1
    profile: str = "gaussian"
    origin_event: FourVector | None = None
    cutoff_rel: float = 1e-6
    allow_evanescent: bool = False


_SUPPORT_WEIGHT_TOL = 1e-10


def make_gaussian_packet(spec: PacketSpec, grid: HyperplaneGrid) -> PhotonAmplitude:
    """Build a normalized single-channel Gaussian packet.

    values ~ exp(-sum_i (k_i - c_i)^2 / (4 sigma_i^2)) on the (lam, eps)
    channel, then normalized to unit inner product.
    """
    if spec.profile != "gaussian":
        raise ValueError(f"unknown profile {spec.profile!r}")
    for s in spec.widths:
        if not s > 0.0:
            raise PacketSupportError(f"packet widths must be positive, got {s}")

    _check_band_fit(spec, grid)

    k1, k2, k3 = grid.k_mesh
    c, s = spec.center, spec.widths
    g = np.exp(
        -((k1 - c[0]) ** 2) / (4.0 * s[0] ** 2)
        - ((k2 - c[1]) ** 2) / (4.0 * s[1] ** 2)
        - ((k3 - c[2]) ** 2) / (4.0 * s[2] ** 2)
    ) + np.zeros(grid.sizes)
    g = g.astype(np.complex128)

    total_mass = float(np.sum(np.abs(g) ** 2))
    if total_mass <= 0.0:
        raise PacketSupportError("packet has no support on the lattice")

    k_ref = abs(_center_k_sigma(spec, grid))
    if k_ref <= 0.0:
        raise PacketSupportError(
            "packet center frequency check failed: |k_sigma| at the center is zero"
        )
    excluded = ~grid.propagating | (grid.abs_k_sigma < spec.cutoff_rel * k_ref)
    if not spec.allow_evanescent:
        lost = float(np.sum(np.abs(g[excluded]) ** 2)) / total_mass
        if lost > _SUPPORT_WEIGHT_TOL:
            which = (
                "propagating-support (evanescent band)"
                if grid.kind != SPACELIKE
                else "measure-cutoff (|k_sigma| near zero)"
            )
            raise PacketSupportError(
                f"packet violates the {which} check: excluded weight {lost:.3e}"
                f" > {_SUPPORT_WEIGHT_TOL}"
            )
        g[excluded] = 0.0
    else:
        g[~grid.propagating & ~grid.evanescent] = 0.0

    if spec.origin_event is not None:
        g = g * _origin_phase(spec, grid)

    values = np.zeros((2, 2) + grid.sizes, dtype=np.complex128)
    values[lam_index(spec.lam), eps_index(spec.eps)] = g
    axis = default_reference_axis(_spec_mean_direction(spec, grid))
    return normalize(PhotonAmplitude(grid, values, pol_axis=axis))


def _center_k_sigma(spec: PacketSpec, grid: HyperplaneGrid) -> float:
    c = spec.center
    if grid.kind == SPACELIKE:
        return math.sqrt(c[0] ** 2 + c[1] ** 2 + c[2] ** 2)
    radicand = c[2] ** 2 - c[0] ** 2 - c[1] ** 2
    return math.sqrt(radicand) if radicand > 0.0 else 0.0


def _spec_mean_direction(
    spec: PacketSpec, grid: HyperplaneGrid
) -> tuple[float, float, float] | None:
    c = spec.center
    if grid.kind == SPACELIKE:
        d = (c[0], c[1], c[2])
    else:
        d = (c[0], c[1], spec.eps * _center_k_sigma(spec, grid))
    if math.sqrt(sum(x * x for x in d)) < 1e-12:
        return None
    return d


def _origin_phase(spec: PacketSpec, grid: HyperplaneGrid) -> np.ndarray:
    """exp(-i k.x0) with k.x0 the metric contraction at the origin event."""
    return np.exp(-1j * contraction_phase(grid, spec.eps, spec.origin_event))


def _check_band_fit(spec: PacketSpec, grid: HyperplaneGrid) -> None:
    # Gaussian |psi|^2 has std sigma_i per axis; require the analytic tail
    # mass beyond the nearest band edge below the support tolerance so the
    # periodic lattice does not alias the packet.
    for i, (c, s) in enumerate(zip(spec.center, spec.widths)):
        ax = grid.k_axes[i]
        lo, hi = float(np.min(ax)), float(np.max(ax))
        if not (lo <= c <= hi):
            raise PacketSupportError(
                f"band-fit check failed on axis {i}: center {c} outside [{lo}, {hi}]"
            )
        tail = 0.5 * (
            math.erfc((c - lo) / (math.sqrt(2.0) * s))
            + math.erfc((hi - c) / (math.sqrt(2.0) * s))
        )
        if tail > _SUPPORT_WEIGHT_TOL:
            raise PacketSupportError(
                f"band-fit check failed on axis {i}: aliasing weight {tail:.3e}"
                f" > {_SUPPORT_WEIGHT_TOL}"
            )


def single_mode_amplitude(
    grid: HyperplaneGrid,
    index: tuple[int, int, int],
    lam: int = 1,
    eps: int = 1,
    value: complex = 1.0,
    unit_norm: bool = True,
) -> PhotonAmplitude:
    """Amplitude concentrated on one lattice mode (evanescent allowed).

    Evanescent modes carry zero quadrature weight, so ``unit_norm`` must be
    False for them; they are reachable only through plane-to-plane
    transport.
    """
    values = np.zeros((2, 2) + grid.sizes, dtype=np.complex128)
    values[lam_index(lam), eps_index(eps)][index] = value
    psi = PhotonAmplitude(grid, values)
    if unit_norm:
        return normalize(psi)
    return psi


def random_amplitude(
    grid: HyperplaneGrid,
    rng: np.random.Generator,
    unit_norm: bool = True,
    min_abs_k_sigma: float = 0.0,
) -> PhotonAmplitude:
    """Random state over all channels, zero on excluded modes (test helper)."""
    shape = (2, 2) + grid.sizes
    v = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    keep = grid.propagating & (grid.abs_k_sigma >= min_abs_k_sigma)
    v *= keep
    psi = PhotonAmplitude(grid, v)
    return normalize(psi) if unit_norm else psi


# -- spectral diagnostics ------------------------------------------------------------


def spectral_mean_k(psi: PhotonAmplitude, weighted: bool = True) -> np.ndarray:
    """Mean on-plane k over |psi|^2, with or without the invariant measure.

    The measure factor 1/(2|k_sigma|) tilts the weighted mean away from a
    packet's nominal center by O(sigma^2 / k_sigma); the unweighted mean of
    a lattice-symmetric packet is exact.
    """
    if weighted:
        w = psi.grid.weights
    else:
        w = np.ones(psi.grid.sizes)
    dens = np.sum(np.abs(psi.values) ** 2, axis=(0, 1)) * w
    total = float(np.sum(dens))
    if total <= 0.0:
        raise ZeroStateError("state has no spectral weight")
    return np.array(
        [float(np.sum(dens * np.broadcast_to(m, psi.grid.sizes))) / total
         for m in psi.grid.k_mesh]
    )


def bandwidth(psi: PhotonAmplitude) -> float:
    """Relative frequency spread std(omega)/mean(omega) over the measure."""
    g = psi.grid
    w = g.weights
    omega = np.abs(g.k0(1))  # |k0| is eps-independent in magnitude
    dens = np.sum(np.abs(psi.values) ** 2, axis=(0, 1)) * w
    total = float(np.sum(dens))
    if total <= 0.0:
        raise ZeroStateError("state has no spectral weight")
    mean = float(np.sum(dens * omega)) / total
    var = float(np.sum(dens * (omega - mean) ** 2)) / total
    return math.sqrt(max(var, 0.0)) / mean


def mean_direction(psi: PhotonAmplitude) -> tuple[float, float, float] | None:
    """Measure-weighted mean spatial propagation direction, or None if zero."""
    g = psi.grid
    w = g.weights
    acc = np.zeros(3)
    total = 0.0
    for eps in EPS_VALUES:
        dens = np.sum(np.abs(psi.values[:, eps_index(eps)]) ** 2, axis=0) * w
        khat = g.khat(eps)
        # Propagation direction is khat * sign(k0) (group velocity).
        sgn = np.sign(g.k0(eps))
        for i in range(3):
            acc[i] += float(np.sum(dens * khat[i] * sgn))
        total += float(np.sum(dens))
    if total <= 0.0 or np.linalg.norm(acc) < 1e-12 * total:
        return None
    d = acc / np.linalg.norm(acc)
    return (float(d[0]), float(d[1]), float(d[2]))


def resolve_axis(*states: PhotonAmplitude) -> tuple[float, float, float]:
    """Common polarization reference axis for a set of operand states."""
    axes = [s.pol_axis for s in states if s.pol_axis is not None]
    for a in axes[1:]:
        if not np.allclose(a, axes[0], atol=1e-12):
            raise ValueError(
                "operand states carry different polarization reference axes"
            )
    if axes:
        return axes[0]
    for s in states:
        d = mean_direction(s)
        if d is not None:
            return default_reference_axis(d)
    return default_reference_axis(None)


# -- potential synthesis ----------------------------------------------------------


def synthesize_potential(
    psi: PhotonAmplitude,
    events: list[FourVector],
    axis: tuple[float, float, float] | None = None,
) -> np.ndarray:
    """Four-potential samples psi_eps^mu(x) at arbitrary events.

    Returns a complex array of shape (2, len(events), 4) indexed by
    (eps index, event, mu).  Direct mode summation over propagating modes;
    the time component vanishes identically in the Coulomb gauge.
    """
    grid = psi.grid
    if axis is None:
        axis = resolve_axis(psi)
    out = np.zeros((2, len(events), 4), dtype=np.complex128)
    for eps in EPS_VALUES:
        ie = eps_index(eps)
        pol = grid.polarization(eps, axis)
        w = grid.weights
        # Vector-valued mode coefficients summed over lam.
        gvec = (
            pol[0] * psi.values[0, ie] + pol[1] * psi.values[1, ie]
        ) * (w / TWO_PI_32)
        for j, ev in enumerate(events):
            e = np.exp(1j * contraction_phase(grid, eps, ev))
            for mu in range(3):
                out[ie, j, mu + 1] = np.sum(gvec[mu] * e)
    return out


# -- CSV snapshots ------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_amplitude_csv(psi: PhotonAmplitude, path: str) -> None:
    """Write mode coefficients as (k1, k2, k3_or_k0, lambda, epsilon, re, im).

    Floats carry 17 significant digits, so the import path reproduces the
    amplitude bit-exactly.
    """
    grid = psi.grid
    a1, a2, a3 = grid.k_axes
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("k1,k2,k3_or_k0,lambda,epsilon,re,im\n")
        for lam in LAM_VALUES:
            for eps in EPS_VALUES:
                ch = psi.channel(lam, eps)
                for i1 in range(grid.sizes[0]):
                    for i2 in range(grid.sizes[1]):
                        for i3 in range(grid.sizes[2]):
                            z = ch[i1, i2, i3]
                            f.write(
                                f"{_fmt(a1[i1])},{_fmt(a2[i2])},{_fmt(a3[i3])},"
                                f"{lam},{eps},{_fmt(z.real)},{_fmt(z.imag)}\n"
                            )


def import_amplitude_csv(path: str, grid: HyperplaneGrid) -> PhotonAmplitude:
    """Rebuild an amplitude from its CSV snapshot on a matching grid."""
    values = np.zeros((2, 2) + grid.sizes, dtype=np.complex128)
    dk = grid.dk
    sizes = grid.sizes
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip()
        if header != "k1,k2,k3_or_k0,lambda,epsilon,re,im":
            raise ValueError(f"unexpected amplitude CSV header: {header!r}")
        for line in f:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 7:
                raise ValueError(f"malformed amplitude CSV row: {line!r}")
            coords = [float(p) for p in parts[:3]]
            lam, eps = int(parts[3]), int(parts[4])
            idx = []
            for c, d, n in zip(coords, dk, sizes):
                m = int(round(c / d))
                if abs(c - m * d) > 1e-9 * d or not (-n // 2 <= m < n // 2):
                    raise ValueError(f"coordinate {c} is not on the grid lattice")
                idx.append(m % n)
            values[lam_index(lam), eps_index(eps)][tuple(idx)] = complex(
                float(parts[5]), float(parts[6])
            )
    return PhotonAmplitude(grid, values)
