"""Number-flux densities, hyperplane flux integrals, and a scalar-field oracle.

The four-flux of a photon pair (phi, psi) is evaluated at the one-photon
matrix-element level from their Coulomb-gauge vector potentials A:

    J0  =  i ( A_phi* . dA_psi/dt  -  dA_phi*/dt . A_psi )
    J^i = -i ( A_phi* x (curl A_psi) + (curl A_phi*) x A_psi )^i

per flux channel eps -- the time component involves the electric field, the
spatial ones the magnetic field, where the antisymmetry of the cross
product turns the derivative difference into a sum.  All derivatives are
applied spectrally (multiply by -i k0, i k x) before synthesis, so they are
exact on the band and the discrete flux integral

    <phi|psi> = sum_eps eps * dsigma * sum_x J_eps^normal(x)

reproduces the k-space inner product to rounding: photons are counted
regardless of which way they cross the plane, and the eps factor keeps the
total positive.

The massive scalar (Klein-Gordon) machinery at the end implements the same
structure for a scalar field on spacelike planes -- measure d3k/(2 omega),
omega = sqrt(k.k + m^2), x-space inner product i sum_eps eps int dsigma
(f* df/dt - f df*/dt) -- and serves as an independent cross-validation
oracle: its m -> 0 single-channel norms coincide with photon norms mode by
mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from photonloc.kspace import (
    EPS_VALUES,
    HyperplaneGrid,
    contraction_phase,
    eps_index,
    synthesize_on_grid,
)
from photonloc.localization import PlaneKindError
from photonloc.spacetime import FourVector, SPACELIKE
from photonloc.states import (
    GridMismatchError,
    PhotonAmplitude,
    TWO_PI_32,
    _check_same_grid,
    resolve_axis,
)

__all__ = [
    "FluxField",
    "KGAmplitude",
    "photon_flux_density",
    "flux_integral",
    "kg_inner_product",
    "kg_inner_product_kspace",
    "kg_field",
    "kg_field_on_grid",
    "gaussian_kg_amplitude",
    "export_flux_csv",
]


@dataclass(frozen=True)
class FluxField:
    """J_eps^mu at sampled events; shape (2, n_events, 4), complex.

    For phi = psi the components are real (the flux of a state with
    itself); off-diagonal pairs keep the literal sesquilinear values.
    """

    events: tuple[FourVector, ...]
    values: np.ndarray


def _mode_vector_coefficients(
    psi: PhotonAmplitude, eps: int, axis: tuple[float, float, float]
) -> np.ndarray:
    """w(k) e_lam(k) psi_lam(k) / (2pi)^{3/2} summed over lam; shape (3, ...)."""
    grid = psi.grid
    ie = eps_index(eps)
    pol = grid.polarization(eps, axis)
    return (pol[0] * psi.values[0, ie] + pol[1] * psi.values[1, ie]) * (
        grid.weights / TWO_PI_32
    )


def _spectral_derivative(
    grid: HyperplaneGrid, eps: int, gvec: np.ndarray, op: str
) -> np.ndarray:
    if op == "id":
        return gvec
    if op == "dt":
        return gvec * (-1j * grid.k0(eps))
    if op == "curl":
        k1, k2, k3 = grid.k_spatial(eps)
        out = np.empty_like(gvec)
        out[0] = 1j * (k2 * gvec[2] - k3 * gvec[1])
        out[1] = 1j * (k3 * gvec[0] - k1 * gvec[2])
        out[2] = 1j * (k1 * gvec[1] - k2 * gvec[0])
        return out
    raise ValueError(f"unknown derivative op {op!r}")


def _fields_on_grid(
    psi: PhotonAmplitude, eps: int, axis: tuple[float, float, float], ops: tuple[str, ...]
) -> dict[str, np.ndarray]:
    """Synthesize A and spectral-derivative companions over the grid."""
    grid = psi.grid
    gvec = _mode_vector_coefficients(psi, eps, axis) * grid.offset_phase(eps)
    return {
        op: synthesize_on_grid(grid, _spectral_derivative(grid, eps, gvec, op))
        for op in ops
    }


def _fields_at_events(
    psi: PhotonAmplitude,
    eps: int,
    axis: tuple[float, float, float],
    events: list[FourVector],
    ops: tuple[str, ...],
) -> dict[str, np.ndarray]:
    """Direct-sum A and companions at arbitrary events; shape (3, n_events)."""
    grid = psi.grid
    gvec = _mode_vector_coefficients(psi, eps, axis)
    spectral = {op: _spectral_derivative(grid, eps, gvec, op) for op in ops}
    out = {op: np.zeros((3, len(events)), dtype=np.complex128) for op in ops}
    for j, ev in enumerate(events):
        e = np.exp(1j * contraction_phase(grid, eps, ev))
        for op in ops:
            for mu in range(3):
                out[op][mu, j] = np.sum(spectral[op][mu] * e)
    return out


def _assemble_flux(
    fphi: dict[str, np.ndarray], fpsi: dict[str, np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """(J0, Jvec) from potential fields of the bra and ket."""
    a_phi_c = np.conj(fphi["id"])
    dt_phi_c = np.conj(fphi["dt"])
    curl_phi_c = np.conj(fphi["curl"])
    a_psi = fpsi["id"]
    dt_psi = fpsi["dt"]
    curl_psi = fpsi["curl"]

    j0 = 1j * (
        np.sum(a_phi_c * dt_psi, axis=0) - np.sum(dt_phi_c * a_psi, axis=0)
    )
    jvec = -1j * (_cross(a_phi_c, curl_psi) + _cross(curl_phi_c, a_psi))
    return j0, jvec


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    out[0] = u[1] * v[2] - u[2] * v[1]
    out[1] = u[2] * v[0] - u[0] * v[2]
    out[2] = u[0] * v[1] - u[1] * v[0]
    return out


_FLUX_OPS = ("id", "dt", "curl")


def photon_flux_density(
    phi: PhotonAmplitude,
    psi: PhotonAmplitude,
    events: list[FourVector],
    axis: tuple[float, float, float] | None = None,
) -> FluxField:
    """Four-flux J_eps^mu(x) of the pair (phi, psi) at arbitrary events."""
    _check_same_grid(phi, psi)
    if axis is None:
        axis = resolve_axis(phi, psi)
    values = np.zeros((2, len(events), 4), dtype=np.complex128)
    for eps in EPS_VALUES:
        ie = eps_index(eps)
        fphi = _fields_at_events(phi, eps, axis, events, _FLUX_OPS)
        fpsi = _fields_at_events(psi, eps, axis, events, _FLUX_OPS)
        j0, jvec = _assemble_flux(fphi, fpsi)
        values[ie, :, 0] = j0
        values[ie, :, 1:] = jvec.T
    return FluxField(tuple(events), values)


def flux_integral(
    phi: PhotonAmplitude,
    psi: PhotonAmplitude,
    axis: tuple[float, float, float] | None = None,
) -> complex:
    """sum_eps eps int_Sigma dsigma J_eps^normal by lattice quadrature.

    The normal flux component is J0 on a spacelike plane and J3 on a
    timelike plane; fields are synthesized over the plane's own grid.
    Equals the k-space inner product (the crossing direction is irrelevant;
    eps flips the sign of backward flux so every photon counts positively).
    """
    _check_same_grid(phi, psi)
    grid = phi.grid
    if axis is None:
        axis = resolve_axis(phi, psi)
    total = 0.0 + 0.0j
    for eps in EPS_VALUES:
        fphi = _fields_on_grid(phi, eps, axis, _FLUX_OPS)
        fpsi = _fields_on_grid(psi, eps, axis, _FLUX_OPS)
        j0, jvec = _assemble_flux(fphi, fpsi)
        jn = j0 if grid.kind == SPACELIKE else jvec[2]
        total += eps * grid.dsigma * np.sum(jn)
    return complex(total)


# -- massive scalar (Klein-Gordon) oracle --------------------------------------------


@dataclass(frozen=True)
class KGAmplitude:
    """Scalar one-particle amplitudes psi_eps(k) on a spacelike-plane grid.

    values has shape (2, N1, N2, N3) indexed by eps; omega follows the
    massive dispersion sqrt(k.k + m^2).
    """

    grid: HyperplaneGrid
    mass: float
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.grid.kind != SPACELIKE:
            raise PlaneKindError("scalar amplitudes live on spacelike planes")
        if self.mass < 0.0:
            raise ValueError("mass must be >= 0")
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (2,) + self.grid.sizes:
            raise ValueError(
                f"values shape {v.shape} != (2,) + grid sizes {self.grid.sizes}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def omega(self) -> np.ndarray:
        k1, k2, k3 = self.grid.k_mesh
        return np.sqrt(k1 * k1 + k2 * k2 + k3 * k3 + self.mass**2) + np.zeros(
            self.grid.sizes
        )

    def weights(self) -> np.ndarray:
        """d3k / (2 omega); zero at the massless k = 0 degeneracy."""
        om = self.omega()
        w = np.zeros(self.grid.sizes)
        np.divide(self.grid.dkappa, 2.0 * om, out=w, where=om > 0.0)
        return w


def _kg_check(phi: KGAmplitude, psi: KGAmplitude) -> None:
    if phi.grid != psi.grid or phi.mass != psi.mass:
        raise GridMismatchError("scalar amplitudes differ in grid or mass")


def kg_inner_product_kspace(phi: KGAmplitude, psi: KGAmplitude) -> complex:
    """sum_eps sum_k d3k/(2 omega) phi_eps* psi_eps."""
    _kg_check(phi, psi)
    w = phi.weights()
    return complex(
        np.sum(w * np.conj(phi.values[0]) * psi.values[0])
        + np.sum(w * np.conj(phi.values[1]) * psi.values[1])
    )


def kg_inner_product(phi: KGAmplitude, psi: KGAmplitude) -> complex:
    """x-space invariant inner product on the grid's plane.

    i sum_eps eps int dsigma (phi* dpsi/dt - psi dphi*/dt), with the time
    derivative applied spectrally; cross-eps pairs vanish identically and
    the value matches the k-space form to rounding.
    """
    _kg_check(phi, psi)
    grid = phi.grid
    total = 0.0 + 0.0j
    for eps in EPS_VALUES:
        f_phi = _kg_field_grid(phi, eps, t=grid.plane.offset)
        f_psi = _kg_field_grid(psi, eps, t=grid.plane.offset)
        fdot_phi = _kg_field_grid(phi, eps, t=grid.plane.offset, dt=True)
        fdot_psi = _kg_field_grid(psi, eps, t=grid.plane.offset, dt=True)
        integrand = np.conj(f_phi) * fdot_psi - f_psi * np.conj(fdot_phi)
        total += 1j * eps * grid.dsigma * np.sum(integrand)
    return complex(total)


def _kg_field_grid(
    psi: KGAmplitude, eps: int, t: float, dt: bool = False
) -> np.ndarray:
    grid = psi.grid
    om = psi.omega()
    k0 = eps * om
    g = psi.values[eps_index(eps)] * psi.weights() / TWO_PI_32
    g = g * np.exp(-1j * k0 * t)
    if dt:
        g = g * (-1j * k0)
    return synthesize_on_grid(grid, g)


def kg_field_on_grid(psi: KGAmplitude, eps: int, t: float) -> np.ndarray:
    """Scalar field of one eps channel over the spatial lattice at time t."""
    return _kg_field_grid(psi, eps, t)


def kg_field(psi: KGAmplitude, events: list[FourVector]) -> np.ndarray:
    """psi_eps(x) = sum_k d3k/(2 omega) exp(i k.x) psi_eps(k) / (2pi)^{3/2}.

    Direct mode sum at arbitrary events; returns shape (2, n_events).
    """
    grid = psi.grid
    om = psi.omega()
    w = psi.weights()
    k1, k2, k3 = grid.k_mesh
    out = np.zeros((2, len(events)), dtype=np.complex128)
    for eps in EPS_VALUES:
        g = psi.values[eps_index(eps)] * w / TWO_PI_32
        k0 = eps * om
        for j, ev in enumerate(events):
            phase = (
                k1 * ev.x1 + k2 * ev.x2 + k3 * ev.x3 - k0 * ev.t
            )
            out[eps_index(eps), j] = np.sum(g * np.exp(1j * phase))
    return out


def gaussian_kg_amplitude(
    grid: HyperplaneGrid,
    mass: float,
    center: tuple[float, float, float],
    widths: tuple[float, float, float],
    eps: int = 1,
) -> KGAmplitude:
    """Normalized Gaussian scalar packet on one eps channel."""
    k1, k2, k3 = grid.k_mesh
    g = np.exp(
        -((k1 - center[0]) ** 2) / (4.0 * widths[0] ** 2)
        - ((k2 - center[1]) ** 2) / (4.0 * widths[1] ** 2)
        - ((k3 - center[2]) ** 2) / (4.0 * widths[2] ** 2)
    ) + np.zeros(grid.sizes)
    values = np.zeros((2,) + grid.sizes, dtype=np.complex128)
    values[eps_index(eps)] = g
    psi = KGAmplitude(grid, mass, values)
    n = math.sqrt(kg_inner_product_kspace(psi, psi).real)
    return KGAmplitude(grid, mass, values / n)


def export_flux_csv(field: FluxField, path: str) -> None:
    """Rows (t, x1, x2, x3, epsilon, J0, J1, J2, J3); real parts are written.

    The imaginary parts vanish for the flux of a state with itself; keep the
    FluxField for off-diagonal sesquilinear values.
    """
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("t,x1,x2,x3,epsilon,J0,J1,J2,J3\n")
        for ie, eps in enumerate(EPS_VALUES):
            for j, ev in enumerate(field.events):
                row = field.values[ie, j]
                f.write(
                    ",".join(
                        [
                            format(c, ".17g")
                            for c in (ev.t, ev.x1, ev.x2, ev.x3)
                        ]
                        + [str(eps)]
                        + [format(v.real, ".17g") for v in row]
                    )
                    + "\n"
                )
