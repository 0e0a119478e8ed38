"""Acceptance-criteria runners shared by the test suite and the CLI.

Each criterion function builds its own states, measures the quantities it
pins, and returns a CriterionResult with the measured values, so failures
are diagnosable from the report alone.  Grid sizes, packet parameters, and
tolerances are frozen here; the pytest acceptance module and the
``validate`` CLI scenario both call ``run_all``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as scipy_stats

from photonloc.detectors import (
    DetectorArraySpec,
    ObserverFrame,
    boosted_view,
    detection_probabilities,
    frame_invariance_check,
    naive_vs_covariant_ratio,
    norm_invariance_check,
    sample_events,
)
from photonloc.flux import (
    KGAmplitude,
    flux_integral,
    kg_inner_product,
    kg_inner_product_kspace,
)
from photonloc.kspace import HyperplaneGrid
from photonloc.localization import (
    LocalizedStateSpec,
    completeness_defect,
    fit_power_law,
    overlap,
    plane_to_plane_amplitude,
    potential_of_localized,
    radial_magnitude_profile,
    transport_amplitude,
)
from photonloc.spacetime import (
    BoostParameters,
    FourVector,
    Hyperplane,
    boost_hyperplane,
)
from photonloc.states import (
    PacketSpec,
    PhotonAmplitude,
    inner_product,
    make_gaussian_packet,
    normalize,
    random_amplitude,
    single_mode_amplitude,
)

__all__ = ["CriterionResult", "run_all", "CRITERIA"]


@dataclass
class CriterionResult:
    criterion: int
    name: str
    passed: bool
    tolerance: str
    measured: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] criterion {self.criterion:2d} {self.name} "
            f"({self.runtime_s:.1f}s)"
        )


def _spacelike_grid(n: int, spacing: float = 0.8) -> HyperplaneGrid:
    return HyperplaneGrid(Hyperplane.spacelike(0.0), (n, n, n), (spacing,) * 3)


def _timelike_grid(n: int, spacing: float = 0.8) -> HyperplaneGrid:
    return HyperplaneGrid(Hyperplane.timelike(0.0), (n, n, n), (spacing,) * 3)


def criterion_1_orthogonality(size: int = 64, pairs: int = 1000, seed: int = 0) -> CriterionResult:
    """Localized-state overlaps form a discrete delta on a spacelike grid."""
    t0 = time.monotonic()
    grid = _spacelike_grid(size)
    rng = np.random.default_rng(seed)
    worst_diag = 0.0
    worst_off = 0.0
    inv = 1.0 / grid.dsigma
    for _ in range(pairs):
        ia = tuple(int(v) for v in rng.integers(0, size, 3))
        ib = tuple(int(v) for v in rng.integers(0, size, 3))
        a = LocalizedStateSpec(grid.event_at(*ia))
        b = LocalizedStateSpec(grid.event_at(*ib))
        got = overlap(a, b, grid) * grid.dsigma
        want = 1.0 if ia == ib else 0.0
        err = abs(got - want)
        if ia == ib:
            worst_diag = max(worst_diag, err)
        else:
            worst_off = max(worst_off, err)
    # A sample of coinciding points (the random pairs rarely collide).
    for _ in range(50):
        ia = tuple(int(v) for v in rng.integers(0, size, 3))
        a = LocalizedStateSpec(grid.event_at(*ia))
        worst_diag = max(worst_diag, abs(overlap(a, a, grid) * grid.dsigma - 1.0))
    # Distinct channels are exactly zero.
    x = grid.event_at(1, 2, 3)
    cross_lam = overlap(
        LocalizedStateSpec(x, lam=1), LocalizedStateSpec(x, lam=2), grid
    )
    cross_eps = overlap(
        LocalizedStateSpec(x, eps=1), LocalizedStateSpec(x, eps=-1), grid
    )
    dt = time.monotonic() - t0
    passed = (
        worst_diag <= 1e-10
        and worst_off <= 1e-10
        and cross_lam == 0.0
        and cross_eps == 0.0
        and dt < 30.0
    )
    return CriterionResult(
        1,
        "localized-state orthogonality (discrete delta)",
        passed,
        "overlap*dsigma = Kronecker delta within 1e-10; cross channels 0; < 30 s",
        {
            "worst_diagonal_error": worst_diag,
            "worst_offdiagonal_error": worst_off,
            "cross_lambda": abs(cross_lam),
            "cross_eps": abs(cross_eps),
        },
        dt,
    )


def _correlated_pair(
    grid: HyperplaneGrid, rng: np.random.Generator
) -> tuple[PhotonAmplitude, PhotonAmplitude]:
    # Pairs with O(1) mutual overlap: the relative completeness defect is
    # conditioned on |<phi|psi>|, which for independent random states decays
    # like 1/sqrt(modes) and would measure the denominator, not the
    # transform pair.  Random support stays off the measure-singular set.
    psi = random_amplitude(grid, rng, min_abs_k_sigma=0.5 * grid.dk[0])
    eta = random_amplitude(grid, rng, min_abs_k_sigma=0.5 * grid.dk[0])
    phi = normalize(psi + eta)
    return phi, psi


def criterion_2_completeness(sizes=(32, 64), pairs: int = 20, seed: int = 1) -> CriterionResult:
    """The localized family partitions the identity (projection-valued measure)."""
    t0 = time.monotonic()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in sizes:
        for make in (_spacelike_grid, _timelike_grid):
            grid = make(n)
            for _ in range(pairs // 2):
                phi, psi = _correlated_pair(grid, rng)
                worst = max(worst, completeness_defect(phi, psi))
    dt = time.monotonic() - t0
    passed = worst <= 1e-12 and dt < 60.0
    return CriterionResult(
        2,
        "completeness / identity partition",
        passed,
        "relative defect <= 1e-12 at 32^3 and 64^3; < 60 s",
        {"worst_defect": worst},
        dt,
    )


def criterion_3_flux_equals_inner_product() -> CriterionResult:
    """Hyperplane flux integral reproduces the k-space inner product."""
    t0 = time.monotonic()
    measured = {}
    devs = {}
    for n in (32, 64):
        sgrid = _spacelike_grid(n)
        dk = _spacelike_grid(32).dk[0]  # physical packet frozen in 32^3 units
        phi = make_gaussian_packet(
            PacketSpec(center=(0.5 * dk, 0.0, 8.0 * dk), widths=(1.0 * dk,) * 3),
            sgrid,
        )
        psi = make_gaussian_packet(
            PacketSpec(center=(0.0, 0.0, 8.3 * dk), widths=(1.0 * dk,) * 3), sgrid
        )
        ip = inner_product(phi, psi)
        fl = flux_integral(phi, psi, axis=(0.0, 1.0, 0.0))
        devs[("spacelike", n)] = abs(fl - ip) / abs(ip)

        tgrid = _timelike_grid(n)
        phi_t = make_gaussian_packet(
            PacketSpec(center=(0.0, 0.0, 8.0 * dk), widths=(0.8 * dk, 0.8 * dk, 0.7 * dk)),
            tgrid,
        )
        psi_t = make_gaussian_packet(
            PacketSpec(center=(0.5 * dk, 0.0, 8.4 * dk), widths=(0.75 * dk, 0.75 * dk, 0.7 * dk)),
            tgrid,
        )
        ip_t = inner_product(phi_t, psi_t)
        fl_t = flux_integral(phi_t, psi_t, axis=(0.0, 1.0, 0.0))
        devs[("timelike", n)] = abs(fl_t - ip_t) / abs(ip_t)

    for (kind, n), v in devs.items():
        measured[f"rel_deviation_{kind}_{n}"] = v
    passed = all(devs[(k, 32)] <= 1e-6 for k in ("spacelike", "timelike")) and all(
        devs[(k, 64)] <= 2.5e-7 for k in ("spacelike", "timelike")
    )
    # The spectral-derivative path sits at rounding level, far below both
    # thresholds; the refinement bound 2.5e-7 encodes the required order.
    return CriterionResult(
        3,
        "flux integral == inner product",
        passed,
        "relative deviation <= 1e-6 at 32^3 and <= 2.5e-7 at 64^3, both plane kinds",
        measured,
        time.monotonic() - t0,
    )


def criterion_4_certain_detection() -> CriterionResult:
    """A crossing packet is counted somewhere in the full array, with certainty."""
    t0 = time.monotonic()
    grid = _timelike_grid(64)
    dk = grid.dk[0]
    psi = make_gaussian_packet(
        PacketSpec(center=(0.0, 0.0, 16.0 * dk), widths=(1.2 * dk,) * 3), grid
    )
    dist = detection_probabilities(psi, DetectorArraySpec.full(grid))
    total = dist.total
    passed = abs(total - 1.0) <= 1e-3
    return CriterionResult(
        4,
        "certain detection on a full counting array",
        passed,
        "total probability = 1 within 1e-3",
        {"total_probability": total},
        time.monotonic() - t0,
    )


_COSTHETA_CASES = (
    # (theta_deg, grid size, center frequency / dk, widths / dk, tolerance)
    (0.0, 64, 24.0, (0.5, 0.5, 0.24), 1e-3),
    (45.0, 64, 24.0, (0.6, 0.6, 0.24), 0.01),
    (60.0, 128, 52.0, (0.6, 0.6, 0.52), 0.01),
)


def costheta_case(theta_deg: float, size: int, om_hat: float, widths_hat) -> float:
    """Naive/covariant ratio for a packet at the given angle to the normal."""
    grid = _timelike_grid(size)
    dk = grid.dk[0]
    th = math.radians(theta_deg)
    psi = make_gaussian_packet(
        PacketSpec(
            center=(om_hat * math.sin(th) * dk, 0.0, om_hat * dk),
            widths=tuple(w * dk for w in widths_hat),
        ),
        grid,
    )
    return naive_vs_covariant_ratio(psi)


def criterion_5_wrong_basis_factor() -> CriterionResult:
    """Fixed-time weights on a counting plane cost the factor cos(theta)."""
    t0 = time.monotonic()
    measured = {}
    passed = True
    for theta_deg, size, om_hat, widths_hat, tol in _COSTHETA_CASES:
        ratio = costheta_case(theta_deg, size, om_hat, widths_hat)
        expected = math.cos(math.radians(theta_deg))
        rel = abs(ratio - expected) / expected
        measured[f"ratio_theta_{int(theta_deg)}"] = ratio
        measured[f"rel_error_theta_{int(theta_deg)}"] = rel
        passed = passed and rel <= tol
    return CriterionResult(
        5,
        "wrong-basis factor cos(theta) = k3/omega",
        passed,
        "ratio = cos(theta) within 1% at 45 and 60 deg, within 1e-3 on axis; 1% bandwidth",
        measured,
        time.monotonic() - t0,
    )


def criterion_6_boost_geometry() -> CriterionResult:
    """Boosted normals and detector world lines at beta = 0.6; kinds preserved."""
    t0 = time.monotonic()
    b = BoostParameters(0.6)
    space = boost_hyperplane(Hyperplane.spacelike(2.0), b)
    tlike = boost_hyperplane(Hyperplane.timelike(1.0), b)
    sview = boosted_view(
        DetectorArraySpec.full(HyperplaneGrid(Hyperplane.spacelike(2.0), (8, 8, 8), (1.0,) * 3)),
        ObserverFrame(b),
    )
    tview = boosted_view(
        DetectorArraySpec.full(HyperplaneGrid(Hyperplane.timelike(1.0), (8, 8, 8), (1.0,) * 3)),
        ObserverFrame(b),
    )
    checks = {
        "spacelike_normal": (space.normal.t, space.normal.x3, 1.25, 0.75),
        "timelike_normal": (tlike.normal.t, tlike.normal.x3, 0.75, 1.25),
        "spacelike_line": (sview.line_intercept, sview.line_slope, 1.6, 0.6),
        "timelike_line": (tview.line_intercept, tview.line_slope, 0.8, 0.6),
    }
    worst = max(
        max(abs(a - ea), abs(c - ec)) for a, c, ea, ec in checks.values()
    )
    kinds_ok = True
    for beta in (0.3, -0.3, 0.6, -0.6, 0.9, -0.9, 0.99, -0.99):
        bb = BoostParameters(beta)
        kinds_ok = kinds_ok and (
            boost_hyperplane(Hyperplane.spacelike(1.0), bb).kind == "spacelike"
            and boost_hyperplane(Hyperplane.timelike(1.0), bb).kind == "timelike"
        )
    passed = worst <= 1e-12 and kinds_ok
    return CriterionResult(
        6,
        "boost geometry of both experiments",
        passed,
        "normals (1.25,0,0,0.75)/(0.75,0,0,1.25), lines t'=1.6+0.6 x3' and "
        "x3'=0.8+0.6 t' exact; kinds preserved for |beta| up to 0.99",
        {"worst_abs_error": worst, "kinds_preserved": kinds_ok},
        time.monotonic() - t0,
    )


def criterion_7_frame_invariance() -> CriterionResult:
    """Lambda-summed detection total and norm agree across frames."""
    t0 = time.monotonic()
    frame = ObserverFrame(BoostParameters(0.6))
    devs = {}
    for n in (32, 64):
        grid = _spacelike_grid(n)
        dk64 = _spacelike_grid(64).dk[0]
        psi = make_gaussian_packet(
            PacketSpec(center=(0.0, 0.0, 7.5 * dk64), widths=(1.0 * dk64,) * 3),
            grid,
        )
        devs[f"probability_{n}"] = frame_invariance_check(
            psi, DetectorArraySpec.full(grid), frame
        )
        devs[f"norm_{n}"] = norm_invariance_check(psi, frame)
    floor = 1e-11  # rounding floor once the resampling error has collapsed
    passed = (
        devs["probability_64"] <= 1e-3
        and devs["norm_64"] <= 1e-3
        and devs["probability_64"] <= max(devs["probability_32"] / 2.0, floor)
        and devs["norm_64"] <= max(devs["norm_32"] / 2.0, floor)
    )
    return CriterionResult(
        7,
        "frame invariance of detection total and norm",
        passed,
        "deviations <= 1e-3 at 64^3 for beta = 0.6, halving under refinement",
        devs,
        time.monotonic() - t0,
    )


def criterion_8_nonlocalized_potential() -> CriterionResult:
    """The potential of a localized state is not localized; its tail is stable."""
    t0 = time.monotonic()
    box = 25.6
    slopes = {}
    support_ok = True
    for n in (32, 64):
        d = box / n
        grid = HyperplaneGrid(Hyperplane.spacelike(0.0), (n,) * 3, (d,) * 3)
        c = n // 2
        spec = LocalizedStateSpec(grid.event_at(c, c, c))
        field = potential_of_localized(spec, grid)
        mag = field.magnitude()
        peak = float(np.max(mag))
        probes = [
            mag[c + 4, c, c], mag[c, c + 4, c], mag[c, c, c + 4],
            mag[c + 4, c + 4, c + 4], mag[c + 8, c, c], mag[c, c, c + 8],
        ]
        support_ok = support_ok and all(v > 1e-6 * peak for v in probes)
        r, m = radial_magnitude_profile(field, nbins=28, r_min=0.05 * box, r_max=0.5 * box)
        slopes[n] = fit_power_law(r, m, 0.05 * box, 0.5 * box)
    drift = abs(slopes[64] - slopes[32])
    passed = support_ok and drift <= 0.2
    return CriterionResult(
        8,
        "non-localization of the localized-state potential",
        passed,
        "|chi| > 1e-6 peak at >= 4 cells; tail exponent stable to 0.2 over 32^3 -> 64^3",
        {
            "slope_32": slopes[32],
            "slope_64": slopes[64],
            "slope_drift": drift,
            "support_ok": support_ok,
        },
        time.monotonic() - t0,
    )


def criterion_9_evanescent_transport() -> CriterionResult:
    """Evanescent modes decay as exp(-|k3| dx3); propagating transport is unitary."""
    t0 = time.monotonic()
    grid = HyperplaneGrid(
        Hyperplane.timelike(0.0), (10, 10, 10), (2.0 * math.pi / 10.0,) * 3
    )
    psi = single_mode_amplitude(grid, (3, 4, 0), unit_norm=False)
    k3 = grid.k_normal(1)[3, 4, 0]
    ev_on = grid.event_at(2, 5, 7)
    a_on = plane_to_plane_amplitude(psi, ev_on, 1, 1)
    a_off = plane_to_plane_amplitude(
        psi, FourVector(ev_on.t, ev_on.x1, ev_on.x2, 1.0), 1, 1
    )
    ratio = abs(a_off) / abs(a_on)
    decay_err = abs(ratio - math.exp(-5.0))

    tgrid = _timelike_grid(32)
    dk = tgrid.dk[0]
    packet = make_gaussian_packet(
        PacketSpec(center=(0.0, 0.0, 8.0 * dk), widths=(0.8 * dk, 0.8 * dk, 0.7 * dk)),
        tgrid,
    )
    moved = transport_amplitude(packet, 5.3)
    norm_dev = abs(
        inner_product(moved, moved).real - inner_product(packet, packet).real
    )
    passed = complex(k3) == 5.0j and decay_err <= 1e-12 and norm_dev <= 1e-10
    return CriterionResult(
        9,
        "evanescent decay and norm-conserving transport",
        passed,
        "|k3| = 5 mode attenuates by exp(-5) within 1e-12 per unit; "
        "propagating transport conserves the norm within 1e-10",
        {"decay_error": decay_err, "norm_deviation": norm_dev, "k3": str(k3)},
        time.monotonic() - t0,
    )


def criterion_10_scalar_oracle() -> CriterionResult:
    """Scalar-field cross-validation: dual representations and the m -> 0 match."""
    t0 = time.monotonic()
    grid = _spacelike_grid(16)
    rng = np.random.default_rng(10)
    worst_dual = 0.0
    for mass in (0.0, 1.3):
        shape = (2,) + grid.sizes
        va = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        vb = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        if mass == 0.0:
            va[:, 0, 0, 0] = vb[:, 0, 0, 0] = 0.0
        phi = KGAmplitude(grid, mass, va)
        psi = KGAmplitude(grid, mass, vb)
        got = kg_inner_product(phi, psi)
        want = kg_inner_product_kspace(phi, psi)
        worst_dual = max(worst_dual, abs(got - want) / abs(want))

    # Cross-eps terms vanish identically.
    va = np.zeros((2,) + grid.sizes, dtype=complex)
    vb = np.zeros((2,) + grid.sizes, dtype=complex)
    va[0, 2, 1, 3] = 1.0
    vb[1, 2, 1, 3] = 1.0
    cross = kg_inner_product(KGAmplitude(grid, 0.7, va), KGAmplitude(grid, 0.7, vb))

    # m -> 0 measure identity against the photon norm.
    dk = grid.dk[0]
    photon = make_gaussian_packet(
        PacketSpec(center=(0.0, 0.0, 3.5 * dk), widths=(0.5 * dk,) * 3), grid
    )
    scalar_vals = np.zeros((2,) + grid.sizes, dtype=complex)
    scalar_vals[0] = photon.channel(1, 1)
    match = abs(
        kg_inner_product_kspace(
            KGAmplitude(grid, 0.0, scalar_vals), KGAmplitude(grid, 0.0, scalar_vals)
        ).real
        - inner_product(photon, photon).real
    )
    passed = worst_dual <= 1e-10 and cross == 0.0 and match <= 1e-12
    return CriterionResult(
        10,
        "scalar-field oracle (dual representations, m -> 0 limit)",
        passed,
        "x-space == k-space within 1e-10 at 16^3; cross-eps exactly 0; "
        "massless single-channel norms match within 1e-12",
        {
            "worst_dual_deviation": worst_dual,
            "cross_eps": abs(cross),
            "massless_match": match,
        },
        time.monotonic() - t0,
    )


def criterion_11_monte_carlo() -> CriterionResult:
    """Sampled events follow the distribution; reruns are reproducible."""
    t0 = time.monotonic()
    grid = _spacelike_grid(16)
    dk = grid.dk[0]
    psi = make_gaussian_packet(
        PacketSpec(center=(0.0, 0.0, 3.5 * dk), widths=(0.5 * dk,) * 3), grid
    )
    dist = detection_probabilities(psi, DetectorArraySpec.full(grid, (4, 4, 4)))
    n = 100_000
    events = sample_events(dist, n, seed=7)
    counts = np.zeros(dist.probs.size)
    for ev in events:
        counts[np.ravel_multi_index(ev.pixel, dist.probs.shape)] += 1
    expected = dist.probs.ravel() / dist.total * n
    keep = expected >= 5.0
    obs, exp = counts[keep], expected[keep]
    if np.any(~keep) and expected[~keep].sum() > 0.0:
        obs = np.concatenate([obs, [counts[~keep].sum()]])
        exp = np.concatenate([exp, [expected[~keep].sum()]])
    _, pvalue = scipy_stats.chisquare(obs, exp, sum_check=False)
    repeat = sample_events(dist, n, seed=7)
    identical = events == repeat
    passed = pvalue > 0.01 and identical
    return CriterionResult(
        11,
        "Monte Carlo fidelity and reproducibility",
        passed,
        "chi-square p > 0.01 for 1e5 draws; same seed gives identical events",
        {"p_value": float(pvalue), "identical_rerun": identical},
        time.monotonic() - t0,
    )


CRITERIA = (
    criterion_1_orthogonality,
    criterion_2_completeness,
    criterion_3_flux_equals_inner_product,
    criterion_4_certain_detection,
    criterion_5_wrong_basis_factor,
    criterion_6_boost_geometry,
    criterion_7_frame_invariance,
    criterion_8_nonlocalized_potential,
    criterion_9_evanescent_transport,
    criterion_10_scalar_oracle,
    criterion_11_monte_carlo,
)


def run_all(echo: bool = False) -> list[CriterionResult]:
    """Run every acceptance criterion at its frozen size and tolerance."""
    results = []
    for fn in CRITERIA:
        r = fn()
        results.append(r)
        if echo:
            print(r.line(), flush=True)
    return results
