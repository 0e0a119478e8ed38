import math

import numpy as np
import pytest

from photonloc.kspace import HyperplaneGrid, contraction_phase
from photonloc.localization import (
    LocalizedStateSpec,
    OffPlaneError,
    PlaneKindError,
    TransportDirectionError,
    completeness_defect,
    export_density_csv,
    export_projection_csv,
    fit_power_law,
    localized_amplitude,
    overlap,
    plane_to_plane_amplitude,
    potential_of_localized,
    project_all,
    project_point,
    radial_magnitude_profile,
    spacelike_density,
    timelike_counting,
    transport_amplitude,
)
from photonloc.spacetime import FourVector, Hyperplane
from photonloc.states import (
    PacketSpec,
    PhotonAmplitude,
    inner_product,
    make_gaussian_packet,
    random_amplitude,
    single_mode_amplitude,
)

TWO_PI_3 = (2 * math.pi) ** 3


@pytest.fixture(scope="module")
def sgrid():
    return HyperplaneGrid(Hyperplane.spacelike(0.4), (16, 16, 16), (0.8, 0.8, 0.8))


@pytest.fixture(scope="module")
def tgrid():
    return HyperplaneGrid(Hyperplane.timelike(0.9), (16, 16, 16), (0.8, 0.8, 0.8))


@pytest.fixture(scope="module")
def spacket(sgrid):
    dk = sgrid.dk[0]
    return make_gaussian_packet(
        PacketSpec(center=(0.0, 0.0, 3.5 * dk), widths=(0.5 * dk,) * 3), sgrid
    )


@pytest.fixture(scope="module")
def tpacket(tgrid):
    dk = tgrid.dk[0]
    return make_gaussian_packet(
        PacketSpec(center=(0.0, 0.0, 4.0 * dk), widths=(0.4 * dk,) * 3), tgrid
    )


class TestLocalizedAmplitude:
    def test_origin_phase_is_real_positive(self):
        grid = HyperplaneGrid(Hyperplane.spacelike(0.0), (8, 8, 8), (1.0, 1.0, 1.0))
        spec = LocalizedStateSpec(FourVector(0.0, 0.0, 0.0, 0.0), 1, 1)
        chi = localized_amplitude(spec, grid)
        vals = chi.channel(1, 1)
        expected = grid.sqrt_2ks / (2 * math.pi) ** 1.5
        assert np.allclose(vals, expected, atol=1e-15)
        assert np.max(np.abs(vals.imag)) == 0.0

    def test_translation_multiplies_by_phase(self, sgrid):
        i, j, k = 5, 9, 12
        x0 = sgrid.event_at(8, 8, 8)
        x1 = sgrid.event_at(i, j, k)
        chi0 = localized_amplitude(LocalizedStateSpec(x0), sgrid)
        chi1 = localized_amplitude(LocalizedStateSpec(x1), sgrid)
        d = x1 - x0
        shift = np.exp(
            -1j
            * (
                contraction_phase(sgrid, 1, FourVector(0, d.x1, d.x2, d.x3))
            )
        )
        assert np.allclose(chi1.channel(1, 1), chi0.channel(1, 1) * shift, atol=1e-13)

    def test_channel_selection(self, sgrid):
        spec = LocalizedStateSpec(sgrid.event_at(3, 4, 5), lam=1, eps=1)
        chi = localized_amplitude(spec, sgrid)
        assert np.all(chi.channel(2, 1) == 0.0)
        assert np.all(chi.channel(1, -1) == 0.0)
        assert np.all(chi.channel(2, -1) == 0.0)

    def test_off_plane_rejected(self, sgrid):
        with pytest.raises(OffPlaneError):
            localized_amplitude(
                LocalizedStateSpec(FourVector(99.0, 0.0, 0.0, 0.0)), sgrid
            )


class TestOverlap:
    def test_distinct_channels_exact_zero(self, sgrid):
        x = sgrid.event_at(4, 4, 4)
        a = LocalizedStateSpec(x, lam=1, eps=1)
        assert overlap(a, LocalizedStateSpec(x, lam=2, eps=1), sgrid) == 0.0
        assert overlap(a, LocalizedStateSpec(x, lam=1, eps=-1), sgrid) == 0.0

    @pytest.mark.parametrize("kind", ["spacelike", "timelike"])
    def test_discrete_delta(self, kind, sgrid, tgrid):
        grid = sgrid if kind == "spacelike" else tgrid
        same = LocalizedStateSpec(grid.event_at(7, 2, 11))
        other = LocalizedStateSpec(grid.event_at(6, 2, 11))
        hit = overlap(same, same, grid)
        # DFT orthogonality oracle: sum_k dkappa/(2pi)^3 = 1/dsigma.
        assert hit.real == pytest.approx(1.0 / grid.dsigma, rel=1e-10)
        assert abs(hit.imag) <= 1e-10 / grid.dsigma
        miss = overlap(same, other, grid)
        assert abs(miss) * grid.dsigma <= 1e-10

    def test_matches_full_three_dim_sum(self, sgrid):
        # Cross-check the factorized product against the dense lattice sum.
        a = LocalizedStateSpec(sgrid.event_at(3, 8, 10))
        b = LocalizedStateSpec(sgrid.event_at(5, 8, 9))
        got = overlap(a, b, sgrid)
        ca = np.array(sgrid.onplane_coords(a.position))
        cb = np.array(sgrid.onplane_coords(b.position))
        k1, k2, k3 = sgrid.k_mesh
        phase = (
            k1 * (ca[0] - cb[0]) + k2 * (ca[1] - cb[1]) + k3 * (ca[2] - cb[2])
        )
        dense = sgrid.dkappa / TWO_PI_3 * complex(np.sum(np.exp(1j * phase)))
        assert got == pytest.approx(dense, abs=1e-12 / sgrid.dsigma)

    def test_quadrature_route_differs_by_excluded_term(self, sgrid):
        # Materialized localized amplitudes carry zeros on the k = 0 point,
        # so the generic quadrature misses exactly dkappa/(2pi)^3 relative
        # to the exact overlap.
        spec = LocalizedStateSpec(sgrid.event_at(8, 8, 8))
        chi = localized_amplitude(spec, sgrid)
        ip = inner_product(chi, chi)
        exact = overlap(spec, spec, sgrid)
        missing = sgrid.dkappa / TWO_PI_3
        assert complex(ip) == pytest.approx(exact - missing, rel=1e-12)


class TestProjection:
    def test_fast_path_matches_direct_sum(self, sgrid):
        rng = np.random.default_rng(31)
        psi = random_amplitude(sgrid, rng)
        field = project_all(psi)
        for idx in [(0, 0, 0), (3, 12, 7), (15, 1, 8)]:
            ev = sgrid.event_at(*idx)
            for lam, eps in [(1, 1), (2, -1)]:
                direct = project_point(psi, ev, lam, eps)
                assert field.channel(lam, eps)[idx] == pytest.approx(
                    direct, rel=1e-12, abs=1e-13
                )

    def test_localized_state_projects_to_delta(self, sgrid):
        # Consistency with overlap up to the excluded k = 0 term: the field
        # equals Kronecker/dsigma minus the uniform dkappa/(2pi)^3 ground.
        idx = (4, 9, 2)
        spec = LocalizedStateSpec(sgrid.event_at(*idx), lam=1, eps=1)
        chi = localized_amplitude(spec, sgrid)
        field = project_all(chi).channel(1, 1)
        background = sgrid.dkappa / TWO_PI_3
        expected = np.full(sgrid.sizes, -background, dtype=complex)
        expected[idx] += 1.0 / sgrid.dsigma
        assert np.allclose(field, expected, atol=1e-10 / sgrid.dsigma)

    def test_global_phase(self, sgrid, spacket):
        theta = 0.77
        rotated = np.exp(1j * theta) * spacket
        f0 = project_all(spacket)
        f1 = project_all(rotated)
        assert np.allclose(f1.values, np.exp(1j * theta) * f0.values, atol=1e-12)
        assert np.allclose(f1.density(), f0.density(), atol=1e-14)

    def test_channel_isometry(self, sgrid):
        rng = np.random.default_rng(8)
        psi = random_amplitude(sgrid, rng)
        field = project_all(psi)
        for lam in (1, 2):
            for eps in (1, -1):
                pos = float(np.sum(np.abs(field.channel(lam, eps)) ** 2)) * sgrid.dsigma
                spec = float(
                    np.sum(
                        sgrid.weights * np.abs(psi.channel(lam, eps)) ** 2
                    )
                )
                assert pos == pytest.approx(spec, rel=1e-12)


class TestDensities:
    def test_spacelike_density_normalizes(self, spacket):
        dens = spacelike_density(spacket)
        assert np.all(dens >= 0.0)
        total = float(np.sum(dens)) * spacket.grid.dsigma
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_wrong_plane_kind(self, spacket, tpacket):
        with pytest.raises(PlaneKindError):
            timelike_counting(spacket)
        with pytest.raises(PlaneKindError):
            spacelike_density(tpacket)

    def test_density_centroid_matches_direct_oracle(self):
        grid = HyperplaneGrid(Hyperplane.spacelike(0.0), (32, 32, 32), (0.8, 0.8, 0.8))
        dk = grid.dk[0]
        target = grid.event_at(18, 15, 17)
        psi = make_gaussian_packet(
            PacketSpec(
                center=(0.0, 0.0, 7.0 * dk),
                widths=(1.1 * dk,) * 3,
                origin_event=target,
            ),
            grid,
        )
        dens = spacelike_density(psi)
        # Fast path against the direct-sum oracle along a probe line.
        probe = [grid.event_at(i, 15, 17) for i in range(32)]
        amps = [abs(project_point(psi, ev, 1, 1)) ** 2 for ev in probe]
        assert np.allclose(dens[:, 15, 17], amps, rtol=1e-8, atol=1e-12 * np.max(dens))
        # Channel-summed centroid sits at the launch event (real spectral
        # envelope => symmetric modulus), up to periodic-wrap leakage.
        w = dens / np.sum(dens)
        centroid = [
            float(np.sum(w * np.broadcast_to(ax.reshape(s), grid.sizes)))
            for ax, s in zip(grid.x_axes, [(-1, 1, 1), (1, -1, 1), (1, 1, -1)])
        ]
        for c, e in zip(centroid, grid.onplane_coords(target)):
            assert c == pytest.approx(e, abs=1e-6)

    def test_density_propagates_forward_in_time(self):
        # The same mode coefficients read on a later-time plane describe the
        # state evolved to that time: a +x3 packet moves forward by ~c*a.
        # This pins the sign of the temporal phase, which norm-based checks
        # cannot see.
        base = HyperplaneGrid(Hyperplane.spacelike(0.0), (32, 32, 32), (0.8, 0.8, 0.8))
        dk = base.dk[0]
        psi0 = make_gaussian_packet(
            PacketSpec(
                center=(0.0, 0.0, 7.0 * dk),
                widths=(1.1 * dk,) * 3,
                origin_event=FourVector(0.0, 0.0, 0.0, 0.0),
            ),
            base,
        )

        def centroid_z(dens):
            z = base.x_axes[2].reshape(1, 1, -1)
            return float(np.sum(dens * z) / np.sum(dens))

        a = 3.0
        later = HyperplaneGrid(Hyperplane.spacelike(a), (32, 32, 32), (0.8, 0.8, 0.8))
        psi_a = PhotonAmplitude(later, psi0.values, pol_axis=psi0.pol_axis)
        z0 = centroid_z(spacelike_density(psi0))
        z1 = centroid_z(spacelike_density(psi_a))
        # Spectral oracle for the centroid speed: the projection weight is
        # |psi|^2/omega per mode, so the centroid moves at the
        # measure-weighted mean of k3/omega (slightly below c from the
        # transverse spread).
        w = base.weights
        dens_k = np.sum(np.abs(psi0.values) ** 2, axis=(0, 1)) * w
        k3 = np.broadcast_to(base.k_mesh[2], base.sizes)
        v_mode = np.zeros(base.sizes)
        np.divide(k3, base.abs_k_sigma, out=v_mode, where=base.propagating)
        v_expected = float(np.sum(dens_k * v_mode) / np.sum(dens_k))
        assert z0 == pytest.approx(0.0, abs=1e-6)
        assert 0.9 < v_expected <= 1.0
        assert (z1 - z0) / a == pytest.approx(v_expected, abs=1e-3)

    def test_counting_total_probability(self, tpacket):
        dens = timelike_counting(tpacket)
        total = float(np.sum(dens)) * tpacket.grid.dsigma
        assert total == pytest.approx(1.0, abs=1e-3)

    def test_density_invariant_under_lambda_remixing(self, sgrid):
        # A k-independent unitary remix of the polarization channels leaves
        # the lambda-summed density unchanged.
        rng = np.random.default_rng(23)
        psi = random_amplitude(sgrid, rng)
        th, ph = 0.61, -1.3
        u = np.array(
            [
                [np.cos(th), -np.sin(th) * np.exp(1j * ph)],
                [np.sin(th) * np.exp(-1j * ph), np.cos(th)],
            ]
        )
        mixed_vals = np.einsum("ab,bexyz->aexyz", u, psi.values)
        mixed = psi.with_values(mixed_vals)
        d0 = spacelike_density(psi)
        d1 = spacelike_density(mixed)
        assert np.allclose(d1, d0, atol=1e-13 * np.max(d0))

    def test_counting_mirror_map(self):
        # eps = -1 state at plane b equals the mirrored eps = +1 state at
        # plane -b: exp(i k3 b) phases coincide.
        for b in (0.0, 0.9):
            gplus = HyperplaneGrid(Hyperplane.timelike(-b), (16, 16, 16), (0.8, 0.8, 0.8))
            gminus = HyperplaneGrid(Hyperplane.timelike(b), (16, 16, 16), (0.8, 0.8, 0.8))
            dk = gplus.dk[0]
            spec_p = PacketSpec(center=(0.0, 0.0, 4.0 * dk), widths=(0.4 * dk,) * 3, eps=1)
            spec_m = PacketSpec(center=(0.0, 0.0, 4.0 * dk), widths=(0.4 * dk,) * 3, eps=-1)
            dens_p = timelike_counting(make_gaussian_packet(spec_p, gplus))
            dens_m = timelike_counting(make_gaussian_packet(spec_m, gminus))
            assert np.allclose(dens_m, dens_p, atol=1e-12 * np.max(dens_p))

    def test_arrival_time_centroid_ray_optics(self):
        # Launch a narrowband packet from (t=0, x3=z0) toward the counting
        # plane at x3 = b; stationary phase predicts arrival at (b-z0)/cos0.
        grid = HyperplaneGrid(Hyperplane.timelike(4.0), (8, 8, 64), (2.0, 2.0, 0.55))
        dk0 = grid.dk[2]
        c0 = 10.0 * dk0
        psi = make_gaussian_packet(
            PacketSpec(
                center=(0.0, 0.0, c0),
                widths=(0.35 * grid.dk[0], 0.35 * grid.dk[1], 1.1 * dk0),
                origin_event=FourVector(0.0, 0.0, 0.0, 0.0),
            ),
            grid,
        )
        dens = timelike_counting(psi)
        t_ax = grid.x_axes[2]
        marg = np.sum(dens, axis=(0, 1))
        t_mean = float(np.sum(marg * t_ax) / np.sum(marg))
        expected = 4.0  # (b - z0) / cos(theta=0) = 4.0
        assert t_mean == pytest.approx(expected, rel=0.01)


class TestCompleteness:
    @pytest.mark.parametrize("kind", ["spacelike", "timelike"])
    def test_random_pairs(self, kind, sgrid, tgrid):
        grid = sgrid if kind == "spacelike" else tgrid
        rng = np.random.default_rng(100)
        for _ in range(5):
            psi = random_amplitude(grid, rng, min_abs_k_sigma=1e-3)
            noise = random_amplitude(grid, rng, min_abs_k_sigma=1e-3)
            phi = (psi + 0.7 * noise) * (1.0 / 1.3)
            assert completeness_defect(phi, psi) <= 1e-12

    def test_self_pair(self, spacket):
        assert completeness_defect(spacket, spacket) <= 1e-12

    def test_orthogonal_channels_absolute_defect(self, sgrid):
        rng = np.random.default_rng(4)
        from photonloc.states import channel_view

        psi = random_amplitude(sgrid, rng)
        a = channel_view(psi, 1, 1)
        b = channel_view(psi, 2, -1)
        assert completeness_defect(a, b) <= 1e-12


class TestPotentialOfLocalized:
    def test_not_localized(self, sgrid):
        spec = LocalizedStateSpec(sgrid.event_at(8, 8, 8))
        field = potential_of_localized(spec, sgrid)
        mag = field.magnitude()
        peak = float(np.max(mag))
        assert np.all(np.isfinite(mag))
        # Support well beyond 4 cells from the localization point.
        assert mag[8, 8, 12] > 1e-6 * peak
        assert mag[14, 8, 8] > 1e-6 * peak

    def test_time_component_zero(self, sgrid):
        spec = LocalizedStateSpec(sgrid.event_at(8, 8, 8))
        field = potential_of_localized(spec, sgrid)
        assert np.max(np.abs(field.values[0])) == 0.0

    def test_translation_covariance(self, sgrid):
        f0 = potential_of_localized(LocalizedStateSpec(sgrid.event_at(8, 8, 8)), sgrid)
        f1 = potential_of_localized(LocalizedStateSpec(sgrid.event_at(8, 8, 10)), sgrid)
        # Field depends only on x - x': shifted copies coincide on the torus.
        rolled = np.roll(f0.values, 2, axis=3)
        assert np.allclose(f1.values, rolled, atol=1e-10 * np.max(np.abs(f0.values)))

    def test_grid_path_matches_event_path(self, sgrid):
        spec = LocalizedStateSpec(sgrid.event_at(8, 8, 8))
        field = potential_of_localized(spec, sgrid, axis=(0.0, 1.0, 0.0))
        events = [sgrid.event_at(2, 5, 8), sgrid.event_at(12, 8, 3)]
        direct = potential_of_localized(spec, sgrid, axis=(0.0, 1.0, 0.0), events=events)
        for ev, row in zip([(2, 5, 8), (12, 8, 3)], direct):
            assert np.allclose(field.values[:, ev[0], ev[1], ev[2]], row, rtol=1e-10,
                               atol=1e-12 * np.max(np.abs(field.values)))

    def test_profile_and_fit(self, sgrid):
        spec = LocalizedStateSpec(sgrid.event_at(8, 8, 8))
        field = potential_of_localized(spec, sgrid)
        r, m = radial_magnitude_profile(field)
        assert len(r) >= 5
        slope = fit_power_law(r, m, r[0], r[-1])
        assert -4.0 < slope < 0.0  # decaying tail, exponent recorded not asserted


class TestTransport:
    def test_zero_shift_reproduces_projection(self, tpacket):
        moved = transport_amplitude(tpacket, 0.0)
        assert np.allclose(moved.values, tpacket.values, atol=0.0)
        ev = tpacket.grid.event_at(3, 7, 9)
        via = plane_to_plane_amplitude(tpacket, ev, 1, 1)
        direct = project_point(tpacket, ev, 1, 1)
        assert via == pytest.approx(direct, rel=1e-12, abs=1e-15)

    def test_single_evanescent_mode_decay(self):
        grid = HyperplaneGrid(Hyperplane.timelike(0.0), (10, 10, 10), (2 * math.pi / 10,) * 3)
        # dk = 1: mode (k1, k2, k0) = (3, 4, 0) has k3 = 5i exactly.
        psi = single_mode_amplitude(grid, (3, 4, 0), lam=1, eps=1, unit_norm=False)
        k3 = grid.k_normal(1)[3, 4, 0]
        assert k3 == 5.0j
        ev_on = grid.event_at(2, 2, 2)
        ev_off = FourVector(ev_on.t, ev_on.x1, ev_on.x2, 1.0)
        a_on = plane_to_plane_amplitude(psi, ev_on, 1, 1)
        a_off = plane_to_plane_amplitude(psi, ev_off, 1, 1)
        assert abs(a_off) == pytest.approx(abs(a_on) * math.exp(-5.0), rel=1e-12)

    def test_growth_rejected(self):
        grid = HyperplaneGrid(Hyperplane.timelike(0.0), (10, 10, 10), (2 * math.pi / 10,) * 3)
        psi = single_mode_amplitude(grid, (3, 4, 0), lam=1, eps=1, unit_norm=False)
        with pytest.raises(TransportDirectionError):
            transport_amplitude(psi, -1.0)
        with pytest.raises(TransportDirectionError):
            plane_to_plane_amplitude(psi, FourVector(0.0, 0.0, 0.0, -1.0), 1, 1)

    def test_propagating_norm_conserved(self, tpacket):
        moved = transport_amplitude(tpacket, 3.7)
        n0 = inner_product(tpacket, tpacket).real
        n1 = inner_product(moved, moved).real
        assert abs(n1 - n0) <= 1e-10

    def test_large_shift_stays_finite(self, tpacket):
        # Unpopulated growing-side evanescent modes must not poison the
        # transport with inf * 0 for large continuations.
        moved = transport_amplitude(tpacket, 500.0)
        assert np.all(np.isfinite(moved.values.view(float)))
        n0 = inner_product(tpacket, tpacket).real
        assert inner_product(moved, moved).real == pytest.approx(n0, abs=1e-10)
        ev = moved.grid.event_at(2, 3, 4)
        assert np.isfinite(abs(plane_to_plane_amplitude(tpacket, ev, 1, 1)))

    def test_composition(self, tpacket):
        one = transport_amplitude(transport_amplitude(tpacket, 1.3), 2.1)
        two = transport_amplitude(tpacket, 3.4)
        assert one.grid.plane.offset == pytest.approx(two.grid.plane.offset, abs=1e-14)
        assert np.allclose(one.values, two.values, atol=1e-12)

    def test_wrong_plane_kind(self, spacket):
        with pytest.raises(PlaneKindError):
            transport_amplitude(spacket, 1.0)


class TestCsv:
    def test_projection_export(self, tmp_path, sgrid):
        rng = np.random.default_rng(2)
        psi = random_amplitude(sgrid, rng)
        field = project_all(psi)
        p = tmp_path / "proj.csv"
        export_projection_csv(field, str(p))
        lines = p.read_text().splitlines()
        assert lines[0] == "x1,x2,x3_or_t,lambda,epsilon,re,im"
        assert len(lines) == 1 + 4 * sgrid.n_modes

    def test_density_export(self, tmp_path, spacket):
        dens = spacelike_density(spacket)
        p = tmp_path / "dens.csv"
        export_density_csv(spacket.grid, dens, str(p))
        lines = p.read_text().splitlines()
        assert lines[0] == "x1,x2,x3_or_t,density"
        total = sum(float(l.split(",")[3]) for l in lines[1:]) * spacket.grid.dsigma
        assert total == pytest.approx(1.0, abs=1e-9)
