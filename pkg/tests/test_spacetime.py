import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

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

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)
betas = st.floats(min_value=-0.99, max_value=0.99)


def vec(t, x1=0.0, x2=0.0, x3=0.0):
    return FourVector(t, x1, x2, x3)


four_vectors = st.builds(FourVector, finite, finite, finite, finite)


class TestContract:
    def test_metric_signature(self):
        assert contract(vec(1), vec(1)) == -1.0

    def test_lightlike_dispersion(self):
        w = 3.7
        assert contract(vec(w, 0, 0, w), vec(w, 0, 0, w)) == 0.0

    def test_direct_arithmetic(self):
        assert contract(vec(2, 1), vec(3, 4)) == -2.0

    @given(four_vectors, four_vectors)
    def test_symmetry(self, a, b):
        assert contract(a, b) == contract(b, a)


class TestBoostVector:
    def test_pure_time_vector(self):
        out = boost_vector(vec(2), BoostParameters(0.6))
        assert out.t == pytest.approx(2.5, abs=1e-14)
        assert out.x3 == pytest.approx(1.5, abs=1e-14)
        assert out.x1 == 0.0 and out.x2 == 0.0

    @given(four_vectors)
    def test_identity_boost(self, x):
        out = boost_vector(x, BoostParameters(0.0))
        assert out == x

    def test_lightlike_stays_lightlike(self):
        out = boost_vector(vec(1, 0, 0, 1), BoostParameters(0.6))
        assert out.t == pytest.approx(2.0, abs=1e-12)
        assert out.x3 == pytest.approx(2.0, abs=1e-12)
        assert classify_interval(out) == LIGHTLIKE

    def test_rejects_superluminal(self):
        with pytest.raises(ValueError):
            BoostParameters(1.0)
        with pytest.raises(ValueError):
            BoostParameters(-1.2)

    @settings(max_examples=60)
    @given(four_vectors, four_vectors, betas)
    def test_contraction_invariance(self, a, b, beta):
        bp = BoostParameters(beta)
        before = contract(a, b)
        after = contract(boost_vector(a, bp), boost_vector(b, bp))
        # Scale of the terms entering the contraction after boosting; the
        # difference is pure rounding relative to this.
        mag = lambda v: math.sqrt(sum(c * c for c in v.as_tuple()))
        scale = max(1.0, bp.gamma ** 2 * mag(a) * mag(b))
        assert abs(after - before) <= 1e-12 * scale

    @settings(max_examples=60)
    @given(four_vectors, betas, betas)
    def test_velocity_addition(self, x, b1, b2):
        stepped = boost_vector(boost_vector(x, BoostParameters(b1)), BoostParameters(b2))
        combined = boost_vector(x, compose_boosts(BoostParameters(b1), BoostParameters(b2)))
        for p, q in zip(stepped.as_tuple(), combined.as_tuple()):
            assert abs(p - q) <= 1e-12 * max(1.0, abs(p))


class TestBoostParameters:
    @given(betas)
    def test_gamma_identity(self, beta):
        b = BoostParameters(beta)
        assert b.gamma >= 1.0
        assert abs(b.gamma ** 2 * (1 - beta ** 2) - 1.0) <= 1e-12 * b.gamma ** 2


class TestClassify:
    def test_cases(self):
        assert classify_interval(vec(1)) == TIMELIKE
        assert classify_interval(vec(1, 0, 0, 1)) == LIGHTLIKE
        assert classify_interval(vec(0, 0, 0, 1)) == SPACELIKE


class TestWorldLineAngle:
    def test_zero(self):
        assert world_line_angle(BoostParameters(0.0)) == 0.0

    def test_arctan(self):
        assert world_line_angle(BoostParameters(0.6)) == pytest.approx(
            0.5404195002705842, abs=1e-15
        )

    def test_light_cone_limit(self):
        # As beta -> 1 the world line approaches the light cone at pi/4.
        assert world_line_angle(BoostParameters(1 - 1e-12)) == pytest.approx(
            math.pi / 4, abs=1e-9
        )


class TestHyperplane:
    def test_canonical_planes(self):
        s = Hyperplane.spacelike(2.0)
        t = Hyperplane.timelike(1.0)
        assert s.kind == SPACELIKE and t.kind == TIMELIKE
        assert contract(s.normal, s.normal) == -1.0
        assert contract(t.normal, t.normal) == 1.0
        assert s.contains(vec(2.0, 5.0, -3.0, 7.0))
        assert t.contains(vec(9.0, 5.0, -3.0, 1.0))

    def test_kind_consistency_enforced(self):
        with pytest.raises(ValueError):
            Hyperplane(FourVector(1.0, 0, 0, 0), 0.0, TIMELIKE)
        with pytest.raises(ValueError):
            Hyperplane(FourVector(0.3, 0, 0, 0.4), 0.0, SPACELIKE)

    def test_boosted_spacelike_normal(self):
        out = boost_hyperplane(Hyperplane.spacelike(2.0), BoostParameters(0.6))
        assert out.normal.t == pytest.approx(1.25, abs=1e-14)
        assert out.normal.x3 == pytest.approx(0.75, abs=1e-14)
        assert out.kind == SPACELIKE

    def test_boosted_timelike_normal(self):
        out = boost_hyperplane(Hyperplane.timelike(1.0), BoostParameters(0.6))
        assert out.normal.t == pytest.approx(0.75, abs=1e-14)
        assert out.normal.x3 == pytest.approx(1.25, abs=1e-14)
        assert out.kind == TIMELIKE

    def test_identity_boost(self):
        p = Hyperplane.spacelike(3.0)
        out = boost_hyperplane(p, BoostParameters(0.0))
        assert out == p

    def test_boost_describes_same_events(self):
        # An event on the original plane, boosted, lies on the boosted plane.
        b = BoostParameters(0.7)
        for plane in (Hyperplane.spacelike(2.0), Hyperplane.timelike(-1.5)):
            out = boost_hyperplane(plane, b)
            for ev in (vec(2.0, 1.0, -2.0, 4.0), vec(-3.0, 0.5, 0.0, 2.0)):
                on_plane = (
                    ev if plane.kind == SPACELIKE else vec(ev.t, ev.x1, ev.x2, plane.offset)
                )
                if plane.kind == SPACELIKE:
                    on_plane = vec(plane.offset, ev.x1, ev.x2, ev.x3)
                assert plane.contains(on_plane)
                assert out.contains(boost_vector(on_plane, b), tol=1e-10)

    @given(betas)
    def test_unit_norm_and_kind_preserved(self, beta):
        b = BoostParameters(beta)
        for plane in (Hyperplane.spacelike(0.5), Hyperplane.timelike(2.0)):
            out = boost_hyperplane(plane, b)
            nn = contract(out.normal, out.normal)
            assert abs(abs(nn) - 1.0) <= 1e-10 * b.gamma ** 2
            assert out.kind == plane.kind

    @given(betas)
    def test_round_trip(self, beta):
        b = BoostParameters(beta)
        plane = Hyperplane.spacelike(2.0)
        back = boost_hyperplane(boost_hyperplane(plane, b), b.inverse())
        assert back.normal.t == pytest.approx(1.0, abs=1e-10)
        assert back.normal.x3 == pytest.approx(0.0, abs=1e-10)
        assert back.offset == pytest.approx(2.0, abs=1e-10)
