import math

import numpy as np
import pytest

from satpeb.constants import EARTH_RADIUS_M, MU_EARTH
from satpeb.geometry import (AnchorSet, Geodetic, OrbitSpec, SatRole,
                             destination_point, ecef_to_enu, ecef_to_geodetic,
                             elevation_angle, enu_to_ecef, geodetic_to_ecef,
                             ground_track_orbit, hex_constellation,
                             make_virtual_anchors, propagate_circular_orbit)


class TestGeodeticEcef:
    @pytest.mark.parametrize("lat,lon,alt,expected", [
        (0.0, 0.0, 0.0, (6371000.0, 0.0, 0.0)),
        (math.pi / 2, 0.0, 0.0, (0.0, 0.0, 6371000.0)),
        (0.0, math.pi / 2, 600e3, (0.0, 6971000.0, 0.0)),
    ])
    def test_reference_points(self, lat, lon, alt, expected):
        p = geodetic_to_ecef(Geodetic(lat, lon, alt))
        assert np.allclose(p, expected, atol=1e-6)

    def test_round_trip(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            g = Geodetic(rng.uniform(-math.pi / 2, math.pi / 2),
                         rng.uniform(-math.pi, math.pi),
                         rng.uniform(0.0, 2e6))
            back = geodetic_to_ecef(ecef_to_geodetic(geodetic_to_ecef(g)))
            assert np.linalg.norm(back - geodetic_to_ecef(g)) < 1e-6

    def test_latitude_range_enforced(self):
        with pytest.raises(ValueError):
            Geodetic(2.0, 0.0, 0.0)

    def test_longitude_wraps(self):
        g = Geodetic(0.1, math.pi + 0.25, 0.0)
        assert -math.pi <= g.lon_rad < math.pi


class TestEnu:
    def test_origin_maps_to_zero(self):
        origin = Geodetic(0.4, -1.2, 0.0)
        assert np.allclose(ecef_to_enu(geodetic_to_ecef(origin), origin), 0.0,
                           atol=1e-9)

    def test_radial_point_is_up(self):
        origin = Geodetic(0.7, 0.3, 0.0)
        above = geodetic_to_ecef(Geodetic(0.7, 0.3, 1000.0))
        assert np.allclose(ecef_to_enu(above, origin), [0.0, 0.0, 1000.0],
                           atol=1e-6)

    def test_round_trip_and_rigidity(self):
        rng = np.random.default_rng(11)
        origin = Geodetic(-0.3, 2.1, 0.0)
        for _ in range(100):
            enu = rng.uniform(-5e5, 5e5, 3)
            back = ecef_to_enu(enu_to_ecef(enu, origin), origin)
            assert np.linalg.norm(back - enu) < 1e-6
        a = rng.uniform(-1e5, 1e5, 3)
        b = rng.uniform(-1e5, 1e5, 3)
        d_ecef = np.linalg.norm(enu_to_ecef(a, origin) - enu_to_ecef(b, origin))
        assert d_ecef == pytest.approx(np.linalg.norm(a - b), rel=1e-12)


class TestOrbit:
    def test_epoch_state_matches_spec(self):
        spec = OrbitSpec(600e3, math.radians(53.0), raan_rad=0.7, arg_lat0_rad=0.2)
        s = propagate_circular_orbit(spec, 0.0)
        assert s.time_s == 0.0
        assert np.linalg.norm(s.position) == pytest.approx(spec.radius_m, abs=1e-6)

    def test_speed_at_600km(self):
        # vis-viva for the circular orbit
        spec = OrbitSpec(600e3, math.pi / 2)
        expected = math.sqrt(MU_EARTH / (EARTH_RADIUS_M + 600e3))
        s = propagate_circular_orbit(spec, 123.4)
        assert np.linalg.norm(s.velocity) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(7.56e3, rel=1e-2)

    def test_full_period_returns(self):
        spec = OrbitSpec(780e3, math.radians(86.4), raan_rad=-0.4, arg_lat0_rad=1.1)
        period = 2.0 * math.pi / spec.angular_rate
        s0 = propagate_circular_orbit(spec, 0.0)
        s1 = propagate_circular_orbit(spec, period)
        assert np.linalg.norm(s1.position - s0.position) < 1e-3

    def test_state_invariants(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            spec = OrbitSpec(rng.uniform(400e3, 2e6),
                             rng.uniform(0, math.pi),
                             rng.uniform(-math.pi, math.pi),
                             rng.uniform(-math.pi, math.pi))
            s = propagate_circular_orbit(spec, rng.uniform(-5000, 5000))
            r = np.linalg.norm(s.position)
            assert abs(r - spec.radius_m) < 1.0
            cos_angle = s.position @ s.velocity / (r * np.linalg.norm(s.velocity))
            assert abs(cos_angle) < 1e-6
            assert abs(np.linalg.norm(s.velocity) - spec.speed) < 1e-3

    def test_radius_constant_over_time(self):
        spec = OrbitSpec(600e3, 1.0, 0.5, -0.2)
        radii = [np.linalg.norm(propagate_circular_orbit(spec, t).position)
                 for t in np.linspace(0, 6000, 40)]
        assert max(radii) - min(radii) < 1e-3


class TestElevation:
    def test_overhead_is_90_degrees(self):
        ue = geodetic_to_ecef(Geodetic(0.3, 0.5, 0.0))
        sat = geodetic_to_ecef(Geodetic(0.3, 0.5, 600e3))
        assert elevation_angle(ue, sat) == pytest.approx(math.pi / 2, abs=1e-9)

    def test_horizontal_plane_is_zero(self):
        ue = geodetic_to_ecef(Geodetic(0.0, 0.0, 0.0))
        sat = ue + np.array([0.0, 4e5, 0.0])  # tangent direction at the equator
        assert elevation_angle(ue, sat) == pytest.approx(0.0, abs=1e-12)

    def test_far_side_is_negative(self):
        ue = geodetic_to_ecef(Geodetic(0.0, 0.0, 0.0))
        sat = geodetic_to_ecef(Geodetic(0.0, math.pi - 0.1, 600e3))
        assert elevation_angle(ue, sat) < 0.0

    def test_rotation_invariance(self):
        rng = np.random.default_rng(5)
        ue = geodetic_to_ecef(Geodetic(0.2, -0.8, 0.0))
        sat = geodetic_to_ecef(Geodetic(0.5, -0.6, 780e3))
        base = elevation_angle(ue, sat)
        for _ in range(20):
            # random rotation about the Earth center
            q = rng.standard_normal((3, 3))
            rot, _ = np.linalg.qr(q)
            if np.linalg.det(rot) < 0:
                rot[:, 0] = -rot[:, 0]
            assert elevation_angle(rot @ ue, rot @ sat) == pytest.approx(base, abs=1e-9)


class TestVirtualAnchors:
    def test_span_at_10s(self):
        # chord between the first and last anchors after a 10 s window
        spec = ground_track_orbit(Geodetic(0.0, 0.0, 0.0), 600e3)
        anchors = make_virtual_anchors(spec, 10.0, 10)
        span = np.linalg.norm(anchors.states[-1].position - anchors.states[0].position)
        expected = 2.0 * spec.radius_m * math.sin(spec.angular_rate * 10.0 / 2.0)
        assert span == pytest.approx(expected, rel=1e-12)
        assert span == pytest.approx(75.6e3, rel=1e-2)

    def test_two_anchors_sit_at_half_window(self):
        spec = ground_track_orbit(Geodetic(0.0, 0.0, 0.0), 600e3)
        anchors = make_virtual_anchors(spec, 8.0, 2)
        assert anchors.states[0].time_s == pytest.approx(-4.0)
        assert anchors.states[1].time_s == pytest.approx(4.0)

    def test_spans_scale_linearly(self):
        spec = ground_track_orbit(Geodetic(0.1, 0.2, 0.0), 600e3)

        def span(t):
            a = make_virtual_anchors(spec, t, 10)
            return np.linalg.norm(a.states[-1].position - a.states[0].position)

        assert span(10.0) / span(2.0) == pytest.approx(5.0, rel=1e-4)

    def test_time_symmetry_about_epoch(self):
        # polar orbit through the equator: mirror anchors differ only in z sign
        spec = ground_track_orbit(Geodetic(0.0, 0.3, 0.0), 600e3)
        anchors = make_virtual_anchors(spec, 10.0, 10)
        for i in range(10):
            a = anchors.states[i].position
            b = anchors.states[9 - i].position.copy()
            b[2] = -b[2]
            assert np.linalg.norm(a - b) < 1e-6

    def test_requires_two_anchors(self):
        spec = ground_track_orbit(Geodetic(0.0, 0.0, 0.0), 600e3)
        with pytest.raises(ValueError):
            make_virtual_anchors(spec, 10.0, 1)
        with pytest.raises(ValueError):
            make_virtual_anchors(spec, 0.0, 10)


class TestHexConstellation:
    def test_structure(self):
        grid = hex_constellation(Geodetic(0.0, 0.0, 0.0), math.radians(13.0),
                                 math.radians(6.9), 780e3)
        assert len(grid) == 7
        assert grid.serving_index == 0
        assert grid.serving.role is SatRole.SERVING_LEO
        assert all(s.role is SatRole.NEIGHBOR_LEO for s in grid.states[1:])

    def test_same_row_chord_distance(self):
        grid = hex_constellation(Geodetic(0.0, 0.0, 0.0), math.radians(13.0),
                                 math.radians(6.9), 780e3)
        chord = np.linalg.norm(grid.states[1].position - grid.states[0].position)
        expected = 2.0 * (EARTH_RADIUS_M + 780e3) * math.sin(math.radians(6.5))
        assert chord == pytest.approx(expected, rel=1e-9)
        # published inter-satellite figure, accepted within 5 percent
        assert abs(chord - 1633.4e3) / 1633.4e3 < 0.05

    def test_single_parallel_when_lat_gap_zero(self):
        grid = hex_constellation(Geodetic(0.0, 0.0, 0.0), math.radians(10.0),
                                 0.0, 780e3)
        lats = [ecef_to_geodetic(s.position).lat_rad for s in grid.states]
        assert np.allclose(lats, 0.0, atol=1e-9)
        chord = np.linalg.norm(grid.states[2].position - grid.states[0].position)
        expected = 2.0 * (EARTH_RADIUS_M + 780e3) * math.sin(math.radians(5.0))
        assert chord == pytest.approx(expected, rel=1e-9)

    def test_all_states_satisfy_orbit_invariants(self):
        grid = hex_constellation(Geodetic(0.1, -0.4, 0.0), math.radians(13.0),
                                 math.radians(6.9), 780e3)
        for s in grid.states:
            r = np.linalg.norm(s.position)
            assert abs(r - (EARTH_RADIUS_M + 780e3)) < 1.0
            assert abs(s.position @ s.velocity) / (r * np.linalg.norm(s.velocity)) < 1e-6


class TestDestinationPoint:
    def test_north_bearing_increases_latitude(self):
        start = Geodetic(0.0, 0.0, 0.0)
        out = destination_point(start, 0.0, 0.01)
        assert out.lat_rad == pytest.approx(0.01, abs=1e-12)
        assert out.lon_rad == pytest.approx(0.0, abs=1e-12)

    def test_preserves_central_angle(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            start = Geodetic(rng.uniform(-1.0, 1.0), rng.uniform(-3.0, 3.0), 0.0)
            psi = rng.uniform(0.0, 0.5)
            out = destination_point(start, rng.uniform(0, 2 * math.pi), psi)
            a = geodetic_to_ecef(start) / EARTH_RADIUS_M
            b = geodetic_to_ecef(out) / EARTH_RADIUS_M
            assert math.acos(np.clip(a @ b, -1, 1)) == pytest.approx(psi, abs=1e-9)


def test_anchor_set_validation():
    spec = OrbitSpec(600e3, math.pi / 2)
    s = propagate_circular_orbit(spec, 0.0)
    with pytest.raises(ValueError):
        AnchorSet(states=(), serving_index=0)
    with pytest.raises(ValueError):
        AnchorSet(states=(s,), serving_index=3)
