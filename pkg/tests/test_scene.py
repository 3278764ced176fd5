import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from locspoof import (Position2D, Scene, ShiftPair, default_scene, locations_from_params,
                      params_from_locations, pathloss_gains, paths_from_scene, scene_params,
                      shift_params, wrap_interval)
from locspoof.errors import DegenerateGeometryError, InvalidIntervalError

from conftest import T_S
from helpers import random_scene

WINDOW = 16 * T_S


class TestWrapInterval:
    def test_wraps_above_interval(self):
        # one full period above: plain subtraction
        assert_allclose(wrap_interval(0.5486744, 0.0, 0.5333333), 0.5486744 - 0.5333333, rtol=0, atol=1e-15)

    def test_identity_inside_interval(self):
        assert wrap_interval(0.25, 0.0, 0.5333333) == 0.25

    def test_sine_wrap_case(self):
        assert_allclose(wrap_interval(1.288345, -1.0, 1.0), 1.288345 - 2.0, rtol=0, atol=1e-15)

    def test_invalid_interval(self):
        with pytest.raises(InvalidIntervalError):
            wrap_interval(0.3, 1.0, 1.0)
        with pytest.raises(InvalidIntervalError):
            wrap_interval(0.3, 2.0, 1.0)

    def test_boundary_maps_to_upper_end(self):
        assert wrap_interval(0.0, 0.0, 2.0) == 2.0
        assert wrap_interval(2.0, 0.0, 2.0) == 2.0
        assert wrap_interval(-2.0, 0.0, 2.0) == 2.0

    def test_range_and_periodicity(self):
        rng = np.random.default_rng(42)
        for _ in range(500):
            t1 = rng.uniform(-5, 5)
            t2 = t1 + rng.uniform(0.1, 10)
            x = rng.uniform(-50, 50)
            r = wrap_interval(x, t1, t2)
            assert t1 < r <= t2
            m = rng.integers(-3, 4)
            assert_allclose(wrap_interval(x + m * (t2 - t1), t1, t2), r, rtol=0, atol=1e-12)

    def test_array_input(self):
        out = wrap_interval(np.array([0.25, 0.6]), 0.0, 0.5)
        assert_allclose(out, [0.25, 0.1], atol=1e-12)


class TestPathsFromScene:
    def test_reference_scene_values(self, scene):
        p = paths_from_scene(scene)
        # direct path: |receiver - alice| = sqrt(74) m at arctan(5/7)
        assert_allclose(p.delays_us[0], math.sqrt(74.0) / 300.0, rtol=1e-12)
        assert_allclose(p.aods_rad[0], math.atan(5.0 / 7.0), rtol=1e-12)
        assert_allclose(p.delays_us[0], 0.028674417556809, rtol=1e-9)
        assert_allclose(p.aods_rad[0], 0.620249485982822, rtol=1e-9)

    def test_scatterer_paths(self, scene):
        p = paths_from_scene(scene)
        # scatterer [8.87, -6.05] is path 1, [7.44, 8.53] is path 2
        assert_allclose(p.delays_us[1], 0.065124339291360, rtol=1e-9)
        assert_allclose(p.aods_rad[1], -0.800497686892036, rtol=1e-9)
        assert_allclose(p.delays_us[2], 0.046589760493277, rtol=1e-9)
        assert_allclose(p.aods_rad[2], 1.090871085826556, rtol=1e-9)

    def test_degenerate_geometry_raises(self):
        with pytest.raises(DegenerateGeometryError):
            Scene(alice=Position2D(3.0, 0.0), receiver=Position2D(10.0, 5.0),
                  scatterers=(Position2D(3.0, 0.0),))


class TestPathlossGains:
    def test_direct_amplitude(self, scene):
        gains = pathloss_gains(scene)
        d0 = scene.alice.distance_to(scene.receiver)
        assert_allclose(abs(gains[0]), scene.wavelength_m / (4 * math.pi * d0), rtol=1e-12)
        assert_allclose(abs(gains[0]), 4.62534658e-05, rtol=1e-6)

    def test_amplitude_ratio_is_distance_ratio(self, scene):
        gains = pathloss_gains(scene, reflection_loss=1.0)
        p = paths_from_scene(scene)
        assert_allclose(abs(gains[1]) / abs(gains[0]), p.delays_us[0] / p.delays_us[1], rtol=1e-12)

    def test_reflection_loss_scales_scattered_paths_only(self, scene):
        full = pathloss_gains(scene, 1.0)
        lossy = pathloss_gains(scene, 0.5)
        assert_allclose(lossy[0], full[0], rtol=0)
        assert_allclose(lossy[1:], 0.5 * full[1:], rtol=1e-15)

    def test_decay_with_distance(self):
        base = default_scene()
        amps = []
        for x in (20.0, 40.0, 80.0):
            s = Scene(alice=Position2D(3.0, 0.0), receiver=Position2D(x, 5.0))
            amps.append(abs(pathloss_gains(s)[0]))
        assert amps[0] > amps[1] > amps[2]

    def test_phase_is_wrapped_carrier_phase(self, scene):
        gains = pathloss_gains(scene)
        p = paths_from_scene(scene)
        dist = scene.c * p.delays_us[0]
        expected = wrap_interval(-2 * math.pi * dist / scene.wavelength_m, -math.pi, math.pi)
        assert_allclose(np.angle(gains[0]), expected, atol=1e-12)

    def test_bad_reflection_loss(self, scene):
        with pytest.raises(ValueError):
            pathloss_gains(scene, 0.0)


class TestShiftParams:
    def test_delay_addition_without_wrap(self, scene, params):
        shifted = shift_params(params, ShiftPair(T_S, 0.0), 16, T_S)
        assert_allclose(shifted.delays_us[0], 0.062007750890142, rtol=1e-9)

    def test_sine_wrap_past_one(self, scene, params):
        shifted = shift_params(params, ShiftPair(T_S, 0.25 * np.pi), 16, T_S)
        # sin(theta_0) + sin(pi/4) > 1 wraps to the negative branch
        assert_allclose(shifted.aods_rad[0], -0.791851217282974, rtol=1e-9)
        assert_allclose(np.sin(shifted.aods_rad[0]),
                        np.sin(params.aods_rad[0]) + np.sin(0.25 * np.pi) - 2.0, rtol=1e-12)

    def test_zero_shift_is_identity(self, params):
        shifted = shift_params(params, ShiftPair(0.0, 0.0), 16, T_S)
        assert_allclose(shifted.delays_us, params.delays_us, rtol=0, atol=0)
        assert_allclose(shifted.aods_rad, params.aods_rad, rtol=0, atol=1e-15)
        assert shifted.gains is params.gains

    def test_full_period_shift_is_identity(self, params):
        for m in (1, -2, 3):
            shifted = shift_params(params, ShiftPair(m * WINDOW, 2 * np.pi), 16, T_S)
            assert_allclose(shifted.delays_us, params.delays_us, atol=1e-12)
            assert_allclose(shifted.aods_rad, params.aods_rad, atol=1e-12)


class TestLocationsFromParams:
    def test_round_trip_reference_scene(self, scene, params):
        locs = locations_from_params(params, scene.receiver, scene.c)
        assert locs.alice.distance_to(scene.alice) < 1e-9
        for got, want in zip(locs.scatterers, scene.scatterers):
            assert got.distance_to(want) < 1e-9
        assert locs.k_min == 0

    def test_round_trip_random_scenes(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            s = random_scene(rng)
            p = paths_from_scene(s)
            locs = locations_from_params(p, s.receiver, s.c)
            assert locs.alice.distance_to(s.alice) < 1e-9
            for got, want in zip(locs.scatterers, s.scatterers):
                assert got.distance_to(want) < 1e-9

    def test_shifted_parameters_move_alice(self, scene, params):
        shifted = shift_params(params, ShiftPair(T_S, 0.25 * np.pi), 16, T_S)
        locs = locations_from_params(shifted, scene.receiver, scene.c)
        assert_allclose([locs.alice.x, locs.alice.y], [-3.068674679827936, 18.238438250043603], rtol=1e-6)
        assert_allclose(locs.alice.distance_to(scene.alice), 19.2215879249046, rtol=1e-9)

    def test_delay_only_shift_moves_along_bearing(self, scene, params):
        for dtau in (0.001, 0.01, 0.02):
            shifted = shift_params(params, ShiftPair(dtau, 0.0), 16, T_S)
            locs = locations_from_params(shifted, scene.receiver, scene.c)
            assert_allclose(locs.alice.distance_to(scene.alice), scene.c * dtau, rtol=1e-9)

    def test_single_path_scene(self):
        s = Scene(alice=Position2D(3.0, 0.0), receiver=Position2D(10.0, 5.0))
        p = paths_from_scene(s)
        locs = locations_from_params(p, s.receiver, s.c)
        assert locs.scatterers == ()
        assert locs.alice.distance_to(s.receiver) == pytest.approx(s.c * p.delays_us[0], rel=1e-12)

    def test_forward_map_inverts(self, scene, params):
        locs = locations_from_params(params, scene.receiver, scene.c)
        fwd = params_from_locations(locs, scene.receiver, scene.c)
        assert_allclose(fwd.delays_us, params.delays_us, atol=1e-12)
        assert_allclose(fwd.aods_rad, params.aods_rad, atol=1e-12)

    def test_degenerate_ellipse_raises(self, scene):
        from locspoof import PathParams
        p = paths_from_scene(scene)
        tau0, th0 = p.delays_us[0], p.aods_rad[0]
        # a scattered path whose delay equals the direct distance along the direct
        # bearing makes the ellipse tangent: denominator exactly zero
        bad = PathParams(np.array([tau0, tau0]), np.array([th0, th0]))
        with pytest.raises(DegenerateGeometryError):
            locations_from_params(bad, scene.receiver, scene.c)


class TestSceneValidation:
    def test_narrowband_warning(self):
        with pytest.warns(UserWarning):
            Scene(alice=Position2D(0.0, 0.0), receiver=Position2D(10.0, 0.0),
                  carrier_freq_ghz=1.0, bandwidth_mhz=30.0)

    def test_serialization_round_trip(self, scene):
        from locspoof.scene import scene_from_text, scene_to_text
        text = scene_to_text(scene)
        again = scene_from_text(text)
        assert again == scene
        assert scene_to_text(again) == text

    def test_unknown_scene_key_rejected(self):
        from locspoof.scene import scene_from_text
        with pytest.raises(ValueError, match="unknown"):
            scene_from_text("alice = 0 0\nreceiver = 1 1\nbogus = 3\n")
