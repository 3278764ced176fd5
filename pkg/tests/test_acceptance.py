"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the PASS
lines inline).  Tolerances are fixed here and nowhere else.
"""

import math
import time

import numpy as np
import pytest

from locspoof import (ExperimentConfig, KlGrid, Position2D, Scene, ShiftPair, SubArrayScene,
                      bound_sweep, crb_bob, desired_angle_shift, deviation_sweep,
                      generalized_fims, kl_pseudo_true_search, leakage_fim, lob_intersection,
                      mcrb, perceived_location, pilots, pseudo_true_locations, scene_params,
                      shift_params, signal_gradient, snr_to_sigma)
from locspoof.harness import run_experiment
from locspoof.mcrb import closed_form_bound, eve_parameter_covariance
from locspoof.robustness import subarray_aperture, true_subarray_aoas

from conftest import T_S
from helpers import central_difference, params_to_vector, random_scene, sample_fn_of_params

PASS = "ACCEPTANCE PASS {n:>2}: {what}"


def announce(n, what):
    print(PASS.format(n=n, what=what))


@pytest.fixture(scope="module")
def setup(scene, params, pilotset):
    return scene, params, pilotset


def shifted_for(scene, params, shift):
    return shift_params(params, shift, scene.n_subcarriers, scene.sampling_period_us)


def test_c01_mismatch_geometry(setup):
    scene, params, _ = setup
    start = time.perf_counter()
    targets = {0.0: 10.00, -0.25 * np.pi: 13.61, 0.25 * np.pi: 19.22}
    for dtheta, expected in targets.items():
        pseudo = pseudo_true_locations(shifted_for(scene, params, ShiftPair(T_S, dtheta)),
                                       scene.receiver, scene.c)
        dist = pseudo.locations.alice.distance_to(scene.alice)
        assert abs(dist - expected) / expected < 0.005, (dtheta, dist)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    announce(1, f"mismatch distances 10.00/13.61/19.22 m within 0.5% ({elapsed:.3f}s)")


def test_c02_large_delay_shift(setup):
    scene, params, pilotset = setup
    start = time.perf_counter()
    shift = ShiftPair(8 * T_S, 0.25 * np.pi)
    sigma = snr_to_sigma(scene, params, shift, pilotset, 0.0)
    rmse = mcrb(scene, shift, pilotset, sigma, params).rmse_eve
    elapsed = time.perf_counter() - start
    assert abs(rmse - 87.66) / 87.66 < 0.01, rmse
    assert elapsed < 1.0
    announce(2, f"rmse_eve {rmse:.2f} m at 8*T_s within 1% of 87.66 m ({elapsed:.3f}s)")


def test_c03_informed_receiver_bound(setup):
    scene, params, pilotset = setup
    shift = ShiftPair(T_S, 0.25 * np.pi)
    sigma0 = snr_to_sigma(scene, params, shift, pilotset, 0.0)
    rmse0 = crb_bob(scene, shift, pilotset, sigma0, params).rmse
    assert abs(rmse0 - 0.32) / 0.32 < 0.25, rmse0
    # the curve must fall one decade per 20 dB, within 2% per decade
    values = [crb_bob(scene, shift, pilotset, sigma0 * 10 ** (-snr / 20.0), params).rmse
              for snr in (0.0, 20.0, 40.0)]
    for a, b in zip(values, values[1:]):
        assert abs(math.log10(a / b) - 1.0) < 0.02
    announce(3, f"informed-receiver rmse {rmse0:.3f} m (target 0.32 +-25%), slope exact")


def test_c04_fifteen_db_gap(setup):
    scene, params, pilotset = setup
    start = time.perf_counter()
    shift = ShiftPair(15 * T_S, 0.25 * np.pi)
    reports = bound_sweep(scene, shift, pilotset, np.arange(-10.0, 40.1, 5.0), params)
    gaps = [20.0 * math.log10(r.rmse_eve / r.rmse_bob) for r in reports]
    elapsed = time.perf_counter() - start
    assert min(gaps) > 15.0, min(gaps)
    assert elapsed < 10.0
    announce(4, f"gap at 15*T_s stays above 15 dB (min {min(gaps):.2f} dB, {elapsed:.2f}s)")


def test_c05_mcrb_dominates_crb(setup):
    scene, params, pilotset = setup
    snrs = np.arange(-20.0, 40.1, 5.0)
    fixtures = [ShiftPair(T_S, 0.25 * np.pi), ShiftPair(T_S, 0.0), ShiftPair(T_S, -0.25 * np.pi),
                ShiftPair(8 * T_S, 0.25 * np.pi), ShiftPair(15 * T_S, 0.25 * np.pi)]
    for shift in fixtures:
        for report in bound_sweep(scene, shift, pilotset, snrs, params):
            assert report.mcrb_trace_alice >= report.crb_trace_alice
            sigma = snr_to_sigma(scene, params, shift, pilotset, report.snr_db)
            assert np.trace(mcrb(scene, shift, pilotset, sigma, params).psi) > np.trace(
                crb_bob(scene, shift, pilotset, sigma, params).covariance)
    zero = bound_sweep(scene, ShiftPair(0.0, 0.0), pilotset, snrs, params)
    for report in zero:
        assert abs(report.mcrb_trace_alice - report.crb_trace_alice) <= 1e-9 * report.crb_trace_alice
    announce(5, "misspecified bound dominates for every shifted fixture; equality at zero shift")


def test_c06_pseudo_true_against_kl_oracle(setup):
    scene, params, pilotset = setup
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 20:
        shift = ShiftPair(float(rng.uniform(-8, 8) * T_S), float(rng.uniform(-np.pi / 2, np.pi / 2)))
        shifted = shifted_for(scene, params, shift)
        sigma = snr_to_sigma(scene, params, shift, pilotset, 20.0)
        cov = eve_parameter_covariance(scene, shift, pilotset, sigma, params)
        closed = pseudo_true_locations(shifted, scene.receiver, scene.c)
        found = kl_pseudo_true_search(shifted, scene.receiver, cov, KlGrid(2.0, 0.01), scene.c)
        assert abs(found.alice.x - closed.locations.alice.x) <= 0.01
        assert abs(found.alice.y - closed.locations.alice.y) <= 0.01
        checked += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    announce(6, f"closed-form pseudo-true within one 1 cm cell of the KL search, 20 shifts ({elapsed:.1f}s)")


def test_c07_curvature_sandwich_cross_check(setup):
    scene, params, pilotset = setup
    shift = ShiftPair(T_S, 0.25 * np.pi)
    sigma = snr_to_sigma(scene, params, shift, pilotset, 0.0)
    a, b = generalized_fims(scene, shift, pilotset, sigma, params)
    sandwich = np.linalg.solve(a, np.linalg.solve(a, b).T).T
    estimation = mcrb(scene, shift, pilotset, sigma, params).estimation_part
    gap = np.linalg.norm(sandwich - estimation) / np.linalg.norm(estimation)
    assert gap < 1e-8, gap
    announce(7, f"A^-1 B A^-1 matches the inverse information (relative gap {gap:.2e})")


def test_c08_closed_form_consistency():
    scene = Scene(alice=Position2D(3.0, 0.0), receiver=Position2D(10.0, 5.0), scatterers=(),
                  n_tx=64, n_symbols=256)
    params = scene_params(scene)
    pilotset = pilots(256, scene.n_subcarriers, 64, seed=1)
    for shift in (ShiftPair(1e-4 * T_S, 1e-4), ShiftPair(T_S, 0.1), ShiftPair(0.9 * T_S, 0.25 * np.pi)):
        sigma = snr_to_sigma(scene, params, shift, pilotset, 20.0)
        full = mcrb(scene, shift, pilotset, sigma, params).trace_alice
        bound = closed_form_bound(scene, shift, sigma, n_symbols=256, params=params)
        assert not bound.unbounded
        assert abs(bound.value - full) / full < 0.10, (shift, bound.value, full)
    # the unbounded flag fires exactly on the degenerate angle family
    theta0 = float(params.aods_rad[0])
    degenerate = ShiftPair(0.0, desired_angle_shift(theta0))
    assert closed_form_bound(scene, degenerate, 0.01, params=params).unbounded
    for dtheta in (0.0, 0.2, -0.7, 1.2):
        assert not closed_form_bound(scene, ShiftPair(0.0, dtheta), 0.01, params=params).unbounded
    announce(8, "closed form within 10% of the full bound; unbounded flag exact on the degenerate family")


def test_c09_leakage_singularity_over_random_scenes():
    rng = np.random.default_rng(99)
    worst_ratio = 0.0
    for _ in range(50):
        s = random_scene(rng, n_scatterers=int(rng.integers(0, 3)))
        params = scene_params(s)
        shift = ShiftPair(float(rng.uniform(-0.2, 0.2)), float(rng.uniform(-1.2, 1.2)))
        pil = pilots(4, s.n_subcarriers, s.n_tx, seed=int(rng.integers(1, 1000)))
        leak = leakage_fim(s, shift, pil, 1e-4, params)
        worst_ratio = max(worst_ratio, leak.min_singular_ratio)
        assert leak.min_singular_ratio < 1e-10
        assert leak.size - leak.rank >= 2
    announce(9, f"augmented FIM singular on 50 random scenes (worst ratio {worst_ratio:.1e})")


def test_c10_lob_closed_form_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    accepted = 0
    while accepted < 1000:
        s = SubArrayScene(
            eve_center=Position2D(float(rng.uniform(5, 20)), float(rng.uniform(-10, 10))),
            aperture_m=float(rng.uniform(0.01, 0.5)),
            true_orientation_rad=float(rng.uniform(-0.5, 0.5)),
            alice=Position2D(float(rng.uniform(-5, 3)), float(rng.uniform(-8, 8))),
        )
        orientation = s.true_orientation_rad + float(rng.uniform(-0.3, 0.3))
        aoas = true_subarray_aoas(s)
        # both routes share the slope form; near-vertical bearings or near-parallel
        # lines amplify its conditioning past the 1e-9 m budget
        t1, t2 = (math.tan(a + orientation) for a in aoas)
        if max(abs(t1), abs(t2)) > 10.0 or abs(t2 - t1) < 1e-3:
            continue
        closed = perceived_location(s, aoas, orientation)
        solved = lob_intersection(s, aoas, orientation)
        worst = max(worst, closed.distance_to(solved))
        accepted += 1
    assert worst < 1e-9, worst
    announce(10, f"closed-form intersection equals the linear solve on 1000 scenes (worst {worst:.1e} m)")


def test_c11_subarray_deviation_threshold():
    s = SubArrayScene(eve_center=Position2D(10.0, 5.0),
                      aperture_m=subarray_aperture(16, 0.005),
                      true_orientation_rad=0.0,
                      alice=Position2D(3.0, 0.0))
    thetas = np.arange(-1.57, 1.5701, 0.01)
    points = deviation_sweep(s, thetas, [0.0])
    offenders = [p for p in points if abs(p.delta_theta_rad) > 0.1 and p.deviation_m <= 1.0]
    assert not offenders
    floor = min(p.deviation_m for p in points if abs(p.delta_theta_rad) > 0.1)
    announce(11, f"triangulation error above 1 m whenever |angle shift| > 0.1 rad (floor {floor:.2f} m)")


def test_c12_gradient_suite(setup):
    scene, _, _ = setup
    rng = np.random.default_rng(11)
    pil = pilots(3, scene.n_subcarriers, scene.n_tx, seed=8)
    worst = 0.0
    for _ in range(200):
        n_paths = int(rng.integers(1, 4))
        from locspoof import PathParams
        params = PathParams(rng.uniform(0.01, 0.4, n_paths), rng.uniform(-1.4, 1.4, n_paths),
                            rng.normal(size=n_paths) * 1e-4 + 1j * rng.normal(size=n_paths) * 1e-4)
        g = int(rng.integers(0, 3))
        n = int(rng.integers(0, scene.n_subcarriers))
        analytic = signal_gradient(g, n, params, pil, scene)
        numeric = central_difference(sample_fn_of_params(g, n, pil, scene), params_to_vector(params))
        scale = max(float(np.max(np.abs(analytic))), 1e-30)
        worst = max(worst, float(np.max(np.abs(analytic - numeric)) / scale))
    assert worst < 1e-6, worst
    announce(12, f"analytic gradients match finite differences over 200 draws (worst {worst:.1e})")


def test_c13_byte_identical_reruns(tmp_path):
    cfg = ExperimentConfig(kind="bounds", shift=ShiftPair(T_S, 0.25 * np.pi),
                           snr_db=(-20.0, 40.0, 5.0), out_dir=str(tmp_path / "a"))
    _, path_a = run_experiment(cfg, emit_plots=False)
    from dataclasses import replace
    _, path_b = run_experiment(replace(cfg, out_dir=str(tmp_path / "b")), emit_plots=False)
    from pathlib import Path
    assert Path(path_a).read_bytes() == Path(path_b).read_bytes()
    announce(13, "bounds CSV byte-identical across reruns")
