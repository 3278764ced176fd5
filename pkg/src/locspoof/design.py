"""Choosing the delay and angle shifts.

The angle shift has a degenerate family that pushes the leading path's
shifted angle onto +-pi/2, destroying the angle information outright; the
delay shift trades off the spoofed-position offset against the wrap points.
Everything here is grid-based: the objectives are cheap and non-smooth at the
wrap boundaries, so exhaustive search at a stated resolution is both exact
and honest about those discontinuities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGridError, LocspoofError
from .mcrb import McrbResult, mcrb, mcrb_from_params
from .scene import (PathParams, Scene, ShiftPair, locations_from_params, scene_params,
                    shift_params, wrap_interval)
from .waveform import PilotSet, pilots, snr_to_sigma


def desired_angle_shift(theta_kmin: float) -> float:
    """Canonical angle shift that drives the shifted sine to the top of its
    interval, so the shifted angle lands on pi/2 and its cosine vanishes.

    The baseline value is arcsin of (1 - sin(theta)) wrapped onto (-1, 1];
    the other family members differ by full turns and wrap to the same
    point.  Because the caller's shift map recomputes sin() of the returned
    angle, the value is nudged by a few ulps so that the recomputed sum hits
    +-1.0 exactly whenever the floating-point grid allows it.
    """
    if not abs(theta_kmin) < math.pi / 2:
        raise ValueError("theta must lie strictly inside (-pi/2, pi/2)")
    s0 = math.sin(theta_kmin)
    base = math.asin(wrap_interval(1.0 - s0, -1.0, 1.0))

    def wrapped_sum(a: float) -> float:
        return wrap_interval(s0 + math.sin(a), -1.0, 1.0)

    best, best_cos = base, abs(math.cos(math.asin(wrapped_sum(base))))
    for direction in (math.inf, -math.inf):
        candidate = base
        for _ in range(60):
            candidate = math.nextafter(candidate, direction)
            cos_val = abs(math.cos(math.asin(wrapped_sum(candidate))))
            if cos_val < best_cos:
                best, best_cos = candidate, cos_val
                if best_cos < 1e-15:
                    return best
    return best


def _closed_form_c2(scene: Scene, gain_sq: float, sigma: float, n_symbols: int) -> float:
    return (3.0 * sigma**2 * scene.c**2 * scene.wavelength_m**2
            / (2.0 * n_symbols * gain_sq * math.pi**2 * scene.spacing_m**2
               * scene.n_subcarriers * (scene.n_tx**2 - 1)))


def optimal_delay_shift(scene: Scene, delta_theta: float, grid, sigma: float,
                        n_symbols: int | None = None, params: PathParams | None = None):
    """Maximize the asymptotic bound over a delay-shift grid.

    ``grid`` is (lo, hi, step) in microseconds.  The objective is the
    shift-dependent part of the closed-form bound: the leading path's
    amplified angle term plus the squared spoofed-position offset.  Ties go
    to the smallest delay shift.  Returns (best shift, objective value).
    """
    lo, hi, step = grid
    if step <= 0 or hi < lo:
        raise InvalidGridError(f"bad delay grid ({lo}, {hi}, {step})")
    taus = np.arange(lo, hi + step * 0.5, step)
    if taus.size == 0:
        raise InvalidGridError("empty delay grid")
    if params is None:
        params = scene_params(scene)
    g = scene.n_symbols if n_symbols is None else n_symbols
    truth = locations_from_params(params, scene.receiver, scene.c).alice.as_array()
    window = scene.delay_window_us
    # vectorized over the grid: shifted delays (M, K+1), leading path per cell
    shifted_delays = wrap_interval(params.delays_us[None, :] + taus[:, None], 0.0, window)
    sines = wrap_interval(np.sin(params.aods_rad) + math.sin(delta_theta), -1.0, 1.0)
    thetas = np.arcsin(sines)
    k_min = np.argmin(shifted_delays, axis=1)
    rows = np.arange(taus.size)
    tau_lead = shifted_delays[rows, k_min]
    theta_lead = thetas[k_min]
    gain_sq = np.abs(np.asarray(params.gains))[k_min] ** 2
    z = scene.receiver.as_array()
    px = z[0] - scene.c * tau_lead * np.cos(theta_lead)
    py = z[1] - scene.c * tau_lead * np.sin(theta_lead)
    mismatch_sq = (px - truth[0]) ** 2 + (py - truth[1]) ** 2
    c2 = np.array([_closed_form_c2(scene, gs, sigma, g) for gs in gain_sq])
    cos_sq = np.cos(theta_lead) ** 2
    with np.errstate(divide="ignore"):
        objective = np.where(cos_sq > 0.0, c2 * tau_lead**2 / cos_sq, np.inf) + mismatch_sq
    best = int(np.argmax(objective))  # first max = smallest delay on ties
    return float(taus[best]), float(objective[best])


@dataclass(frozen=True)
class DesignGrid:
    """Rectangular shift grid with its evaluation SNR."""

    delta_tau_us: tuple[float, float, float]     # lo, hi, step
    delta_theta_rad: tuple[float, float, float]  # lo, hi, step
    snr_db: float = 20.0

    def __post_init__(self):
        for lo, hi, step in (self.delta_tau_us, self.delta_theta_rad):
            if step <= 0 or hi < lo:
                raise InvalidGridError(f"bad grid axis ({lo}, {hi}, {step})")

    @staticmethod
    def default_for(scene: Scene) -> "DesignGrid":
        half = scene.delay_window_us / 2.0
        return DesignGrid((-half, half, 0.01), (-math.pi / 2, math.pi / 2, 0.01))

    def tau_values(self) -> np.ndarray:
        lo, hi, step = self.delta_tau_us
        return np.arange(lo, hi + step * 0.5, step)

    def theta_values(self) -> np.ndarray:
        lo, hi, step = self.delta_theta_rad
        return np.arange(lo, hi + step * 0.5, step)


@dataclass(frozen=True, eq=False)
class DesignSurface:
    """Per-cell eavesdropper bound and its geometric drivers."""

    grid: DesignGrid
    delta_taus: np.ndarray
    delta_thetas: np.ndarray
    rmse_eve: np.ndarray            # (n_tau, n_theta) [m]; inf on degenerate cells
    mismatch_distance: np.ndarray   # [m]
    cos_sq_kmin: np.ndarray
    k_min: np.ndarray               # int
    flags: list[list[str]] = field(default_factory=list)

    def to_rows(self):
        rows = []
        for i, dt in enumerate(self.delta_taus):
            for j, dth in enumerate(self.delta_thetas):
                rows.append({
                    "delta_tau": float(dt),
                    "delta_theta": float(dth),
                    "rmse_eve": float(self.rmse_eve[i, j]),
                    "mismatch": float(self.mismatch_distance[i, j]),
                    "cos_sq": float(self.cos_sq_kmin[i, j]),
                    "k_min": int(self.k_min[i, j]),
                    "flag": self.flags[i][j] if self.flags else "",
                })
        return rows


def grid_eval(scene: Scene, grid: DesignGrid, pilot_seed: int = 1,
              reflection_loss: float = 1.0) -> DesignSurface:
    """Evaluate the eavesdropper bound over a shift grid at the grid's SNR.

    Degenerate cells (singular information, destroyed angles) are recorded
    with an inf bound and a flag instead of aborting the whole surface.
    """
    params = scene_params(scene, reflection_loss)
    pilotset = pilots(scene.n_symbols, scene.n_subcarriers, scene.n_tx, pilot_seed)
    taus = grid.tau_values()
    thetas = grid.theta_values()
    rmse = np.full((taus.size, thetas.size), np.inf)
    mism = np.zeros_like(rmse)
    cos_sq = np.zeros_like(rmse)
    kmin = np.zeros(rmse.shape, dtype=int)
    flags = [["" for _ in thetas] for _ in taus]
    for i, dt in enumerate(taus):
        for j, dth in enumerate(thetas):
            shift = ShiftPair(float(dt), float(dth))
            shifted = shift_params(params, shift, scene.n_subcarriers, scene.sampling_period_us)
            k = int(np.argmin(shifted.delays_us))
            kmin[i, j] = k
            cos_sq[i, j] = math.cos(float(shifted.aods_rad[k])) ** 2
            try:
                sigma = snr_to_sigma(scene, params, shift, pilotset, grid.snr_db)
                result = mcrb(scene, shift, pilotset, sigma, params)
                rmse[i, j] = result.rmse_eve
                mism[i, j] = result.mismatch_distance
            except LocspoofError as exc:  # per-cell degeneracy is data, not failure
                flags[i][j] = type(exc).__name__
                pseudo = locations_from_params(shifted, scene.receiver, scene.c)
                truth = locations_from_params(params, scene.receiver, scene.c)
                mism[i, j] = pseudo.alice.distance_to(truth.alice)
    return DesignSurface(grid, taus, thetas, rmse, mism, cos_sq, kmin, flags)


@dataclass(frozen=True)
class AveragedBound:
    """Bounds at one SNR, averaged over random shift draws."""

    snr_db: float
    rmse_eve: float
    rmse_bob: float
    n_realizations: int


def random_shift_average(scene: Scene, n_realizations: int, seed: int, snr_db_list,
                         pilotset: PilotSet | None = None, params: PathParams | None = None,
                         threads: int = 1) -> list[AveragedBound]:
    """Average both receivers' bounds over uniformly drawn shifts.

    Delay shifts are uniform over half the delay window each side; angle
    shifts uniform over (-pi/2, pi/2).  Realizations may be evaluated in
    parallel, but the reduction always sums in draw order, so the output
    depends only on the seed.
    """
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    if params is None:
        params = scene_params(scene)
    if pilotset is None:
        pilotset = pilots(scene.n_symbols, scene.n_subcarriers, scene.n_tx, 1)
    rng = np.random.Generator(np.random.Philox(seed))
    half = scene.delay_window_us / 2.0
    draws = np.column_stack([
        rng.uniform(-half, half, n_realizations),
        rng.uniform(-math.pi / 2, math.pi / 2, n_realizations),
    ])
    snrs = [float(s) for s in snr_db_list]
    from .harness import bound_sweep  # late import; harness owns the sweep fast path

    def one(draw):
        shift = ShiftPair(float(draw[0]), float(draw[1]))
        return bound_sweep(scene, shift, pilotset, snrs, params)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            all_reports = list(pool.map(one, draws))
    else:
        all_reports = [one(d) for d in draws]
    sum_eve = np.zeros(len(snrs))
    sum_bob = np.zeros(len(snrs))
    for reports in all_reports:
        sum_eve += np.array([r.rmse_eve for r in reports])
        sum_bob += np.array([r.rmse_bob for r in reports])
    return [AveragedBound(float(s), float(e / n_realizations), float(b / n_realizations), n_realizations)
            for s, e, b in zip(snrs, sum_eve, sum_bob)]


def delay_only_baseline(scene: Scene, tau_obf_us: float, pilotset: PilotSet, sigma: float,
                        params: PathParams | None = None) -> McrbResult:
    """Bound for the delay-only obfuscation baseline.

    Only the direct path's delay moves (by ``tau_obf_us``); angles and the
    scattered delays stay put, emulating a beamforming design that needs
    channel knowledge.  If the shifted direct delay does not exceed the
    smallest scattered delay the obfuscation cannot relabel the leading path,
    which is flagged but still evaluated.
    """
    if params is None:
        params = scene_params(scene)
    delays = params.delays_us.copy()
    delays[0] = wrap_interval(delays[0] + tau_obf_us, 0.0, scene.delay_window_us)
    observed = PathParams(delays, params.aods_rad.copy(), params.gains)
    flags = ()
    if params.n_paths > 1 and delays[0] <= float(np.min(params.delays_us[1:])):
        flags = ("baseline_ineffective",)
    return mcrb_from_params(scene, params, observed, pilotset, sigma, flags)
