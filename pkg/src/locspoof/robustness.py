"""What an adversary can and cannot recover.

Two analyses: (1) if the precoder's functional form leaks, the augmented
information matrix over channel parameters plus the two shift constants is
exactly singular, because the shift gradients are linear combinations of the
per-path gradients; (2) a receiver with an antenna array can split it into
two sub-arrays and triangulate from the two arrival angles, but its array
orientation estimate inherits the spoofed departure angle, which drags the
line-of-bearing intersection far from the true position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NoIntersectionError
from .fisher import FisherMatrix, gradient_tensor
from .scene import (DEFAULT_C, PathParams, Position2D, Scene, ShiftPair, scene_params,
                    shift_params, wrap_interval)
from .waveform import PilotSet

SHIFT_LABELS = ("delta_tau", "delta_theta")


def leakage_gradient_tensor(scene: Scene, shift: ShiftPair, pilotset: PilotSet,
                            params: PathParams | None = None) -> np.ndarray:
    """Gradients of the precoded signal w.r.t. the augmented parameter vector
    [delays; aods; Re gains; Im gains; delta_tau; delta_theta] (4K+6 wide).

    The delay-shift gradient is the sum of the per-path delay gradients, and
    the angle-shift gradient is the cos(delta_theta)/cos(theta_k)-weighted
    sum of the per-path angle gradients; both rows are built from those
    combinations literally, which is the linear dependence that makes the
    augmented information singular.
    """
    if params is None:
        params = scene_params(scene)
    shifted = shift_params(params, shift, scene.n_subcarriers, scene.sampling_period_us)
    grads = gradient_tensor(shifted, pilotset, scene)
    n = params.n_paths
    g_tau = grads[..., :n]
    g_theta_shifted = grads[..., n:2 * n]
    # chain rule back to the true angles: d theta_bar / d theta = cos(theta)/cos(theta_bar)
    chain = np.cos(params.aods_rad) / np.cos(shifted.aods_rad)
    g_theta = g_theta_shifted * chain
    g_dtau = np.sum(g_tau, axis=2, keepdims=True)
    weights = math.cos(shift.delta_theta_rad) / np.cos(params.aods_rad)
    g_dtheta = np.sum(g_theta * weights, axis=2, keepdims=True)
    return np.concatenate([g_tau, g_theta, grads[..., 2 * n:], g_dtau, g_dtheta], axis=2)


@dataclass(frozen=True, eq=False)
class LeakageFim:
    """Information over channel parameters plus the two shift constants."""

    fisher: FisherMatrix
    rank: int
    min_singular_ratio: float  # smallest/largest singular value of the FIM

    @property
    def size(self) -> int:
        return self.fisher.size


def leakage_fim(scene: Scene, shift: ShiftPair, pilotset: PilotSet, sigma: float,
                params: PathParams | None = None) -> LeakageFim:
    """Augmented FIM when the precoder structure (not its constants) leaks.

    The matrix is singular by construction: treating the shifts as unknown
    deterministic constants adds two rows that are linear combinations of
    the per-path rows, so no unbiased estimator separates the shifts from
    the true delays and angles.
    """
    if params is None:
        params = scene_params(scene)
    grads = leakage_gradient_tensor(scene, shift, pilotset, params)
    flat = grads.reshape(-1, grads.shape[2])
    j = (2.0 / sigma**2) * np.real(flat.conj().T @ flat)
    j = 0.5 * (j + j.T)
    labels = (tuple(f"tau_{i}" for i in range(params.n_paths))
              + tuple(f"theta_{i}" for i in range(params.n_paths))
              + tuple(f"re_gain_{i}" for i in range(params.n_paths))
              + tuple(f"im_gain_{i}" for i in range(params.n_paths))
              + SHIFT_LABELS)
    blocks = {
        "delays": range(0, params.n_paths),
        "aods": range(params.n_paths, 2 * params.n_paths),
        "re_gain": range(2 * params.n_paths, 3 * params.n_paths),
        "im_gain": range(3 * params.n_paths, 4 * params.n_paths),
        "shifts": range(4 * params.n_paths, 4 * params.n_paths + 2),
    }
    fim = FisherMatrix(j, labels, blocks)
    singular_values = np.linalg.svd(j, compute_uv=False)
    ratio = float(singular_values[-1] / singular_values[0])
    rank = int(np.linalg.matrix_rank(j))
    return LeakageFim(fim, rank, ratio)


@dataclass(frozen=True)
class SubArrayScene:
    """Geometry of the two-sub-array triangulation analysis (direct path only)."""

    eve_center: Position2D
    aperture_m: float          # full-array aperture D
    true_orientation_rad: float
    alice: Position2D
    shift: ShiftPair = ShiftPair()
    c: float = DEFAULT_C
    wavelength_m: float = 0.005

    def __post_init__(self):
        if self.aperture_m <= 0.0:
            raise ValueError("aperture must be positive")


def subarray_aperture(n_rx: int, lambda_c: float) -> float:
    """Default full-array aperture for n_rx half-wavelength-spaced elements."""
    return (n_rx - 1) * lambda_c / 2.0


def subarray_positions(s: SubArrayScene, assumed_orientation: float):
    """Centers of the two half-arrays for a presumed array orientation."""
    offset = (s.aperture_m / 4.0) * np.array([math.sin(assumed_orientation), -math.cos(assumed_orientation)])
    center = s.eve_center.as_array()
    z1 = center + offset
    z2 = center - offset
    return Position2D(float(z1[0]), float(z1[1])), Position2D(float(z2[0]), float(z2[1]))


def _bearing(frm: np.ndarray, to: np.ndarray) -> float:
    return math.atan2(to[1] - frm[1], to[0] - frm[0])


def true_subarray_aoas(s: SubArrayScene):
    """Noiseless arrival angles each sub-array measures: global bearing to the
    transmitter minus the true array orientation."""
    z1, z2 = subarray_positions(s, s.true_orientation_rad)
    p = s.alice.as_array()
    return (
        _bearing(z1.as_array(), p) - s.true_orientation_rad,
        _bearing(z2.as_array(), p) - s.true_orientation_rad,
    )


def shifted_departure_angle(s: SubArrayScene) -> float:
    """Departure angle toward the array center after the angle shift."""
    p = s.alice.as_array()
    z = s.eve_center.as_array()
    dx, dy = z[0] - p[0], z[1] - p[1]
    theta = math.atan(dy / dx) if dx != 0.0 else math.copysign(math.pi / 2, dy)
    sine = wrap_interval(math.sin(theta) + math.sin(s.shift.delta_theta_rad), -1.0, 1.0)
    return math.asin(sine)


def orientation_estimate(s: SubArrayScene) -> float:
    """Array orientation inferred from the (spoofed) departure angle and the
    measured center arrival angle, wrapped to (-pi, pi]."""
    center_aoa = _bearing(s.eve_center.as_array(), s.alice.as_array()) - s.true_orientation_rad
    return wrap_interval(math.pi + shifted_departure_angle(s) - center_aoa, -math.pi, math.pi)


def lob_intersection(s: SubArrayScene, aoas, assumed_orientation: float) -> Position2D:
    """Numeric reference: intersect the two lines of bearing by solving the
    2x2 linear system in slope form."""
    z1, z2 = subarray_positions(s, assumed_orientation)
    t1 = math.tan(aoas[0] + assumed_orientation)
    t2 = math.tan(aoas[1] + assumed_orientation)
    if t1 == t2:
        raise NoIntersectionError("lines of bearing are parallel")
    a = np.array([[-t1, 1.0], [-t2, 1.0]])
    b = np.array([z1.y - t1 * z1.x, z2.y - t2 * z2.x])
    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NoIntersectionError(str(exc)) from exc
    return Position2D(float(sol[0]), float(sol[1]))


def perceived_location(s: SubArrayScene, aoas, assumed_orientation: float) -> Position2D:
    """Closed-form intersection of the two lines of bearing.

    Must agree with :func:`lob_intersection` to numerical precision; both are
    kept so the closed form stays independently checkable.
    """
    t1 = math.tan(aoas[0] + assumed_orientation)
    t2 = math.tan(aoas[1] + assumed_orientation)
    denom = t2 - t1
    if denom == 0.0:
        raise NoIntersectionError("lines of bearing are parallel")
    z = s.eve_center.as_array()
    d = s.aperture_m
    sin_o = math.sin(assumed_orientation)
    cos_o = math.cos(assumed_orientation)
    px = z[0] - d * sin_o * (t1 + t2) / (4.0 * denom) - d * cos_o / (2.0 * denom)
    py = z[1] - d * cos_o * (t1 + t2) / (4.0 * denom) - d * sin_o * t1 * t2 / (2.0 * denom)
    return Position2D(float(px), float(py))


@dataclass(frozen=True)
class DeviationPoint:
    """One sweep sample of the triangulated-position error."""

    delta_theta_rad: float
    delta_tau_us: float
    deviation_m: float
    flag: str = ""


def deviation_sweep(s: SubArrayScene, delta_thetas, delta_taus=(0.0,),
                    n_rx: int | None = None, lambda_c: float | None = None) -> list[DeviationPoint]:
    """Triangulation error of the sub-array receiver over a shift grid.

    Arrival angles are exact (best case for the adversary); only the assumed
    orientation is polluted, through the spoofed departure angle.  The delay
    shift never enters the arrival-angle geometry, so the curve is constant
    along that axis; it is swept anyway to demonstrate exactly that.
    """
    if n_rx is not None:
        lam = s.wavelength_m if lambda_c is None else lambda_c
        s = replace(s, aperture_m=subarray_aperture(n_rx, lam))
    p_true = s.alice.as_array()
    points = []
    for dtau in delta_taus:
        for dth in delta_thetas:
            scene_point = replace(s, shift=ShiftPair(float(dtau), float(dth)))
            aoas = true_subarray_aoas(scene_point)
            orientation = orientation_estimate(scene_point)
            try:
                est = perceived_location(scene_point, aoas, orientation)
                deviation = float(np.hypot(*(est.as_array() - p_true)))
                flag = ""
            except NoIntersectionError:
                deviation = float("inf")
                flag = "no_intersection"
            points.append(DeviationPoint(float(dth), float(dtau), deviation, flag))
    return points
