"""The eavesdropper's misspecified bound.

Without the shift values, an eavesdropper fits the unshifted geometric model
to shifted channel parameters.  The best it can converge to are the
pseudo-true positions: the unique location vector whose forward geometry map
reproduces the shifted parameters exactly (with the smallest-delay path read
as the direct one, which can relabel a scattered path as direct after
wrapping).  The resulting error bound splits into an estimation part, the
inverse location-domain information at the pseudo-true geometry, plus a
rank-one geometric mismatch term that no amount of SNR removes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGridError
from .fisher import efim, fim_channel, location_jacobian, psd_inverse
from .scene import (DEFAULT_C, LocationVector, PathParams, Position2D, Scene, ShiftPair,
                    locations_from_params, params_from_locations, scene_params, shift_params)
from .waveform import PilotSet, snr_to_sigma

COS_UNBOUNDED_FLOOR = 1e-6  # |cos| below this counts as a destroyed angle


@dataclass(frozen=True)
class PseudoTrueSolution:
    """Closed-form minimizer of the model-mismatch divergence."""

    locations: LocationVector
    k_min: int
    swapped: bool              # true when a scattered path leads after wrapping
    forward_residual: float    # worst forward-map gap against the shifted parameters

    def as_vector(self) -> np.ndarray:
        return self.locations.as_vector()


def pseudo_true_locations(shifted: PathParams, receiver: Position2D, c: float = DEFAULT_C) -> PseudoTrueSolution:
    """Positions an eavesdropper converges to when fed ``shifted`` parameters.

    The smallest shifted delay (ties: lowest index) is treated as the direct
    path and fixes the perceived Alice; when that path is not the original
    direct one, the original direct parameters are explained by scatterer
    ``k_min`` instead.  The forward map of the result reproduces the shifted
    parameters exactly, which is what makes it the divergence minimizer.
    """
    locations = locations_from_params(shifted, receiver, c)
    forward = params_from_locations(locations, receiver, c)
    residual = max(
        float(np.max(np.abs(forward.delays_us - shifted.delays_us))),
        float(np.max(np.abs(forward.aods_rad - shifted.aods_rad))),
    )
    return PseudoTrueSolution(locations, locations.k_min, locations.k_min != 0, residual)


@dataclass(frozen=True)
class KlGrid:
    """Search window for the brute-force pseudo-true oracle."""

    window_m: float = 2.0
    step_m: float = 0.01
    center: Position2D | None = None  # defaults to the closed form, offset by a sub-cell amount

    def __post_init__(self):
        if not (self.window_m > 0.0 and self.step_m > 0.0 and self.step_m <= self.window_m):
            raise InvalidGridError(f"bad grid (window {self.window_m}, step {self.step_m})")


def kl_objective(p: np.ndarray, shifted: PathParams, receiver: Position2D,
                 sigma_eta: np.ndarray, c: float = DEFAULT_C):
    """Mismatch divergence restricted to the direct-path slot, as a function
    of the candidate Alice position ``p`` (broadcasts over trailing grid axes).

    For any candidate Alice, the scatterer positions can be chosen to match
    their parameter slots exactly, so minimizing over them leaves a quadratic
    form in the direct-slot residual whose weight is the inverse of the
    marginal covariance of that slot.
    """
    z = receiver.as_array()
    k_min = int(np.argmin(shifted.delays_us))
    n = shifted.n_paths
    idx = [k_min, n + k_min]
    marginal = np.asarray(sigma_eta, dtype=float)[np.ix_(idx, idx)]
    weight, _ = psd_inverse(marginal)
    px, py = np.asarray(p[0], dtype=float), np.asarray(p[1], dtype=float)
    dx, dy = z[0] - px, z[1] - py
    r_tau = np.hypot(dx, dy) / c - shifted.delays_us[k_min]
    # fold the bearing onto the (-pi/2, pi/2] branch used by the model
    theta_model = np.arctan2(dy, dx)
    theta_model = np.where(theta_model > np.pi / 2, theta_model - np.pi, theta_model)
    theta_model = np.where(theta_model <= -np.pi / 2, theta_model + np.pi, theta_model)
    r_theta = theta_model - shifted.aods_rad[k_min]
    return weight[0, 0] * r_tau**2 + 2.0 * weight[0, 1] * r_tau * r_theta + weight[1, 1] * r_theta**2


def kl_pseudo_true_search(shifted: PathParams, receiver: Position2D, sigma_eta: np.ndarray,
                          grid: KlGrid, c: float = DEFAULT_C) -> LocationVector:
    """Brute-force pseudo-true solver: grid-minimize the divergence over Alice.

    Serves as the independent oracle for the closed form.  The grid is
    centered on the closed-form answer: if that answer were wrong, nodes near
    the true divergence minimizer elsewhere in the window would beat it and
    the argmin would move away, so agreement within one cell is a real check.
    (An off-center grid would not work here: the weighted valley is so
    anisotropic that a square lattice's argmin can sit many cells along its
    soft axis even when the closed form is exact.)
    """
    closed = pseudo_true_locations(shifted, receiver, c)
    if grid.center is None:
        cx = closed.locations.alice.x
        cy = closed.locations.alice.y
    else:
        cx, cy = grid.center.x, grid.center.y
    half = int(round(grid.window_m / grid.step_m))
    offsets = np.arange(-half, half + 1) * grid.step_m
    if offsets.size == 0:
        raise InvalidGridError("empty grid")
    gx = cx + offsets
    gy = cy + offsets
    mesh = np.stack(np.meshgrid(gx, gy, indexing="ij"))
    objective = kl_objective(mesh, shifted, receiver, sigma_eta, c)
    i, j = np.unravel_index(int(np.argmin(objective)), objective.shape)
    best = Position2D(float(gx[i]), float(gy[j]))
    # rebuild the full location vector at the winning Alice via the slot map
    scatterers = []
    z = receiver.as_array()
    from .scene import _path_slot_sources, _scatterer_from_path

    sources = _path_slot_sources(shifted.n_paths, closed.k_min)
    slot_of_source = {src: slot for slot, src in sources.items()}
    for i_s in range(1, shifted.n_paths):
        slot = slot_of_source[i_s]
        v = _scatterer_from_path(best.as_array(), z, shifted.delays_us[slot], shifted.aods_rad[slot], c, slot)
        scatterers.append(Position2D(float(v[0]), float(v[1])))
    return LocationVector(best, tuple(scatterers), closed.k_min)


@dataclass(frozen=True, eq=False)
class McrbResult:
    """Misspecified bound split into estimation and mismatch parts."""

    psi: np.ndarray              # full bound, 2(K+1) square [m^2]
    estimation_part: np.ndarray  # inverse information at the pseudo-true geometry
    mismatch_part: np.ndarray    # rank-one geometric offset term
    rmse_eve: float              # sqrt of the Alice-block trace of psi [m]
    mismatch_distance: float     # |pseudo-true Alice - true Alice| [m]
    pseudo_true: PseudoTrueSolution
    condition_number: float
    flags: tuple[str, ...] = ()

    @property
    def trace_alice(self) -> float:
        return float(self.psi[0, 0] + self.psi[1, 1])


def _eve_efim(scene: Scene, shifted: PathParams, pilotset: PilotSet, sigma: float):
    j_xi = fim_channel(shifted, pilotset, sigma, scene)
    return efim(j_xi, 2 * shifted.n_paths)


def mcrb_from_params(scene: Scene, params: PathParams, observed: PathParams,
                     pilotset: PilotSet, sigma: float, flags: tuple[str, ...] = ()) -> McrbResult:
    """Misspecified bound when the eavesdropper observes ``observed`` while the
    geometry truly is ``params``; shared by the shift and baseline analyses."""
    j_eta = _eve_efim(scene, observed, pilotset, sigma)
    pseudo = pseudo_true_locations(observed, scene.receiver, scene.c)
    pi = location_jacobian(pseudo.locations, scene.receiver, scene.c)
    j_phi = pi.T @ j_eta.matrix @ pi
    estimation, cond = psd_inverse(0.5 * (j_phi + j_phi.T))
    truth = locations_from_params(params, scene.receiver, scene.c)
    delta = pseudo.as_vector() - truth.as_vector()
    mismatch = np.outer(delta, delta)
    psi = estimation + mismatch
    rmse = float(np.sqrt(psi[0, 0] + psi[1, 1]))
    dist = float(np.hypot(*(pseudo.locations.alice.as_array() - truth.alice.as_array())))
    return McrbResult(psi, estimation, mismatch, rmse, dist, pseudo, cond, flags)


def mcrb(scene: Scene, shift: ShiftPair, pilotset: PilotSet, sigma: float,
         params: PathParams | None = None) -> McrbResult:
    """Misspecified bound for an eavesdropper facing the delay-angle shift.

    The information is evaluated at the pseudo-true geometry using the
    shifted channel the eavesdropper actually observes; the mismatch term is
    the squared offset between pseudo-true and true positions.
    """
    if params is None:
        params = scene_params(scene)
    shifted = shift_params(params, shift, scene.n_subcarriers, scene.sampling_period_us)
    return mcrb_from_params(scene, params, shifted, pilotset, sigma)


def generalized_fims(scene: Scene, shift: ShiftPair, pilotset: PilotSet, sigma: float,
                     params: PathParams | None = None):
    """The two curvature matrices of the misspecified analysis, evaluated at
    the pseudo-true locations.

    Because the model set contains the image of the truth, the expected-score
    outer product equals minus the expected Hessian: B = -A, and the sandwich
    A^{-1} B A^{-1} collapses to the inverse information.  Both are returned
    so that collapse can be cross-checked numerically.
    """
    if params is None:
        params = scene_params(scene)
    shifted = shift_params(params, shift, scene.n_subcarriers, scene.sampling_period_us)
    j_eta = _eve_efim(scene, shifted, pilotset, sigma)
    pseudo = pseudo_true_locations(shifted, scene.receiver, scene.c)
    pi = location_jacobian(pseudo.locations, scene.receiver, scene.c)
    curv = pi.T @ j_eta.matrix @ pi
    curv = 0.5 * (curv + curv.T)
    return -curv, curv


@dataclass(frozen=True)
class ClosedFormBound:
    """Asymptotic position-error bound as an explicit function of the shift."""

    value: float        # [m^2]; +inf when the angle term blows up
    unbounded: bool
    c1: float
    c2: float
    k_min: int
    mismatch_sq: float  # [m^2]


def closed_form_bound(scene: Scene, shift: ShiftPair, sigma: float, n_symbols: int | None = None,
                      psi_slack: float = 0.0, params: PathParams | None = None) -> ClosedFormBound:
    """Orthogonal-path approximation of the eavesdropper bound.

    Valid for many symbols: the bound is C1 + C2 tau^2 / cos^2(theta) +
    mismatch^2, with C1/C2 set by the leading path's gain and the array and
    subcarrier apertures.  When the shifted leading angle reaches +-pi/2 the
    angle term diverges and the result is flagged unbounded.  ``psi_slack``
    is the asymptotic slack constant subtracted as slack/G (0 keeps the pure
    asymptotic form).
    """
    if params is None:
        params = scene_params(scene)
    if params.gains is None:
        raise ValueError("params need gains; attach them with with_gains()")
    g = scene.n_symbols if n_symbols is None else n_symbols
    shifted = shift_params(params, shift, scene.n_subcarriers, scene.sampling_period_us)
    k_min = int(np.argmin(shifted.delays_us))
    tau = float(shifted.delays_us[k_min])
    theta = float(shifted.aods_rad[k_min])
    gain_sq = float(np.abs(params.gains[k_min]) ** 2)
    n = scene.n_subcarriers
    n_t = scene.n_tx
    t_s = scene.sampling_period_us
    lam = scene.wavelength_m
    d = scene.spacing_m
    c = scene.c
    c1 = 3.0 * sigma**2 * c**2 * n * t_s**2 / (2.0 * g * gain_sq * math.pi**2 * (n**2 - 1)) - psi_slack / g
    c2 = 3.0 * sigma**2 * c**2 * lam**2 / (2.0 * g * gain_sq * math.pi**2 * d**2 * n * (n_t**2 - 1))
    pseudo = pseudo_true_locations(shifted, scene.receiver, scene.c)
    truth = locations_from_params(params, scene.receiver, scene.c)
    mismatch_sq = float(np.sum((pseudo.locations.alice.as_array() - truth.alice.as_array()) ** 2))
    cos_term = math.cos(theta)
    if abs(cos_term) < COS_UNBOUNDED_FLOOR:
        return ClosedFormBound(float("inf"), True, c1, c2, k_min, mismatch_sq)
    value = c1 + c2 * tau**2 / cos_term**2 + mismatch_sq
    return ClosedFormBound(value, False, c1, c2, k_min, mismatch_sq)


def eve_parameter_covariance(scene: Scene, shift: ShiftPair, pilotset: PilotSet, sigma: float,
                             params: PathParams | None = None) -> np.ndarray:
    """Covariance of an efficient channel estimate of the shifted parameters,
    i.e. the inverse effective FIM of the observed channel.  This is the
    noise model of the pseudo-true analysis and the weight for the oracle."""
    if params is None:
        params = scene_params(scene)
    shifted = shift_params(params, shift, scene.n_subcarriers, scene.sampling_period_us)
    j_eta = _eve_efim(scene, shifted, pilotset, sigma)
    cov, _ = psd_inverse(j_eta.matrix)
    return cov


def snr_sigma(scene: Scene, shift: ShiftPair, pilotset: PilotSet, snr_db: float,
              params: PathParams | None = None) -> float:
    """Noise level realizing ``snr_db`` for the precoded signal."""
    if params is None:
        params = scene_params(scene)
    return snr_to_sigma(scene, params, shift, pilotset, snr_db)
