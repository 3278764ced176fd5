"""Fisher information for channel and location estimation.

Parameter ordering is fixed project-wide as [delays; aods; Re gains; Im gains]
(4(K+1) entries), so the leading 2(K+1) block of every channel FIM is the
location-relevant part.  All matrix inverses go through a symmetric
eigendecomposition with a relative eigenvalue floor: near-singular
information must fail loudly (with its condition number) instead of silently
producing huge bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidNoiseError, SingularInformationError, SingularNuisanceError
from .scene import LocationVector, PathParams, Position2D, Scene, ShiftPair, locations_from_params, scene_params
from .waveform import PilotSet, _delay_phases, _steering_conj_matrix, effective_pilots

EIG_FLOOR = 1e-12  # relative eigenvalue floor for information inverses


def parameter_labels(n_paths: int) -> tuple[str, ...]:
    k = range(n_paths)
    return tuple([f"tau_{i}" for i in k] + [f"theta_{i}" for i in k]
                 + [f"re_gain_{i}" for i in k] + [f"im_gain_{i}" for i in k])


def channel_block_map(n_paths: int) -> dict[str, range]:
    n = n_paths
    return {
        "delays": range(0, n),
        "aods": range(n, 2 * n),
        "re_gain": range(2 * n, 3 * n),
        "im_gain": range(3 * n, 4 * n),
    }


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    """A labelled real symmetric PSD information matrix."""

    matrix: np.ndarray
    labels: tuple[str, ...]
    block_map: dict[str, range] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))
        if self.matrix.shape[0] != self.matrix.shape[1] or self.matrix.shape[0] != len(self.labels):
            raise ValueError("matrix/label shape mismatch")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def validate(self, sym_tol: float = 1e-9, psd_tol: float = 1e-9):
        scale = float(np.max(np.abs(self.matrix))) or 1.0
        if np.max(np.abs(self.matrix - self.matrix.T)) > sym_tol * scale:
            raise ValueError("information matrix is not symmetric")
        eigs = np.linalg.eigvalsh(self.matrix)
        if eigs[0] < -psd_tol * max(eigs[-1], 0.0):
            raise ValueError(f"information matrix is not PSD (min eig {eigs[0]:.3e})")

    def block(self, name: str) -> np.ndarray:
        r = self.block_map[name]
        return self.matrix[np.ix_(list(r), list(r))]


def psd_inverse(matrix: np.ndarray, floor: float = EIG_FLOOR, error_cls=SingularInformationError):
    """Inverse of a symmetric PSD matrix via eigendecomposition.

    Raises ``error_cls`` (carrying the condition number) when the smallest
    eigenvalue falls below ``floor`` times the largest.
    """
    w, v = np.linalg.eigh(np.asarray(matrix, dtype=float))
    w_max = w[-1]
    if w_max <= 0.0 or w[0] <= floor * w_max:
        cond = float("inf") if w[0] <= 0 else float(w_max / w[0])
        raise error_cls(f"matrix is singular past the eigenvalue floor (min {w[0]:.3e}, max {w_max:.3e})", cond)
    inv = (v / w) @ v.T
    return 0.5 * (inv + inv.T), float(w_max / w[0])


def gradient_tensor(params: PathParams, pilotset: PilotSet, scene: Scene) -> np.ndarray:
    """Analytic gradients of the noiseless sample w.r.t. all channel parameters.

    Returns shape (G, N, 4(K+1)) complex, columns ordered
    [delays, aods, Re gains, Im gains].  The delay partial carries the
    subcarrier phase slope -j 2 pi n / (N T_s); the angle partial carries the
    antenna-index ramp j 2 pi d cos(theta) / lambda through the conjugated
    steering vector; the gain partials are the bare path responses.
    """
    if params.gains is None:
        raise ValueError("params need gains; attach them with with_gains()")
    n_idx = np.arange(scene.n_subcarriers)
    e = _delay_phases(params.delays_us, scene)              # (N, K+1)
    steer_c = _steering_conj_matrix(params.aods_rad, scene)  # (K+1, n_tx)
    a = np.einsum("km,gnm->gnk", steer_c, pilotset.symbols)
    ramp = np.einsum("km,gnm->gnk", steer_c * np.arange(scene.n_tx), pilotset.symbols)
    base = e[None, :, :] * a                                 # e_k * alpha_k^H s
    d_tau = (-2j * np.pi * n_idx[None, :, None] / scene.delay_window_us) * params.gains * base
    d_theta = params.gains * e[None, :, :] * (2j * np.pi * scene.spacing_m * np.cos(params.aods_rad)
                                              / scene.wavelength_m) * ramp
    return np.concatenate([d_tau, d_theta, base, 1j * base], axis=2)


def signal_gradient(g: int, n: int, params: PathParams, pilotset: PilotSet, scene: Scene) -> np.ndarray:
    """Gradient of the (g, n) noiseless sample over the 4(K+1) parameters."""
    return gradient_tensor(params, pilotset, scene)[g, n]


def fim_channel(params: PathParams, pilotset: PilotSet, sigma: float, scene: Scene) -> FisherMatrix:
    """Channel-parameter FIM: (2/sigma^2) sum_{g,n} Re{grad^H grad}."""
    if sigma <= 0.0:
        raise InvalidNoiseError(f"sigma must be positive, got {sigma}")
    grads = gradient_tensor(params, pilotset, scene)
    flat = grads.reshape(-1, grads.shape[2])
    j = (2.0 / sigma**2) * np.real(flat.conj().T @ flat)
    j = 0.5 * (j + j.T)
    return FisherMatrix(j, parameter_labels(params.n_paths), channel_block_map(params.n_paths))


def efim(fim: FisherMatrix, keep) -> FisherMatrix:
    """Effective FIM after Schur-complementing out all parameters not in ``keep``.

    ``keep`` is an int (count of leading indices) or an index range.  The
    discarded block must be invertible; a singular nuisance block raises
    with its condition number attached.
    """
    if isinstance(keep, int):
        keep_idx = np.arange(keep)
    else:
        keep_idx = np.asarray(list(keep), dtype=int)
    drop_idx = np.setdiff1d(np.arange(fim.size), keep_idx)
    j = fim.matrix
    j1 = j[np.ix_(keep_idx, keep_idx)]
    if drop_idx.size == 0:
        reduced = j1
    else:
        j2 = j[np.ix_(keep_idx, drop_idx)]
        j4 = j[np.ix_(drop_idx, drop_idx)]
        j4_inv, _ = psd_inverse(j4, error_cls=SingularNuisanceError)
        reduced = j1 - j2 @ j4_inv @ j2.T
    reduced = 0.5 * (reduced + reduced.T)
    labels = tuple(fim.labels[i] for i in keep_idx)
    n = keep_idx.size // 2
    blocks = {"delays": range(0, n), "aods": range(n, 2 * n)} if keep_idx.size == 2 * n else {}
    return FisherMatrix(reduced, labels, blocks)


def location_jacobian(locations: LocationVector, receiver: Position2D, c: float) -> np.ndarray:
    """Jacobian of the forward geometry map: rows [delays; aods], columns
    [alice, scatterer_1, ..., scatterer_K] (each two wide).

    Honors the slot labelling of ``locations``: the slot ``k_min`` rows are
    the direct-path derivatives, and when ``k_min != 0`` the slot-0 rows
    belong to scatterer ``k_min`` (the swapped case).
    """
    from .scene import _path_slot_sources

    p = locations.alice.as_array()
    z = receiver.as_array()
    n = locations.n_paths
    pi = np.zeros((2 * n, 2 * n))
    sources = _path_slot_sources(n, locations.k_min)
    for j, src in sources.items():
        if src == 0:
            u = p - z
            r = float(np.hypot(*u))
            if r == 0.0:
                raise SingularInformationError("alice coincides with the receiver")
            pi[j, 0:2] = u / (c * r)
            w = z - p
            pi[n + j, 0:2] = np.array([w[1], -w[0]]) / (w @ w)
        else:
            v = locations.scatterers[src - 1].as_array()
            u1 = p - v
            u2 = z - v
            r1 = float(np.hypot(*u1))
            r2 = float(np.hypot(*u2))
            if r1 == 0.0 or r2 == 0.0:
                raise SingularInformationError(f"scatterer {src} coincides with an endpoint")
            col = 2 * src
            pi[j, 0:2] = u1 / (c * r1)
            pi[j, col:col + 2] = (-u1 / r1 - u2 / r2) / c
            w = v - p
            pi[n + j, 0:2] = np.array([w[1], -w[0]]) / (w @ w)
            pi[n + j, col:col + 2] = np.array([-w[1], w[0]]) / (w @ w)
    return pi


@dataclass(frozen=True, eq=False)
class CrbResult:
    """Location-domain CRB for the informed receiver."""

    covariance: np.ndarray  # 2(K+1) square, m^2
    rmse: float             # sqrt of the Alice-block trace [m]
    condition_number: float

    @property
    def trace_alice(self) -> float:
        return float(self.covariance[0, 0] + self.covariance[1, 1])


def crb_bob(scene: Scene, shift: ShiftPair, pilotset: PilotSet, sigma: float,
            params: PathParams | None = None) -> CrbResult:
    """CRB on localizing Alice for a receiver that knows the shift.

    Knowing the shift, the receiver folds the precoder into effective pilots
    and estimates the true parameters, so the information is built from the
    true-parameter gradients of the precoded signal.
    """
    if params is None:
        params = scene_params(scene)
    eff = effective_pilots(pilotset, shift, scene)
    j_xi = fim_channel(params, eff, sigma, scene)
    j_eta = efim(j_xi, 2 * params.n_paths)
    truth = locations_from_params(params, scene.receiver, scene.c)
    pi = location_jacobian(truth, scene.receiver, scene.c)
    j_phi = pi.T @ j_eta.matrix @ pi
    cov, cond = psd_inverse(0.5 * (j_phi + j_phi.T))
    return CrbResult(cov, float(np.sqrt(cov[0, 0] + cov[1, 1])), cond)


@dataclass(frozen=True)
class BoundReport:
    """One evaluated (shift, SNR) point: both receivers' bounds side by side."""

    snr_db: float
    shift: ShiftPair
    crb_trace_alice: float      # [m^2]
    mcrb_trace_alice: float     # [m^2]
    mismatch_distance: float    # [m]
    rmse_bob: float             # [m]
    rmse_eve: float             # [m]
    k_min: int = 0
    cond_bob: float = float("nan")
    cond_eve: float = float("nan")
    flags: tuple[str, ...] = ()
