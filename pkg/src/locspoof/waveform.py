"""Pilot signals, channel vectors, and the delay-angle shift precoder.

The transmit array is a uniform linear array with ``n_tx`` elements; each
subcarrier ``n`` sees the narrowband channel row vector

    h(n) = sum_k gain_k * exp(-j 2 pi n tau_k / (N T_s)) * steer(theta_k)^H.

The precoder multiplies each pilot by a unit-modulus diagonal that rewrites
the received signal as if every path delay and departure-angle sine had been
shifted by a constant, which is what the obfuscation relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSignalError
from .scene import PathParams, Scene, ShiftPair, shift_params


def steering_vector(theta: float, n_tx: int, d: float, lambda_c: float) -> np.ndarray:
    """ULA steering vector, entry m = exp(-j 2 pi m d sin(theta) / lambda)."""
    if n_tx < 1:
        raise ValueError("n_tx must be >= 1")
    m = np.arange(n_tx)
    return np.exp(-2j * np.pi * m * d * np.sin(theta) / lambda_c)


def _steering_conj_matrix(aods: np.ndarray, scene: Scene) -> np.ndarray:
    """Rows are steer(theta_k)^H for every path; shape (K+1, n_tx)."""
    m = np.arange(scene.n_tx)
    return np.exp(2j * np.pi * np.outer(np.sin(aods), m) * scene.spacing_m / scene.wavelength_m)


def _delay_phases(delays: np.ndarray, scene: Scene) -> np.ndarray:
    """exp(-j 2 pi n tau_k / (N T_s)); shape (N, K+1)."""
    n = np.arange(scene.n_subcarriers)
    return np.exp(-2j * np.pi * np.outer(n, delays) / scene.delay_window_us)


def channel_vector(n: int, params: PathParams, scene: Scene) -> np.ndarray:
    """The subcarrier-``n`` channel row vector (length n_tx)."""
    if params.gains is None:
        raise ValueError("params need gains; attach them with with_gains()")
    phases = np.exp(-2j * np.pi * n * params.delays_us / scene.delay_window_us)
    return (params.gains * phases) @ _steering_conj_matrix(params.aods_rad, scene)


def channel_matrix(params: PathParams, scene: Scene) -> np.ndarray:
    """All subcarrier channel vectors stacked; shape (N, n_tx)."""
    if params.gains is None:
        raise ValueError("params need gains; attach them with with_gains()")
    return (_delay_phases(params.delays_us, scene) * params.gains) @ _steering_conj_matrix(params.aods_rad, scene)


@dataclass(frozen=True, eq=False)
class Precoder:
    """One subcarrier's diagonal precoder, stored as its diagonal."""

    diagonal: np.ndarray

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)

    def apply(self, pilot: np.ndarray) -> np.ndarray:
        return self.diagonal * pilot


def shift_precoder(n: int, shift: ShiftPair, scene: Scene) -> Precoder:
    """Diagonal precoder for subcarrier ``n``.

    A scalar subcarrier-dependent phase realizes the delay shift and a
    conjugated steering vector of the angle shift realizes the sine shift;
    every diagonal entry is unit modulus, so transmit energy is unchanged.
    """
    scalar = np.exp(-2j * np.pi * n * shift.delta_tau_us / scene.delay_window_us)
    diag = scalar * steering_vector(shift.delta_theta_rad, scene.n_tx, scene.spacing_m, scene.wavelength_m).conj()
    return Precoder(diag)


def precoder_diagonals(shift: ShiftPair, scene: Scene) -> np.ndarray:
    """Diagonals of all N precoders at once; shape (N, n_tx)."""
    n = np.arange(scene.n_subcarriers)
    scalars = np.exp(-2j * np.pi * n * shift.delta_tau_us / scene.delay_window_us)
    steer_c = steering_vector(shift.delta_theta_rad, scene.n_tx, scene.spacing_m, scene.wavelength_m).conj()
    return scalars[:, None] * steer_c[None, :]


@dataclass(frozen=True, eq=False)
class PilotSet:
    """Unit-modulus random pilots, indexed (symbol g, subcarrier n, antenna)."""

    symbols: np.ndarray  # complex, shape (G, N, n_tx)
    seed: int

    @property
    def n_symbols(self) -> int:
        return self.symbols.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.symbols.shape[1]

    @property
    def n_tx(self) -> int:
        return self.symbols.shape[2]


def pilots(n_symbols: int, n_subcarriers: int, n_tx: int, seed: int) -> PilotSet:
    """i.i.d. pilots e^{j phi}/sqrt(n_tx) with phi uniform on [0, 2 pi).

    Drawn from a counter-based generator in a single vectorized call, so the
    result depends only on the seed and the dimensions.
    """
    if min(n_symbols, n_subcarriers, n_tx) < 1:
        raise ValueError("pilot dimensions must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_symbols, n_subcarriers, n_tx))
    return PilotSet(np.exp(1j * phases) / np.sqrt(n_tx), seed)


def effective_pilots(pilotset: PilotSet, shift: ShiftPair, scene: Scene) -> PilotSet:
    """Pilots as seen through the precoder: s_bar = Phi(n) s per subcarrier."""
    diag = precoder_diagonals(shift, scene)
    return PilotSet(pilotset.symbols * diag[None, :, :], pilotset.seed)


def noiseless_samples(scene: Scene, params: PathParams, shift: ShiftPair, pilotset: PilotSet) -> np.ndarray:
    """Noise-free received samples under the shift; shape (G, N)."""
    shifted = shift_params(params, shift, scene.n_subcarriers, scene.sampling_period_us)
    h = channel_matrix(shifted, scene)
    return np.einsum("nm,gnm->gn", h, pilotset.symbols)


def snr_to_sigma(scene: Scene, params: PathParams, shift: ShiftPair, pilotset: PilotSet, snr_db: float) -> float:
    """Noise standard deviation that realizes ``snr_db``.

    The SNR references the mean per-sample energy of the noiseless received
    signal: sigma^2 = sum |w(g,n)|^2 / (N G 10^(snr/10)).
    """
    w = noiseless_samples(scene, params, shift, pilotset)
    energy = float(np.sum(np.abs(w) ** 2))
    if energy == 0.0:
        raise DegenerateSignalError("noiseless signal is identically zero")
    n_samples = w.shape[0] * w.shape[1]
    return float(np.sqrt(energy / (n_samples * 10.0 ** (snr_db / 10.0))))


def received_samples(scene: Scene, params: PathParams, shift: ShiftPair, pilotset: PilotSet,
                     sigma: float, seed: int = 0) -> np.ndarray:
    """Demonstration helper: noiseless samples plus circular Gaussian noise.

    None of the bound computations draw noise; this exists for inspection
    and example output only.
    """
    w = noiseless_samples(scene, params, shift, pilotset)
    if sigma == 0.0:
        return w
    rng = np.random.Generator(np.random.Philox(seed))
    noise = rng.normal(scale=sigma / np.sqrt(2.0), size=(*w.shape, 2))
    return w + noise[..., 0] + 1j * noise[..., 1]
