"""Scene geometry and the delay/angle parameter maps.

Positions live in a 2-D plane in meters, delays in microseconds, angles in
radians, and the propagation speed defaults to 300 m/us.  The transmitter
(the user being localized) sits at ``alice``; the receiver is either the
legitimate localizer or the eavesdropper, both assumed to share one location.
Each scatterer contributes one single-bounce path; path index 0 is the direct
path and indices 1..K follow the scatterer list.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateGeometryError, InvalidIntervalError

DEFAULT_C = 300.0  # propagation speed [m/us]


def wrap_interval(x, t1, t2):
    """Wrap ``x`` into the half-open interval (t1, t2].

    Accepts scalars or arrays.  Values already inside the interval are
    returned unchanged (bitwise), so zero shifts stay exact.
    """
    if not t1 < t2:
        raise InvalidIntervalError(f"need t1 < t2, got ({t1}, {t2})")
    x = np.asarray(x, dtype=float)
    length = t2 - t1
    r = t2 - np.mod(t2 - x, length)
    # float mod can land on the excluded endpoint; fold it back in
    r = np.where(r <= t1, t2, np.where(r > t2, r - length, r))
    r = np.where((x > t1) & (x <= t2), x, r)
    return float(r) if r.ndim == 0 else r


@dataclass(frozen=True)
class Position2D:
    """A point in the plane [m]."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DegenerateGeometryError(f"non-finite position ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    def distance_to(self, other: "Position2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Scene:
    """Static geometry plus the radio constants of one experiment.

    Frequencies use GHz/MHz so that, together with c in m/us, the wavelength
    comes out in meters and the sampling period in microseconds without
    conversion factors.
    """

    alice: Position2D
    receiver: Position2D
    scatterers: tuple[Position2D, ...] = ()
    carrier_freq_ghz: float = 60.0
    bandwidth_mhz: float = 30.0
    c: float = DEFAULT_C  # [m/us]
    n_subcarriers: int = 16
    n_tx: int = 16
    n_symbols: int = 16
    cp_duration_us: float | None = None  # defaults to the full delay window
    antenna_spacing_m: float | None = None  # defaults to lambda/2

    def __post_init__(self):
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        self.validate()

    # -- derived constants -------------------------------------------------
    @property
    def wavelength_m(self) -> float:
        return self.c / (self.carrier_freq_ghz * 1e3)

    @property
    def sampling_period_us(self) -> float:
        return 1.0 / self.bandwidth_mhz

    @property
    def delay_window_us(self) -> float:
        """N * T_s, the unambiguous delay span [us]."""
        return self.n_subcarriers * self.sampling_period_us

    @property
    def cp_us(self) -> float:
        return self.delay_window_us if self.cp_duration_us is None else self.cp_duration_us

    @property
    def spacing_m(self) -> float:
        return 0.5 * self.wavelength_m if self.antenna_spacing_m is None else self.antenna_spacing_m

    @property
    def n_paths(self) -> int:
        return 1 + len(self.scatterers)

    def validate(self):
        if min(self.carrier_freq_ghz, self.bandwidth_mhz, self.c) <= 0:
            raise ValueError("carrier frequency, bandwidth and c must be positive")
        if min(self.n_subcarriers, self.n_tx, self.n_symbols) < 1:
            raise ValueError("n_subcarriers, n_tx and n_symbols must be >= 1")
        if self.bandwidth_mhz / (self.carrier_freq_ghz * 1e3) > 0.01:
            warnings.warn("bandwidth is not small against the carrier; narrowband model is strained")
        if self.alice.distance_to(self.receiver) == 0.0:
            raise DegenerateGeometryError("alice and receiver coincide")
        for i, v in enumerate(self.scatterers):
            if v.distance_to(self.alice) == 0.0 or v.distance_to(self.receiver) == 0.0:
                raise DegenerateGeometryError(f"scatterer {i + 1} coincides with an endpoint")
        if not self.cp_us <= self.delay_window_us + 1e-12:
            raise ValueError("cyclic prefix exceeds the delay window")
        delays = paths_from_scene(self).delays_us
        if np.any(delays <= 0) or np.any(delays > self.cp_us + 1e-12):
            raise ValueError("path delays must lie in (0, cp_duration]")


@dataclass(frozen=True, eq=False)
class PathParams:
    """Per-path channel parameters in path order (0 = direct path)."""

    delays_us: np.ndarray
    aods_rad: np.ndarray
    gains: np.ndarray | None = None  # complex amplitudes, unitless

    def __post_init__(self):
        object.__setattr__(self, "delays_us", np.asarray(self.delays_us, dtype=float))
        object.__setattr__(self, "aods_rad", np.asarray(self.aods_rad, dtype=float))
        if self.gains is not None:
            object.__setattr__(self, "gains", np.asarray(self.gains, dtype=complex))
        n = self.delays_us.shape[0]
        if self.aods_rad.shape[0] != n or (self.gains is not None and self.gains.shape[0] != n):
            raise ValueError("delays, aods and gains must have equal length")
        if n == 0:
            raise ValueError("at least one path is required")
        if not np.all(np.isfinite(self.delays_us)) or not np.all(np.isfinite(self.aods_rad)):
            raise ValueError("path parameters must be finite")
        if np.any(self.delays_us <= 0.0):
            raise ValueError("path delays must be positive")
        if np.any(np.abs(self.aods_rad) > math.pi / 2 + 1e-9):
            raise ValueError("departure angles must lie on the principal branch")

    @property
    def n_paths(self) -> int:
        return self.delays_us.shape[0]

    def with_gains(self, gains) -> "PathParams":
        return replace(self, gains=np.asarray(gains, dtype=complex))


@dataclass(frozen=True)
class ShiftPair:
    """The two obfuscation constants: a delay offset [us] and an angle offset [rad]."""

    delta_tau_us: float = 0.0
    delta_theta_rad: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.delta_tau_us) and math.isfinite(self.delta_theta_rad)):
            raise ValueError("shift values must be finite")


@dataclass(frozen=True)
class LocationVector:
    """Alice plus the scatterers, with the path index treated as direct.

    ``k_min`` records which path slot the Alice position was read from; when
    it is nonzero, scatterer ``k_min`` is the one explained by the original
    direct path (the "swapped" labelling).
    """

    alice: Position2D
    scatterers: tuple[Position2D, ...]
    k_min: int = 0

    def as_vector(self) -> np.ndarray:
        parts = [self.alice.as_array()] + [v.as_array() for v in self.scatterers]
        return np.concatenate(parts)

    @property
    def n_paths(self) -> int:
        return 1 + len(self.scatterers)


def _bearing_delay(origin: np.ndarray, target: np.ndarray, via: np.ndarray | None, c: float):
    """Delay and departure angle of one path from ``origin`` (transmitter side)."""
    if via is None:
        end = target
        dist = float(np.hypot(*(target - origin)))
        if dist == 0.0:
            raise DegenerateGeometryError("transmitter and receiver coincide")
    else:
        leg1 = float(np.hypot(*(via - origin)))
        leg2 = float(np.hypot(*(target - via)))
        if leg1 == 0.0 or leg2 == 0.0:
            raise DegenerateGeometryError("scatterer coincides with an endpoint")
        end = via
        dist = leg1 + leg2
    dx, dy = end - origin
    if dx == 0.0 and dy == 0.0:
        raise DegenerateGeometryError("zero-length departure direction")
    return dist / c, math.atan(dy / dx) if dx != 0.0 else math.copysign(math.pi / 2, dy)


def paths_from_scene(scene: Scene) -> PathParams:
    """Delays and departure angles implied by the scene geometry (no gains)."""
    p = scene.alice.as_array()
    z = scene.receiver.as_array()
    taus = []
    thetas = []
    tau, theta = _bearing_delay(p, z, None, scene.c)
    taus.append(tau)
    thetas.append(theta)
    for v in scene.scatterers:
        tau, theta = _bearing_delay(p, z, v.as_array(), scene.c)
        taus.append(tau)
        thetas.append(theta)
    return PathParams(np.array(taus), np.array(thetas))


def pathloss_gains(scene: Scene, reflection_loss: float = 1.0, seed: int = 0) -> np.ndarray:
    """Free-space complex amplitudes for every path.

    Amplitude is lambda / (4 pi * total path length), scaled by
    ``reflection_loss`` for the scattered paths; the phase is the carrier
    phase accumulated over the path, wrapped to (-pi, pi].  The model is
    deterministic; ``seed`` is accepted for interface stability with
    randomized gain models.
    """
    if not 0.0 < reflection_loss <= 1.0:
        raise ValueError("reflection_loss must be in (0, 1]")
    del seed
    params = paths_from_scene(scene)
    dists = scene.c * params.delays_us
    amp = scene.wavelength_m / (4.0 * math.pi * dists)
    amp[1:] *= reflection_loss
    phase = wrap_interval(-2.0 * math.pi * dists / scene.wavelength_m, -math.pi, math.pi)
    return amp * np.exp(1j * phase)


def scene_params(scene: Scene, reflection_loss: float = 1.0) -> PathParams:
    """Geometry-derived parameters with free-space gains attached."""
    return paths_from_scene(scene).with_gains(pathloss_gains(scene, reflection_loss))


def shift_params(params: PathParams, shift: ShiftPair, n_subcarriers: int, t_s_us: float) -> PathParams:
    """Apply the obfuscation map to every path.

    Delays move by delta_tau and wrap on (0, N*T_s]; the sine of each
    departure angle moves by sin(delta_theta) and wraps on (-1, 1], after
    which the angle is read back through arcsin (branch (-pi/2, pi/2]).
    Gains are untouched.
    """
    window = n_subcarriers * t_s_us
    delays = wrap_interval(params.delays_us + shift.delta_tau_us, 0.0, window)
    sines = wrap_interval(np.sin(params.aods_rad) + math.sin(shift.delta_theta_rad), -1.0, 1.0)
    return replace(params, delays_us=np.atleast_1d(delays), aods_rad=np.arcsin(np.atleast_1d(sines)))


def _path_slot_sources(n_paths: int, k_min: int):
    """Which feature generates each path slot: slot k_min is the direct path
    from Alice; when k_min != 0 the original slot 0 is explained by scatterer
    k_min; every other slot j is explained by scatterer j."""
    sources = {}
    for j in range(n_paths):
        if j == k_min:
            sources[j] = 0  # Alice
        elif j == 0:
            sources[j] = k_min  # swapped labelling
        else:
            sources[j] = j
    return sources


def _scatterer_from_path(p: np.ndarray, z: np.ndarray, tau: float, theta: float, c: float, slot: int) -> np.ndarray:
    """Invert one scattered path: the point on the bearing ``theta`` from ``p``
    whose two-leg delay equals ``tau``."""
    ct = c * tau
    ex, ey = math.cos(theta), math.sin(theta)
    num = ct * ct - (z[0] - p[0]) ** 2 - (z[1] - p[1]) ** 2
    den = ct - (z[0] - p[0]) * ex - (z[1] - p[1]) * ey
    if abs(den) <= 1e-12 * ct:
        raise DegenerateGeometryError(f"path {slot}: scattering ellipse is tangent to the bearing")
    b = num / den
    return p + 0.5 * b * np.array([ex, ey])


def locations_from_params(params: PathParams, receiver: Position2D, c: float = DEFAULT_C) -> LocationVector:
    """Invert the geometry: positions that reproduce the given delays/angles.

    The path with the smallest delay (ties: lowest index) is taken as the
    direct one and fixes Alice; every other path places one scatterer.  This
    is the exact inverse of :func:`paths_from_scene` on unshifted parameters
    and yields the mismatched positions when fed shifted parameters.
    """
    z = receiver.as_array()
    k_min = int(np.argmin(params.delays_us))
    tau0 = params.delays_us[k_min]
    th0 = params.aods_rad[k_min]
    p = z - c * tau0 * np.array([math.cos(th0), math.sin(th0)])
    sources = _path_slot_sources(params.n_paths, k_min)
    slot_of_source = {src: slot for slot, src in sources.items()}
    scatterers = []
    for i in range(1, params.n_paths):
        j = slot_of_source[i]
        v = _scatterer_from_path(p, z, params.delays_us[j], params.aods_rad[j], c, j)
        scatterers.append(Position2D(float(v[0]), float(v[1])))
    return LocationVector(Position2D(float(p[0]), float(p[1])), tuple(scatterers), k_min)


def params_from_locations(locations: LocationVector, receiver: Position2D, c: float = DEFAULT_C) -> PathParams:
    """Forward geometry map for a location vector, honoring its slot labelling.

    Slot ``k_min`` carries the direct path from ``locations.alice``; the
    scatterer slots follow the same assignment used by
    :func:`locations_from_params`, so the two functions are mutual inverses.
    """
    p = locations.alice.as_array()
    z = receiver.as_array()
    n = locations.n_paths
    sources = _path_slot_sources(n, locations.k_min)
    delays = np.empty(n)
    aods = np.empty(n)
    for j, src in sources.items():
        via = None if src == 0 else locations.scatterers[src - 1].as_array()
        delays[j], aods[j] = _bearing_delay(p, z, via, c)
    return PathParams(delays, aods)


# -- plain-text serialization ---------------------------------------------

_SCENE_KEYS = (
    "alice", "receiver", "scatterers", "carrier_freq_ghz", "bandwidth_mhz", "c_m_per_us",
    "n_subcarriers", "n_tx", "n_symbols", "cp_duration_us", "antenna_spacing_m",
)


def scene_to_text(scene: Scene) -> str:
    """Serialize a scene to the key-value schema (one ``key = value`` per line)."""
    pos = lambda q: f"{q.x!r} {q.y!r}"
    lines = [
        "# positions in meters, delays in microseconds, angles in radians",
        f"alice = {pos(scene.alice)}",
        f"receiver = {pos(scene.receiver)}",
        "scatterers = " + " ; ".join(pos(v) for v in scene.scatterers),
        f"carrier_freq_ghz = {scene.carrier_freq_ghz!r}",
        f"bandwidth_mhz = {scene.bandwidth_mhz!r}",
        f"c_m_per_us = {scene.c!r}",
        f"n_subcarriers = {scene.n_subcarriers}",
        f"n_tx = {scene.n_tx}",
        f"n_symbols = {scene.n_symbols}",
        f"cp_duration_us = {'' if scene.cp_duration_us is None else repr(scene.cp_duration_us)}",
        f"antenna_spacing_m = {'' if scene.antenna_spacing_m is None else repr(scene.antenna_spacing_m)}",
    ]
    return "\n".join(lines) + "\n"


def _parse_position(text: str, key: str) -> Position2D:
    parts = text.split()
    if len(parts) != 2:
        raise ValueError(f"{key}: expected 'x y', got {text!r}")
    return Position2D(float(parts[0]), float(parts[1]))


def scene_from_text(text: str) -> Scene:
    """Parse the schema written by :func:`scene_to_text`. Unknown keys are errors."""
    values = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed line: {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _SCENE_KEYS:
            raise ValueError(f"unknown scene key: {key}")
        values[key] = val.strip()
    scats = []
    if values.get("scatterers"):
        for chunk in values["scatterers"].split(";"):
            if chunk.strip():
                scats.append(_parse_position(chunk, "scatterers"))
    opt = lambda k: float(values[k]) if values.get(k) else None
    return Scene(
        alice=_parse_position(values["alice"], "alice"),
        receiver=_parse_position(values["receiver"], "receiver"),
        scatterers=tuple(scats),
        carrier_freq_ghz=float(values.get("carrier_freq_ghz", 60.0)),
        bandwidth_mhz=float(values.get("bandwidth_mhz", 30.0)),
        c=float(values.get("c_m_per_us", DEFAULT_C)),
        n_subcarriers=int(values.get("n_subcarriers", 16)),
        n_tx=int(values.get("n_tx", 16)),
        n_symbols=int(values.get("n_symbols", 16)),
        cp_duration_us=opt("cp_duration_us"),
        antenna_spacing_m=opt("antenna_spacing_m"),
    )


def default_scene() -> Scene:
    """The reference two-scatterer scene used throughout the experiments."""
    return Scene(
        alice=Position2D(3.0, 0.0),
        receiver=Position2D(10.0, 5.0),
        scatterers=(Position2D(8.87, -6.05), Position2D(7.44, 8.53)),
    )
