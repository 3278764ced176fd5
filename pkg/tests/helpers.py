"""Independent oracles used by the test suite.

Everything here recomputes quantities by a different route than the package:
explicit loops instead of vectorized algebra, finite differences instead of
analytic derivatives, parametric line intersection instead of slope form.
"""

from __future__ import annotations

import numpy as np

from locspoof import PathParams, PilotSet, Scene


def brute_channel_vector(n: int, params: PathParams, scene: Scene) -> np.ndarray:
    """Per-path, per-antenna loop re-summation of the channel row vector."""
    out = np.zeros(scene.n_tx, dtype=complex)
    for k in range(params.n_paths):
        phase = np.exp(-2j * np.pi * n * params.delays_us[k] / scene.delay_window_us)
        for m in range(scene.n_tx):
            steer = np.exp(-2j * np.pi * m * scene.spacing_m * np.sin(params.aods_rad[k]) / scene.wavelength_m)
            out[m] += params.gains[k] * phase * np.conj(steer)
    return out


def brute_sample(g: int, n: int, params: PathParams, pilotset: PilotSet, scene: Scene) -> complex:
    h = brute_channel_vector(n, params, scene)
    return complex(np.sum(h * pilotset.symbols[g, n]))


def brute_signal_energy(params: PathParams, pilotset: PilotSet, scene: Scene) -> float:
    total = 0.0
    for g in range(pilotset.n_symbols):
        for n in range(pilotset.n_subcarriers):
            total += abs(brute_sample(g, n, params, pilotset, scene)) ** 2
    return total


def sample_fn_of_params(g: int, n: int, pilotset: PilotSet, scene: Scene):
    """The (g, n) noiseless sample as a function of the real parameter vector
    [delays; aods; Re gains; Im gains]."""
    def fn(xi: np.ndarray) -> complex:
        k1 = xi.size // 4
        params = PathParams(xi[:k1], xi[k1:2 * k1], xi[2 * k1:3 * k1] + 1j * xi[3 * k1:])
        return brute_sample(g, n, params, pilotset, scene)
    return fn


def central_difference(fn, x: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central finite differences with a step relative to each parameter's scale."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros(x.size, dtype=complex)
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1.0e-3)
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        grad[i] = (fn(xp) - fn(xm)) / (2.0 * h)
    return grad


def params_to_vector(params: PathParams) -> np.ndarray:
    return np.concatenate([params.delays_us, params.aods_rad,
                           np.real(params.gains), np.imag(params.gains)])


def fd_fim(params: PathParams, pilotset: PilotSet, sigma: float, scene: Scene,
           rel_step: float = 1e-6) -> np.ndarray:
    """Fisher matrix assembled entirely from finite-difference gradients."""
    x = params_to_vector(params)
    grads = []
    for g in range(pilotset.n_symbols):
        for n in range(pilotset.n_subcarriers):
            grads.append(central_difference(sample_fn_of_params(g, n, pilotset, scene), x, rel_step))
    gm = np.array(grads)
    j = (2.0 / sigma**2) * np.real(gm.conj().T @ gm)
    return 0.5 * (j + j.T)


def parametric_line_intersection(p1, angle1, p2, angle2):
    """Intersection of two rays given by point + global angle, via the
    parametric 2x2 system (no slope/tan form)."""
    d1 = np.array([np.cos(angle1), np.sin(angle1)])
    d2 = np.array([np.cos(angle2), np.sin(angle2)])
    a = np.column_stack([d1, -d2])
    rhs = np.asarray(p2, dtype=float) - np.asarray(p1, dtype=float)
    t = np.linalg.solve(a, rhs)
    return np.asarray(p1, dtype=float) + t[0] * d1


def spearman_rank_corr(a, b) -> float:
    """Spearman rank correlation, computed from scratch."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def ranks(x):
        order = np.argsort(x, kind="stable")
        r = np.empty_like(order, dtype=float)
        r[order] = np.arange(x.size)
        return r

    ra, rb = ranks(a), ranks(b)
    ra -= ra.mean()
    rb -= rb.mean()
    return float(np.sum(ra * rb) / np.sqrt(np.sum(ra**2) * np.sum(rb**2)))


def random_scene(rng: np.random.Generator, n_scatterers: int | None = None) -> Scene:
    """A well-conditioned random scene: receiver east of the transmitter and
    scatterers spread around them (keeps all departure angles on the
    principal branch and the paths separated)."""
    from locspoof import Position2D

    if n_scatterers is None:
        n_scatterers = int(rng.integers(0, 4))
    alice = Position2D(float(rng.uniform(-5, 5)), float(rng.uniform(-5, 5)))
    receiver = Position2D(alice.x + float(rng.uniform(4, 15)), alice.y + float(rng.uniform(-6, 6)))
    scatterers = []
    while len(scatterers) < n_scatterers:
        v = Position2D(alice.x + float(rng.uniform(2, 12)), alice.y + float(rng.uniform(-12, 12)))
        if min(v.distance_to(alice), v.distance_to(receiver)) > 1.0:
            scatterers.append(v)
    return Scene(alice=alice, receiver=receiver, scatterers=tuple(scatterers))
