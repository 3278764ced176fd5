"""Experiment orchestration: config files, runners, CSV and SVG emission.

Config files are flat ``section.key = value`` text; unknown keys are
rejected so typos fail loudly.  All runners are deterministic functions of
(config, seeds): the CSV they produce is byte-identical across reruns and
worker counts.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .design import DesignGrid, grid_eval, random_shift_average
from .errors import ConfigError, LocspoofError, NoDataError, SingularInformationError
from .fisher import BoundReport, crb_bob
from .mcrb import mcrb, pseudo_true_locations
from .robustness import SubArrayScene, deviation_sweep, leakage_fim, subarray_aperture
from .scene import (Position2D, Scene, ShiftPair, default_scene, locations_from_params,
                    scene_params, shift_params)
from .waveform import PilotSet, pilots, snr_to_sigma

SCHEMA_VERSION = 1
ENV_SEED_PILOT = "LOCSPOOF_SEED_PILOT"
ENV_SEED_SHIFT = "LOCSPOOF_SEED_SHIFT"

KINDS = ("bounds", "design", "average", "leakage", "subarray", "pseudo-true")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "bounds"
    scene: Scene = field(default_factory=default_scene)
    reflection_loss: float = 1.0
    shift: ShiftPair = field(default_factory=ShiftPair)
    snr_db: tuple[float, float, float] = (-20.0, 40.0, 5.0)  # lo, hi, step
    seed_pilot: int = 1
    seed_shift: int = 2
    out_dir: str = "out"
    n_realizations: int = 1000
    design_delta_tau: tuple[float, float, float] | None = None
    design_delta_theta: tuple[float, float, float] | None = None
    design_snr_db: float = 20.0
    psi_slack: float = 0.0
    subarray_n_rx: int = 16
    subarray_orientation_rad: float = 0.0
    subarray_delta_theta: tuple[float, float, float] = (-math.pi / 2, math.pi / 2, 0.01)
    subarray_delta_tau_values: tuple[float, ...] = (0.0,)
    threads: int = 1

    def snr_values(self) -> list[float]:
        lo, hi, step = self.snr_db
        if step <= 0 or hi < lo:
            raise ConfigError("bad SNR sweep", "snr")
        return [float(x) for x in np.arange(lo, hi + step * 0.5, step)]

    def design_grid(self) -> DesignGrid:
        base = DesignGrid.default_for(self.scene)
        tau = self.design_delta_tau or base.delta_tau_us
        theta = self.design_delta_theta or base.delta_theta_rad
        return DesignGrid(tau, theta, self.design_snr_db)


# -- config text format ----------------------------------------------------

def _fmt_pos(p: Position2D) -> str:
    return f"{p.x!r} {p.y!r}"


def _parse_pos(text: str, key: str) -> Position2D:
    parts = text.split()
    if len(parts) != 2:
        raise ConfigError(f"expected 'x y', got {text!r}", key)
    return Position2D(float(parts[0]), float(parts[1]))


def _fmt_triple(t) -> str:
    return " ".join(repr(float(x)) for x in t)


def _parse_triple(text: str, key: str):
    parts = text.split()
    if len(parts) != 3:
        raise ConfigError(f"expected 'lo hi step', got {text!r}", key)
    return tuple(float(x) for x in parts)


def serialize_config(cfg: ExperimentConfig) -> str:
    s = cfg.scene
    lines = [
        "# locspoof experiment configuration",
        "# positions in meters, delays in microseconds, angles in radians",
        f"experiment.kind = {cfg.kind}",
        f"scene.alice = {_fmt_pos(s.alice)}",
        f"scene.receiver = {_fmt_pos(s.receiver)}",
        "scene.scatterers = " + " ; ".join(_fmt_pos(v) for v in s.scatterers),
        f"scene.carrier_freq_ghz = {s.carrier_freq_ghz!r}",
        f"scene.bandwidth_mhz = {s.bandwidth_mhz!r}",
        f"scene.c_m_per_us = {s.c!r}",
        f"scene.n_subcarriers = {s.n_subcarriers}",
        f"scene.n_tx = {s.n_tx}",
        f"scene.n_symbols = {s.n_symbols}",
        f"scene.cp_duration_us = {'' if s.cp_duration_us is None else repr(s.cp_duration_us)}",
        f"scene.antenna_spacing_m = {'' if s.antenna_spacing_m is None else repr(s.antenna_spacing_m)}",
        f"scene.reflection_loss = {cfg.reflection_loss!r}",
        f"shift.delta_tau_us = {cfg.shift.delta_tau_us!r}",
        f"shift.delta_theta_rad = {cfg.shift.delta_theta_rad!r}",
        f"snr.sweep_db = {_fmt_triple(cfg.snr_db)}",
        f"seeds.pilot = {cfg.seed_pilot}",
        f"seeds.shift = {cfg.seed_shift}",
        f"output.dir = {cfg.out_dir}",
        f"average.n_realizations = {cfg.n_realizations}",
        f"design.delta_tau_us = {'' if cfg.design_delta_tau is None else _fmt_triple(cfg.design_delta_tau)}",
        f"design.delta_theta_rad = {'' if cfg.design_delta_theta is None else _fmt_triple(cfg.design_delta_theta)}",
        f"design.snr_db = {cfg.design_snr_db!r}",
        f"design.psi_slack = {cfg.psi_slack!r}",
        f"subarray.n_rx = {cfg.subarray_n_rx}",
        f"subarray.true_orientation_rad = {cfg.subarray_orientation_rad!r}",
        f"subarray.delta_theta_rad = {_fmt_triple(cfg.subarray_delta_theta)}",
        "subarray.delta_tau_us = " + " ; ".join(repr(float(x)) for x in cfg.subarray_delta_tau_values),
        f"runtime.threads = {cfg.threads}",
    ]
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> ExperimentConfig:
    values: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"malformed line: {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key in values:
            raise ConfigError("duplicate key", key)
        values[key] = val.strip()

    known = {
        "experiment.kind", "scene.alice", "scene.receiver", "scene.scatterers",
        "scene.carrier_freq_ghz", "scene.bandwidth_mhz", "scene.c_m_per_us",
        "scene.n_subcarriers", "scene.n_tx", "scene.n_symbols", "scene.cp_duration_us",
        "scene.antenna_spacing_m", "scene.reflection_loss", "shift.delta_tau_us",
        "shift.delta_theta_rad", "snr.sweep_db", "seeds.pilot", "seeds.shift", "output.dir",
        "average.n_realizations", "design.delta_tau_us", "design.delta_theta_rad",
        "design.snr_db", "design.psi_slack", "subarray.n_rx", "subarray.true_orientation_rad",
        "subarray.delta_theta_rad", "subarray.delta_tau_us", "runtime.threads",
    }
    for key in values:
        if key not in known:
            raise ConfigError("unknown key", key)

    def get(key, default=None):
        v = values.get(key, "")
        return v if v != "" else default

    kind = get("experiment.kind", "bounds")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}", "experiment.kind")

    scatterers = []
    for chunk in get("scene.scatterers", "").split(";") if get("scene.scatterers") else []:
        if chunk.strip():
            scatterers.append(_parse_pos(chunk, "scene.scatterers"))
    base = default_scene()
    try:
        scene = Scene(
            alice=_parse_pos(get("scene.alice", _fmt_pos(base.alice)), "scene.alice"),
            receiver=_parse_pos(get("scene.receiver", _fmt_pos(base.receiver)), "scene.receiver"),
            scatterers=tuple(scatterers) if get("scene.scatterers") is not None else base.scatterers,
            carrier_freq_ghz=float(get("scene.carrier_freq_ghz", base.carrier_freq_ghz)),
            bandwidth_mhz=float(get("scene.bandwidth_mhz", base.bandwidth_mhz)),
            c=float(get("scene.c_m_per_us", base.c)),
            n_subcarriers=int(get("scene.n_subcarriers", base.n_subcarriers)),
            n_tx=int(get("scene.n_tx", base.n_tx)),
            n_symbols=int(get("scene.n_symbols", base.n_symbols)),
            cp_duration_us=(float(get("scene.cp_duration_us")) if get("scene.cp_duration_us") else None),
            antenna_spacing_m=(float(get("scene.antenna_spacing_m")) if get("scene.antenna_spacing_m") else None),
        )
    except (ValueError, LocspoofError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "scene") from exc

    tau_values = tuple(
        float(x) for x in get("subarray.delta_tau_us", "0.0").split(";") if x.strip()
    ) or (0.0,)
    try:
        return ExperimentConfig(
            kind=kind,
            scene=scene,
            reflection_loss=float(get("scene.reflection_loss", 1.0)),
            shift=ShiftPair(float(get("shift.delta_tau_us", 0.0)), float(get("shift.delta_theta_rad", 0.0))),
            snr_db=_parse_triple(get("snr.sweep_db", "-20.0 40.0 5.0"), "snr.sweep_db"),
            seed_pilot=int(get("seeds.pilot", 1)),
            seed_shift=int(get("seeds.shift", 2)),
            out_dir=get("output.dir", "out"),
            n_realizations=int(get("average.n_realizations", 1000)),
            design_delta_tau=(_parse_triple(get("design.delta_tau_us"), "design.delta_tau_us")
                              if get("design.delta_tau_us") else None),
            design_delta_theta=(_parse_triple(get("design.delta_theta_rad"), "design.delta_theta_rad")
                                if get("design.delta_theta_rad") else None),
            design_snr_db=float(get("design.snr_db", 20.0)),
            psi_slack=float(get("design.psi_slack", 0.0)),
            subarray_n_rx=int(get("subarray.n_rx", 16)),
            subarray_orientation_rad=float(get("subarray.true_orientation_rad", 0.0)),
            subarray_delta_theta=_parse_triple(get("subarray.delta_theta_rad", "-1.5707963267948966 1.5707963267948966 0.01"),
                                               "subarray.delta_theta_rad"),
            subarray_delta_tau_values=tau_values,
            threads=int(get("runtime.threads", 1)),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


# -- core evaluation -------------------------------------------------------

def bound_sweep(scene: Scene, shift: ShiftPair, pilotset: PilotSet, snr_db_list,
                params=None, sigma_ref: float | None = None) -> list[BoundReport]:
    """Both receivers' bounds across an SNR sweep for one shift.

    The information matrices scale as 1/sigma^2, so they are built once at
    unit noise and rescaled per SNR; sigma_ref is the 0 dB noise level of
    the precoded signal.
    """
    if params is None:
        params = scene_params(scene)
    if sigma_ref is None:
        sigma_ref = snr_to_sigma(scene, params, shift, pilotset, 0.0)
    snrs = [float(s) for s in snr_db_list]
    shifted = shift_params(params, shift, scene.n_subcarriers, scene.sampling_period_us)
    k_min = int(np.argmin(shifted.delays_us))
    try:
        bob = crb_bob(scene, shift, pilotset, 1.0, params)
        eve = mcrb(scene, shift, pilotset, 1.0, params)
    except SingularInformationError as exc:
        flag = (type(exc).__name__,)
        nan = float("nan")
        return [BoundReport(s, shift, nan, nan, nan, float("inf"), float("inf"),
                            k_min, exc.condition_number, exc.condition_number, flag)
                for s in snrs]
    reports = []
    for snr in snrs:
        scale = sigma_ref**2 * 10.0 ** (-snr / 10.0)  # sigma^2 at this SNR
        xi = scale * bob.covariance
        psi_est = scale * eve.estimation_part
        psi = psi_est + eve.mismatch_part
        reports.append(BoundReport(
            snr_db=snr,
            shift=shift,
            crb_trace_alice=float(xi[0, 0] + xi[1, 1]),
            mcrb_trace_alice=float(psi[0, 0] + psi[1, 1]),
            mismatch_distance=eve.mismatch_distance,
            rmse_bob=float(np.sqrt(xi[0, 0] + xi[1, 1])),
            rmse_eve=float(np.sqrt(psi[0, 0] + psi[1, 1])),
            k_min=eve.pseudo_true.k_min,
            cond_bob=bob.condition_number,
            cond_eve=eve.condition_number,
        ))
    return reports


def evaluate_bounds_point(scene: Scene, shift: ShiftPair, pilotset: PilotSet, snr_db: float,
                          params=None) -> BoundReport:
    """One (shift, SNR) point; see :func:`bound_sweep`."""
    return bound_sweep(scene, shift, pilotset, [snr_db], params)[0]


# -- runners ----------------------------------------------------------------

def _report_to_row(experiment: str, r: BoundReport) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "experiment": experiment,
        "snr_db": r.snr_db,
        "delta_tau_us": r.shift.delta_tau_us,
        "delta_theta_rad": r.shift.delta_theta_rad,
        "rmse_bob_m": r.rmse_bob,
        "rmse_eve_m": r.rmse_eve,
        "mismatch_m": r.mismatch_distance,
        "k_min": r.k_min,
        "cond_bob": r.cond_bob,
        "cond_eve": r.cond_eve,
        "flags": ";".join(r.flags),
    }


def run_bounds(config: ExperimentConfig) -> list[dict]:
    pilotset = pilots(config.scene.n_symbols, config.scene.n_subcarriers, config.scene.n_tx,
                      config.seed_pilot)
    params = scene_params(config.scene, config.reflection_loss)
    reports = bound_sweep(config.scene, config.shift, pilotset, config.snr_values(), params)
    return [_report_to_row("bounds", r) for r in reports]


def run_design(config: ExperimentConfig):
    surface = grid_eval(config.scene, config.design_grid(), config.seed_pilot, config.reflection_loss)
    rows = [{
        "schema": SCHEMA_VERSION,
        "experiment": "design",
        "snr_db": config.design_snr_db,
        "delta_tau_us": r["delta_tau"],
        "delta_theta_rad": r["delta_theta"],
        "rmse_eve_m": r["rmse_eve"],
        "mismatch_m": r["mismatch"],
        "cos_sq_kmin": r["cos_sq"],
        "k_min": r["k_min"],
        "flags": r["flag"],
    } for r in surface.to_rows()]
    return rows, surface


def run_average(config: ExperimentConfig) -> list[dict]:
    pilotset = pilots(config.scene.n_symbols, config.scene.n_subcarriers, config.scene.n_tx,
                      config.seed_pilot)
    params = scene_params(config.scene, config.reflection_loss)
    averaged = random_shift_average(config.scene, config.n_realizations, config.seed_shift,
                                    config.snr_values(), pilotset, params, threads=config.threads)
    return [{
        "schema": SCHEMA_VERSION,
        "experiment": "average",
        "snr_db": a.snr_db,
        "rmse_bob_m": a.rmse_bob,
        "rmse_eve_m": a.rmse_eve,
        "n_realizations": a.n_realizations,
        "flags": "",
    } for a in averaged]


def run_leakage(config: ExperimentConfig) -> list[dict]:
    pilotset = pilots(config.scene.n_symbols, config.scene.n_subcarriers, config.scene.n_tx,
                      config.seed_pilot)
    params = scene_params(config.scene, config.reflection_loss)
    sigma = snr_to_sigma(config.scene, params, config.shift, pilotset, config.snr_values()[0])
    leak = leakage_fim(config.scene, config.shift, pilotset, sigma, params)
    singular = leak.min_singular_ratio < 1e-10
    # the singularity is the experiment's finding, not a degeneracy; the flags
    # column stays reserved for non-finite values
    return [{
        "schema": SCHEMA_VERSION,
        "experiment": "leakage",
        "snr_db": config.snr_values()[0],
        "delta_tau_us": config.shift.delta_tau_us,
        "delta_theta_rad": config.shift.delta_theta_rad,
        "fim_size": leak.size,
        "rank": leak.rank,
        "min_singular_ratio": leak.min_singular_ratio,
        "singular": str(singular).lower(),
        "flags": "",
    }]


def run_subarray(config: ExperimentConfig) -> list[dict]:
    scene = config.scene
    s = SubArrayScene(
        eve_center=scene.receiver,
        aperture_m=subarray_aperture(config.subarray_n_rx, scene.wavelength_m),
        true_orientation_rad=config.subarray_orientation_rad,
        alice=scene.alice,
        c=scene.c,
        wavelength_m=scene.wavelength_m,
    )
    lo, hi, step = config.subarray_delta_theta
    thetas = np.arange(lo, hi + step * 0.5, step)
    points = deviation_sweep(s, thetas, config.subarray_delta_tau_values)
    return [{
        "schema": SCHEMA_VERSION,
        "experiment": "subarray",
        "delta_theta_rad": p.delta_theta_rad,
        "delta_tau_us": p.delta_tau_us,
        "deviation_m": p.deviation_m,
        "flags": p.flag,
    } for p in points]


def run_pseudo_true(config: ExperimentConfig) -> list[dict]:
    params = scene_params(config.scene, config.reflection_loss)
    shifted = shift_params(params, config.shift, config.scene.n_subcarriers,
                           config.scene.sampling_period_us)
    pseudo = pseudo_true_locations(shifted, config.scene.receiver, config.scene.c)
    truth = locations_from_params(params, config.scene.receiver, config.scene.c)
    rows = [{
        "schema": SCHEMA_VERSION,
        "experiment": "pseudo-true",
        "feature": "alice",
        "x_m": pseudo.locations.alice.x,
        "y_m": pseudo.locations.alice.y,
        "true_x_m": truth.alice.x,
        "true_y_m": truth.alice.y,
        "offset_m": pseudo.locations.alice.distance_to(truth.alice),
        "k_min": pseudo.k_min,
        "swapped": str(pseudo.swapped).lower(),
        "flags": "",
    }]
    for i, (v, tv) in enumerate(zip(pseudo.locations.scatterers, truth.scatterers), start=1):
        rows.append({
            "schema": SCHEMA_VERSION,
            "experiment": "pseudo-true",
            "feature": f"scatterer_{i}",
            "x_m": v.x,
            "y_m": v.y,
            "true_x_m": tv.x,
            "true_y_m": tv.y,
            "offset_m": v.distance_to(tv),
            "k_min": pseudo.k_min,
            "swapped": str(pseudo.swapped).lower(),
            "flags": "",
        })
    return rows


RUNNERS = {
    "bounds": run_bounds,
    "average": run_average,
    "leakage": run_leakage,
    "subarray": run_subarray,
    "pseudo-true": run_pseudo_true,
}


# -- CSV and plots -----------------------------------------------------------

def _format_cell(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(v)


def write_csv(rows: list[dict], path: str) -> None:
    """UTF-8 CSV with a header row; floats at 12 significant digits, '.' decimal."""
    if not rows:
        raise NoDataError("no rows to write")
    fieldnames = list(rows[0].keys())
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_format_cell(row.get(k, "")) for k in fieldnames])


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: line series over a shared x, or a heatmap over two axes."""

    kind: str               # "lines" | "heatmap"
    x: str
    series: tuple[str, ...] = ()   # lines: y columns
    value: str = ""                # heatmap: cell column
    y: str = ""                    # heatmap: second axis
    title: str = ""
    log_y: bool = False
    xlabel: str = ""
    ylabel: str = ""


def emit_plot(rows: list[dict], spec: PlotSpec, path: str) -> str:
    """Render rows to an SVG plus a plain-text data sidecar; returns the SVG path.

    Non-finite heatmap cells are drawn at the saturated maximum and hatched;
    the sidecar always carries the raw values.
    """
    if not rows:
        raise NoDataError("no rows to plot")
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "locspoof"
    import matplotlib.pyplot as plt

    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    sidecar = os.path.splitext(path)[0] + ".txt"
    cols = [spec.x] + (list(spec.series) if spec.kind == "lines" else [spec.y, spec.value])
    with open(sidecar, "w", encoding="utf-8") as fh:
        fh.write("\t".join(cols) + "\n")
        for row in rows:
            fh.write("\t".join(_format_cell(row.get(c, "")) for c in cols) + "\n")

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if spec.kind == "lines":
        x = np.array([float(r[spec.x]) for r in rows])
        for name in spec.series:
            y = np.array([float(r.get(name, "nan")) for r in rows])
            ax.plot(x, y, marker="o", label=name)
        if spec.log_y:
            ax.set_yscale("log")
        ax.legend()
    elif spec.kind == "heatmap":
        xs = sorted({float(r[spec.x]) for r in rows})
        ys = sorted({float(r[spec.y]) for r in rows})
        xi = {v: i for i, v in enumerate(xs)}
        yi = {v: i for i, v in enumerate(ys)}
        grid = np.full((len(ys), len(xs)), np.nan)
        for r in rows:
            grid[yi[float(r[spec.y])], xi[float(r[spec.x])]] = float(r[spec.value])
        finite = grid[np.isfinite(grid)]
        vmax = float(finite.max()) if finite.size else 1.0
        shown = np.where(np.isfinite(grid), grid, vmax)
        mesh = ax.pcolormesh(xs, ys, shown, shading="nearest", vmax=vmax)
        fig.colorbar(mesh, ax=ax)
        bad = np.argwhere(~np.isfinite(grid))
        dx = xs[1] - xs[0] if len(xs) > 1 else 1.0
        dy = ys[1] - ys[0] if len(ys) > 1 else 1.0
        for j, i in bad:  # hatch the saturated cells
            ax.add_patch(plt.Rectangle((xs[i] - dx / 2, ys[j] - dy / 2), dx, dy,
                                       fill=False, hatch="//", edgecolor="white", linewidth=0.0))
    else:
        raise ValueError(f"unknown plot kind {spec.kind!r}")
    ax.set_xlabel(spec.xlabel or spec.x)
    ax.set_ylabel(spec.ylabel or (spec.value if spec.kind == "heatmap" else ""))
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def default_plot_spec(kind: str) -> PlotSpec | None:
    if kind in ("bounds", "average"):
        return PlotSpec("lines", "snr_db", ("rmse_bob_m", "rmse_eve_m"), title=f"{kind}: localization RMSE bounds",
                        log_y=True, xlabel="SNR [dB]", ylabel="RMSE [m]")
    if kind == "design":
        return PlotSpec("heatmap", "delta_tau_us", value="rmse_eve_m", y="delta_theta_rad",
                        title="eavesdropper RMSE bound", xlabel="delay shift [us]",
                        ylabel="angle shift [rad]")
    if kind == "subarray":
        return PlotSpec("lines", "delta_theta_rad", ("deviation_m",), title="sub-array perceived-location error",
                        log_y=True, xlabel="angle shift [rad]", ylabel="deviation [m]")
    return None


def run_experiment(config: ExperimentConfig, emit_plots: bool = True) -> tuple[list[dict], str]:
    """Execute the configured experiment; returns (rows, csv_path)."""
    if config.kind == "design":
        rows, _ = run_design(config)
    else:
        rows = RUNNERS[config.kind](config)
    name = config.kind.replace("-", "_")
    csv_path = os.path.join(config.out_dir, f"{name}.csv")
    write_csv(rows, csv_path)
    if emit_plots:
        spec = default_plot_spec(config.kind)
        if spec is not None:
            emit_plot(rows, spec, os.path.join(config.out_dir, f"{name}.svg"))
    return rows, csv_path


def degenerate_fraction(rows: list[dict]) -> float:
    """Fraction of rows flagged or carrying a non-finite bound value."""
    if not rows:
        return 1.0
    bad = 0
    for row in rows:
        flagged = bool(row.get("flags"))
        nonfinite = any(
            isinstance(v, float) and not math.isfinite(v)
            for k, v in row.items() if k.startswith("rmse") or k == "deviation_m"
        )
        bad += int(flagged or nonfinite)
    return bad / len(rows)
