"""Experiment configuration: TOML schema, validation and built-in presets."""

from __future__ import annotations

import copy
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import ScenarioConfig
from .geometry import RisDescriptor

SWEEP_AXES = ("power_dbm", "elements_L", "positions_grid")
CODEBOOK_KINDS = ("full_dft", "partial_dft", "directive")


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration."""


@dataclass(frozen=True)
class RisSpec:
    position: tuple
    orientation: float
    rows: int = 8
    cols: int = 8
    codebook: str = "full_dft"
    num_profiles: str = "L"
    bits: int | None = None
    uncertainty: float = 0.0
    random_columns: bool = False

    def profiles_for(self, L: int) -> int:
        """Resolve ``num_profiles`` ("L", "L/k" or an integer) for ``L`` elements."""
        spec = str(self.num_profiles).replace(" ", "")
        if spec == "L":
            return L
        if spec.startswith("L/"):
            return max(1, L // int(spec[2:]))
        return int(spec)

    def descriptor(self, wavelength: float, rows: int | None = None, cols: int | None = None):
        return RisDescriptor(np.array(self.position, dtype=float), self.orientation,
                             rows or self.rows, cols or self.cols, wavelength)


@dataclass(frozen=True)
class EstimatorSettings:
    azimuth_resolution: float = math.radians(1.0)
    elevation_resolution: float = math.radians(1.0)
    azimuth_range: tuple = (-math.pi / 2, math.pi / 2)
    elevation_range: tuple = (0.0, math.pi)
    sparsity: int = 1
    ml_max_iters: int = 100
    ml_tol: float = 1e-6
    covariance: str = "fisher"
    isotropic_std: float = math.radians(1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    user: tuple
    ris: tuple
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    sweep_axis: str = "power_dbm"
    sweep_values: tuple = (10.0,)
    trials: int = 100
    seed: int = 0
    output: str | None = None
    noise_free: bool = False

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def _require(cond, name, msg):
    if not cond:
        raise ConfigError(f"{name}: {msg}")


def _vec3(value, name):
    try:
        v = tuple(float(x) for x in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected three numbers") from None
    _require(len(v) == 3 and all(map(math.isfinite, v)), name, "expected three finite numbers")
    return v


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check cross-field constraints; raises :class:`ConfigError` naming the field."""
    _require(cfg.sweep_axis in SWEEP_AXES, "sweep.axis", f"must be one of {SWEEP_AXES}")
    _require(len(cfg.sweep_values) > 0, "sweep.values", "must be nonempty")
    _require(int(cfg.trials) >= 1, "sweep.trials", "must be >= 1")
    _require(len(cfg.ris) >= 2, "ris", "at least two RIS sections are required")
    room = np.array(cfg.scenario.room)
    for i, r in enumerate(cfg.ris):
        _require(r.codebook in CODEBOOK_KINDS, f"ris[{i}].codebook", f"must be one of {CODEBOOK_KINDS}")
        _require(r.rows >= 1 and r.cols >= 1, f"ris[{i}].rows/cols", "must be >= 1")
        _require(r.bits is None or r.bits >= 1, f"ris[{i}].bits", "must be >= 1 (0 for continuous)")
        _require(r.uncertainty >= 0, f"ris[{i}].uncertainty_deg", "must be >= 0")
    users = cfg.sweep_values if cfg.sweep_axis == "positions_grid" else [cfg.user]
    for j, u in enumerate(users):
        name = f"sweep.values[{j}]" if cfg.sweep_axis == "positions_grid" else "scenario.user"
        u = np.asarray(_vec3(u, name))
        _require(np.all(u >= 0) and np.all(u <= room), name, "user must lie inside the room")
        for i, r in enumerate(cfg.ris):
            desc = r.descriptor(cfg.scenario.wavelength)
            _require(desc.in_front(u), name, f"user is behind ris[{i}]")
    if cfg.sweep_axis == "elements_L":
        for j, L in enumerate(cfg.sweep_values):
            n = math.isqrt(int(L))
            _require(n * n == int(L) and n >= 1, f"sweep.values[{j}]", "elements_L must be a perfect square")
    est = cfg.estimator
    _require(est.azimuth_resolution > 0, "estimator.azimuth_step_deg", "must be positive")
    _require(est.elevation_resolution > 0, "estimator.elevation_step_deg", "must be positive")
    _require(est.sparsity >= 1, "estimator.sparsity", "must be >= 1")
    _require(est.ml_max_iters >= 1, "estimator.ml_max_iters", "must be >= 1")
    _require(est.covariance in ("fisher", "isotropic"), "estimator.covariance",
             "must be 'fisher' or 'isotropic'")
    return cfg


def _get(tbl, key, default, cast, prefix):
    if key not in tbl:
        return default
    try:
        return cast(tbl[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{prefix}{key}: invalid value {tbl[key]!r}") from None


def from_dict(data: dict) -> ExperimentConfig:
    """Build a config from parsed TOML tables."""
    known = {"scenario", "estimator", "sweep", "run", "ris"}
    unknown = set(data) - known
    _require(not unknown, "config", f"unknown sections {sorted(unknown)}")
    sc = dict(data.get("scenario", {}))
    _require("user" in sc, "scenario.user", "missing")
    try:
        scenario = ScenarioConfig(
            room=_vec3(sc.get("room", (10.0, 10.0, 10.0)), "scenario.room"),
            carrier_hz=_get(sc, "carrier_hz", 30e9, float, "scenario."),
            power_dbm=_get(sc, "power_dbm", 10.0, float, "scenario."),
            noise_dbm=_get(sc, "noise_dbm", -79.0, float, "scenario."),
            num_paths=_get(sc, "num_paths", 3, int, "scenario."),
            nlos_power_ratio_db=_get(sc, "nlos_power_ratio_db", 20.0, float, "scenario."),
            field_model=_get(sc, "field_model", "far", str, "scenario."),
            common_path_phase=_get(sc, "common_path_phase", False, bool, "scenario."),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"scenario: {exc}") from None
    user = _vec3(sc["user"], "scenario.user")

    ris_tables = data.get("ris", [])
    _require(isinstance(ris_tables, list), "ris", "use [[ris]] array-of-tables sections")
    ris = []
    for i, t in enumerate(ris_tables):
        pre = f"ris[{i}]."
        _require("position" in t, f"{pre}position", "missing")
        bits = _get(t, "bits", 0, int, pre)
        ris.append(RisSpec(
            position=_vec3(t["position"], f"{pre}position"),
            orientation=math.radians(_get(t, "orientation_deg", 0.0, float, pre)),
            rows=_get(t, "rows", 8, int, pre),
            cols=_get(t, "cols", 8, int, pre),
            codebook=_get(t, "codebook", "full_dft", str, pre),
            num_profiles=_get(t, "num_profiles", "L", str, pre),
            bits=bits if bits > 0 else None,
            uncertainty=math.radians(_get(t, "uncertainty_deg", 0.0, float, pre)),
            random_columns=_get(t, "random_columns", False, bool, pre),
        ))

    es = data.get("estimator", {})
    pre = "estimator."
    estimator = EstimatorSettings(
        azimuth_resolution=math.radians(_get(es, "azimuth_step_deg", 1.0, float, pre)),
        elevation_resolution=math.radians(_get(es, "elevation_step_deg", 1.0, float, pre)),
        azimuth_range=tuple(math.radians(v) for v in _get(es, "azimuth_range_deg", (-90.0, 90.0), tuple, pre)),
        elevation_range=tuple(math.radians(v) for v in _get(es, "elevation_range_deg", (0.0, 180.0), tuple, pre)),
        sparsity=_get(es, "sparsity", 1, int, pre),
        ml_max_iters=_get(es, "ml_max_iters", 100, int, pre),
        ml_tol=_get(es, "ml_tol", 1e-6, float, pre),
        covariance=_get(es, "covariance", "fisher", str, pre),
        isotropic_std=math.radians(_get(es, "isotropic_std_deg", 1.0, float, pre)),
    )

    sw = data.get("sweep", {})
    axis = _get(sw, "axis", "power_dbm", str, "sweep.")
    values = sw.get("values", [scenario.power_dbm])
    _require(isinstance(values, list), "sweep.values", "must be a list")
    if axis == "positions_grid":
        values = tuple(_vec3(v, f"sweep.values[{j}]") for j, v in enumerate(values))
    else:
        values = tuple(_get({"v": v}, "v", None, float, f"sweep.values[{j}]") for j, v in enumerate(values))
    run = data.get("run", {})
    cfg = ExperimentConfig(
        scenario=scenario, user=user, ris=tuple(ris), estimator=estimator,
        sweep_axis=axis, sweep_values=values,
        trials=_get(sw, "trials", 100, int, "sweep."),
        seed=_get(run, "seed", 0, int, "run."),
        output=run.get("output"),
        noise_free=_get(run, "noise_free", False, bool, "run."),
    )
    return validate(cfg)


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from None
    return from_dict(data)


# Constants of the simulated room used by all presets.
_ROOM = {"room": [10.0, 10.0, 10.0], "carrier_hz": 30e9, "noise_dbm": -79.0, "power_dbm": 10.0,
         "num_paths": 3, "nlos_power_ratio_db": 20.0, "user": [4.0, 8.0, 2.0]}

# Reference points on the x=0, y=0, x=10 and y=10 walls; orientation = outward normal.
_WALL_RIS = [
    {"position": [0.0, 5.0, 7.0], "orientation_deg": 0.0},
    {"position": [5.0, 0.0, 1.0], "orientation_deg": 90.0},
    {"position": [10.0, 6.0, 8.0], "orientation_deg": 180.0},
    {"position": [4.0, 10.0, 6.0], "orientation_deg": 270.0},
]

PRESETS = {
    "fig3": {
        "scenario": dict(_ROOM),
        "ris": [dict(r) for r in _WALL_RIS[:3]],
        "sweep": {"axis": "elements_L", "values": [25, 36, 49, 64, 81, 100], "trials": 300},
    },
    "fig4": {
        "scenario": dict(_ROOM),
        "ris": [dict(r) for r in _WALL_RIS[:3]],
        "sweep": {"axis": "power_dbm", "values": [-15, -10, -5, 0, 5, 10, 15], "trials": 500},
    },
    "fig4-4ris": {
        "scenario": dict(_ROOM),
        "ris": [dict(r) for r in _WALL_RIS],
        "sweep": {"axis": "power_dbm", "values": [-15, -10, -5, 0, 5, 10, 15], "trials": 500},
    },
    "fig2-same-wall": {
        "scenario": dict(_ROOM, user=[5.0, 5.0, 5.0]),
        "ris": [
            {"position": [0.0, 2.0, 5.0], "orientation_deg": 0.0},
            {"position": [0.0, 5.0, 5.0], "orientation_deg": 0.0},
            {"position": [0.0, 8.0, 5.0], "orientation_deg": 0.0},
        ],
        "sweep": {"axis": "power_dbm", "values": [10], "trials": 1},
    },
    "fig2-diff-walls": {
        "scenario": dict(_ROOM, user=[5.0, 5.0, 5.0]),
        "ris": [
            {"position": [0.0, 5.0, 5.0], "orientation_deg": 0.0},
            {"position": [5.0, 0.0, 5.0], "orientation_deg": 90.0},
            {"position": [10.0, 5.0, 5.0], "orientation_deg": 180.0},
        ],
        "sweep": {"axis": "power_dbm", "values": [10], "trials": 1},
    },
}


def preset(name: str, **overrides) -> ExperimentConfig:
    """A built-in configuration; keyword overrides replace top-level config fields."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = from_dict(copy.deepcopy(PRESETS[name]))
    return cfg.with_overrides(**overrides) if overrides else cfg


def dump_toml(cfg: ExperimentConfig) -> str:
    """Serialize a config back into the TOML schema read by :func:`load_config`."""
    sc, est = cfg.scenario, cfg.estimator

    def num(v):
        return repr(float(v))

    def vec(v):
        return "[" + ", ".join(num(x) for x in v) + "]"

    lines = ["[scenario]",
             f"room = {vec(sc.room)}", f"carrier_hz = {num(sc.carrier_hz)}",
             f"power_dbm = {num(sc.power_dbm)}", f"noise_dbm = {num(sc.noise_dbm)}",
             f"num_paths = {sc.num_paths}", f"nlos_power_ratio_db = {num(sc.nlos_power_ratio_db)}",
             f'field_model = "{sc.field_model}"',
             f"common_path_phase = {str(sc.common_path_phase).lower()}",
             f"user = {vec(cfg.user)}", "",
             "[estimator]",
             f"azimuth_step_deg = {num(math.degrees(est.azimuth_resolution))}",
             f"elevation_step_deg = {num(math.degrees(est.elevation_resolution))}",
             f"azimuth_range_deg = {vec(map(math.degrees, est.azimuth_range))}",
             f"elevation_range_deg = {vec(map(math.degrees, est.elevation_range))}",
             f"sparsity = {est.sparsity}", f"ml_max_iters = {est.ml_max_iters}",
             f"ml_tol = {num(est.ml_tol)}", f'covariance = "{est.covariance}"',
             f"isotropic_std_deg = {num(math.degrees(est.isotropic_std))}", "",
             "[sweep]", f'axis = "{cfg.sweep_axis}"']
    if cfg.sweep_axis == "positions_grid":
        lines.append("values = [" + ", ".join(vec(v) for v in cfg.sweep_values) + "]")
    else:
        lines.append("values = [" + ", ".join(num(v) for v in cfg.sweep_values) + "]")
    lines += [f"trials = {cfg.trials}", "", "[run]", f"seed = {cfg.seed}",
              f"noise_free = {str(cfg.noise_free).lower()}"]
    if cfg.output:
        lines.append(f'output = "{cfg.output}"')
    for r in cfg.ris:
        lines += ["", "[[ris]]", f"position = {vec(r.position)}",
                  f"orientation_deg = {num(math.degrees(r.orientation))}",
                  f"rows = {r.rows}", f"cols = {r.cols}", f'codebook = "{r.codebook}"',
                  f'num_profiles = "{r.num_profiles}"', f"bits = {r.bits or 0}",
                  f"uncertainty_deg = {num(math.degrees(r.uncertainty))}",
                  f"random_columns = {str(r.random_columns).lower()}"]
    return "\n".join(lines) + "\n"
