"""Multipath scenario generation and single-RF-chain observation synthesis."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .codebook import Codebook
from .geometry import (
    SPEED_OF_LIGHT,
    AoaPair,
    RisDescriptor,
    absolute_element_positions,
    as_vec3,
    element_positions,
    local_aoa,
    nearfield_steering,
    steering_vector,
)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((float(dbm) - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * np.log10(watt) + 30.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical constants of a simulated room.

    Powers are given in dBm and exposed in watts through properties.
    """

    room: tuple = (10.0, 10.0, 10.0)
    carrier_hz: float = 30e9
    power_dbm: float = 10.0
    noise_dbm: float = -79.0
    num_paths: int = 3
    nlos_power_ratio_db: float = 20.0
    field_model: str = "far"
    common_path_phase: bool = False

    def __post_init__(self):
        room = tuple(float(v) for v in as_vec3(self.room))
        object.__setattr__(self, "room", room)
        if min(room) <= 0:
            raise ValueError("room dimensions must be positive")
        if not self.carrier_hz > 0:
            raise ValueError("carrier_hz must be positive")
        if int(self.num_paths) < 1:
            raise ValueError("num_paths must be >= 1")
        object.__setattr__(self, "num_paths", int(self.num_paths))
        if self.field_model not in ("far", "near"):
            raise ValueError("field_model must be 'far' or 'near'")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def power_w(self) -> float:
        return dbm_to_watt(self.power_dbm)

    @property
    def noise_w(self) -> float:
        return dbm_to_watt(self.noise_dbm)

    @property
    def pilot(self) -> complex:
        """Pilot symbol with ``|s|^2 = P``; real and positive."""
        return complex(np.sqrt(self.power_w))


@dataclass(frozen=True)
class Path:
    gain: complex
    aoa: AoaPair
    distance: float
    is_los: bool
    # point the wavefront emanates from as seen by the RIS: source or scatterer
    origin: np.ndarray = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class PathSet:
    ris_index: int
    paths: tuple
    phase_offset: float

    def __post_init__(self):
        if not self.paths or not self.paths[0].is_los:
            raise ValueError("the first path must be the LOS path")
        if any(p.is_los for p in self.paths[1:]):
            raise ValueError("only the first path may be LOS")

    @property
    def los(self) -> Path:
        return self.paths[0]


@dataclass(frozen=True, eq=False)
class ObservationBlock:
    y: np.ndarray
    codebook: Codebook
    ris_index: int = 0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=complex).reshape(-1)
        if y.shape[0] != self.codebook.num_profiles:
            raise ValueError("observation length does not match codebook size")
        object.__setattr__(self, "y", y)


def pathloss(r: float, wavelength: float) -> float:
    """Free-space power attenuation ``lambda^2 / (4 pi r)^2``."""
    if not r > 0:
        raise ValueError("distance must be positive")
    return wavelength**2 / (4 * np.pi * r) ** 2


def _draw_scatterer(config: ScenarioConfig, ris: RisDescriptor, rng, max_tries: int = 10_000):
    room = np.asarray(config.room)
    for _ in range(max_tries):
        pt = rng.uniform(0.0, 1.0, size=3) * room
        if ris.in_front(pt):
            return pt
    raise RuntimeError("could not place a scatterer in front of the RIS")


def generate_paths(config: ScenarioConfig, ris: RisDescriptor, source, rng,
                   ris_index: int = 0) -> PathSet:
    """Draw a LOS path plus ``num_paths - 1`` single-bounce scattered paths.

    Scatterers are uniform inside the room and in front of the RIS. Every
    scattered path is ``nlos_power_ratio_db`` below the LOS amplitude. Unless
    ``config.common_path_phase`` is set, each scattered path also gets its own
    uniform phase on top of the common offset.
    """
    p = as_vec3(source)
    if not ris.in_front(p):
        raise ValueError("source lies behind the RIS plane")
    lam = config.wavelength
    offset = rng.uniform(0.0, 2 * np.pi)
    r1 = float(np.linalg.norm(p - ris.position))
    amp = np.sqrt(pathloss(r1, lam))
    paths = [Path(amp * np.exp(1j * offset), local_aoa(ris, p), r1, True, p)]
    nlos_amp = amp * 10.0 ** (-config.nlos_power_ratio_db / 20.0)
    for _ in range(config.num_paths - 1):
        sc = _draw_scatterer(config, ris, rng)
        extra = 0.0 if config.common_path_phase else rng.uniform(0.0, 2 * np.pi)
        dist = float(np.linalg.norm(sc - p) + np.linalg.norm(ris.position - sc))
        paths.append(Path(nlos_amp * np.exp(1j * (offset + extra)), local_aoa(ris, sc), dist, False, sc))
    return PathSet(ris_index, tuple(paths), offset)


def path_response(path: Path, ris: RisDescriptor, field_model: str = "far") -> np.ndarray:
    """Spatial response of one path at the RIS elements.

    The near-field response is referenced to the reference element so that
    both models share the same phase convention at ``p_m``.
    """
    if field_model == "far":
        return steering_vector(element_positions(ris), path.aoa, ris.wavelength)
    if field_model == "near":
        if path.origin is None:
            raise ValueError("near-field synthesis needs the path origin point")
        a = nearfield_steering(absolute_element_positions(ris), path.origin, ris.wavelength)
        r0 = np.linalg.norm(path.origin - ris.position)
        return a * np.exp(2j * np.pi * r0 / ris.wavelength)
    raise ValueError(f"unknown field model {field_model!r}")


def noiseless_signal(pathset: PathSet, ris: RisDescriptor, field_model: str = "far") -> np.ndarray:
    """``sum_c h_c alpha_c`` at the elements, before the pilot and the profiles."""
    x = np.zeros(ris.num_elements, dtype=complex)
    for path in pathset.paths:
        x += path.gain * path_response(path, ris, field_model)
    return x


def observe(pathset: PathSet, ris: RisDescriptor, codebook: Codebook, s: complex,
            noise_power: float, rng, field_model: str = "far") -> ObservationBlock:
    """Synthesize ``y_t = u_t^H (sum_c h_c alpha_c s + w_t)`` for every profile.

    ``w_t ~ CN(0, rho I_L)`` is drawn independently per slot.
    """
    U = codebook.profiles
    L, T = U.shape
    if L != ris.num_elements:
        raise ValueError(f"codebook has {L} rows but the RIS has {ris.num_elements} elements")
    if noise_power < 0:
        raise ValueError("noise power must be >= 0")
    x = noiseless_signal(pathset, ris, field_model) * s
    y = U.conj().T @ x
    if noise_power > 0:
        w = np.sqrt(noise_power / 2) * (rng.standard_normal((L, T)) + 1j * rng.standard_normal((L, T)))
        y = y + np.einsum("lt,lt->t", U.conj(), w)
    return ObservationBlock(y, codebook, pathset.ris_index)


def dump_observations(blocks, path) -> None:
    """Write observations as CSV rows ``m, t, re, im``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "t", "re", "im"])
        for blk in blocks:
            for t, v in enumerate(blk.y):
                w.writerow([blk.ris_index, t, repr(float(v.real)), repr(float(v.imag))])
