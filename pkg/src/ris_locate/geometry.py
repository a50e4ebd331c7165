"""Coordinate frames, angles and spatial response vectors.

Each RIS lives in a local frame whose surface is the local y-z plane and whose
outward normal is local +x. The global frame is reached by rotating the local
frame by the orientation ``beta`` about the global z-axis and translating by the
reference position. Element (0, 0) sits at the reference position.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

TWO_PI = 2.0 * np.pi


def wrap_azimuth(phi):
    """Wrap angles into [0, 2*pi)."""
    out = np.mod(phi, TWO_PI)
    # mod can return exactly 2*pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    return out if np.ndim(out) else float(out)


def wrap_difference(delta):
    """Wrap angle differences into (-pi, pi]."""
    out = np.pi - np.mod(np.pi - np.asarray(delta, dtype=float), TWO_PI)
    return out if np.ndim(out) else float(out)


def as_vec3(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {np.shape(v)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector entries must be finite")
    return arr


def rotation_z(beta: float) -> np.ndarray:
    c, s = np.cos(beta), np.sin(beta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class AoaPair:
    """Azimuth/elevation pair in radians.

    Azimuth is wrapped into [0, 2*pi) and elevation clamped to [0, pi].
    """

    azimuth: float
    elevation: float

    def __post_init__(self):
        object.__setattr__(self, "azimuth", float(wrap_azimuth(float(self.azimuth))))
        object.__setattr__(self, "elevation", float(np.clip(float(self.elevation), 0.0, np.pi)))

    @property
    def signed_azimuth(self) -> float:
        """Azimuth mapped to (-pi, pi]."""
        return wrap_difference(self.azimuth)


@dataclass(frozen=True, eq=False)
class RisDescriptor:
    """A single planar RIS with a uniform ``rows x cols`` element grid.

    Parameters
    ----------
    position : array-like, shape (3,)
        Global position of the reference element (0, 0) in meters.
    orientation : float
        Rotation of the local frame about the global z-axis in radians.
    rows, cols : int
        Element counts along local z and local y respectively.
    wavelength : float
        Carrier wavelength in meters.
    element_spacing : float, optional
        Inter-element spacing; defaults to half a wavelength.
    """

    position: np.ndarray
    orientation: float
    rows: int
    cols: int
    wavelength: float
    element_spacing: float | None = None
    _local: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pos = as_vec3(self.position)
        pos.setflags(write=False)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", float(self.orientation))
        if int(self.rows) < 1 or int(self.cols) < 1:
            raise ValueError("rows and cols must be >= 1")
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "cols", int(self.cols))
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        spacing = self.wavelength / 2 if self.element_spacing is None else float(self.element_spacing)
        if not spacing > 0:
            raise ValueError("element_spacing must be positive")
        object.__setattr__(self, "element_spacing", spacing)
        local = _grid_positions(self.rows, self.cols, spacing)
        local.setflags(write=False)
        object.__setattr__(self, "_local", local)

    @property
    def num_elements(self) -> int:
        return self.rows * self.cols

    @property
    def rotation(self) -> np.ndarray:
        return rotation_z(self.orientation)

    @property
    def normal(self) -> np.ndarray:
        """Outward surface normal in the global frame."""
        return self.rotation[:, 0]

    def to_local(self, p) -> np.ndarray:
        """Express global point(s) ``p`` relative to the reference element, in the local frame."""
        return (np.asarray(p, dtype=float) - self.position) @ self.rotation

    def to_global(self, q) -> np.ndarray:
        return np.asarray(q, dtype=float) @ self.rotation.T + self.position

    def in_front(self, p) -> bool:
        return bool(self.to_local(p)[0] > 0)


def _grid_positions(rows: int, cols: int, spacing: float) -> np.ndarray:
    r, c = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    q = np.zeros((rows * cols, 3))
    q[:, 1] = c.ravel() * spacing
    q[:, 2] = r.ravel() * spacing
    return q


def element_positions(ris: RisDescriptor) -> np.ndarray:
    """Local element positions, shape ``(L, 3)``, row-major over (row, col)."""
    return ris._local


def absolute_element_positions(ris: RisDescriptor) -> np.ndarray:
    """Element positions in the global frame, shape ``(L, 3)``."""
    return ris.to_global(ris._local)


def unit_direction(aoa: AoaPair) -> np.ndarray:
    st = np.sin(aoa.elevation)
    return np.array([st * np.cos(aoa.azimuth), st * np.sin(aoa.azimuth), np.cos(aoa.elevation)])


def wavevector(aoa: AoaPair, wavelength: float) -> np.ndarray:
    """Wavevector ``-(2 pi / lambda) u(phi, theta)`` of a plane wave arriving from ``aoa``."""
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    return -(TWO_PI / wavelength) * unit_direction(aoa)


def steering_vector(positions, aoa: AoaPair, wavelength: float) -> np.ndarray:
    """Far-field spatial response ``exp(-j q_l^T k)`` for each position ``q_l``."""
    q = np.atleast_2d(np.asarray(positions, dtype=float))
    if q.shape[0] == 0:
        raise ValueError("positions must be nonempty")
    return np.exp(-1j * (q @ wavevector(aoa, wavelength)))


def steering_matrix(positions, azimuths, elevations, wavelength: float) -> np.ndarray:
    """Steering vectors for many angle pairs at once, shape ``(L, J)``."""
    q = np.atleast_2d(np.asarray(positions, dtype=float))
    az = np.asarray(azimuths, dtype=float)
    el = np.asarray(elevations, dtype=float)
    st = np.sin(el)
    u = np.stack([st * np.cos(az), st * np.sin(az), np.cos(el)])
    return np.exp(1j * (TWO_PI / wavelength) * (q @ u))


def nearfield_steering(absolute_positions, source, wavelength: float) -> np.ndarray:
    """Spherical-wavefront response ``exp(-j 2 pi r_l / lambda)`` with ``r_l`` the exact distance."""
    q = np.atleast_2d(np.asarray(absolute_positions, dtype=float))
    r = np.linalg.norm(as_vec3(source) - q, axis=1)
    if np.any(r == 0):
        raise ValueError("source coincides with an element position")
    return np.exp(-1j * TWO_PI * r / wavelength)


def local_aoa(ris: RisDescriptor, source) -> AoaPair:
    """Azimuth/elevation of ``source`` as seen from the RIS reference element.

    At the exact poles the azimuth is defined as 0.
    """
    d = as_vec3(source) - ris.position
    r = np.linalg.norm(d)
    if r == 0:
        raise ValueError("source coincides with the RIS reference position")
    theta = np.arccos(np.clip(d[2] / r, -1.0, 1.0))
    if d[0] == 0 and d[1] == 0:
        return AoaPair(0.0, theta)
    return AoaPair(np.arctan2(d[1], d[0]) - ris.orientation, theta)
