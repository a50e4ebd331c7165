"""Fisher information of the LOS parameters, AoA bounds, and the position error bound.

Parameter order for the per-RIS channel vector is
``(amplitude, phase offset, azimuth, elevation)``. Position Jacobians use the
column order ``(elevation, azimuth)``, matching the angle residuals used in
fusion; :func:`position_fim` reconciles the two orders.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .channel import pathloss
from .codebook import Codebook
from .geometry import AoaPair, RisDescriptor, as_vec3, element_positions, local_aoa, wavevector

# fraction of the range below which the horizontal offset counts as degenerate
_POLE_EPS = 1e-12


class DegenerateGeometryError(ValueError):
    """Raised where angles or their derivatives are undefined."""


@dataclass(frozen=True)
class ChannelParams:
    amplitude: float
    phase: float
    azimuth: float
    elevation: float

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")

    @property
    def aoa(self) -> AoaPair:
        return AoaPair(self.azimuth, self.elevation)


def los_channel_params(ris: RisDescriptor, source, phase: float = 0.0) -> ChannelParams:
    """True LOS parameters for a source; the phase offset does not affect any bound."""
    p = as_vec3(source)
    aoa = local_aoa(ris, p)
    r = np.linalg.norm(p - ris.position)
    return ChannelParams(np.sqrt(pathloss(r, ris.wavelength)), phase, aoa.azimuth, aoa.elevation)


def wavevector_derivatives(azimuth: float, elevation: float, wavelength: float):
    """``dk/d(azimuth)`` and ``dk/d(elevation)``."""
    c = -2 * np.pi / wavelength
    sn, cn = np.sin(azimuth), np.cos(azimuth)
    ss, cs = np.sin(elevation), np.cos(elevation)
    dk_daz = c * np.array([-ss * sn, ss * cn, 0.0])
    dk_del = c * np.array([cs * cn, cs * sn, -ss])
    return dk_daz, dk_del


def response_and_derivatives(params: ChannelParams, ris: RisDescriptor):
    """Far-field response and its azimuth/elevation derivatives, each shape ``(L,)``."""
    q = element_positions(ris)
    aoa = AoaPair(params.azimuth, params.elevation)
    alpha = np.exp(-1j * (q @ wavevector(aoa, ris.wavelength)))
    dk_daz, dk_del = wavevector_derivatives(params.azimuth, params.elevation, ris.wavelength)
    return alpha, alpha * (-1j * (q @ dk_daz)), alpha * (-1j * (q @ dk_del))


def mu_jacobian(params: ChannelParams, profiles, ris: RisDescriptor, s: complex) -> np.ndarray:
    """Partials of the noiseless outputs for every profile column, shape ``(T, 4)``."""
    U = np.atleast_2d(np.asarray(profiles, dtype=complex))
    if U.shape[0] != ris.num_elements and U.shape[1] == ris.num_elements:
        U = U.T
    alpha, d_az, d_el = response_and_derivatives(params, ris)
    a = params.amplitude
    cols = np.stack([alpha, 1j * a * alpha, a * d_az, a * d_el], axis=1)
    return (U.conj().T @ cols) * (np.exp(1j * params.phase) * s)


def mu_gradient(params: ChannelParams, profile, ris: RisDescriptor, s: complex) -> np.ndarray:
    """Gradient of ``mu = a e^{j phase} u^H alpha(az, el) s`` w.r.t. the four parameters."""
    u = np.asarray(profile, dtype=complex).reshape(-1, 1)
    return mu_jacobian(params, u, ris, s)[0]


def mu(params: ChannelParams, profiles, ris: RisDescriptor, s: complex) -> np.ndarray:
    U = np.atleast_2d(np.asarray(profiles, dtype=complex))
    alpha, _, _ = response_and_derivatives(params, ris)
    return params.amplitude * np.exp(1j * params.phase) * (U.conj().T @ alpha) * s


def channel_fim(params: ChannelParams, codebook: Codebook, ris: RisDescriptor, s: complex,
                noise_power: float) -> np.ndarray:
    """4x4 FIM ``(2/rho) sum_t Re{d mu_t^H d mu_t}``."""
    if not noise_power > 0:
        raise ValueError("noise power must be positive")
    D = mu_jacobian(params, codebook.profiles, ris, s)
    J = (2.0 / noise_power) * np.real(D.conj().T @ D)
    return 0.5 * (J + J.T)


def aoa_fim(J_eta) -> np.ndarray:
    """Schur complement removing amplitude and phase; returns (azimuth, elevation) information."""
    J = np.asarray(J_eta, dtype=float)
    nuis = J[:2, :2]
    if np.linalg.cond(nuis) > 1e14:
        raise np.linalg.LinAlgError("amplitude/phase block is singular: parameters not identifiable")
    out = J[2:, 2:] - J[2:, :2] @ np.linalg.solve(nuis, J[:2, 2:])
    return 0.5 * (out + out.T)


def elevation_first(info_az_el) -> np.ndarray:
    """Reorder a 2x2 (azimuth, elevation) matrix into (elevation, azimuth) order."""
    return np.asarray(info_az_el)[::-1, ::-1].copy()


def aoa_covariance(params: ChannelParams, codebook: Codebook, ris: RisDescriptor, s: complex,
                   noise_power: float) -> np.ndarray:
    """Inverse AoA information in (elevation, azimuth) order."""
    info = elevation_first(aoa_fim(channel_fim(params, codebook, ris, s, noise_power)))
    cov = np.linalg.inv(info)
    return 0.5 * (cov + cov.T)


def position_jacobian(p, ris: RisDescriptor) -> np.ndarray:
    """``[d elevation / dp, d azimuth / dp]`` as a 3x2 matrix."""
    d = as_vec3(p) - ris.position
    r2 = float(d @ d)
    if r2 == 0:
        raise DegenerateGeometryError("position coincides with the RIS reference point")
    r = np.sqrt(r2)
    h2 = d[0] ** 2 + d[1] ** 2
    if h2 <= _POLE_EPS * r2:
        raise DegenerateGeometryError("position lies on the vertical axis through the RIS reference")
    kappa = np.sqrt(1.0 - d[2] ** 2 / r2)
    chi = r**3
    d_el = np.array([
        d[2] * d[0] / (kappa * chi),
        d[2] * d[1] / (kappa * chi),
        (d[2] ** 2 / chi - 1.0 / r) / kappa,
    ])
    d_az = np.array([-d[1] / h2, d[0] / h2, 0.0])
    return np.stack([d_el, d_az], axis=1)


def position_fim(p, ris_list, codebooks, params_list, noise_power: float, s: complex) -> np.ndarray:
    """3x3 position FIM summed over RISs."""
    if not (len(ris_list) == len(codebooks) == len(params_list)):
        raise ValueError("ris_list, codebooks and params_list must have equal length")
    J = np.zeros((3, 3))
    for ris, cb, prm in zip(ris_list, codebooks, params_list):
        info = elevation_first(aoa_fim(channel_fim(prm, cb, ris, s, noise_power)))
        T = position_jacobian(p, ris)
        J += T @ info @ T.T
    return 0.5 * (J + J.T)


def peb(J_p) -> float:
    """Position error bound ``sqrt(trace(J^-1))`` in meters."""
    J = np.asarray(J_p, dtype=float)
    if np.linalg.cond(J) > 1e14:
        raise np.linalg.LinAlgError("position FIM is singular: geometry cannot be localized")
    return float(np.sqrt(np.trace(np.linalg.inv(J))))


def position_error_bound(p, ris_list, codebooks, power_w: float, noise_power: float) -> float:
    """PEB at ``p`` using the true LOS parameters and pilot ``s = sqrt(P)``."""
    params = [los_channel_params(r, p) for r in ris_list]
    return peb(position_fim(p, ris_list, codebooks, params, noise_power, np.sqrt(power_w)))


def write_peb_map(rows, path) -> None:
    """Write ``(x, y, z, peb_m)`` rows as CSV."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", "peb_m"])
        for x, y, z, v in rows:
            w.writerow([repr(float(x)), repr(float(y)), repr(float(z)), repr(float(v))])
