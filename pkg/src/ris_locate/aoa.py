"""Beamspace OMP estimation of angles of arrival from single-RF-chain observations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ObservationBlock
from .codebook import Codebook
from .fisher import ChannelParams, aoa_covariance
from .geometry import AoaPair, RisDescriptor, element_positions, steering_matrix

DEFAULT_AZIMUTH_RANGE = (-np.pi / 2, np.pi / 2)
DEFAULT_ELEVATION_RANGE = (0.0, np.pi)
DEFAULT_RESOLUTION = np.deg2rad(1.0)

# dictionary must be at least this many times larger than T
MIN_OVERCOMPLETENESS = 4


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Steering vectors on a uniform azimuth x elevation grid.

    Column ``j`` corresponds to ``(azimuths[j], elevations[j])``; azimuth is the
    slow index.
    """

    matrix: np.ndarray
    azimuths: np.ndarray
    elevations: np.ndarray
    azimuth_resolution: float
    elevation_resolution: float

    @property
    def size(self) -> int:
        return self.matrix.shape[1]

    def grid_point(self, j: int) -> AoaPair:
        return AoaPair(self.azimuths[j], self.elevations[j])


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    if not step > 0:
        raise ValueError("resolution must be positive")
    if hi < lo:
        raise ValueError("range upper bound below lower bound")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    ax = lo + step * np.arange(n)
    if hi - ax[-1] > 1e-9 * max(1.0, abs(hi)):
        ax = np.append(ax, hi)
    else:
        ax[-1] = hi
    return ax


def build_dictionary(ris: RisDescriptor, azimuth_range=DEFAULT_AZIMUTH_RANGE,
                     elevation_range=DEFAULT_ELEVATION_RANGE,
                     azimuth_resolution: float = DEFAULT_RESOLUTION,
                     elevation_resolution: float = DEFAULT_RESOLUTION) -> Dictionary:
    """Uniform grid over both ranges, endpoints included.

    When a range is not a whole number of steps, the last point is the upper
    endpoint itself.
    """
    az = _axis(*azimuth_range, azimuth_resolution)
    el = _axis(*elevation_range, elevation_resolution)
    AZ, EL = np.meshgrid(az, el, indexing="ij")
    AZ, EL = AZ.ravel(), EL.ravel()
    if AZ.size == 0:
        raise ValueError("empty dictionary grid")
    A = steering_matrix(element_positions(ris), AZ, EL, ris.wavelength)
    return Dictionary(A, AZ, EL, float(azimuth_resolution), float(elevation_resolution))


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """``Psi = U^H A`` with its column norms, shareable across OMP runs."""

    psi: np.ndarray
    norms: np.ndarray

    @classmethod
    def build(cls, codebook: Codebook, dictionary: Dictionary) -> "SensingMatrix":
        if codebook.num_elements != dictionary.matrix.shape[0]:
            raise ValueError("codebook and dictionary disagree on the number of elements")
        psi = codebook.profiles.conj().T @ dictionary.matrix
        psi.setflags(write=False)
        return cls(psi, np.linalg.norm(psi, axis=0))


@dataclass
class SparseEstimate:
    aoas: list
    gains: np.ndarray
    indices: list
    residual_norms: list = field(default_factory=list)


@dataclass(frozen=True)
class AoaEstimate:
    """Estimated LOS angles with their covariance, ordered (elevation, azimuth)."""

    aoa: AoaPair
    covariance: np.ndarray
    ris_index: int = 0
    gain: complex = 0j


def omp(y, codebook: Codebook, dictionary: Dictionary, sparsity: int,
        sensing: SensingMatrix | None = None) -> SparseEstimate:
    """Orthogonal matching pursuit on ``y ~ Psi x``.

    Correlations are normalized by the column norms of ``Psi``; ties go to the
    lowest grid index.
    """
    y = y.y if isinstance(y, ObservationBlock) else np.asarray(y, dtype=complex).reshape(-1)
    T = codebook.num_profiles
    if sparsity < 1:
        raise ValueError("sparsity must be >= 1")
    if sparsity > T:
        raise ValueError(f"sparsity {sparsity} exceeds the number of observations T={T}")
    if dictionary.size < MIN_OVERCOMPLETENESS * T:
        raise ValueError(f"dictionary too small: J={dictionary.size} < {MIN_OVERCOMPLETENESS}*T")
    if y.shape[0] != T:
        raise ValueError("observation length does not match codebook")
    if sensing is None:
        sensing = SensingMatrix.build(codebook, dictionary)
    psi, norms = sensing.psi, sensing.norms
    safe = np.where(norms > 0, norms, np.inf)

    support: list[int] = []
    residual = y.copy()
    gains = np.zeros(0, dtype=complex)
    res_norms = []
    for _ in range(sparsity):
        corr = np.abs(psi.conj().T @ residual) / safe
        if support:
            corr[support] = -1.0
        support.append(int(np.argmax(corr)))
        sub = psi[:, support]
        gains, *_ = np.linalg.lstsq(sub, y, rcond=None)
        residual = y - sub @ gains
        res_norms.append(float(np.linalg.norm(residual)))
    return SparseEstimate([dictionary.grid_point(j) for j in support], gains, support, res_norms)


def estimate_los(y, codebook: Codebook, dictionary: Dictionary, ris: RisDescriptor, s: complex,
                 noise_power: float, num_paths: int = 1,
                 sensing: SensingMatrix | None = None) -> AoaEstimate:
    """Pick the strongest OMP component as LOS and attach its Fisher covariance.

    The covariance is evaluated at the estimated angles and amplitude.
    """
    est = omp(y, codebook, dictionary, num_paths, sensing)
    k = int(np.argmax(np.abs(est.gains)))
    aoa, gain = est.aoas[k], complex(est.gains[k])
    ris_index = y.ris_index if isinstance(y, ObservationBlock) else 0
    amp = abs(gain / s)
    if not amp > 0:
        raise ValueError("estimated LOS gain is zero; no signal to localize")
    params = ChannelParams(amp, float(np.angle(gain / s)), aoa.azimuth, aoa.elevation)
    # only the relative weighting across RISs matters downstream, so a noiseless
    # run is scored with unit noise
    rho = noise_power if noise_power > 0 else 1.0
    try:
        cov = aoa_covariance(params, codebook, ris, s, rho)
    except np.linalg.LinAlgError:
        # e.g. a pole of the grid, where azimuth carries no information
        cov = np.diag([dictionary.elevation_resolution**2, dictionary.azimuth_resolution**2]) / 12.0
    return AoaEstimate(aoa, cov, ris_index, gain)
