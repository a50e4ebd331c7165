"""Localization of a single source with multiple single-RF-chain RISs."""

from .aoa import AoaEstimate, Dictionary, SensingMatrix, SparseEstimate, build_dictionary, estimate_los, omp
from .channel import (
    ObservationBlock,
    Path,
    PathSet,
    ScenarioConfig,
    dbm_to_watt,
    generate_paths,
    observe,
    pathloss,
)
from .codebook import Codebook, dft_codebook, directive_subset, quantize
from .fisher import (
    ChannelParams,
    aoa_fim,
    channel_fim,
    los_channel_params,
    mu_gradient,
    peb,
    position_error_bound,
    position_fim,
    position_jacobian,
)
from .fusion import LineBundle, PositionEstimate, direction_vector, ls_intersect, ml_objective, ml_refine
from .geometry import (
    AoaPair,
    RisDescriptor,
    element_positions,
    local_aoa,
    nearfield_steering,
    steering_vector,
    wavevector,
)

__version__ = "0.1.0"
