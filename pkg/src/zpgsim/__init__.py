"""Photon-counting statistics of quantum emitters from zero-photon generators."""

__version__ = "0.1.0"

from .liouville import (
    HilbertSpace,
    TimeDependentGenerator,
    commutator_superop,
    dissipator_superop,
    embed_operator,
    lindbladian,
    sandwich_superop,
)
from .pulses import PulseShape, square_pulse
from .zpg import (
    EmitterNetwork,
    SourceSpec,
    VirtualDetectorConfig,
    VirtualGrid,
    balanced_splitter,
    build_zpg,
    custom_grid,
    effective_efficiency_matrix,
    fourier_grid,
    threshold_corner_grid,
    two_level_source,
    vacuum_source,
)
from .dynamics import (
    GeneratingTable,
    PropagationSettings,
    batch_generating_solutions,
    propagate,
    zero_photon_probability,
)
from .decomposition import (
    AliasingError,
    ConditionalStateSet,
    Estimate,
    PhotonNumberDistribution,
    ThresholdDistribution,
    g2,
    hom_coincidence,
    hom_network,
    hom_reference_ratio,
    invert_distribution,
    invert_states,
    mean_photon_number,
    parity,
    photon_number_distribution,
    threshold_distribution,
    threshold_from_numbers,
    tvd,
)
from .oracle import (
    OracleCostError,
    QuadratureSettings,
    decay_reference,
    haar_unitary,
    ideal_interference_distribution,
    permanent,
    recursive_pn,
)
