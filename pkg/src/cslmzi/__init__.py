"""Collapse-noise (CSL) contrast loss in Mach-Zehnder atom interferometry.

Closed-form phase variance and contrast damping, an independent Monte Carlo
oracle, the finite-wave-packet analysis with the overlap bound, and the
least-squares inference pipeline producing (r_C, lambda) exclusion curves.
"""

from .config import RunConfig
from .constants import CONSTANTS, PhysicalConstants
from .core import (
    RUBIDIUM_87,
    AtomSpecies,
    CslParams,
    InterferometerConfig,
    PhaseStatistics,
    contrast,
    erf,
    mz_phase,
    phase_statistics,
    phase_variance,
    phase_variance_large_rc,
    phase_variance_small_rc,
    population,
    variance_bracket,
)
from .inference import (
    ContrastSeries,
    DecayFit,
    ExclusionCurve,
    FringeFit,
    FringeScan,
    FringeTruth,
    ReadNoise,
    contrast_series_from_fits,
    exclusion_curve,
    fit_contrast_decay,
    fit_fringe,
    fit_lambda_at_rc,
    lambda_upper_bound,
    synth_fringe,
    synth_fringes,
)
from .montecarlo import (
    McEstimate,
    NoiseModel,
    PathPair,
    estimate_contrast_mc,
    estimate_phase_variance_mc,
    riemann_phase_variance,
    sample_phase,
    sample_phases,
    step_variance,
)
from .wavepacket import (
    SpreadReport,
    WavePacketPair,
    coherence_damping,
    csl_position_variance,
    decoherence_factor,
    heating_energy,
    overlap_bound,
    packet_width,
    spread_report,
)

__version__ = "0.1.0"
