"""Information-rate-optimal transmit filters for ISI channels under
reduced-memory detection: receiver design, spectrum optimization,
waterfilling baselines, MIMO and shaping-pulse extensions, and
Monte-Carlo rate verification.
"""

from .airsim import (
    AirEstimate,
    Alphabet,
    SimConfig,
    TrellisSpec,
    bpsk_awgn_air,
    frontend_filter,
    mismatched_air_estimate,
    simulate_channel,
)
from .errors import (
    AiroptError,
    ConfigError,
    GridError,
    IllConditionedError,
    NumericalError,
    OptimizationError,
    SimulationError,
)
from .ftn import (
    FtnScenario,
    PulseDesign,
    awgn_ase_bound,
    brickwall_spectrum,
    ebn0_from_air,
    optimize_pulse,
    pulse_time_domain,
    rrc_folded_spectrum,
)
from .mimo import (
    MimoChannelTaps,
    MimoOptimizedFilter,
    SubchannelSet,
    mimo_flat_air,
    mimo_waterfill_capacity,
    optimize_mimo,
    svd_spectra,
)
from .optimize import (
    OptimizedFilter,
    OptimizerOptions,
    evaluate_objective,
    flat_spectrum_receiver,
    optimize_for_spectrum,
    optimize_transmit_filter,
    stationarity_check,
)
from .shortening import (
    ShorteningProblem,
    ShorteningSolution,
    gaussian_air,
    matched_gaussian_air,
    mismatch_kernel_lags,
    solve_prediction,
    solve_shortening,
)
from .spectral import (
    ChannelTaps,
    DEFAULT_GRID,
    FrequencyGrid,
    SampledSpectrum,
    TrigPolyCoeffs,
    channel_autocorrelation,
    dtft,
    dtft_power,
    solve_water_level,
    spectrum_from_coeffs,
    spectrum_power,
    zero_phase_taps,
)
from .waterfill import WaterfillSolution, combined_memory, waterfill

__version__ = "0.1.0"
