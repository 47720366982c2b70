"""Ground-state-energy estimation from noisy complex-exponential time series.

Core pipeline: simulate a reference-state autocorrelation signal, corrupt it
with Gaussian or finite-shot noise, optionally denoise it by hard
thresholding in the Fourier domain, and read the ground-state energy off a
truncated-SVD least-squares fit of the one-step propagator on (block) Hankel
matrices. Analysis tools cover convergence sweeps, a closed-form bound on
the denoising mean-squared error, a first-order propagator perturbation
bound, and variance-optimal shot allocation.
"""

from .analysis import (
    AnalysisError,
    BoundReport,
    BoundRow,
    ConvergenceCurve,
    CurvePoint,
    DftPeakMethod,
    FdodmdMethod,
    OdmdMethod,
    WedinReport,
    bound_report,
    convergence_sweep,
    default_tau_grid,
    steps_to_stable_accuracy,
    theorem1_lhs_mc,
    theorem1_rhs,
    wedin_bound_report,
)
from .fourier import (
    FourierError,
    PeakEstimate,
    SpectrumDFT,
    ThresholdRule,
    denoise_ensemble,
    dft,
    idft,
    threshold_denoise,
    zero_padded_peak_estimate,
)
from .noise import (
    NoiseError,
    NoiseSpec,
    ShotAllocation,
    derive_seed,
    gaussian_corrupt,
    optimal_shot_allocation,
    shot_sample,
    variance_of_mean,
)
from .odmd import (
    EstimationError,
    GseEstimate,
    HankelPair,
    PropagatorFit,
    build_hankel,
    default_delay,
    extract_gse,
    fdodmd_estimate,
    max_k_len,
    odmd_estimate,
    solve_propagator,
)
from .spectral import (
    RescaleParams,
    Spectrum,
    SpectrumError,
    Trajectory,
    depolarized_signal,
    exact_signal,
    load_spectrum,
    make_reference_overlaps,
    rescale_spectrum,
    unscale_energy,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisError",
    "BoundReport",
    "BoundRow",
    "ConvergenceCurve",
    "CurvePoint",
    "DftPeakMethod",
    "EstimationError",
    "FdodmdMethod",
    "FourierError",
    "GseEstimate",
    "HankelPair",
    "NoiseError",
    "NoiseSpec",
    "OdmdMethod",
    "PeakEstimate",
    "PropagatorFit",
    "RescaleParams",
    "ShotAllocation",
    "Spectrum",
    "SpectrumDFT",
    "SpectrumError",
    "ThresholdRule",
    "Trajectory",
    "WedinReport",
    "bound_report",
    "build_hankel",
    "convergence_sweep",
    "default_delay",
    "default_tau_grid",
    "denoise_ensemble",
    "depolarized_signal",
    "derive_seed",
    "dft",
    "exact_signal",
    "extract_gse",
    "fdodmd_estimate",
    "gaussian_corrupt",
    "idft",
    "load_spectrum",
    "make_reference_overlaps",
    "max_k_len",
    "odmd_estimate",
    "optimal_shot_allocation",
    "rescale_spectrum",
    "shot_sample",
    "solve_propagator",
    "steps_to_stable_accuracy",
    "theorem1_lhs_mc",
    "theorem1_rhs",
    "threshold_denoise",
    "unscale_energy",
    "variance_of_mean",
    "wedin_bound_report",
    "zero_padded_peak_estimate",
]
