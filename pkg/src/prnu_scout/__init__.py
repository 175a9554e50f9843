"""Source camera identification for video via PRNU sensor fingerprints.

Pipeline: decode frames (imgio) -> wavelet-Wiener residuals (denoise) ->
weighted-average fingerprint (fingerprint) -> NCC/PCE matching (match) ->
closed-set attribution (identify), with a synthetic-sensor simulator and
an evaluation harness (simulate, evaluate) that make the whole chain
verifiable without real footage.
"""

from .denoise import DenoiserConfig, NoiseResidual, extract_residual, wavelet_denoise
from .errors import (
    ConfigError,
    DecodeError,
    DegenerateInputError,
    DimensionMismatchError,
    EmptyInputError,
    FingerprintFormatError,
    PrnuError,
)
from .evaluate import (
    ConfusionMatrix,
    ExperimentConfig,
    confusion_matrix,
    run_experiment,
    success_error_rate,
)
from .fingerprint import (
    Fingerprint,
    FingerprintAccumulator,
    accumulate,
    build_fingerprint,
    finalize,
    load_fingerprint,
    save_fingerprint,
    zero_mean,
)
from .identify import (
    CameraRegistry,
    IdentificationReport,
    identify_pattern_correlation,
    identify_pce_vectors,
    identify_voting,
    load_registry,
)
from .imgio import (
    FrameDirectory,
    FrameImage,
    SamplingPolicy,
    downscale_nearest,
    load_frame,
    sample_indices,
    save_frame_pgm,
    to_luminance,
)
from .match import PceResult, cross_correlate_full, ncc, pce
from .simulate import (
    SyntheticCamera,
    derive_seed,
    flat_frame,
    flat_scene_levels,
    render_flat_video,
    render_frame,
    simulate_camera,
)

__version__ = "0.1.0"

__all__ = [
    "CameraRegistry",
    "ConfigError",
    "ConfusionMatrix",
    "DecodeError",
    "DegenerateInputError",
    "DenoiserConfig",
    "DimensionMismatchError",
    "EmptyInputError",
    "ExperimentConfig",
    "Fingerprint",
    "FingerprintAccumulator",
    "FingerprintFormatError",
    "FrameDirectory",
    "FrameImage",
    "IdentificationReport",
    "NoiseResidual",
    "PceResult",
    "PrnuError",
    "SamplingPolicy",
    "SyntheticCamera",
    "accumulate",
    "build_fingerprint",
    "confusion_matrix",
    "cross_correlate_full",
    "derive_seed",
    "downscale_nearest",
    "extract_residual",
    "finalize",
    "flat_frame",
    "flat_scene_levels",
    "identify_pattern_correlation",
    "identify_pce_vectors",
    "identify_voting",
    "load_fingerprint",
    "load_frame",
    "load_registry",
    "ncc",
    "pce",
    "render_flat_video",
    "render_frame",
    "run_experiment",
    "sample_indices",
    "save_fingerprint",
    "save_frame_pgm",
    "simulate_camera",
    "success_error_rate",
    "to_luminance",
    "wavelet_denoise",
    "zero_mean",
]
