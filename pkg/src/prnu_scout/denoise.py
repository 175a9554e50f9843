"""Wavelet-domain Wiener denoiser and noise-residual extraction.

The sensor noise estimate for one frame is the residual

    W = frame - denoise(frame)

where denoise() attenuates each detail coefficient c by the Wiener gain
H = sx2 / (sx2 + sigma0^2). The local signal variance sx2 is estimated as
max(0, boxmean(c^2, w) - sigma0^2) minimized over a set of window sizes,
assuming stationary white noise of strength sigma0 across all subbands.
The coarsest approximation band passes through untouched.

The frame mean is subtracted before the transform and added back after, so
a constant frame yields an exactly zero residual instead of one at the
level of filter rounding noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from . import dwt
from .errors import DimensionMismatchError
from .imgio import FrameImage


@dataclass(frozen=True)
class DenoiserConfig:
    """Knobs of the wavelet Wiener filter.

    sigma0 is the assumed white-noise standard deviation in pixel-value
    units; levels the decomposition depth; variance_windows the odd local
    window sizes tried for the signal-variance estimate (smallest estimate
    wins per coefficient).
    """

    sigma0: float = 3.0
    levels: int = 4
    variance_windows: tuple[int, ...] = (3, 5, 7, 9)

    def __post_init__(self):
        if self.sigma0 < 0:
            raise ValueError(f"sigma0 must be >= 0, got {self.sigma0}")
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if not self.variance_windows:
            raise ValueError("variance_windows must not be empty")
        for w in self.variance_windows:
            if w < 3 or w % 2 == 0:
                raise ValueError(f"window sizes must be odd and >= 3, got {w}")


@dataclass(frozen=True)
class NoiseResidual:
    """Per-frame noise estimate, same shape as its source frame."""

    values: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"residual must be 2D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("residual contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


def _wiener_gain(band: np.ndarray, sigma0: float, windows: tuple[int, ...]) -> np.ndarray:
    """Per-coefficient attenuation H = sx2/(sx2 + sigma0^2), H=0 where both vanish."""
    noise_var = sigma0 * sigma0
    energy = band * band
    sx2 = None
    for w in windows:
        # 'reflect' is half-sample symmetric extension, the same boundary
        # rule the transform itself uses
        local = uniform_filter(energy, size=w, mode="reflect")
        est = np.maximum(local - noise_var, 0.0)
        sx2 = est if sx2 is None else np.minimum(sx2, est)
    denom = sx2 + noise_var
    return np.divide(sx2, denom, out=np.zeros_like(sx2), where=denom > 0)


def wavelet_denoise(frame: FrameImage, cfg: DenoiserConfig = DenoiserConfig()) -> np.ndarray:
    """Denoised version of the frame as a float64 matrix.

    Frames smaller than 2^levels on a side are symmetric-extended up to
    that size for the transform and cropped back afterwards.
    """
    if frame.height < 2 or frame.width < 2:
        raise DimensionMismatchError(
            f"frame too small to denoise: {frame.width}x{frame.height}"
        )
    x = frame.pixels
    min_side = 2 ** cfg.levels
    pad_r = max(0, min_side - x.shape[0])
    pad_c = max(0, min_side - x.shape[1])
    if pad_r or pad_c:
        x = np.pad(x, ((0, pad_r), (0, pad_c)), mode="symmetric")

    mean = x.mean()
    approx, details, shapes = dwt.analyze(x - mean, cfg.levels)
    attenuated = [
        tuple(band * _wiener_gain(band, cfg.sigma0, cfg.variance_windows) for band in level)
        for level in details
    ]
    y = dwt.synthesize(approx, attenuated, shapes) + mean
    if pad_r or pad_c:
        y = y[: frame.height, : frame.width]
    return y


def extract_residual(frame: FrameImage, cfg: DenoiserConfig = DenoiserConfig()) -> NoiseResidual:
    """W = frame - denoise(frame), tagged with the frame's video position."""
    denoised = wavelet_denoise(frame, cfg)
    return NoiseResidual(values=frame.pixels - denoised, frame_index=frame.source_index)
