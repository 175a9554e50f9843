"""Similarity measures between residuals and fingerprints.

Two comparators are provided: plain Pearson correlation at zero shift
(`ncc`) and peak-to-correlation energy (`pce`) over the full cyclic
cross-correlation surface. PCE divides the squared correlation peak by the
mean squared correlation outside an exclusion window centered on the peak,
so it is invariant to the scale of either input and equivariant under
cyclic shifts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DimensionMismatchError

DEFAULT_EXCLUSION = 11


def _as_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionMismatchError(f"inputs must be 2D, got {a.shape} and {b.shape}")
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def ncc(a, b) -> float:
    """Pearson correlation between two equal-shaped matrices, in [-1, 1].

    Raises DegenerateInputError when either input has zero variance; an
    undefined correlation is not the same thing as a zero score.
    """
    a, b = _as_pair(a, b)
    a0 = a - a.mean()
    b0 = b - b.mean()
    va = float((a0 * a0).sum())
    vb = float((b0 * b0).sum())
    if va == 0.0 or vb == 0.0:
        raise DegenerateInputError("correlation undefined: an input has zero variance")
    # sqrt(va*vb) rather than sqrt(va)*sqrt(vb): for bit-identical inputs
    # sqrt(fl(va^2)) == va, so ncc(x, x) is exactly 1.0
    rho = float((a0 * b0).sum()) / np.sqrt(va * vb)
    return float(min(1.0, max(-1.0, rho)))


def cross_correlate_full(a, b) -> np.ndarray:
    """Cyclic cross-correlation surface over every 2D shift.

    Both inputs are mean-subtracted, then
    C(s, t) = sum_ij a0(i, j) * b0((i+s) mod H, (j+t) mod W),
    evaluated through the frequency domain in O(HW log HW). The result
    matches the spatial-domain double loop to float rounding.
    """
    a, b = _as_pair(a, b)
    a0 = a - a.mean()
    b0 = b - b.mean()
    spec = np.conj(np.fft.rfft2(a0)) * np.fft.rfft2(b0)
    return np.fft.irfft2(spec, s=a.shape)


@dataclass(frozen=True)
class PceResult:
    """Peak location (cyclic shift), raw peak height, and the PCE score."""

    pce: float
    peak_row: int
    peak_col: int
    peak_value: float


def pce(a, b, exclusion: int = DEFAULT_EXCLUSION) -> PceResult:
    """Peak-to-correlation energy between two equal-shaped matrices.

    The correlation maximum is located over all cyclic shifts; its squared
    height is divided by the mean squared correlation outside the
    exclusion x exclusion neighborhood (cyclic wrap-around) centered on the
    peak. Raises DegenerateInputError on an all-zero surface, e.g. when
    either input is constant.
    """
    if exclusion < 1 or exclusion % 2 == 0:
        raise ValueError(f"exclusion window must be odd and >= 1, got {exclusion}")
    a, b = _as_pair(a, b)
    h, w = a.shape
    if h * w <= exclusion * exclusion:
        raise DimensionMismatchError(
            f"surface {h}x{w} not larger than exclusion window {exclusion}x{exclusion}"
        )
    surface = cross_correlate_full(a, b)
    flat_peak = int(np.argmax(surface))
    peak_row, peak_col = np.unravel_index(flat_peak, surface.shape)
    peak = float(surface[peak_row, peak_col])
    if not surface.any():
        raise DegenerateInputError("zero correlation surface (constant input?)")

    half = exclusion // 2
    keep = np.ones_like(surface, dtype=bool)
    rows = (peak_row + np.arange(-half, half + 1)) % h
    cols = (peak_col + np.arange(-half, half + 1)) % w
    keep[np.ix_(rows, cols)] = False
    background = surface[keep]
    energy = float((background * background).mean())
    if energy == 0.0:
        # a lone analytic peak with a silent background: report it as infinite
        score = float("inf")
    else:
        score = peak * peak / energy
    return PceResult(pce=score, peak_row=int(peak_row), peak_col=int(peak_col), peak_value=peak)
