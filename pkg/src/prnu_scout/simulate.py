"""Synthetic sensor simulator for end-to-end pipeline verification.

A virtual camera observes a scene through the multiplicative sensor model

    out = clamp((1 + k) * scene + additive_noise, 0, 255)

where k is the camera's fixed zero-mean per-pixel sensitivity deviation
(the planted fingerprint) and the additive term is fresh Gaussian noise per
frame. Scenes default to flat constant-luminance backgrounds (gray steps
plus the luma of pure red, green and blue), which train fingerprints well
precisely because they carry no structure of their own.

All randomness flows through numpy SeedSequence objects derived from
(seed, string tags, integers), so every camera, video and frame is
reproducible bit-for-bit on any platform.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .imgio import FrameImage, to_luminance

# gray steps ordered mid-levels first: sampling at rate 1/N always keeps
# frame 0, and the saturated black/white scenes carry the least sensor
# information (clamping truncates the noise there)
_GRAY_LEVELS = (128.0, 64.0, 192.0)
_EDGE_LEVELS = (255.0, 0.0)


def derive_seed(*parts) -> np.random.SeedSequence:
    """Deterministic SeedSequence from a mix of ints and strings."""
    words: list[int] = []
    for part in parts:
        if isinstance(part, (int, np.integer)):
            words.append(int(part) & 0xFFFFFFFF)
            words.append((int(part) >> 32) & 0xFFFFFFFF)
        elif isinstance(part, str):
            digest = hashlib.sha256(part.encode("utf-8")).digest()
            words.extend(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))
        else:
            raise TypeError(f"seed parts must be int or str, got {type(part).__name__}")
    return np.random.SeedSequence(words)


@dataclass(frozen=True)
class SyntheticCamera:
    """A virtual sensor: its label, planted pattern k, and noise settings."""

    label: str
    k: np.ndarray
    strength: float
    additive_sigma: float
    seed: object

    def __post_init__(self):
        arr = np.array(self.k, dtype=np.float64, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "k", arr)

    @property
    def width(self) -> int:
        return self.k.shape[1]

    @property
    def height(self) -> int:
        return self.k.shape[0]


def simulate_camera(
    label: str,
    width: int,
    height: int,
    strength: float,
    additive_sigma: float = 0.0,
    seed=0,
) -> SyntheticCamera:
    """Draw the planted pattern k ~ N(0, strength^2) i.i.d., then mean-center it."""
    if width < 1 or height < 1:
        raise ValueError(f"camera dimensions must be positive, got {width}x{height}")
    if strength < 0 or additive_sigma < 0:
        raise ValueError("noise strengths must be >= 0")
    rng = np.random.default_rng(seed)
    k = rng.normal(0.0, strength, (height, width))
    k = k - k.mean()
    return SyntheticCamera(
        label=label, k=k, strength=strength, additive_sigma=additive_sigma, seed=seed
    )


def render_frame(cam: SyntheticCamera, scene: FrameImage, frame_seed=0) -> FrameImage:
    """One observation of `scene` through the camera, clamped to [0, 255]."""
    if (scene.height, scene.width) != (cam.height, cam.width):
        raise DimensionMismatchError(
            f"scene {scene.width}x{scene.height} does not match camera "
            f"{cam.width}x{cam.height}"
        )
    rng = np.random.default_rng(frame_seed)
    out = (1.0 + cam.k) * scene.pixels + rng.normal(0.0, cam.additive_sigma, cam.k.shape)
    return FrameImage(pixels=np.clip(out, 0.0, 255.0), source_index=scene.source_index)


def flat_scene_levels() -> tuple[float, ...]:
    """Gray steps plus the luminance of pure red, green and blue.

    Ordered from the most informative scenes (mid grays, primary-color
    luma) to the clamp-degraded extremes (white, black).
    """
    one = np.ones((1, 1))
    zero = np.zeros((1, 1))
    red = float(to_luminance(255 * one, zero, zero)[0, 0])
    green = float(to_luminance(zero, 255 * one, zero)[0, 0])
    blue = float(to_luminance(zero, zero, 255 * one)[0, 0])
    return _GRAY_LEVELS + (red, green, blue) + _EDGE_LEVELS


def flat_frame(width: int, height: int, level: float, source_index: int = 0) -> FrameImage:
    """A constant-luminance scene frame."""
    return FrameImage(
        pixels=np.full((height, width), float(level)), source_index=source_index
    )


def render_flat_video(cam: SyntheticCamera, n_frames: int, *seed_parts) -> list[FrameImage]:
    """Render a video of flat scenes cycling through the default levels.

    Per-frame noise seeds derive from (seed_parts..., frame index), so the
    same arguments always reproduce the same video.
    """
    if n_frames < 1:
        raise ValueError(f"n_frames must be >= 1, got {n_frames}")
    levels = flat_scene_levels()
    frames = []
    for i in range(n_frames):
        scene = flat_frame(cam.width, cam.height, levels[i % len(levels)], source_index=i)
        frames.append(render_frame(cam, scene, frame_seed=derive_seed(*seed_parts, i)))
    return frames
