"""Frame decoding, luminance conversion, resolution adaptation and sampling.

Frames enter the pipeline as single-channel luminance matrices with real
values in [0, 255]. 8-bit files are promoted to float64 on load so the
denoiser never works on a quantized grid. Binary PGM (P5) and PPM (P6,
maxval 255) are parsed natively; PNG is decoded through Pillow.

A frame directory follows the layout ``<dir>/frame_%06d.(pgm|ppm|png)``
with indices contiguous from 000000. `FrameDirectory` exposes such a
directory as a lazy sequence so callers only decode the frames a sampling
policy actually selects.
"""

from __future__ import annotations

import math
import os
import re
import tempfile
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DecodeError, DimensionMismatchError, EmptyInputError

# ITU-R BT.601 luma weights.
_LUMA_R = 0.299
_LUMA_G = 0.587
_LUMA_B = 0.114

_FRAME_FILE_RE = re.compile(r"^frame_(\d{6})\.(pgm|ppm|png)$")
_TRAILING_INT_RE = re.compile(r"(\d+)$")


@dataclass(frozen=True)
class FrameImage:
    """One decoded video frame: a 2D luminance matrix plus its position in the video."""

    pixels: np.ndarray
    source_index: int = 0

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"frame must be a non-empty 2D matrix, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("frame contains non-finite pixel values")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < 0.0 or hi > 255.0:
            raise ValueError(f"pixel values outside [0, 255]: min={lo}, max={hi}")
        if self.source_index < 0:
            raise ValueError("source_index must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class SamplingPolicy:
    """Keep one frame out of every `n` (rate 1/n). `n=1` keeps everything."""

    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"sampling divisor must be >= 1, got {self.n}")


def sample_indices(total_frames: int, policy: SamplingPolicy) -> list[int]:
    """Indices selected at rate 1/n: 0, n, 2n, ... below `total_frames`.

    Index 0 is always included, so the result is never empty and its length
    is ceil(total_frames / n).
    """
    if total_frames < 1:
        raise EmptyInputError("cannot sample from an empty frame sequence")
    return list(range(0, total_frames, policy.n))


def to_luminance(r: np.ndarray, g: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Weighted BT.601 luminance, unrounded: 0.299 R + 0.587 G + 0.114 B.

    The result is clipped to [0, 255] to absorb float rounding at the range
    edges (pure white must map to exactly 255).
    """
    r = np.asarray(r, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if r.shape != g.shape or g.shape != b.shape:
        raise DimensionMismatchError(
            f"channel shapes differ: R{r.shape} G{g.shape} B{b.shape}"
        )
    lum = _LUMA_R * r + _LUMA_G * g + _LUMA_B * b
    return np.clip(lum, 0.0, 255.0)


def parse_source_index(path: str | os.PathLike) -> int:
    """Trailing integer of the file stem (`frame_000042` -> 42); 0 if absent."""
    match = _TRAILING_INT_RE.search(Path(path).stem)
    return int(match.group(1)) if match else 0


def load_frame(path: str | os.PathLike) -> FrameImage:
    """Decode a PGM/PPM/PNG file into a luminance FrameImage.

    Color inputs go through `to_luminance`. Raises DecodeError naming the
    path for unreadable files, unsupported formats, or maxval != 255.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DecodeError(f"cannot read {path}: {exc}") from exc

    suffix = path.suffix.lower()
    if suffix in (".pgm", ".ppm") or data[:2] in (b"P5", b"P6"):
        pixels = _decode_pnm(data, path)
    elif suffix == ".png" or data[:8] == b"\x89PNG\r\n\x1a\n":
        pixels = _decode_png(path)
    else:
        raise DecodeError(f"unsupported image format: {path}")
    return FrameImage(pixels=pixels, source_index=parse_source_index(path))


def _decode_pnm(data: bytes, path: Path) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise DecodeError(f"{path}: not a binary PGM/PPM (magic {magic!r})")
    try:
        width, height, maxval, offset = _parse_pnm_header(data)
    except ValueError as exc:
        raise DecodeError(f"{path}: bad PNM header: {exc}") from exc
    if maxval != 255:
        raise DecodeError(f"{path}: only maxval 255 is supported, got {maxval}")
    channels = 1 if magic == b"P5" else 3
    need = width * height * channels
    raster = data[offset : offset + need]
    if len(raster) < need:
        raise DecodeError(f"{path}: truncated raster ({len(raster)} of {need} bytes)")
    arr = np.frombuffer(raster, dtype=np.uint8, count=need)
    if channels == 1:
        return arr.reshape(height, width).astype(np.float64)
    rgb = arr.reshape(height, width, 3).astype(np.float64)
    return to_luminance(rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2])


def _parse_pnm_header(data: bytes) -> tuple[int, int, int, int]:
    """Return (width, height, maxval, raster offset), honoring '#' comments."""
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise ValueError("header ended early")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif ch.isdigit():
            end = pos
            while end < len(data) and data[end : end + 1].isdigit():
                end += 1
            fields.append(int(data[pos:end]))
            pos = end
        else:
            raise ValueError(f"unexpected byte {ch!r} in header")
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ValueError("missing whitespace before raster")
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ValueError(f"bad dimensions {width}x{height}")
    return width, height, maxval, pos + 1


def _decode_png(path: Path) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - pillow is a hard dependency
        raise DecodeError(f"{path}: PNG support requires Pillow") from exc
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return np.asarray(im, dtype=np.float64)
            if im.mode in ("RGB", "RGBA", "LA", "P"):
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                return to_luminance(rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2])
            raise DecodeError(f"{path}: unsupported PNG mode {im.mode}")
    except DecodeError:
        raise
    except Exception as exc:
        raise DecodeError(f"{path}: PNG decode failed: {exc}") from exc


def save_frame_pgm(frame: FrameImage, path: str | os.PathLike) -> None:
    """Write a frame as binary PGM, rounding each pixel to the nearest integer.

    Integer-valued frames round-trip through load_frame with identical pixels.
    """
    raster = np.rint(frame.pixels).clip(0, 255).astype(np.uint8)
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    atomic_write_bytes(Path(path), header + raster.tobytes(order="C"))


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write via a temp file plus rename so readers never see a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def downscale_nearest(frame: FrameImage, target_w: int, target_h: int) -> FrameImage:
    """Nearest-neighbor downscale without interpolation.

    Output pixel (i, j) copies input pixel (floor(i*H/target_h),
    floor(j*W/target_w)), so no new pixel values are created. Upscaling is
    refused.
    """
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target size must be positive, got {target_w}x{target_h}")
    if target_w > frame.width or target_h > frame.height:
        raise DimensionMismatchError(
            f"refusing to upscale {frame.width}x{frame.height} "
            f"to {target_w}x{target_h}"
        )
    # integer arithmetic: floor(i*H/th) without float rounding surprises
    rows = (np.arange(target_h, dtype=np.int64) * frame.height) // target_h
    cols = (np.arange(target_w, dtype=np.int64) * frame.width) // target_w
    return FrameImage(
        pixels=frame.pixels[np.ix_(rows, cols)],
        source_index=frame.source_index,
    )


class FrameDirectory(Sequence):
    """Lazy, validated view of a `frame_%06d.*` directory.

    Listing and contiguity are checked up front; pixels are decoded only on
    item access, so sampling policies avoid decoding skipped frames.
    """

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        if not self.path.is_dir():
            raise DecodeError(f"not a directory: {self.path}")
        found: dict[int, Path] = {}
        for entry in sorted(self.path.iterdir()):
            m = _FRAME_FILE_RE.match(entry.name)
            if not m:
                continue
            idx = int(m.group(1))
            if idx in found:
                raise DecodeError(
                    f"{self.path}: duplicate frame index {idx:06d} "
                    f"({found[idx].name} and {entry.name})"
                )
            found[idx] = entry
        if not found:
            raise EmptyInputError(f"{self.path}: no frame_%06d files found")
        missing = sorted(set(range(len(found))) - set(found))
        if missing:
            raise DecodeError(
                f"{self.path}: frame indices not contiguous from 000000 "
                f"(first gap at {missing[0]:06d})"
            )
        self._files = [found[i] for i in range(len(found))]

    def __len__(self) -> int:
        return len(self._files)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        return load_frame(self._files[index])


def write_frame_dir(frames, directory: str | os.PathLike) -> list[Path]:
    """Persist frames under the standard layout, one PGM per frame."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        out = directory / f"frame_{i:06d}.pgm"
        save_frame_pgm(frame, out)
        paths.append(out)
    return paths


def expected_sample_count(total_frames: int, policy: SamplingPolicy) -> int:
    return math.ceil(total_frames / policy.n)
