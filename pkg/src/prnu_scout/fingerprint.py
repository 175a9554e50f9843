"""Fingerprint estimation from residuals, plus on-disk persistence.

The sensor fingerprint is the weighted average over training frames

    F = sum(W_n * I_n) / sum(I_n^2)

with I_n the denoised frame and W_n its residual. An accumulator carries
the running numerator and denominator so enrollment can stream frames.

File format (little-endian), extension ``.prnufp``:

    magic   8 bytes  b"PRNUFP01"
    width   u32
    height  u32
    frames  u32      number of frames accumulated
    reserved u32     zero
    values  width*height float32, row-major
    label   u16 byte length + UTF-8 text

Fingerprint values are quantized to the float32 grid when the fingerprint
is created (math stays float64), so save -> load round-trips bit-exactly.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .denoise import DenoiserConfig, wavelet_denoise
from .errors import DimensionMismatchError, EmptyInputError, FingerprintFormatError
from .imgio import FrameImage, atomic_write_bytes
from .parallel import parallel_map

MAGIC = b"PRNUFP01"
_HEADER = struct.Struct("<8sIIII")

# denominator pixels below this are treated as never-exposed and map to F=0
DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class Fingerprint:
    """Estimated PRNU pattern of one camera at one resolution."""

    values: np.ndarray
    frames_used: int
    camera_label: str = ""

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"fingerprint must be a non-empty 2D matrix, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("fingerprint contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


class FingerprintAccumulator:
    """Running Eq-style sums for one camera; single writer, accumulate in
    ascending frame order for bit-reproducible results."""

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise ValueError(f"accumulator dimensions must be positive, got {width}x{height}")
        self.width = width
        self.height = height
        self.numerator = np.zeros((height, width), dtype=np.float64)
        self.denominator = np.zeros((height, width), dtype=np.float64)
        self.frames_seen = 0

    def add_terms(self, numerator_term: np.ndarray, denominator_term: np.ndarray) -> None:
        self.numerator += numerator_term
        self.denominator += denominator_term
        self.frames_seen += 1


def frame_terms(frame: FrameImage, cfg: DenoiserConfig) -> tuple[np.ndarray, np.ndarray]:
    """(W*I, I*I) for one frame; the per-frame work that parallelizes."""
    denoised = wavelet_denoise(frame, cfg)
    residual = frame.pixels - denoised
    return residual * denoised, denoised * denoised


def accumulate(
    acc: FingerprintAccumulator, frame: FrameImage, cfg: DenoiserConfig = DenoiserConfig()
) -> FingerprintAccumulator:
    """Fold one frame into the running sums and return the accumulator."""
    if (frame.height, frame.width) != (acc.height, acc.width):
        raise DimensionMismatchError(
            f"frame is {frame.width}x{frame.height} but accumulator is "
            f"{acc.width}x{acc.height}"
        )
    num, den = frame_terms(frame, cfg)
    acc.add_terms(num, den)
    return acc


def finalize(acc: FingerprintAccumulator, label: str) -> Fingerprint:
    """F = numerator/denominator elementwise; starved pixels map to 0."""
    if acc.frames_seen < 1:
        raise EmptyInputError("cannot finalize an empty accumulator")
    values = np.divide(
        acc.numerator,
        acc.denominator,
        out=np.zeros_like(acc.numerator),
        where=acc.denominator >= DENOMINATOR_FLOOR,
    )
    return Fingerprint(
        values=_to_storage_grid(values), frames_used=acc.frames_seen, camera_label=label
    )


def build_fingerprint(
    frames, cfg: DenoiserConfig = DenoiserConfig(), label: str = "", jobs: int = 1
) -> Fingerprint:
    """Accumulate a frame collection (ascending source_index) and finalize.

    Residual extraction runs on `jobs` workers; the reduction is always
    sequential in frame order, so the result is independent of `jobs`.
    """
    frames = sorted(frames, key=lambda f: f.source_index)
    if not frames:
        raise EmptyInputError("no frames to build a fingerprint from")
    acc = FingerprintAccumulator(frames[0].width, frames[0].height)
    for frame in frames:
        if (frame.height, frame.width) != (acc.height, acc.width):
            raise DimensionMismatchError(
                f"frame {frame.source_index} is {frame.width}x{frame.height} "
                f"but accumulator is {acc.width}x{acc.height}"
            )
    for num, den in parallel_map(lambda f: frame_terms(f, cfg), frames, jobs):
        acc.add_terms(num, den)
    return finalize(acc, label)


def zero_mean(fp: Fingerprint) -> Fingerprint:
    """Remove row then column means (suppresses shared linear-pattern artifacts).

    Optional post-processing; nothing in the pipeline applies it implicitly.
    """
    v = fp.values - fp.values.mean(axis=1, keepdims=True)
    v = v - v.mean(axis=0, keepdims=True)
    return Fingerprint(
        values=_to_storage_grid(v), frames_used=fp.frames_used, camera_label=fp.camera_label
    )


def _to_storage_grid(values: np.ndarray) -> np.ndarray:
    """Quantize to float32-representable values (kept in float64 containers)."""
    return values.astype(np.float32).astype(np.float64)


def save_fingerprint(fp: Fingerprint, path: str | os.PathLike) -> None:
    label_bytes = fp.camera_label.encode("utf-8")
    if len(label_bytes) > 0xFFFF:
        raise ValueError("camera label longer than 65535 bytes")
    header = _HEADER.pack(MAGIC, fp.width, fp.height, fp.frames_used, 0)
    payload = fp.values.astype("<f4").tobytes(order="C")
    trailer = struct.pack("<H", len(label_bytes)) + label_bytes
    atomic_write_bytes(Path(path), header + payload + trailer)


def load_fingerprint(path: str | os.PathLike) -> Fingerprint:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FingerprintFormatError(f"cannot read {path}: {exc}") from exc
    if len(data) < _HEADER.size:
        raise FingerprintFormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, width, height, frames_used, _reserved = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FingerprintFormatError(f"{path}: bad magic {magic!r}")
    if width < 1 or height < 1:
        raise FingerprintFormatError(f"{path}: bad dimensions {width}x{height}")
    n_values = width * height
    payload_end = _HEADER.size + 4 * n_values
    if payload_end + 2 > len(data):
        raise FingerprintFormatError(
            f"{path}: dimensions {width}x{height} overflow the file "
            f"({len(data)} bytes, need {payload_end + 2})"
        )
    values = np.frombuffer(data, dtype="<f4", count=n_values, offset=_HEADER.size)
    (label_len,) = struct.unpack_from("<H", data, payload_end)
    label_end = payload_end + 2 + label_len
    if label_end != len(data):
        raise FingerprintFormatError(
            f"{path}: size mismatch after label ({len(data)} bytes, expected {label_end})"
        )
    try:
        label = data[payload_end + 2 : label_end].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FingerprintFormatError(f"{path}: label is not valid UTF-8") from exc
    return Fingerprint(
        values=values.astype(np.float64).reshape(height, width),
        frames_used=frames_used,
        camera_label=label,
    )
