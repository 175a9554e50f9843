"""Closed-set video attribution against an enrolled fingerprint registry.

Three strategies, all operating on the same sampled frame subset:

* voting: each sampled frame votes for the camera with the highest PCE
  between the frame's residual and that camera's fingerprint; simple
  majority wins.
* pattern correlation: a fresh fingerprint is estimated from the sampled
  frames and compared whole against each enrolled fingerprint (NCC by
  default, PCE optional).
* PCE vectors: the per-frame PCE vectors are averaged (optionally each
  one normalized by its own maximum first) and the mean vector's argmax
  decides.

Frames larger than the registry resolution are adapted with the
nearest-neighbor downscale; smaller frames are refused. Ties are broken
toward the lowest registry index and flagged in the report.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .denoise import DenoiserConfig, extract_residual
from .errors import DegenerateInputError, DimensionMismatchError, EmptyInputError
from .fingerprint import Fingerprint, build_fingerprint, load_fingerprint
from .imgio import FrameImage, SamplingPolicy, downscale_nearest, sample_indices
from .match import DEFAULT_EXCLUSION, ncc, pce
from .parallel import parallel_map

log = logging.getLogger(__name__)

METHOD_VOTING = "voting"
METHOD_PATTERN = "pattern_correlation"
METHOD_PCE_VECTORS = "pce_vectors"

REGISTRY_SUFFIX = ".prnufp"


@dataclass(frozen=True)
class CameraRegistry:
    """Ordered (label, fingerprint) pairs; unique labels, one shared resolution."""

    entries: tuple[tuple[str, Fingerprint], ...]

    def __post_init__(self):
        labels = [label for label, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate camera labels in registry: {labels}")
        dims = {(fp.height, fp.width) for _, fp in self.entries}
        if len(dims) > 1:
            raise DimensionMismatchError(
                f"registry fingerprints disagree on resolution: {sorted(dims)}"
            )

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.entries)

    @property
    def fingerprints(self) -> tuple[Fingerprint, ...]:
        return tuple(fp for _, fp in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def shape(self) -> tuple[int, int]:
        fp = self.entries[0][1]
        return fp.height, fp.width


def load_registry(db_dir: str | Path) -> CameraRegistry:
    """Load every `<label>.prnufp` under a directory, ordered by label."""
    db_dir = Path(db_dir)
    if not db_dir.is_dir():
        raise EmptyInputError(f"registry directory does not exist: {db_dir}")
    files = sorted(db_dir.glob(f"*{REGISTRY_SUFFIX}"))
    if not files:
        raise EmptyInputError(f"no {REGISTRY_SUFFIX} files in {db_dir}")
    entries = tuple((f.stem, load_fingerprint(f)) for f in files)
    registry = CameraRegistry(entries=entries)
    if len(registry) == 0:
        raise EmptyInputError(f"empty registry in {db_dir}")
    return registry


@dataclass(frozen=True)
class IdentificationReport:
    """Outcome of one attribution query."""

    method: str
    predicted: str
    scores: tuple[float, ...]
    labels: tuple[str, ...]
    frames_processed: int
    tie: bool
    frames_skipped: int = 0

    def machine_line(self) -> str:
        """Single-line record: predicted label, method, then the score vector."""
        scores = ",".join(f"{s:.10g}" for s in self.scores)
        return f"{self.predicted},{self.method},{scores}"


def _adapt_frame(frame: FrameImage, height: int, width: int) -> FrameImage:
    if (frame.height, frame.width) == (height, width):
        return frame
    if frame.height >= height and frame.width >= width:
        return downscale_nearest(frame, width, height)
    raise DimensionMismatchError(
        f"frame {frame.width}x{frame.height} cannot be adapted to "
        f"registry resolution {width}x{height}"
    )


def _sampled_frames(frames, registry: CameraRegistry, policy: SamplingPolicy) -> list[FrameImage]:
    total = len(frames)
    if total < 1:
        raise EmptyInputError("empty frame sequence")
    height, width = registry.shape
    return [_adapt_frame(frames[i], height, width) for i in sample_indices(total, policy)]


def _argmax_with_tie(scores) -> tuple[int, bool]:
    best = max(scores)
    winners = [i for i, s in enumerate(scores) if s == best]
    return winners[0], len(winners) > 1


def pool_pce_vectors(vectors, normalize: bool) -> tuple[list[float], int, int]:
    """Average per-frame score vectors into one; returns (mean, used, skipped).

    With `normalize`, each vector is divided by its own maximum first and
    all-zero vectors are skipped instead of poisoning the mean.
    """
    size = None
    sums: list[float] = []
    used = 0
    skipped = 0
    for vector in vectors:
        vector = list(vector)
        if size is None:
            size = len(vector)
            sums = [0.0] * size
        if normalize:
            peak = max(vector)
            if peak == 0.0:
                skipped += 1
                continue
            vector = [v / peak for v in vector]
        sums = [s + v for s, v in zip(sums, vector)]
        used += 1
    if used:
        return [s / used for s in sums], used, skipped
    return sums, used, skipped


def _pce_vector(residual, registry: CameraRegistry, exclusion: int, warned: set) -> list[float]:
    """Per-camera PCE of one residual; degenerate comparisons score 0."""
    vector = []
    for label, fp in registry.entries:
        try:
            vector.append(pce(residual.values, fp.values, exclusion=exclusion).pce)
        except DegenerateInputError:
            if label not in warned:
                warned.add(label)
                log.warning(
                    "degenerate PCE against camera %r (frame %d); scoring 0",
                    label,
                    residual.frame_index,
                )
            vector.append(0.0)
    return vector


def _require_registry(registry: CameraRegistry) -> None:
    if len(registry) == 0:
        raise EmptyInputError("registry has no cameras")


def identify_voting(
    frames,
    registry: CameraRegistry,
    policy: SamplingPolicy = SamplingPolicy(),
    cfg: DenoiserConfig = DenoiserConfig(),
    exclusion: int = DEFAULT_EXCLUSION,
    jobs: int = 1,
) -> IdentificationReport:
    """One vote per sampled frame for its best-PCE camera; majority wins."""
    _require_registry(registry)
    sampled = _sampled_frames(frames, registry, policy)
    residuals = parallel_map(lambda f: extract_residual(f, cfg), sampled, jobs)
    warned: set = set()
    votes = [0.0] * len(registry)
    skipped = 0
    for residual in residuals:
        vector = _pce_vector(residual, registry, exclusion, warned)
        if max(vector) == 0.0:
            skipped += 1
            continue
        winner, _ = _argmax_with_tie(vector)
        votes[winner] += 1.0
    predicted_idx, tie = _argmax_with_tie(votes)
    return IdentificationReport(
        method=METHOD_VOTING,
        predicted=registry.labels[predicted_idx],
        scores=tuple(votes),
        labels=registry.labels,
        frames_processed=len(sampled),
        tie=tie,
        frames_skipped=skipped,
    )


def identify_pattern_correlation(
    frames,
    registry: CameraRegistry,
    policy: SamplingPolicy = SamplingPolicy(),
    cfg: DenoiserConfig = DenoiserConfig(),
    comparator: str = "ncc",
    exclusion: int = DEFAULT_EXCLUSION,
    jobs: int = 1,
) -> IdentificationReport:
    """Estimate a fingerprint from the query video and compare it whole.

    `comparator` is "ncc" (default; the stronger option once patterns are
    averaged) or "pce". A per-camera comparator failure (e.g. zero-variance
    fingerprint) scores -inf with a warning instead of aborting the query.
    """
    if comparator not in ("ncc", "pce"):
        raise ValueError(f"comparator must be 'ncc' or 'pce', got {comparator!r}")
    _require_registry(registry)
    sampled = _sampled_frames(frames, registry, policy)
    query = build_fingerprint(sampled, cfg, label="query", jobs=jobs)
    scores = []
    for label, fp in registry.entries:
        try:
            if comparator == "ncc":
                scores.append(ncc(query.values, fp.values))
            else:
                scores.append(pce(query.values, fp.values, exclusion=exclusion).pce)
        except DegenerateInputError as exc:
            log.warning("comparator failed for camera %r: %s; scoring -inf", label, exc)
            scores.append(float("-inf"))
    predicted_idx, tie = _argmax_with_tie(scores)
    return IdentificationReport(
        method=METHOD_PATTERN,
        predicted=registry.labels[predicted_idx],
        scores=tuple(scores),
        labels=registry.labels,
        frames_processed=len(sampled),
        tie=tie,
    )


def identify_pce_vectors(
    frames,
    registry: CameraRegistry,
    policy: SamplingPolicy = SamplingPolicy(),
    cfg: DenoiserConfig = DenoiserConfig(),
    normalize: bool = False,
    exclusion: int = DEFAULT_EXCLUSION,
    jobs: int = 1,
) -> IdentificationReport:
    """Average the per-frame per-camera PCE vectors; the mean vector decides.

    With `normalize` each frame's vector is divided by its own maximum
    first; frames whose maximum is 0 are skipped (counted in the report).
    """
    _require_registry(registry)
    sampled = _sampled_frames(frames, registry, policy)
    residuals = parallel_map(lambda f: extract_residual(f, cfg), sampled, jobs)
    warned: set = set()
    vectors = [_pce_vector(residual, registry, exclusion, warned) for residual in residuals]
    scores, used, skipped = pool_pce_vectors(vectors, normalize)
    if not used:
        log.warning("every sampled frame had a zero PCE vector; scores are all zero")
        scores = [0.0] * len(registry)
    predicted_idx, tie = _argmax_with_tie(scores)
    return IdentificationReport(
        method=METHOD_PCE_VECTORS,
        predicted=registry.labels[predicted_idx],
        scores=tuple(scores),
        labels=registry.labels,
        frames_processed=len(sampled),
        tie=tie,
        frames_skipped=skipped,
    )
