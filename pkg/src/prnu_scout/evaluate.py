"""Batch evaluation: confusion matrices, error rates, and rate sweeps.

An experiment is described by a flat ``key = value`` config file (see
`ExperimentConfig.from_file`). It either generates a synthetic camera set
(multiplicative sensor model, flat training scenes) or points at an
enrolled registry plus directories of test videos. For every (method,
sampling rate) cell the harness identifies each test video, builds the
confusion matrix, and reports the error rate

    p = 100 * trace(CM) / total,   q = 100 - p.

Outputs per run: ``table_<method>.csv`` (rows = rates, columns = test
sets, cells = q%), ``confusion_<method>_<rate>.csv``, and
``mean_error.csv`` (per-method mean q across test sets versus rate). All
output is deterministic for a given config: seeds derive from the config
seed, and no timestamps are written, so repeated runs are byte-identical
regardless of worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .denoise import DenoiserConfig
from .errors import ConfigError, EmptyInputError, PrnuError
from .fingerprint import build_fingerprint
from .identify import (
    CameraRegistry,
    IdentificationReport,
    identify_pattern_correlation,
    identify_pce_vectors,
    identify_voting,
    load_registry,
)
from .imgio import FrameDirectory, SamplingPolicy, atomic_write_text, sample_indices
from .match import DEFAULT_EXCLUSION
from .simulate import derive_seed, render_flat_video, simulate_camera

METHOD_NAMES = ("vote", "pattern", "pcevec")
DEFAULT_RATES = (30, 25, 20, 15, 10)
SYNTHETIC_SET = "synthetic"


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts: rows are the true camera, columns the predicted one."""

    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        k = len(self.labels)
        if len(set(self.labels)) != k:
            raise ValueError(f"labels must be unique: {self.labels}")
        if counts.shape != (k, k):
            raise ValueError(f"counts must be {k}x{k}, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(trials, labels) -> ConfusionMatrix:
    """Count (true, predicted) pairs; every label must be declared."""
    labels = tuple(labels)
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for true_label, predicted_label in trials:
        if true_label not in index:
            raise ValueError(f"unknown true label {true_label!r}")
        if predicted_label not in index:
            raise ValueError(f"unknown predicted label {predicted_label!r}")
        counts[index[true_label], index[predicted_label]] += 1
    return ConfusionMatrix(labels=labels, counts=counts)


def success_error_rate(cm: ConfusionMatrix) -> tuple[float, float]:
    """(p, q) percentages; p + q = 100 exactly. Callers format to 2 decimals."""
    total = cm.total
    if total == 0:
        raise EmptyInputError("confusion matrix has no trials")
    p = 100.0 * float(np.trace(cm.counts)) / total
    return p, 100.0 - p


_COMMON_KEYS = {
    "seed", "methods", "rates", "comparator", "normalize",
    "sigma", "levels", "exclusion",
}
_SYNTH_KEYS = {
    "cameras", "width", "height", "strength", "additive_sigma",
    "train_frames", "test_frames", "test_videos",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description; exactly one of synthetic/real mode."""

    seed: int = 0
    methods: tuple[str, ...] = METHOD_NAMES
    rates: tuple[int, ...] = DEFAULT_RATES
    comparator: str = "ncc"
    normalize: bool = False
    sigma: float = 3.0
    levels: int = 4
    exclusion: int = DEFAULT_EXCLUSION
    # synthetic mode
    cameras: int | None = None
    width: int = 256
    height: int = 256
    strength: float = 0.05
    additive_sigma: float = 2.0
    train_frames: int = 20
    test_frames: int = 10
    test_videos: int = 1
    # real-data mode
    db: Path | None = None
    testsets: tuple[tuple[str, Path], ...] = ()

    def __post_init__(self):
        if (self.cameras is None) == (self.db is None):
            raise ConfigError("config must set either 'cameras' (synthetic) or 'db' (real data)")
        if self.db is not None and not self.testsets:
            raise ConfigError("real-data config needs at least one 'testset.<name>' entry")
        for m in self.methods:
            if m not in METHOD_NAMES:
                raise ConfigError(f"unknown method {m!r}, expected one of {METHOD_NAMES}")
        if not self.rates or any(r < 1 for r in self.rates):
            raise ConfigError(f"rates must be positive integers, got {self.rates}")
        if self.comparator not in ("ncc", "pce"):
            raise ConfigError(f"comparator must be ncc or pce, got {self.comparator!r}")

    @property
    def synthetic(self) -> bool:
        return self.cameras is not None

    def denoiser(self) -> DenoiserConfig:
        return DenoiserConfig(sigma0=self.sigma, levels=self.levels)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text, base_dir=path.parent)

    @classmethod
    def from_text(cls, text: str, base_dir: Path | None = None) -> "ExperimentConfig":
        base_dir = base_dir or Path.cwd()
        raw: dict[str, str] = {}
        testsets: list[tuple[str, Path]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
            key, _, value = stripped.partition("=")
            key = key.strip().lower()
            value = value.split("#", 1)[0].strip()
            if key.startswith("testset."):
                name = key[len("testset."):]
                if not name:
                    raise ConfigError(f"line {lineno}: testset entry needs a name")
                testsets.append((name, (base_dir / value).resolve()))
                continue
            if key in raw:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            raw[key] = value

        unknown = set(raw) - _COMMON_KEYS - _SYNTH_KEYS - {"db"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        def geti(key, default):
            return int(raw[key]) if key in raw else default

        def getf(key, default):
            return float(raw[key]) if key in raw else default

        try:
            kwargs = dict(
                seed=geti("seed", 0),
                comparator=raw.get("comparator", "ncc"),
                normalize=_parse_bool(raw.get("normalize", "false")),
                sigma=getf("sigma", 3.0),
                levels=geti("levels", 4),
                exclusion=geti("exclusion", DEFAULT_EXCLUSION),
                width=geti("width", 256),
                height=geti("height", 256),
                strength=getf("strength", 0.05),
                additive_sigma=getf("additive_sigma", 2.0),
                train_frames=geti("train_frames", 20),
                test_frames=geti("test_frames", 10),
                test_videos=geti("test_videos", 1),
            )
            if "methods" in raw:
                kwargs["methods"] = tuple(
                    m.strip() for m in raw["methods"].split(",") if m.strip()
                )
            if "rates" in raw:
                kwargs["rates"] = tuple(
                    int(r.strip()) for r in raw["rates"].split(",") if r.strip()
                )
            if "cameras" in raw:
                kwargs["cameras"] = int(raw["cameras"])
            if "db" in raw:
                kwargs["db"] = (base_dir / raw["db"]).resolve()
        except ValueError as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        return cls(testsets=tuple(testsets), **kwargs)


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


@dataclass(frozen=True)
class Trial:
    true_label: str
    report: IdentificationReport


@dataclass
class CellResult:
    """One (method, rate, test set) cell: matrix, rates, raw trials."""

    method: str
    rate: int
    testset: str
    cm: ConfusionMatrix | None = None
    p: float | None = None
    q: float | None = None
    trials: list[Trial] = field(default_factory=list)
    error: str | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    set_names: tuple[str, ...]
    labels: tuple[str, ...]
    cells: dict = field(default_factory=dict)  # (method, rate, set) -> CellResult

    def cell(self, method: str, rate: int, testset: str | None = None) -> CellResult:
        testset = testset or self.set_names[0]
        return self.cells[(method, rate, testset)]

    def mean_error(self, method: str, rate: int) -> float | None:
        qs = [
            self.cells[(method, rate, s)].q
            for s in self.set_names
            if self.cells[(method, rate, s)].q is not None
        ]
        return float(np.mean(qs)) if qs else None


def _identify(method: str, frames, registry, policy, cfg, config, jobs):
    if method == "vote":
        return identify_voting(frames, registry, policy, cfg, exclusion=config.exclusion, jobs=jobs)
    if method == "pattern":
        return identify_pattern_correlation(
            frames, registry, policy, cfg,
            comparator=config.comparator, exclusion=config.exclusion, jobs=jobs,
        )
    return identify_pce_vectors(
        frames, registry, policy, cfg,
        normalize=config.normalize, exclusion=config.exclusion, jobs=jobs,
    )


def _synthetic_world(config: ExperimentConfig):
    """Cameras plus train/test videos, all derived from the config seed.

    Data seeds depend only on (seed, camera, role, video, frame), never on
    method or rate, so every cell scores the same underlying footage.
    """
    labels = tuple(f"cam{i:02d}" for i in range(config.cameras))
    cams = [
        simulate_camera(
            label, config.width, config.height, config.strength,
            config.additive_sigma, derive_seed(config.seed, label, "k"),
        )
        for label in labels
    ]
    train = {
        cam.label: render_flat_video(cam, config.train_frames, config.seed, cam.label, "train")
        for cam in cams
    }
    test = {
        cam.label: [
            render_flat_video(cam, config.test_frames, config.seed, cam.label, "test", v)
            for v in range(config.test_videos)
        ]
        for cam in cams
    }
    return labels, train, test


def _real_testsets(config: ExperimentConfig) -> dict[str, list[tuple[str, Path]]]:
    """testset name -> [(true label, video dir)] under <root>/<label>/<video>/."""
    sets: dict[str, list[tuple[str, Path]]] = {}
    for name, root in config.testsets:
        videos: list[tuple[str, Path]] = []
        if not root.is_dir():
            raise ConfigError(f"testset {name!r}: not a directory: {root}")
        for label_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            subdirs = sorted(p for p in label_dir.iterdir() if p.is_dir())
            if subdirs:
                videos.extend((label_dir.name, v) for v in subdirs)
            else:
                videos.append((label_dir.name, label_dir))
        if not videos:
            raise ConfigError(f"testset {name!r}: no videos under {root}")
        sets[name] = videos
    return sets


def run_experiment(
    config: ExperimentConfig, out_dir: str | Path | None = None, jobs: int = 1
) -> ExperimentResult:
    """Run every (method, rate, test set) cell and optionally write the CSVs.

    An unreadable input marks its cell with an error record; other cells
    still run.
    """
    cfg = config.denoiser()
    if config.synthetic:
        labels, train_videos, test_videos = _synthetic_world(config)
        set_names: tuple[str, ...] = (SYNTHETIC_SET,)
    else:
        registry_fixed = load_registry(config.db)
        labels = registry_fixed.labels
        real_sets = _real_testsets(config)
        set_names = tuple(name for name, _ in config.testsets)

    result = ExperimentResult(config=config, set_names=set_names, labels=labels)

    for rate in config.rates:
        policy = SamplingPolicy(rate)
        if config.synthetic:
            # the paper-style protocol: the sampling rate thins training too
            entries = []
            for label in labels:
                video = train_videos[label]
                picked = [video[i] for i in sample_indices(len(video), policy)]
                entries.append((label, build_fingerprint(picked, cfg, label=label, jobs=jobs)))
            registry = CameraRegistry(entries=tuple(entries))
        else:
            registry = registry_fixed

        for method in config.methods:
            for set_name in set_names:
                cell = CellResult(method=method, rate=rate, testset=set_name)
                result.cells[(method, rate, set_name)] = cell
                try:
                    trials = []
                    if config.synthetic:
                        jobs_list = [
                            (label, video)
                            for label in labels
                            for video in test_videos[label]
                        ]
                    else:
                        jobs_list = [
                            (label, FrameDirectory(video_dir))
                            for label, video_dir in real_sets[set_name]
                        ]
                    for true_label, frames in jobs_list:
                        report = _identify(method, frames, registry, policy, cfg, config, jobs)
                        trials.append(Trial(true_label=true_label, report=report))
                    cell.trials = trials
                    cell.cm = confusion_matrix(
                        [(t.true_label, t.report.predicted) for t in trials], labels
                    )
                    cell.p, cell.q = success_error_rate(cell.cm)
                except PrnuError as exc:
                    cell.error = f"{type(exc).__name__}: {exc}"

    if out_dir is not None:
        write_experiment_csvs(result, Path(out_dir))
    return result


def write_experiment_csvs(result: ExperimentResult, out_dir: Path) -> list[Path]:
    """table_<method>.csv, confusion_<method>_<rate>.csv, mean_error.csv, run_meta.txt."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = result.config
    written: list[Path] = []

    for method in config.methods:
        lines = ["rate," + ",".join(result.set_names)]
        for rate in config.rates:
            row = [f"1/{rate}"]
            for set_name in result.set_names:
                cell = result.cells[(method, rate, set_name)]
                row.append("ERR" if cell.q is None else f"{cell.q:.2f}")
            lines.append(",".join(row))
        path = out_dir / f"table_{method}.csv"
        atomic_write_text(path, "\n".join(lines) + "\n")
        written.append(path)

        for rate in config.rates:
            cells = [result.cells[(method, rate, s)] for s in result.set_names]
            matrices = [c.cm for c in cells if c.cm is not None]
            if not matrices:
                continue
            total = np.sum([cm.counts for cm in matrices], axis=0)
            cm = ConfusionMatrix(labels=result.labels, counts=total)
            lines = ["true\\predicted," + ",".join(cm.labels)]
            for i, label in enumerate(cm.labels):
                lines.append(label + "," + ",".join(str(int(c)) for c in cm.counts[i]))
            path = out_dir / f"confusion_{method}_{rate}.csv"
            atomic_write_text(path, "\n".join(lines) + "\n")
            written.append(path)

    lines = ["rate," + ",".join(config.methods)]
    for rate in config.rates:
        row = [f"1/{rate}"]
        for method in config.methods:
            mean_q = result.mean_error(method, rate)
            row.append("ERR" if mean_q is None else f"{mean_q:.2f}")
        lines.append(",".join(row))
    path = out_dir / "mean_error.csv"
    atomic_write_text(path, "\n".join(lines) + "\n")
    written.append(path)

    meta = [
        "mode=" + ("synthetic" if config.synthetic else "real"),
        f"seed={config.seed}",
        f"methods={','.join(config.methods)}",
        f"rates={','.join(str(r) for r in config.rates)}",
        f"labels={','.join(result.labels)}",
        f"testsets={','.join(result.set_names)}",
    ]
    if config.synthetic:
        meta += [
            f"cameras={config.cameras}",
            f"size={config.width}x{config.height}",
            f"strength={config.strength}",
            f"additive_sigma={config.additive_sigma}",
            f"train_frames={config.train_frames}",
            f"test_frames={config.test_frames}",
            f"test_videos={config.test_videos}",
        ]
    path = out_dir / "run_meta.txt"
    atomic_write_text(path, "\n".join(meta) + "\n")
    written.append(path)
    return written
