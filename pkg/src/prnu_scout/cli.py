"""prnu-scout: enroll cameras, identify videos, run experiments, simulate sensors.

Exit codes: 0 success, 1 usage error (bad flags, overwrite without --force),
2 data error (unreadable or inconsistent inputs). Logs and human-readable
summaries go to stderr; machine-readable results go to stdout or --out
files, never mixed.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .denoise import DenoiserConfig
from .errors import PrnuError
from .evaluate import ExperimentConfig, run_experiment
from .fingerprint import build_fingerprint, save_fingerprint
from .identify import (
    REGISTRY_SUFFIX,
    IdentificationReport,
    identify_pattern_correlation,
    identify_pce_vectors,
    identify_voting,
    load_registry,
)
from .imgio import (
    FrameDirectory,
    SamplingPolicy,
    atomic_write_text,
    downscale_nearest,
    sample_indices,
    write_frame_dir,
)
from .match import DEFAULT_EXCLUSION
from .simulate import derive_seed, render_flat_video, simulate_camera

log = logging.getLogger("prnu_scout")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    """Mapped to exit code 1 by main()."""


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage by default; this CLI reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _size(value: str) -> tuple[int, int]:
    try:
        w, h = value.lower().split("x")
        width, height = int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {value!r}")
    if width < 1 or height < 1:
        raise argparse.ArgumentTypeError(f"size must be positive, got {value!r}")
    return width, height


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    return n


def _add_denoiser_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, default=3.0,
                   help="assumed noise standard deviation (default 3.0)")
    p.add_argument("--levels", type=_positive_int, default=4,
                   help="wavelet decomposition depth (default 4)")


def _add_jobs_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker threads (default: logical processors); results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prnu-scout",
                     description="Source camera identification for video via PRNU fingerprints.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("enroll", parents=[], help="estimate and store one camera's fingerprint",
                       description="Sample frames from a directory, estimate the camera "
                                   "fingerprint, and write <db>/<label>.prnufp.")
    p.set_defaults(func=cmd_enroll)
    p.add_argument("--frames", required=True, help="directory of frame_%%06d.(pgm|ppm|png) files")
    p.add_argument("--label", required=True, help="camera label (registry file stem)")
    p.add_argument("--db", required=True, help="registry directory for fingerprint files")
    p.add_argument("--rate", type=_positive_int, default=1,
                   help="sampling divisor N, keep one frame in N (default 1)")
    p.add_argument("--rescale", type=_size, metavar="WxH",
                   help="downscale every frame to WxH (nearest neighbor) before training")
    p.add_argument("--force", action="store_true", help="overwrite an existing fingerprint")
    _add_denoiser_flags(p)
    _add_jobs_flag(p)

    p = sub.add_parser("identify", help="attribute a video to an enrolled camera",
                       description="Identify the source camera of a frame directory "
                                   "against an enrolled registry.")
    p.set_defaults(func=cmd_identify)
    p.add_argument("--db", required=True, help="registry directory of .prnufp files")
    p.add_argument("--frames", required=True, help="directory of the video's frames")
    p.add_argument("--method", choices=("vote", "pattern", "pcevec"), default="pattern",
                   help="attribution strategy (default pattern)")
    p.add_argument("--rate", type=_positive_int, default=1,
                   help="sampling divisor N (default 1)")
    p.add_argument("--comparator", choices=("ncc", "pce"), default="ncc",
                   help="pattern-method comparator (default ncc)")
    p.add_argument("--normalize", action="store_true",
                   help="pcevec: normalize each frame's vector by its maximum")
    p.add_argument("--exclusion", type=_positive_int, default=DEFAULT_EXCLUSION,
                   help="odd PCE exclusion window (default 11)")
    p.add_argument("--out", help="write the machine-readable record here instead of stdout")
    _add_denoiser_flags(p)
    _add_jobs_flag(p)

    p = sub.add_parser("evaluate", help="run a config-driven experiment sweep",
                       description="Run methods x rates over test videos and write "
                                   "error-rate and confusion CSVs.")
    p.set_defaults(func=cmd_evaluate)
    p.add_argument("--config", required=True, help="experiment config file (key = value lines)")
    p.add_argument("--out", required=True, help="output directory for CSV artifacts")
    p.add_argument("--seed", type=int, help="override the config seed")
    _add_jobs_flag(p)

    p = sub.add_parser("simulate", help="generate synthetic camera footage on disk",
                       description="Render frame directories for synthetic cameras with "
                                   "planted sensor noise.")
    p.set_defaults(func=cmd_simulate)
    p.add_argument("--cameras", type=_positive_int, default=2, help="number of cameras (default 2)")
    p.add_argument("--size", type=_size, default=(256, 256), metavar="WxH",
                   help="frame size (default 256x256)")
    p.add_argument("--strength", type=float, default=0.05,
                   help="multiplicative sensor-noise scale (default 0.05)")
    p.add_argument("--additive-sigma", type=float, default=2.0,
                   help="additive noise standard deviation (default 2.0)")
    p.add_argument("--train-frames", type=_positive_int, default=20,
                   help="training frames per camera (default 20)")
    p.add_argument("--test-frames", type=_positive_int, default=10,
                   help="frames per test video (default 10)")
    p.add_argument("--test-videos", type=_positive_int, default=1,
                   help="test videos per camera (default 1)")
    p.add_argument("--seed", type=int, default=0, help="global seed (default 0)")
    p.add_argument("--out", required=True, help="output directory for the frame tree")

    return parser


def cmd_enroll(args) -> int:
    db_dir = Path(args.db)
    target = db_dir / f"{args.label}{REGISTRY_SUFFIX}"
    if target.exists() and not args.force:
        raise UsageError(f"{target} already exists (use --force to overwrite)")

    frames_dir = FrameDirectory(args.frames)
    policy = SamplingPolicy(args.rate)
    picked = [frames_dir[i] for i in sample_indices(len(frames_dir), policy)]

    if args.rescale:
        width, height = args.rescale
        picked = [downscale_nearest(f, width, height) for f in picked]
    else:
        dims = {(f.width, f.height) for f in picked}
        if len(dims) > 1:
            raise PrnuError(
                f"mixed frame dimensions {sorted(dims)}; pass --rescale WxH to unify"
            )

    cfg = DenoiserConfig(sigma0=args.sigma, levels=args.levels)
    fp = build_fingerprint(picked, cfg, label=args.label, jobs=args.jobs)
    db_dir.mkdir(parents=True, exist_ok=True)
    save_fingerprint(fp, target)
    log.info("enrolled %r from %d frames -> %s", args.label, fp.frames_used, target)
    print(f"{args.label},{fp.frames_used}")
    return EXIT_OK


def _run_method(args, frames, registry, policy, cfg) -> IdentificationReport:
    if args.method == "vote":
        return identify_voting(frames, registry, policy, cfg,
                               exclusion=args.exclusion, jobs=args.jobs)
    if args.method == "pattern":
        return identify_pattern_correlation(frames, registry, policy, cfg,
                                            comparator=args.comparator,
                                            exclusion=args.exclusion, jobs=args.jobs)
    return identify_pce_vectors(frames, registry, policy, cfg,
                                normalize=args.normalize,
                                exclusion=args.exclusion, jobs=args.jobs)


def cmd_identify(args) -> int:
    registry = load_registry(args.db)
    frames = FrameDirectory(args.frames)
    policy = SamplingPolicy(args.rate)
    cfg = DenoiserConfig(sigma0=args.sigma, levels=args.levels)
    report = _run_method(args, frames, registry, policy, cfg)

    print(f"method:  {report.method}", file=sys.stderr)
    print(f"video:   {args.frames}", file=sys.stderr)
    print(f"frames:  {report.frames_processed} processed, "
          f"{report.frames_skipped} skipped", file=sys.stderr)
    for label, score in zip(report.labels, report.scores):
        marker = " <-- predicted" if label == report.predicted else ""
        print(f"  {label}: {score:.6g}{marker}", file=sys.stderr)
    if report.tie:
        print("tie broken toward the lowest registry index", file=sys.stderr)

    line = report.machine_line()
    if args.out:
        atomic_write_text(Path(args.out), line + "\n")
        log.info("wrote %s", args.out)
    else:
        print(line)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    result = run_experiment(config, out_dir=args.out, jobs=args.jobs)
    for (method, rate, set_name), cell in sorted(result.cells.items()):
        status = "ERR" if cell.q is None else f"q={cell.q:.2f}%"
        log.info("%s rate 1/%d [%s]: %s", method, rate, set_name, status)
        if cell.error:
            log.error("cell (%s, 1/%d, %s) failed: %s", method, rate, set_name, cell.error)
    for name in sorted(p.name for p in Path(args.out).iterdir() if p.is_file()):
        print(Path(args.out) / name)
    return EXIT_OK


def cmd_simulate(args) -> int:
    width, height = args.size
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    labels = [f"cam{i:02d}" for i in range(args.cameras)]
    for label in labels:
        cam = simulate_camera(label, width, height, args.strength, args.additive_sigma,
                              derive_seed(args.seed, label, "k"))
        train = render_flat_video(cam, args.train_frames, args.seed, label, "train")
        write_frame_dir(train, out_root / label / "train")
        for v in range(args.test_videos):
            video = render_flat_video(cam, args.test_frames, args.seed, label, "test", v)
            write_frame_dir(video, out_root / label / f"test_{v:03d}")
        log.info("simulated %s: %d train frames, %d test videos",
                 label, args.train_frames, args.test_videos)
        print(out_root / label)
    manifest = [
        f"cameras={args.cameras}",
        f"size={width}x{height}",
        f"strength={args.strength}",
        f"additive_sigma={args.additive_sigma}",
        f"train_frames={args.train_frames}",
        f"test_frames={args.test_frames}",
        f"test_videos={args.test_videos}",
        f"seed={args.seed}",
        f"labels={','.join(labels)}",
    ]
    atomic_write_text(out_root / "manifest.txt", "\n".join(manifest) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except PrnuError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
