import numpy as np
import pytest

from prnu_scout.denoise import DenoiserConfig
from prnu_scout.fingerprint import build_fingerprint
from prnu_scout.identify import CameraRegistry
from prnu_scout.simulate import derive_seed, render_flat_video, simulate_camera

WORLD_SEED = 909
WORLD_SIZE = 48  # smallest size that keeps PCE well-conditioned and tests fast


@pytest.fixture(scope="session")
def denoiser_cfg():
    return DenoiserConfig()


@pytest.fixture(scope="session")
def tiny_world(denoiser_cfg):
    """Three enrolled synthetic cameras plus one test video each."""
    labels = ("camA", "camB", "camC")
    cams = {
        label: simulate_camera(
            label, WORLD_SIZE, WORLD_SIZE, 0.05, 2.0, derive_seed(WORLD_SEED, label, "k")
        )
        for label in labels
    }
    train = {
        label: render_flat_video(cams[label], 8, WORLD_SEED, label, "train")
        for label in labels
    }
    test = {
        label: render_flat_video(cams[label], 6, WORLD_SEED, label, "test", 0)
        for label in labels
    }
    registry = CameraRegistry(
        entries=tuple(
            (label, build_fingerprint(train[label], denoiser_cfg, label=label))
            for label in labels
        )
    )
    return {
        "labels": labels,
        "cams": cams,
        "train": train,
        "test": test,
        "registry": registry,
    }


@pytest.fixture()
def random_frame_pixels():
    rng = np.random.default_rng(4321)
    return rng.integers(0, 256, size=(24, 32)).astype(np.float64)
