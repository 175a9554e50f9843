import numpy as np
import pytest

from prnu_scout.errors import ConfigError, EmptyInputError
from prnu_scout.evaluate import (
    ConfusionMatrix,
    ExperimentConfig,
    confusion_matrix,
    run_experiment,
    success_error_rate,
)
from prnu_scout.fingerprint import save_fingerprint
from prnu_scout.imgio import write_frame_dir
from prnu_scout.simulate import derive_seed, simulate_camera

# printed confusion matrices for the worst and best reported cases
CM_WORST = [
    [4, 0, 0, 0, 0],
    [1, 5, 0, 0, 0],
    [0, 0, 6, 0, 0],
    [1, 1, 1, 3, 0],
    [0, 1, 2, 2, 1],
]
CM_BEST = [
    [5, 0, 0, 0, 0],
    [0, 7, 0, 0, 0],
    [0, 0, 7, 0, 0],
    [0, 1, 0, 6, 0],
    [0, 0, 2, 0, 5],
]
FIVE = ("c1", "c2", "c3", "c4", "c5")


class TestConfusionMatrix:
    def test_counting(self):
        cm = confusion_matrix([("A", "A"), ("A", "B"), ("B", "B")], ("A", "B"))
        assert cm.counts.tolist() == [[1, 1], [0, 1]]

    def test_empty_trials_all_zero(self):
        cm = confusion_matrix([], ("A", "B"))
        assert cm.counts.tolist() == [[0, 0], [0, 0]]

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError):
            confusion_matrix([("A", "Z")], ("A", "B"))
        with pytest.raises(ValueError):
            confusion_matrix([("Z", "A")], ("A", "B"))

    def test_reconstructs_best_case_from_trials(self):
        trials = []
        for i, row in enumerate(CM_BEST):
            for j, count in enumerate(row):
                trials.extend([(FIVE[i], FIVE[j])] * count)
        assert len(trials) == 33
        cm = confusion_matrix(trials, FIVE)
        assert cm.counts.tolist() == CM_BEST

    def test_validation(self):
        with pytest.raises(ValueError):
            ConfusionMatrix(labels=("A", "A"), counts=np.zeros((2, 2), dtype=int))
        with pytest.raises(ValueError):
            ConfusionMatrix(labels=("A", "B"), counts=np.zeros((2, 3), dtype=int))
        with pytest.raises(ValueError):
            ConfusionMatrix(labels=("A", "B"), counts=np.array([[1, -1], [0, 0]]))


class TestRates:
    def test_worst_case_rates(self):
        p, q = success_error_rate(ConfusionMatrix(labels=FIVE, counts=np.array(CM_WORST)))
        assert p == pytest.approx(67.86, abs=0.01)
        assert q == pytest.approx(32.14, abs=0.01)

    def test_best_case_rates(self):
        _, q = success_error_rate(ConfusionMatrix(labels=FIVE, counts=np.array(CM_BEST)))
        assert q == pytest.approx(9.09, abs=0.01)

    def test_identity_matrix_is_perfect(self):
        for k in (1, 3, 6):
            labels = tuple(f"c{i}" for i in range(k))
            cm = ConfusionMatrix(labels=labels, counts=np.eye(k, dtype=int) * 4)
            p, q = success_error_rate(cm)
            assert (p, q) == (100.0, 0.0)

    def test_p_plus_q_is_exactly_100(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            counts = rng.integers(0, 9, (4, 4))
            counts[0, 0] += 1  # keep total > 0
            cm = ConfusionMatrix(labels=("a", "b", "c", "d"), counts=counts)
            p, q = success_error_rate(cm)
            assert p + q == 100.0

    def test_empty_total_rejected(self):
        cm = ConfusionMatrix(labels=("a",), counts=np.zeros((1, 1), dtype=int))
        with pytest.raises(EmptyInputError):
            success_error_rate(cm)


class TestConfigParsing:
    def test_synthetic_config_with_defaults(self):
        config = ExperimentConfig.from_text("cameras = 3\nwidth=64\nheight = 64\n")
        assert config.synthetic
        assert config.methods == ("vote", "pattern", "pcevec")
        assert config.rates == (30, 25, 20, 15, 10)
        assert config.comparator == "ncc"
        assert config.normalize is False
        assert (config.sigma, config.levels) == (3.0, 4)

    def test_comments_and_blank_lines(self):
        text = "# hello\n\ncameras = 2  # inline\nrates = 10, 5\nmethods= pattern\n"
        config = ExperimentConfig.from_text(text)
        assert config.rates == (10, 5)
        assert config.methods == ("pattern",)

    def test_real_mode(self, tmp_path):
        (tmp_path / "db").mkdir()
        text = "db = db\ntestset.lab = videos\n"
        config = ExperimentConfig.from_text(text, base_dir=tmp_path)
        assert not config.synthetic
        assert config.db == tmp_path / "db"
        assert config.testsets == (("lab", tmp_path / "videos"),)

    @pytest.mark.parametrize(
        "text",
        [
            "",  # neither mode
            "cameras = 2\ndb = somewhere\n",  # both modes
            "db = somewhere\n",  # real mode without testsets
            "cameras = 2\nbogus_key = 1\n",
            "cameras = 2\nrates = 0\n",
            "cameras = 2\nmethods = warp\n",
            "cameras = 2\ncameras = 3\n",
            "cameras = two\n",
            "cameras = 2\nnormalize = maybe\n",
            "just a line without equals\n",
            "cameras = 2\ncomparator = cosine\n",
        ],
    )
    def test_bad_configs_rejected(self, text):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(tmp_path / "absent.cfg")


TINY_SYNTH = """
seed = 6
methods = pattern
rates = 2
cameras = 3
width = 48
height = 48
strength = 0.05
additive_sigma = 2.0
train_frames = 6
test_frames = 4
test_videos = 1
"""


class TestRunExperiment:
    def test_single_cell_synthetic(self, tmp_path):
        config = ExperimentConfig.from_text(TINY_SYNTH)
        result = run_experiment(config, out_dir=tmp_path)
        assert set(result.cells) == {("pattern", 2, "synthetic")}
        cell = result.cell("pattern", 2)
        assert cell.q == 0.0
        # row sums = test videos per camera
        assert cell.cm.counts.sum(axis=1).tolist() == [1, 1, 1]

        table = (tmp_path / "table_pattern.csv").read_text().splitlines()
        assert table == ["rate,synthetic", "1/2,0.00"]
        confusion = (tmp_path / "confusion_pattern_2.csv").read_text().splitlines()
        assert confusion[0] == "true\\predicted,cam00,cam01,cam02"
        mean = (tmp_path / "mean_error.csv").read_text().splitlines()
        assert mean == ["rate,pattern", "1/2,0.00"]

    def test_deterministic_across_jobs(self, tmp_path):
        config = ExperimentConfig.from_text(TINY_SYNTH)
        run_experiment(config, out_dir=tmp_path / "a", jobs=1)
        run_experiment(config, out_dir=tmp_path / "b", jobs=3)
        for name in ("table_pattern.csv", "confusion_pattern_2.csv", "mean_error.csv", "run_meta.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_real_mode_round_trip(self, tmp_path, tiny_world, denoiser_cfg):
        db = tmp_path / "db"
        db.mkdir()
        for label, fp in tiny_world["registry"].entries:
            save_fingerprint(fp, db / f"{label}.prnufp")
        videos = tmp_path / "videos"
        for label in tiny_world["labels"]:
            write_frame_dir(tiny_world["test"][label], videos / label / "video0")
        config = ExperimentConfig.from_text(
            "db = db\ntestset.main = videos\nmethods = pattern\nrates = 1\n",
            base_dir=tmp_path,
        )
        result = run_experiment(config, out_dir=tmp_path / "out")
        cell = result.cell("pattern", 1, "main")
        assert cell.q == 0.0
        assert cell.cm.labels == tiny_world["labels"]

    def test_unreadable_testset_marks_cell_not_run(self, tmp_path, tiny_world):
        db = tmp_path / "db"
        db.mkdir()
        for label, fp in tiny_world["registry"].entries:
            save_fingerprint(fp, db / f"{label}.prnufp")
        videos = tmp_path / "videos"
        bad = videos / "camA" / "video0"
        bad.mkdir(parents=True)  # exists but holds no frames
        config = ExperimentConfig.from_text(
            "db = db\ntestset.main = videos\nmethods = pattern\nrates = 1\n",
            base_dir=tmp_path,
        )
        result = run_experiment(config, out_dir=tmp_path / "out")
        cell = result.cell("pattern", 1, "main")
        assert cell.q is None
        assert cell.error is not None
        table = (tmp_path / "out" / "table_pattern.csv").read_text().splitlines()
        assert table[1] == "1/1,ERR"

    def test_synthetic_world_shares_data_across_cells(self):
        config = ExperimentConfig.from_text(
            TINY_SYNTH.replace("methods = pattern", "methods = pattern, pcevec")
        )
        result = run_experiment(config)
        pat = result.cell("pattern", 2)
        vec = result.cell("pcevec", 2)
        assert [t.true_label for t in pat.trials] == [t.true_label for t in vec.trials]
        assert pat.q == vec.q == 0.0


def test_estimator_convergence_toward_planted_pattern(denoiser_cfg):
    # averaging residuals of flat-gray renders approaches k * 128
    from prnu_scout.denoise import extract_residual
    from prnu_scout.match import ncc
    from prnu_scout.simulate import flat_frame, render_frame

    cam = simulate_camera("c", 64, 64, 0.05, 2.0, derive_seed(2, "conv", "k"))
    total = np.zeros((64, 64))
    n = 120
    for i in range(n):
        frame = render_frame(cam, flat_frame(64, 64, 128.0, i), derive_seed(2, "conv", i))
        total += extract_residual(frame, denoiser_cfg).values
    assert ncc(total / n, cam.k * 128.0) > 0.8
