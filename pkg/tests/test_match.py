import numpy as np
import pytest

from prnu_scout.errors import DegenerateInputError, DimensionMismatchError
from prnu_scout.match import PceResult, cross_correlate_full, ncc, pce


def brute_force_surface(a, b):
    """O(n^4) spatial-domain oracle for the cyclic correlation surface."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a0 = a - a.mean()
    b0 = b - b.mean()
    h, w = a.shape
    out = np.empty((h, w))
    for s in range(h):
        for t in range(w):
            out[s, t] = (a0 * np.roll(np.roll(b0, -s, axis=0), -t, axis=1)).sum()
    return out


class TestNcc:
    def test_self_correlation_is_exactly_one(self):
        rng = np.random.default_rng(2)
        x = rng.normal(0, 1, (16, 16))
        assert ncc(x, x) == 1.0
        assert ncc(x, -x) == -1.0

    def test_affine_invariance(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0, 1, (12, 8))
        assert abs(ncc(x, 2 * x + 7) - 1.0) < 1e-12

    def test_symmetry_exact(self):
        rng = np.random.default_rng(5)
        a = rng.normal(0, 1, (10, 10))
        b = rng.normal(0, 1, (10, 10))
        assert ncc(a, b) == ncc(b, a)

    def test_zero_variance_is_an_error_not_a_zero(self):
        x = np.random.default_rng(7).normal(0, 1, (8, 8))
        with pytest.raises(DegenerateInputError):
            ncc(x, np.full((8, 8), 3.0))
        with pytest.raises(DegenerateInputError):
            ncc(np.zeros((8, 8)), x)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            ncc(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_range_clamped(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            a = rng.normal(0, 1, (6, 6))
            b = rng.normal(0, 1, (6, 6))
            assert -1.0 <= ncc(a, b) <= 1.0


class TestCrossCorrelateFull:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        for shape in [(8, 8), (5, 7), (16, 9), (7, 32), (31, 31)]:
            a = rng.normal(0, 1, shape)
            b = rng.normal(0, 1, shape)
            assert np.abs(cross_correlate_full(a, b) - brute_force_surface(a, b)).max() < 1e-9

    def test_cyclic_shift_moves_peak(self):
        rng = np.random.default_rng(13)
        a = rng.normal(0, 1, (12, 10))
        b = np.roll(a, (2, 3), axis=(0, 1))
        surface = cross_correlate_full(a, b)
        assert np.unravel_index(np.argmax(surface), surface.shape) == (2, 3)

    def test_delta_inputs(self):
        # a = delta at (0,0), b = delta at (1,1): after mean subtraction the
        # peak lands at shift (1,1) with height 1 - 1/64 = 63/64
        a = np.zeros((8, 8))
        a[0, 0] = 1.0
        b = np.zeros((8, 8))
        b[1, 1] = 1.0
        surface = cross_correlate_full(a, b)
        assert np.unravel_index(np.argmax(surface), surface.shape) == (1, 1)
        assert surface[1, 1] == pytest.approx(63 / 64, abs=1e-12)
        assert np.abs(surface - brute_force_surface(a, b)).max() < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cross_correlate_full(np.zeros((4, 4)), np.zeros((4, 5)))


class TestPce:
    def test_autocorrelation_of_noise(self):
        x = np.random.default_rng(1).normal(0, 1, (64, 64))
        result = pce(x, x)
        assert (result.peak_row, result.peak_col) == (0, 0)
        assert result.pce > 1000
        assert result.peak_value == pytest.approx((x - x.mean()).var() * x.size, rel=1e-9)

    def test_independent_noise_stays_low(self):
        # empirical bound: max over 120 seeds observed ~19.7
        worst = 0.0
        for seed in range(120):
            rng = np.random.default_rng(1000 + seed)
            a = rng.normal(0, 1, (64, 64))
            b = rng.normal(0, 1, (64, 64))
            worst = max(worst, pce(a, b).pce)
        assert worst < 60

    def test_shift_equivariance(self):
        x = np.random.default_rng(9).normal(0, 1, (32, 32))
        base = pce(x, x)
        shifted = pce(x, np.roll(x, (5, 9), axis=(0, 1)))
        assert (shifted.peak_row, shifted.peak_col) == (5, 9)
        assert shifted.pce == pytest.approx(base.pce, rel=1e-6)

    def test_scale_invariance(self):
        x = np.random.default_rng(10).normal(0, 1, (32, 32))
        y = np.roll(x, (3, 4), axis=(0, 1))
        base = pce(x, y).pce
        for alpha in (0.1, 1.0, 10.0):
            for beta in (0.1, 1.0, 10.0):
                assert pce(alpha * x, beta * y).pce == pytest.approx(base, rel=1e-9)

    def test_score_non_negative_and_peak_in_range(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            a = rng.normal(0, 1, (16, 16))
            b = rng.normal(0, 1, (16, 16))
            r = pce(a, b)
            assert r.pce >= 0
            assert 0 <= r.peak_row < 16
            assert 0 <= r.peak_col < 16

    def test_constant_inputs_rejected(self):
        with pytest.raises(DegenerateInputError):
            pce(np.full((16, 16), 5.0), np.full((16, 16), 9.0))

    def test_even_exclusion_rejected(self):
        x = np.random.default_rng(14).normal(0, 1, (16, 16))
        with pytest.raises(ValueError):
            pce(x, x, exclusion=10)

    def test_surface_smaller_than_exclusion_rejected(self):
        x = np.random.default_rng(15).normal(0, 1, (8, 8))
        with pytest.raises(DimensionMismatchError):
            pce(x, x, exclusion=11)

    def test_result_is_frozen(self):
        r = PceResult(pce=1.0, peak_row=0, peak_col=0, peak_value=1.0)
        with pytest.raises(AttributeError):
            r.pce = 2.0
