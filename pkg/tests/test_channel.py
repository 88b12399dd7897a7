import numpy as np
import pytest

from miso_outage.channel import (
    ChannelRealization,
    ChannelStatistics,
    SampleSource,
    ValidationError,
    factor_covariance,
    gaussian_sample_arrays,
    sample_batch,
    validate_statistics,
)

from conftest import random_psd, random_statistics


def simple_stats(n=2, sigma=1.0):
    eye = np.eye(n)
    return ChannelStatistics(
        n=n, Q11=eye, Q12=eye, Q21=eye, Q22=eye, sigma1_sq=sigma, sigma2_sq=sigma
    )


class TestRealization:
    def test_valid_vectors_coerced_complex(self):
        r = ChannelRealization([1.0, 2.0], [0.0, 1j], [1.0, 0.0], [2.0, 3.0])
        assert r.n == 2
        assert r.h11.dtype == np.complex128
        np.testing.assert_allclose(r.h12, [0.0, 1j])

    def test_matrix_rejected(self):
        with pytest.raises(ValidationError, match="h21"):
            ChannelRealization([1.0], [1.0], [[1.0]], [1.0])

    def test_nan_rejected(self):
        with pytest.raises(ValidationError, match="h22"):
            ChannelRealization([1.0], [1.0], [1.0], [np.nan])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError, match="h12"):
            ChannelRealization([1.0, 2.0], [1.0], [1.0, 0.0], [0.0, 1.0])


class TestStatisticsValidation:
    def test_valid_passes_through(self, rng):
        stats = random_statistics(rng)
        assert validate_statistics(stats) is stats

    def test_rank_deficient_is_legal(self):
        Q = np.array([[1.0, 1.0], [1.0, 1.0]])
        stats = simple_stats()
        stats.Q12 = Q.astype(complex)
        validate_statistics(stats)

    def test_non_hermitian_rejected(self):
        stats = simple_stats()
        stats.Q21 = np.array([[1.0, 0.5], [0.0, 1.0]], dtype=complex)
        with pytest.raises(ValidationError, match="Q21"):
            validate_statistics(stats)

    def test_indefinite_rejected(self):
        stats = simple_stats()
        stats.Q22 = np.array([[1.0, 0.0], [0.0, -0.2]], dtype=complex)
        with pytest.raises(ValidationError, match="Q22"):
            validate_statistics(stats)

    def test_wrong_shape_rejected(self):
        stats = simple_stats()
        stats.Q11 = np.eye(3, dtype=complex)
        with pytest.raises(ValidationError, match="Q11"):
            validate_statistics(stats)

    @pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
    def test_bad_noise_rejected(self, bad):
        stats = simple_stats()
        stats.sigma2_sq = bad
        with pytest.raises(ValidationError, match="sigma2_sq"):
            validate_statistics(stats)


class TestFactorCovariance:
    def test_reconstructs_random_psd(self, rng):
        for _ in range(20):
            Q = random_psd(rng, 3)
            L = factor_covariance(Q)
            assert np.max(np.abs(L @ L.conj().T - Q)) <= 1e-9

    def test_reconstructs_rank_deficient(self, rng):
        for _ in range(10):
            Q = random_psd(rng, 3, rank=1)
            L = factor_covariance(Q)
            assert np.max(np.abs(L @ L.conj().T - Q)) <= 1e-9

    def test_zero_matrix(self):
        L = factor_covariance(np.zeros((2, 2)))
        np.testing.assert_allclose(L @ L.conj().T, np.zeros((2, 2)), atol=1e-10)

    def test_indefinite_raises(self):
        with pytest.raises(ValidationError, match="indefinite"):
            factor_covariance(np.diag([1.0, -0.5]))


class TestGaussianStream:
    def test_prefix_stability(self):
        stats = simple_stats()
        full = gaussian_sample_arrays(stats, seed=3, start=0, stop=1000)
        head = gaussian_sample_arrays(stats, seed=3, start=0, stop=100)
        for key in full:
            np.testing.assert_array_equal(head[key], full[key][:100])

    def test_offset_slice_matches_full_stream(self):
        stats = simple_stats(n=3)
        full = gaussian_sample_arrays(stats, seed=11, start=0, stop=200)
        mid = gaussian_sample_arrays(stats, seed=11, start=100, stop=200)
        for key in full:
            np.testing.assert_array_equal(mid[key], full[key][100:200])

    def test_seeds_differ(self):
        stats = simple_stats()
        a = gaussian_sample_arrays(stats, seed=1, start=0, stop=10)
        b = gaussian_sample_arrays(stats, seed=2, start=0, stop=10)
        assert np.max(np.abs(a["h11"] - b["h11"])) > 1e-6

    def test_empty_range(self):
        stats = simple_stats()
        out = gaussian_sample_arrays(stats, seed=0, start=5, stop=5)
        assert out["h11"].shape == (0, 2)

    def test_invalid_range_raises(self):
        with pytest.raises(ValueError):
            gaussian_sample_arrays(simple_stats(), seed=0, start=4, stop=2)

    def test_sample_covariance_converges(self, rng):
        n, N = 2, 200_000
        stats = random_statistics(rng, n)
        # keep covariances O(1) so one absolute tolerance fits all entries
        for key in ("Q11", "Q12", "Q21", "Q22"):
            Q = getattr(stats, key)
            setattr(stats, key, Q / np.trace(Q).real * n)
        arrs = gaussian_sample_arrays(stats, seed=99, start=0, stop=N)
        for key, h in arrs.items():
            emp = (h[:, :, None] * h[:, None, :].conj()).mean(axis=0)
            np.testing.assert_allclose(emp, stats.covariance(key), atol=0.02)

    def test_cross_channel_independence(self):
        stats = simple_stats()
        arrs = gaussian_sample_arrays(stats, seed=5, start=0, stop=200_000)
        cross = np.mean(arrs["h11"][:, 0] * np.conj(arrs["h22"][:, 0]))
        assert abs(cross) < 0.02


class TestSampleSource:
    def test_gaussian_source_matches_raw_stream(self):
        stats = simple_stats()
        src = SampleSource.gaussian(stats, seed=21, count=50)
        direct = gaussian_sample_arrays(stats, seed=21, start=10, stop=30)
        got = src.arrays(10, 30)
        for key in direct:
            np.testing.assert_array_equal(got[key], direct[key])

    def test_gaussian_validates_statistics(self):
        stats = simple_stats()
        stats.sigma1_sq = -1.0
        with pytest.raises(ValidationError):
            SampleSource.gaussian(stats, seed=0, count=10)

    def test_explicit_round_trip(self, rng):
        rs = [
            ChannelRealization(*(rng.standard_normal(2) + 0j for _ in range(4)))
            for _ in range(5)
        ]
        src = SampleSource.explicit(rs)
        assert src.count == 5 and src.n == 2
        arrs = src.arrays()
        for k, r in enumerate(rs):
            np.testing.assert_array_equal(arrs["h12"][k], r.h12)
        back = sample_batch(src, 2, 4)
        np.testing.assert_array_equal(back[0].h11, rs[2].h11)

    def test_explicit_mismatched_n_rejected(self):
        r2 = ChannelRealization([1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0])
        r3 = ChannelRealization([1.0] * 3, [1.0] * 3, [1.0] * 3, [1.0] * 3)
        with pytest.raises(ValidationError, match="realization 1"):
            SampleSource.explicit([r2, r3])

    def test_explicit_empty_rejected(self):
        with pytest.raises(ValueError):
            SampleSource.explicit([])

    def test_range_outside_stream_raises(self):
        src = SampleSource.gaussian(simple_stats(), seed=0, count=10)
        with pytest.raises(ValueError):
            src.arrays(0, 11)
