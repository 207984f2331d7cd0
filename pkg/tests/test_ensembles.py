import math

import numpy as np
import pytest
from scipy import stats

import lyaprod.ensembles as ens
from lyaprod.ensembles import (FactorStream, GaussianInverseMixture,
                               GeneralSigmaGaussian, InverseGaussian,
                               RectangularGaussian, StandardGaussian,
                               TruncatedUnitary, chain_rng,
                               is_quaternion_structured, quaternion_dual,
                               rectangular_offsets, sample_factor,
                               sample_gaussian, sample_haar_unitary)
from lyaprod.sigma import SigmaSpec
from lyaprod.specfun import EULER_GAMMA
from lyaprod.theory import RectangularSpec

HALF_HALF = RectangularSpec(((0, 0.5), (1, 0.5)))


def collect(spec, n, rng, block=256):
    return list(FactorStream(spec, rng, block=block).factors(n))


class TestGaussianSampling:
    def test_real_second_moment(self):
        rng = chain_rng(100, 0)
        draws = ens._gaussian_data(1, 2, 2, rng, size=250_000)
        mean_sq = float((draws**2).mean())
        assert abs(mean_sq - 1.0) < 0.01

    def test_complex_log_modulus_mean(self):
        # E log|g| = -gamma/2 for a standard complex Gaussian scalar
        rng = chain_rng(101, 0)
        g = ens._gaussian_data(2, 1, 1, rng, size=1_000_000).ravel()
        logs = np.log(np.abs(g))
        se = logs.std(ddof=1) / math.sqrt(logs.size)
        assert abs(logs.mean() + EULER_GAMMA / 2.0) < 3.0 * se

    def test_complex_entry_normalization(self):
        rng = chain_rng(102, 0)
        g = ens._gaussian_data(2, 1, 1, rng, size=500_000).ravel()
        assert abs(float((np.abs(g)**2).mean()) - 1.0) < 0.01

    def test_quaternion_matrix_structure_exact(self):
        rng = chain_rng(103, 0)
        m = sample_gaussian(4, 1, 1, rng)
        assert m.data.shape == (2, 2)
        assert is_quaternion_structured(m.data)
        m = sample_gaussian(4, 3, 5, rng)
        assert m.data.shape == (6, 10)
        assert is_quaternion_structured(m.data)

    def test_quaternion_entry_normalization(self):
        rng = chain_rng(104, 0)
        m = ens._gaussian_data(4, 1, 1, rng, size=300_000)
        # |q|^2 = |alpha|^2 + |beta|^2, from the first block row
        sq = (np.abs(m[:, 0, 0])**2 + np.abs(m[:, 0, 1])**2)
        assert abs(float(sq.mean()) - 1.0) < 0.01


class TestHaarSampling:
    @pytest.mark.parametrize("beta", [1, 2, 4])
    def test_unitarity(self, beta):
        rng = chain_rng(200, beta)
        u = sample_haar_unitary(beta, 3, rng).data
        dev = np.abs(np.conj(u.T) @ u - np.eye(u.shape[0])).max()
        assert dev <= 1e-12

    def test_real_determinant_is_sign(self):
        rng = chain_rng(201, 0)
        for _ in range(20):
            u = sample_haar_unitary(1, 2, rng).data
            assert abs(abs(np.linalg.det(u)) - 1.0) <= 1e-12

    def test_quaternion_structure_exact(self):
        rng = chain_rng(202, 0)
        for m in (1, 2, 4):
            u = sample_haar_unitary(4, m, rng).data
            assert is_quaternion_structured(u)

    def test_first_entry_phase_uniform(self):
        # Haar measure makes the phase of U_11 uniform on the circle; without
        # the diagonal phase correction this test fails
        rng = chain_rng(203, 0)
        u = ens._haar_data(2, 2, rng, size=100_000)
        phases = np.angle(u[:, 0, 0])
        p = stats.kstest(phases, stats.uniform(loc=-math.pi, scale=2 * math.pi).cdf).pvalue
        assert p > 0.001

    @pytest.mark.parametrize("beta", [1, 2])
    def test_left_invariance_chi_square(self, beta):
        # statistics of V U match U for a fixed unitary V
        rng = chain_rng(204, beta)
        v = ens._haar_data(beta, 2, rng)
        u_plain = ens._haar_data(beta, 2, rng, size=100_000)
        u_mult = v @ ens._haar_data(beta, 2, rng, size=100_000)
        a = np.abs(u_plain[:, 0, 0])
        b = np.abs(u_mult[:, 0, 0])
        edges = np.quantile(np.concatenate([a, b]), np.linspace(0, 1, 21))
        edges[0], edges[-1] = 0.0, np.inf
        table = np.array([np.histogram(a, edges)[0], np.histogram(b, edges)[0]])
        p = stats.chi2_contingency(table).pvalue
        assert p > 0.001

    def test_quaternion_haar_invariance(self):
        # same check through the embedding for the symplectic case
        rng = chain_rng(205, 0)
        v = ens._haar_data(4, 2, rng)
        u_plain = ens._haar_data(4, 2, rng, size=30_000)
        u_mult = v @ ens._haar_data(4, 2, rng, size=30_000)
        a = np.abs(u_plain[:, 0, 0])
        b = np.abs(u_mult[:, 0, 0])
        edges = np.quantile(np.concatenate([a, b]), np.linspace(0, 1, 16))
        edges[0], edges[-1] = 0.0, np.inf
        table = np.array([np.histogram(a, edges)[0], np.histogram(b, edges)[0]])
        p = stats.chi2_contingency(table).pvalue
        assert p > 0.001


class TestFactorSampling:
    def test_truncated_zero_is_unitary(self):
        rng = chain_rng(300, 0)
        f = sample_factor(TruncatedUnitary(2, 2, 0), 1, rng)
        dev = np.abs(np.conj(f.data.T) @ f.data - np.eye(2)).max()
        assert dev <= 1e-12

    def test_general_sigma_factor_is_scaled_gaussian(self):
        # y = {1, 1/4} sorted ascending gives row scales (2, 1)
        spec = GeneralSigmaGaussian(2, SigmaSpec((1.0, 0.25)))
        f = sample_factor(spec, 1, chain_rng(301, 0))
        g = ens._gaussian_data(2, 2, 2, chain_rng(301, 0))
        assert np.array_equal(f.data, np.diag([2.0, 1.0]) @ g)

    def test_inverse_scalar_log_mean(self):
        # E log|1/g| = +gamma/2, the negation of the Gaussian value
        rng = chain_rng(302, 0)
        vals = np.array([math.log(abs(f[0, 0]))
                         for f in FactorStream(InverseGaussian(2, 1), rng,
                                               block=8192).factors(400_000)])
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - EULER_GAMMA / 2.0) < 3.0 * se

    def test_inverse_is_matrix_inverse(self):
        spec = InverseGaussian(2, 3)
        f = sample_factor(spec, 1, chain_rng(303, 0))
        g = ens._gaussian_data(2, 3, 3, chain_rng(303, 0))
        assert np.allclose(f.data @ g, np.eye(3), atol=1e-10)

    def test_inverse_quaternion_structure_exact(self):
        f = sample_factor(InverseGaussian(4, 2), 1, chain_rng(304, 0))
        assert is_quaternion_structured(f.data)

    def test_mixture_structure_exact_and_runs(self):
        rng = chain_rng(305, 0)
        for f in FactorStream(GaussianInverseMixture(4, 2, 0.5), rng).factors(20):
            assert is_quaternion_structured(f)

    def test_redraw_guard_counts(self, monkeypatch):
        monkeypatch.setattr(ens, "CONDITION_LIMIT", 1.5)
        rng = chain_rng(306, 0)
        stream = FactorStream(InverseGaussian(2, 2), rng)
        list(stream.factors(50))
        assert stream.redraws > 0

    def test_sample_factor_rejects_bad_step(self):
        with pytest.raises(ValueError):
            sample_factor(StandardGaussian(2, 2), 0, chain_rng(307, 0))


class TestDeterminism:
    SPECS = [
        StandardGaussian(2, 2),
        StandardGaussian(4, 2),
        GeneralSigmaGaussian(2, SigmaSpec((1.0, 0.25))),
        InverseGaussian(2, 2),
        InverseGaussian(1, 1),
        GaussianInverseMixture(2, 2, 0.5),
        RectangularGaussian(2, 2, HALF_HALF),
        TruncatedUnitary(2, 2, 2),
        TruncatedUnitary(4, 2, 1),
    ]

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__ + str(s.beta))
    def test_same_seed_same_stream(self, spec):
        a = collect(spec, 9, chain_rng(42, 3))
        b = collect(spec, 9, chain_rng(42, 3))
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__ + str(s.beta))
    def test_block_size_does_not_change_stream(self, spec):
        a = collect(spec, 9, chain_rng(43, 1), block=1)
        b = collect(spec, 9, chain_rng(43, 1), block=257)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__ + str(s.beta))
    def test_sample_factor_matches_stream(self, spec):
        streamed = collect(spec, 6, chain_rng(44, 2))
        rng = chain_rng(44, 2)
        singles = [sample_factor(spec, i, rng).data for i in range(1, 7)]
        for x, y in zip(streamed, singles):
            assert np.array_equal(x, y)

    def test_distinct_chains_differ(self):
        a = collect(StandardGaussian(2, 2), 3, chain_rng(42, 0))
        b = collect(StandardGaussian(2, 2), 3, chain_rng(42, 1))
        assert not np.array_equal(a[0], b[0])

    @pytest.mark.parametrize("spec", [s for s in SPECS if s.beta == 4],
                             ids=lambda s: type(s).__name__)
    def test_quaternion_stream_structure_exact(self, spec):
        for f in collect(spec, 6, chain_rng(45, 0)):
            assert is_quaternion_structured(f)


class TestRectangularSchedule:
    def test_half_half_alternates(self):
        assert rectangular_offsets(HALF_HALF, 6) == [0, 1, 0, 1, 0, 1]

    @pytest.mark.parametrize("shapes", [
        HALF_HALF,
        RectangularSpec(((0, 0.25), (2, 0.75))),
        RectangularSpec(((0, 0.2), (1, 0.3), (4, 0.5))),
    ])
    def test_prefix_frequencies_within_one_over_n(self, shapes):
        seq = rectangular_offsets(shapes, 5000)
        counts = {g: 0 for g in shapes.offsets}
        for i, off in enumerate(seq, start=1):
            counts[off] += 1
            for (g, a) in shapes.shapes:
                assert abs(counts[g] - a * i) <= 1.0 + 1e-9

    def test_factor_shapes_follow_schedule(self):
        spec = RectangularGaussian(2, 2, HALF_HALF)
        factors = collect(spec, 5, chain_rng(46, 0))
        # schedule 0,1,0,1,0 with nu_0 = 0: shapes (2,2),(3,2),(2,3),(3,2),(2,3)
        assert [f.shape for f in factors] == [(2, 2), (3, 2), (2, 3), (3, 2), (2, 3)]


class TestQuaternionHelpers:
    def test_dual_is_involution(self):
        rng = chain_rng(47, 0)
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert np.allclose(quaternion_dual(quaternion_dual(m)), m)

    def test_structured_iff_fixed_point(self):
        rng = chain_rng(48, 0)
        m = ens._gaussian_data(4, 2, 2, rng)
        assert is_quaternion_structured(m)
        m2 = m.copy()
        m2[0, 0] += 1.0
        assert not is_quaternion_structured(m2)


class TestChainRng:
    def test_documented_split(self):
        ss = np.random.SeedSequence(77, spawn_key=(3,))
        expected = np.random.default_rng(ss).standard_normal(4)
        got = chain_rng(77, 3).standard_normal(4)
        assert np.array_equal(expected, got)
