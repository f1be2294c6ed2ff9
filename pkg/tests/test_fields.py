import numpy as np
import pytest

from simplopt.fields import (
    AdmissibleParams,
    DensityField,
    LatentField,
    bregman_divergence,
    fermi_dirac_entropy,
    logit,
    sigmoid,
    weighted_inner,
)


def _unit_field(value, n=4):
    return DensityField(np.full(n, value), np.full(n, 1.0 / n))


def _sigmoid_bisect(target, lo=-80.0, hi=80.0):
    """Independent inverse of sigmoid by bisection."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sigmoid(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestSigmoid:
    def test_center(self):
        assert sigmoid(0.0) == 0.5

    def test_remark_magnitude(self):
        # sigmoid(-10) is of order 1e-5
        assert sigmoid(-10.0) == pytest.approx(4.5397868702434395e-05, rel=1e-12)

    def test_symmetry(self):
        x = np.linspace(-40, 40, 401)
        np.testing.assert_allclose(sigmoid(-x), 1.0 - sigmoid(x), atol=1e-15)

    def test_monotone_random_pairs(self):
        # gaps large enough that the images differ by more than one ulp of 1
        rng = np.random.default_rng(3)
        a = rng.uniform(-30, 29, 2000)
        b = a + rng.uniform(0.01, 1.0, 2000)
        assert np.all(sigmoid(a) < sigmoid(b))

    def test_strictly_interior_at_clamp_bound(self):
        from simplopt.fields import DEFAULT_CLAMP_BOUND

        vals = sigmoid(np.array([-DEFAULT_CLAMP_BOUND, DEFAULT_CLAMP_BOUND]))
        assert 0.0 < vals[0] < 1e-12
        assert 1.0 - 1e-12 < vals[1] < 1.0


class TestLogit:
    def test_half(self):
        assert logit(0.5) == 0.0

    def test_value_against_bisection_oracle(self):
        assert logit(0.3) == pytest.approx(np.log(3.0 / 7.0), abs=1e-12)
        assert logit(0.3) == pytest.approx(_sigmoid_bisect(0.3), abs=1e-10)

    def test_domain_errors(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                logit(bad)

    def test_round_trip_representable_range(self):
        # float64 carries the inverse to 1e-9 for |x| up to ~16 on the
        # positive side and all the way down on the negative side
        x = np.concatenate([np.linspace(-30, 16, 4001)])
        np.testing.assert_allclose(logit(sigmoid(x)), x, atol=1e-9)

    def test_round_trip_rounding_bound(self):
        # beyond that, the error stays within the representation bound
        # eps * e^x of the sigmoid value itself
        x = np.linspace(16, 30, 1401)
        err = np.abs(logit(sigmoid(x)) - x)
        bound = 4.0 * np.finfo(float).eps * np.exp(x) + 1e-9
        assert np.all(err <= bound)

    def test_inverse_pair_on_densities(self):
        rng = np.random.default_rng(11)
        rho = rng.uniform(1e-12, 1 - 1e-12, 5000)
        np.testing.assert_allclose(sigmoid(logit(rho)), rho, atol=1e-12)


class TestEntropy:
    def test_symmetric_point(self):
        assert fermi_dirac_entropy(_unit_field(0.5)) == pytest.approx(np.log(0.5), abs=1e-14)

    def test_binary_limit(self):
        assert fermi_dirac_entropy(_unit_field(1.0)) == 0.0
        assert fermi_dirac_entropy(_unit_field(0.0)) == 0.0

    def test_scalar_oracle(self):
        rho = DensityField(np.full(8, 0.3), np.full(8, 0.25))  # |Omega| = 2
        expected = 2.0 * (0.3 * np.log(0.3) + 0.7 * np.log(0.7))
        assert fermi_dirac_entropy(rho) == pytest.approx(expected, abs=1e-13)

    def test_nonpositive(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            vol = rng.uniform(0.1, 2.0, 16)
            rho = DensityField(rng.uniform(0, 1, 16), vol)
            assert fermi_dirac_entropy(rho) <= 0.0


class TestBregman:
    def test_zero_at_same_point(self):
        rho = _unit_field(0.4)
        assert bregman_divergence(rho, rho) == 0.0

    def test_closed_form_value(self):
        val = bregman_divergence(_unit_field(0.5), _unit_field(0.25))
        assert val == pytest.approx(0.5 * np.log(2.0) + 0.5 * np.log(2.0 / 3.0), abs=1e-14)

    def test_three_term_identity(self):
        # D(rho, q) == phi(rho) - phi(q) - <logit(q), rho - q>_M
        rng = np.random.default_rng(7)
        for _ in range(200):
            vol = rng.uniform(0.2, 1.5, 12)
            rho = DensityField(rng.uniform(0.01, 0.99, 12), vol)
            q = DensityField(rng.uniform(0.01, 0.99, 12), vol)
            direct = bregman_divergence(rho, q)
            three_term = (
                fermi_dirac_entropy(rho)
                - fermi_dirac_entropy(q)
                - weighted_inner(logit(q.values), rho.values - q.values, vol)
            )
            assert direct == pytest.approx(three_term, abs=1e-12)

    def test_nonnegative_and_definite(self):
        rng = np.random.default_rng(13)
        for _ in range(10_000):
            vol = rng.uniform(0.1, 1.0, 6)
            rho = DensityField(rng.uniform(0, 1, 6), vol)
            q = DensityField(rng.uniform(1e-6, 1 - 1e-6, 6), vol)
            assert bregman_divergence(rho, q) >= 0.0
        rho = DensityField(rng.uniform(0.2, 0.8, 6), np.full(6, 0.3))
        assert bregman_divergence(rho, rho) <= 1e-14

    def test_reference_domain_error(self):
        rho = _unit_field(0.5)
        with pytest.raises(ValueError):
            bregman_divergence(rho, _unit_field(1.0))


class TestWeightedInner:
    def test_partition_of_domain(self):
        vol = np.array([0.5, 1.5, 1.0])
        ones = np.ones(3)
        assert weighted_inner(ones, ones, vol) == pytest.approx(3.0)

    def test_arithmetic(self):
        assert weighted_inner([1.0, 2.0], [3.0, 4.0], np.array([0.5, 0.5])) == 5.5

    def test_orthogonal(self):
        vol = np.array([1.0, 2.0])
        a = np.array([2.0, 1.0])
        b = np.array([1.0, -1.0])  # <a, b>_M = 2 - 2 = 0
        assert weighted_inner(a, b, vol) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            weighted_inner(np.ones(3), np.ones(4), np.ones(3))


class TestContainers:
    def test_density_field_validation(self):
        with pytest.raises(ValueError):
            DensityField(np.ones(3), np.array([1.0, -1.0, 1.0]))
        with pytest.raises(ValueError):
            DensityField(np.ones(3), np.ones(4))

    def test_latent_density_round_trip(self):
        psi = LatentField(np.array([0.0, 2.0, -60.0]), clamp_bound=50.0)
        clamped = psi.clamped()
        assert clamped.values[2] == -50.0
        rho = clamped.density(np.full(3, 1.0))
        assert np.all((rho.values > 0) & (rho.values < 1))

    def test_admissible_params(self):
        adm = AdmissibleParams(0.3, 2.0)
        assert adm.volume_budget == pytest.approx(0.6)
        with pytest.raises(ValueError):
            AdmissibleParams(1.2, 1.0)
        with pytest.raises(ValueError):
            AdmissibleParams(0.3, -1.0)
