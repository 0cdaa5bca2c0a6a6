import numpy as np
import pytest
from scipy.special import zeta

from hilbert_lrd.grid import uniform_grid
from hilbert_lrd.model import DomainError, InnovationModel, MemoryProfile
from hilbert_lrd.process import gamma_sequence
from hilbert_lrd.gaussian_limit import (
    apply_A,
    apply_lambda,
    apply_phi,
    sigma_pairing,
)


def _scalar():
    return (
        MemoryProfile.constant(0.1, 1),
        InnovationModel.from_sigma(np.eye(1)),
        uniform_grid(1),
    )


def test_apply_A_zeta_oracle():
    prof = MemoryProfile.constant(0.1, 3)
    T = np.ones((3, 3))
    out = apply_A(0, T, prof)
    np.testing.assert_allclose(out, zeta(1.8), rtol=1e-6)


def test_apply_A_shifted_vs_brute_force():
    prof = MemoryProfile(d=(0.1, 0.2))
    j = np.arange(2 * 10**6, dtype=float)
    brute = np.sum((j + 3.0) ** (0.1 - 1.0) * (j + 1.0) ** (0.2 - 1.0))
    brute += (2 * 10**6) ** (0.1 + 0.2 - 1.0) / 0.7  # integral tail
    out = apply_A(2, np.ones((2, 2)), prof)
    assert out[0, 1] == pytest.approx(brute, rel=1e-5)


class TestLambdaPhi:
    def test_scalar_values(self):
        prof, innov, space = _scalar()
        assert apply_lambda(np.ones((1, 1)), innov, space)[0, 0] == pytest.approx(3.0)
        assert apply_phi(np.ones((1, 1)), innov, space)[0, 0] == pytest.approx(3.0)

    def test_wick_vs_monte_carlo(self):
        rng_sigma = np.random.default_rng(7)
        A = rng_sigma.standard_normal((3, 3))
        sigma = A @ A.T + 0.5 * np.eye(3)
        innov = InnovationModel.from_sigma(sigma)
        space = uniform_grid(3)
        T = rng_sigma.standard_normal((3, 3))
        wick = apply_lambda(T, innov, space)
        mc, se = apply_lambda(
            T, innov, space, mode="MonteCarlo", R=4 * 10**5,
            rng=np.random.default_rng(123), return_stderr=True,
        )
        np.testing.assert_array_less(np.abs(mc - wick), 4.0 * se + 1e-12)

    def test_wick_rejects_non_gaussian(self):
        innov = InnovationModel.from_sigma(np.eye(1), law="ScaledRademacher")
        with pytest.raises(ValueError):
            apply_lambda(np.ones((1, 1)), innov, uniform_grid(1))

    def test_lambda_minus_phi_vanishes_for_scalar_gaussian(self):
        # fourth-moment structure: for m=1, sigma=1 both give 3T
        prof, innov, space = _scalar()
        T = np.array([[2.5]])
        np.testing.assert_allclose(
            apply_lambda(T, innov, space), apply_phi(T, innov, space), atol=1e-12
        )


class TestSigmaPairing:
    def test_scalar_bartlett_oracle(self):
        # for m=1 Gaussian the (0,0) diagonal block is 2 sum_k gamma_k^2
        prof, innov, space = _scalar()
        K = 2 * 10**5
        gam = gamma_sequence(prof, innov, K)[:, 0, 0]
        c = gam[-1] * (K ** 0.8)  # gamma_k ~ c k^{2d-1}, d = 0.1
        bartlett = 2.0 * (gam[0] ** 2 + 2.0 * np.sum(gam[1:] ** 2))
        bartlett += 4.0 * c**2 * K ** (-0.6) / 0.6  # integral tail of gamma_k^2
        res = sigma_pairing(0, 0, np.ones((1, 1)), np.ones((1, 1)), prof, innov, space)
        # the series is truncated at the M cap; the reported tail estimate
        # must bracket the distance to the fully tail-corrected oracle
        assert res.value == pytest.approx(bartlett, rel=0.01)
        assert res.value <= bartlett <= res.value + 2.0 * res.tail_estimate
        assert res.tail_estimate < 0.01 * res.value

    def test_block_symmetry(self):
        prof = MemoryProfile(d=(0.08, 0.15))
        innov = InnovationModel.from_sigma(np.array([[1.0, 0.3], [0.3, 1.0]]))
        space = uniform_grid(2)
        rng = np.random.default_rng(0)
        S, T = rng.standard_normal((2, 2, 2))
        a = sigma_pairing(2, 1, S, T, prof, innov, space)
        b = sigma_pairing(1, 2, T, S, prof, innov, space)
        assert a.value == pytest.approx(b.value, abs=a.tail_estimate + b.tail_estimate)

    def test_requires_first_regime(self):
        innov = InnovationModel.from_sigma(np.eye(1))
        with pytest.raises(DomainError):
            sigma_pairing(
                0, 0, np.ones((1, 1)), np.ones((1, 1)),
                MemoryProfile.constant(0.3, 1), innov, uniform_grid(1),
            )
