import numpy as np
import pytest

from hilbert_lrd.estimator import sample_autocov, xi_multiplier
from hilbert_lrd.model import InnovationModel, MemoryProfile
from hilbert_lrd.process import population_autocov_truncated
from hilbert_lrd.lift import (
    SelfAdjointModel,
    build_model,
    delta_scale,
    lift_rosenblatt,
    simulate_lifted,
)

ROTATION = np.array([[0.35, 0.05], [0.05, 0.35]])


class TestBuildModel:
    def test_rotation_model(self):
        model = build_model(ROTATION)
        np.testing.assert_allclose(model.d, [0.40, 0.30], atol=1e-12)
        # eigenvectors are the 45-degree rotation directions
        for row in model.U:
            np.testing.assert_allclose(np.abs(row), [np.sqrt(0.5)] * 2, atol=1e-12)

    def test_round_trip(self):
        model = build_model(ROTATION)
        np.testing.assert_allclose(
            model.U.T @ np.diag(model.d) @ model.U, ROTATION, atol=1e-12
        )

    def test_diagonal_input_gives_signed_permutation(self):
        model = build_model(np.diag([0.30, 0.45]))
        np.testing.assert_allclose(model.d, [0.45, 0.30], atol=1e-14)
        np.testing.assert_allclose(np.abs(model.U), [[0, 1], [1, 0]], atol=1e-14)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            build_model(np.array([[0.3, 0.1], [0.0, 0.3]]))

    def test_validates_fields(self):
        with pytest.raises(ValueError):
            SelfAdjointModel(T_op=ROTATION, U=np.eye(2), d=np.array([0.4, 0.3]))


class TestSimulateLifted:
    def test_direct_matrix_power_agreement(self):
        model = build_model(ROTATION)
        innov = InnovationModel.from_sigma(np.eye(2))
        # raises internally if the explicit (j+1)^(T-I) path deviates > 1e-8
        simulate_lifted(model, innov, N=64, J=256, seed=21, check_direct=True)

    def test_diagonal_operator_is_transparent(self):
        # distinct diagonal entries: U is a signed permutation, so the
        # ambient path is the eigen path with sites reordered
        model = build_model(np.diag([0.30, 0.45]))
        innov = InnovationModel.from_sigma(np.eye(2))
        lifted = simulate_lifted(model, innov, N=16, J=32, seed=3)
        np.testing.assert_allclose(
            np.abs(lifted.x), np.abs(lifted.z_path.x[:, ::-1]), atol=1e-12
        )

    def test_zero_innovations_give_zero_path(self):
        model = build_model(ROTATION)
        lifted = simulate_lifted(
            model, InnovationModel.from_sigma(np.eye(2)), N=8, J=16, seed=0
        )
        zeroed = lifted.z_path.x * 0.0 @ model.U
        np.testing.assert_array_equal(zeroed, np.zeros_like(lifted.x))


class TestDeltaScale:
    def test_identity_U_reduces_to_xi(self):
        model = build_model(np.diag([0.45, 0.30]))
        F = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = delta_scale(F, model, 64)
        # U is a (signed) permutation here, so conjugation just reorders
        G = model.U @ F @ model.U.T
        expect = model.U.T @ (xi_multiplier(model.profile, 64) * G) @ model.U
        np.testing.assert_allclose(out, expect, atol=1e-12)

    def test_constant_d_commutes_with_any_U(self):
        model = build_model(ROTATION * 0.0 + np.diag([0.4, 0.4]))
        F = np.random.default_rng(1).standard_normal((2, 2))
        np.testing.assert_allclose(
            delta_scale(F, model, 100), 100.0 ** (1 - 0.8) * F, atol=1e-10
        )

    def test_conjugation_identity_exact(self):
        # Delta_N^U(Gamma_hat_x - Gamma_x) == U^T [Xi_N (Gamma_hat_z - Gamma_z)] U
        model = build_model(ROTATION)
        innov = InnovationModel.from_sigma(np.diag([1.0, 2.0]))
        lifted = simulate_lifted(model, innov, N=16, J=32, seed=9, H=2)
        est_z = sample_autocov(lifted.z_path, 2)
        mult = xi_multiplier(model.profile, 16)
        cfg = lifted.z_path.config
        for h in range(3):
            gam_z = population_autocov_truncated(cfg.profile, cfg.innovations, h, cfg.J)
            fluct_z = est_z.kernels[h] - gam_z
            fluct_x = model.U.T @ fluct_z @ model.U
            lhs = delta_scale(fluct_x, model, 16)
            rhs = model.U.T @ (mult * fluct_z) @ model.U
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_sequence_input(self):
        model = build_model(ROTATION)
        mats = [np.eye(2), 2 * np.eye(2)]
        out = delta_scale(mats, model, 32)
        assert isinstance(out, tuple) and len(out) == 2
        np.testing.assert_allclose(out[1], 2.0 * np.asarray(out[0]), atol=1e-12)


class TestLiftRosenblatt:
    def test_norm_preserved_draw_by_draw(self):
        model = build_model(ROTATION)
        rng = np.random.default_rng(4)
        for _ in range(10):
            z = rng.standard_normal((2, 2))
            out = lift_rosenblatt(z, model)
            assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(z), rel=1e-12)

    def test_identity_model(self):
        model = build_model(np.diag([0.40, 0.35]))
        z = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = lift_rosenblatt(z, model)
        # signed permutation conjugation: entries survive up to reordering
        assert sorted(np.abs(out).ravel()) == pytest.approx(sorted(np.abs(z).ravel()))

    def test_shape_checked(self):
        model = build_model(ROTATION)
        with pytest.raises(ValueError):
            lift_rosenblatt(np.zeros((3, 3)), model)
