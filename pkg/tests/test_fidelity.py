import numpy as np
import pytest

from ictmseg import (
    ContractError,
    KernelSpec,
    ModelConfig,
    Partition,
    convolve_periodic,
    estimate_means,
    fidelity_field,
    lvf_field,
    update_model,
    update_theta_cv,
    update_theta_lif,
)

from conftest import make_image, random_image, random_partition
from oracles import gaussian_kernel_2d, lif_energy_brute, lvf_window_brute


def _half_partition(h, w):
    labels = np.zeros((h, w), dtype=np.int32)
    labels[:, w // 2 :] = 1
    return Partition(labels=labels, phases=2)


class TestModelConfig:
    def test_validation(self):
        with pytest.raises(ContractError):
            ModelConfig(kind="other")
        with pytest.raises(ContractError):
            ModelConfig(sigma=0.0)
        with pytest.raises(ContractError):
            ModelConfig(lvf_weight=-0.1)
        with pytest.raises(ContractError):
            ModelConfig(lvf_radius=0)
        with pytest.raises(ContractError):
            ModelConfig(lambdas=(1.0, 0.0))

    def test_scalar_lambda_broadcasts(self):
        cfg = ModelConfig(lambdas=2.0)
        assert cfg.lam(0) == 2.0
        assert cfg.lam(5) == 2.0
        cfg.check_phases(7)

    def test_lambda_count_must_match_phases(self):
        cfg = ModelConfig(lambdas=(1.0, 2.0))
        cfg.check_phases(2)
        with pytest.raises(ContractError):
            cfg.check_phases(3)


class TestUpdateThetaCv:
    def test_constant_image(self):
        img = make_image(np.full((4, 4, 1), 9.0))
        theta = update_theta_cv(img, _half_partition(4, 4))
        assert np.allclose(theta, 9.0)

    def test_two_value_exact(self):
        arr = np.zeros((4, 4, 1))
        arr[:, 2:, 0] = 200.0
        theta = update_theta_cv(make_image(arr), _half_partition(4, 4))
        assert theta[0, 0] == 0.0
        assert theta[1, 0] == 200.0

    def test_matches_brute_mean_and_minimizes(self, rng):
        img = random_image(rng, 8, 8, 1)
        part = random_partition(rng, 8, 8, 3)
        theta = update_theta_cv(img, part)
        for i in range(3):
            members = img.data[part.labels == i]
            assert theta[i, 0] == pytest.approx(members.mean(), rel=1e-12)
            base = ((members - theta[i, 0]) ** 2).sum()
            for eps in (0.1, -0.1):
                assert ((members - theta[i, 0] - eps) ** 2).sum() > base

    def test_empty_phase_keeps_previous(self):
        img = make_image(np.full((4, 4, 1), 10.0))
        part = Partition(labels=np.zeros((4, 4), dtype=np.int32), phases=2)
        prev = np.array([[1.0], [123.0]])
        theta = update_theta_cv(img, part, prev)
        assert theta[0, 0] == 10.0
        assert theta[1, 0] == 123.0

    def test_empty_phase_without_previous_takes_global_mean(self):
        arr = np.zeros((4, 4, 1))
        arr[2:, :, 0] = 100.0
        img = make_image(arr)
        part = Partition(labels=np.zeros((4, 4), dtype=np.int32), phases=2)
        theta = update_theta_cv(img, part)
        assert theta[1, 0] == pytest.approx(50.0)


class TestUpdateThetaLif:
    def test_constant_image(self):
        img = make_image(np.full((6, 6, 1), 33.0))
        fields = update_theta_lif(img, _half_partition(6, 6), sigma=2.0)
        assert np.allclose(fields, 33.0, atol=1e-9)

    def test_single_phase_is_smoothing(self, rng):
        img = random_image(rng, 8, 8, 1)
        part = Partition(labels=np.zeros((8, 8), dtype=np.int32), phases=1)
        fields = update_theta_lif(img, part, sigma=3.0)
        smoothed = convolve_periodic(img.data[:, :, 0], KernelSpec.gaussian(3.0))
        assert np.abs(fields[0, :, :, 0] - smoothed).max() < 1e-10

    def test_stationary_point_of_quadratic(self, rng):
        img = random_image(rng, 8, 8, 1)
        part = random_partition(rng, 8, 8, 2)
        sigma = 2.0
        fields = update_theta_lif(img, part, sigma)
        # df/dE at f_i(x): sum_y u_i(y) G(x-y) (f_i(x) - I(y)) must vanish
        kern = gaussian_kernel_2d(8, 8, sigma, normalized=True)
        for i in range(2):
            u = part.indicator(i)
            for x in [(0, 0), (3, 5), (7, 7)]:
                grad = 0.0
                for yi in range(8):
                    for yj in range(8):
                        g = kern[(x[0] - yi) % 8, (x[1] - yj) % 8]
                        grad += u[yi, yj] * g * (fields[i, x[0], x[1], 0] - img.data[yi, yj, 0])
                assert grad == pytest.approx(0.0, abs=1e-9)

    def test_tiny_denominator_falls_back_to_phase_mean(self):
        arr = np.zeros((16, 16, 1))
        arr[0, 0, 0] = 200.0
        img = make_image(arr)
        labels = np.zeros((16, 16), dtype=np.int32)
        labels[0, 0] = 1
        part = Partition(labels=labels, phases=2)
        # sigma small enough that G*u_1 underflows far from (0,0)
        fields = update_theta_lif(img, part, sigma=0.05)
        assert np.isfinite(fields).all()
        assert fields[1, 8, 8, 0] == pytest.approx(200.0)


class TestEstimateMeans:
    def test_global_mean_equals_cv_update_bitwise(self, rng):
        img = random_image(rng, 8, 8, 3)
        part = random_partition(rng, 8, 8, 2)
        a = estimate_means(img, part, "global_mean", sigma=10.0)
        b = update_theta_cv(img, part)
        assert np.array_equal(a, b)

    def test_wide_local_kernel_approaches_global(self, rng):
        img = random_image(rng, 16, 16, 1)
        part = random_partition(rng, 16, 16, 2)
        local = estimate_means(img, part, "local_gaussian_mean", sigma=1e4)
        global_ = estimate_means(img, part, "global_mean", sigma=1e4)
        for i in range(2):
            rel = np.abs(local[i, :, :, 0] - global_[i, 0]) / np.abs(global_[i, 0])
            assert rel.max() < 0.01

    def test_unknown_estimator_rejected(self, rng):
        img = random_image(rng, 4, 4, 1)
        part = random_partition(rng, 4, 4, 2)
        with pytest.raises(ContractError):
            estimate_means(img, part, "median", sigma=1.0)


class TestUpdateModel:
    def test_cv_global_shares_theta_and_means(self, rng):
        img = random_image(rng, 6, 6, 1)
        part = random_partition(rng, 6, 6, 2)
        state = update_model(img, part, ModelConfig(kind="cv", mean_estimator="global_mean"))
        assert state.theta is state.means

    def test_generation_tracks_partition(self, rng):
        img = random_image(rng, 6, 6, 1)
        part = random_partition(rng, 6, 6, 2)
        state = update_model(img, part, ModelConfig())
        state.check_fresh(part)
        other = Partition(labels=part.labels.copy(), phases=part.phases)
        with pytest.raises(ContractError):
            state.check_fresh(other)

    def test_mixed_cv_with_local_means(self, rng):
        img = random_image(rng, 8, 8, 1)
        part = random_partition(rng, 8, 8, 2)
        cfg = ModelConfig(kind="cv", mean_estimator="local_gaussian_mean", sigma=2.0)
        state = update_model(img, part, cfg)
        assert state.theta.shape == (2, 1)
        assert state.means.shape == (2, 8, 8, 1)


class TestFidelityField:
    def test_cv_zero_residual(self):
        arr = np.zeros((4, 4, 1))
        arr[:, 2:, 0] = 50.0
        img = make_image(arr)
        part = _half_partition(4, 4)
        state = update_model(img, part, ModelConfig(kind="cv"))
        f0 = fidelity_field(img, state, ModelConfig(kind="cv"), 0)
        assert np.allclose(f0[:, :2], 0.0)
        assert np.allclose(f0[:, 2:], 2500.0)

    def test_cv_nearest_constant_ordering(self):
        arr = np.zeros((4, 4, 1))
        arr[:, 2:, 0] = 255.0
        img = make_image(arr)
        part = _half_partition(4, 4)
        cfg = ModelConfig(kind="cv")
        state = update_model(img, part, cfg)
        assert state.theta[0, 0] == 0.0 and state.theta[1, 0] == 255.0
        f0 = fidelity_field(img, state, cfg, 0)
        f1 = fidelity_field(img, state, cfg, 1)
        # at a zero-valued pixel the nearer constant must win
        assert f0[0, 0] == 0.0
        assert f1[0, 0] == 255.0**2

    def test_lif_expansion_matches_double_loop(self, rng):
        img = random_image(rng, 8, 8, 1)
        part = random_partition(rng, 8, 8, 2)
        cfg = ModelConfig(kind="lif", sigma=2.0)
        state = update_model(img, part, cfg)
        fields = [fidelity_field(img, state, cfg, i) for i in range(2)]
        # brute energy = sum_i sum_y u_i(y) e_i(y)
        fast_energy = sum(
            float((part.indicator(i) * fields[i]).sum()) for i in range(2)
        )
        slow_energy = lif_energy_brute(img.data, part.labels, state.theta, 2.0, 1.0)
        assert fast_energy == pytest.approx(slow_energy, abs=1e-8 * max(1.0, abs(slow_energy)))

    def test_nonnegative(self, rng):
        img = random_image(rng, 8, 8, 3)
        part = random_partition(rng, 8, 8, 3)
        for kind, est in (("cv", "global_mean"), ("lif", "local_gaussian_mean")):
            cfg = ModelConfig(kind=kind, sigma=2.0, mean_estimator=est)
            state = update_model(img, part, cfg)
            for i in range(3):
                assert fidelity_field(img, state, cfg, i).min() >= -1e-9


class TestLvfField:
    def test_zero_when_mean_matches(self):
        img = make_image(np.full((5, 5, 1), 7.0))
        means = np.full((1, 1), 7.0)
        out = lvf_field(img, means, radius=1, phase=0)
        assert np.allclose(out, 0.0, atol=1e-9)

    def test_constant_offset_gives_window_area(self):
        img = make_image(np.full((5, 5, 1), 7.0))
        means = np.full((1, 1), 8.0)
        out = lvf_field(img, means, radius=1, phase=0)
        assert np.allclose(out, 9.0, atol=1e-9)

    def test_matches_window_sum_brute(self, rng):
        img = random_image(rng, 8, 8, 1)
        means = np.array([[77.0], [140.0]])
        for i in range(2):
            fast = lvf_field(img, means, radius=1, phase=i)
            grid = np.broadcast_to(means[i], (8, 8, 1))
            slow = lvf_window_brute(img.data, grid, 1)
            assert np.abs(fast - slow).max() < 1e-9

    def test_matches_window_sum_brute_field_means(self, rng):
        img = random_image(rng, 8, 8, 1)
        part = random_partition(rng, 8, 8, 2)
        means = estimate_means(img, part, "local_gaussian_mean", sigma=2.0)
        for i in range(2):
            fast = lvf_field(img, means, radius=2, phase=i)
            slow = lvf_window_brute(img.data, means[i], 2)
            assert np.abs(fast - slow).max() < 1e-9

    def test_shift_covariance(self, rng):
        img = random_image(rng, 8, 8, 1)
        means = np.array([[50.0]])
        base = lvf_field(img, means, radius=1, phase=0)
        shifted = lvf_field(
            make_image(img.data + 13.0), means + 13.0, radius=1, phase=0
        )
        assert np.abs(base - shifted).max() < 1e-9

    def test_nonnegative_floor(self, rng):
        img = random_image(rng, 8, 8, 3)
        part = random_partition(rng, 8, 8, 2)
        means = estimate_means(img, part, "global_mean", sigma=10.0)
        for i in range(2):
            assert lvf_field(img, means, radius=2, phase=i).min() >= -1e-9
