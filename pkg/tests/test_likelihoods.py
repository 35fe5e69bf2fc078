import math

import numpy as np
import pytest
import torch
from scipy.integrate import quad

from scenesynth.likelihoods import (
    LOG_SCALE_MIN,
    MixtureOfLogistics,
    logistic_log_pdf,
    mol_log_prob,
    mol_mean,
    mol_mode_seek,
    mol_nll,
    mol_nll_grad_check,
    mol_sample,
)


def mol(logits, locs, log_scales):
    return MixtureOfLogistics(
        torch.tensor(logits, dtype=torch.float64),
        torch.tensor(locs, dtype=torch.float64),
        torch.tensor(log_scales, dtype=torch.float64),
    )


def random_params(rng, k=5):
    return mol(
        rng.normal(size=k),
        rng.uniform(-0.2, 1.2, size=k),
        rng.uniform(math.log(0.01), math.log(0.5), size=k),
    )


class TestLogProb:
    def test_peak_density_is_quarter_scale(self):
        p = mol([0.0], [0.5], [math.log(0.1)])
        assert float(mol_log_prob(p, torch.tensor(0.5))) == pytest.approx(math.log(2.5), abs=1e-9)

    def test_duplicate_components_collapse(self):
        single = mol([0.3], [0.4], [math.log(0.2)])
        double = mol([1.0, 1.0], [0.4, 0.4], [math.log(0.2)] * 2)
        xs = torch.linspace(0, 1, 11, dtype=torch.float64)
        assert torch.allclose(mol_log_prob(single, xs), mol_log_prob(double, xs), atol=1e-9)

    def test_density_integrates_to_one(self, rng):
        for _ in range(50):
            p = random_params(rng)
            total, _ = quad(
                lambda x: float(mol_log_prob(p, torch.tensor(x)).exp()), -30, 31, limit=200
            )
            assert total == pytest.approx(1.0, abs=1e-3)

    def test_component_permutation_invariance(self, rng):
        p = random_params(rng)
        perm = torch.tensor(rng.permutation(p.n_components))
        q = MixtureOfLogistics(p.logits[perm], p.locs[perm], p.log_scales[perm])
        xs = torch.linspace(0, 1, 21, dtype=torch.float64)
        assert torch.allclose(mol_log_prob(p, xs), mol_log_prob(q, xs), atol=1e-9)

    def test_logit_shift_invariance(self, rng):
        p = random_params(rng)
        q = MixtureOfLogistics(p.logits + 7.5, p.locs, p.log_scales)
        xs = torch.linspace(0, 1, 21, dtype=torch.float64)
        assert torch.allclose(mol_log_prob(p, xs), mol_log_prob(q, xs), atol=1e-9)

    def test_weights_sum_to_one(self, rng):
        p = random_params(rng)
        assert float(p.weights().sum()) == pytest.approx(1.0, abs=1e-6)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shapes"):
            MixtureOfLogistics(torch.zeros(3), torch.zeros(2), torch.zeros(3))

    def test_log_scale_clamped(self):
        spike = mol([0.0], [0.5], [-50.0])
        ref = mol([0.0], [0.5], [LOG_SCALE_MIN])
        x = torch.tensor(0.5, dtype=torch.float64)
        assert float(mol_log_prob(spike, x)) == pytest.approx(float(mol_log_prob(ref, x)))


class TestSampling:
    def test_tiny_scale_collapses_to_location(self, rng):
        p = mol([0.0], [0.37], [LOG_SCALE_MIN])
        for _ in range(10):
            assert float(mol_sample(p, rng)) == pytest.approx(0.37, abs=1e-2)

    def test_single_component_empirical_mean(self, rng):
        mu, s = 0.5, 0.05
        p = mol([0.0], [mu], [math.log(s)])
        xs = np.array([mol_sample(p, rng, clamp=False) for _ in range(10_000)])
        std_err = xs.std() / math.sqrt(len(xs))
        assert abs(xs.mean() - mu) <= 3 * std_err + 1e-4

    def test_symmetric_mixture_mean_is_half(self, rng):
        p = mol([0.0, 0.0], [0.3, 0.7], [math.log(0.03)] * 2)
        xs = np.array([mol_sample(p, rng, clamp=False) for _ in range(10_000)])
        std_err = xs.std() / math.sqrt(len(xs))
        assert abs(xs.mean() - 0.5) <= 3 * std_err + 1e-4

    def test_samples_clamped_to_unit_interval(self, rng):
        p = mol([0.0], [1.5], [math.log(0.3)])
        xs = np.array([mol_sample(p, rng) for _ in range(100)])
        assert (xs >= 0).all() and (xs <= 1).all()

    def test_sample_density_never_degenerate(self, rng):
        for _ in range(20):
            p = random_params(rng)
            x = mol_sample(p, rng)
            assert math.isfinite(float(mol_log_prob(p, torch.tensor(float(x)))))

    def test_batched_sampling_shape(self, rng):
        p = MixtureOfLogistics(torch.zeros(4, 3, 5), torch.rand(4, 3, 5), torch.zeros(4, 3, 5) - 2)
        assert mol_sample(p, rng).shape == (4, 3)

    def test_mixture_mean(self):
        p = mol([0.0, 0.0], [0.2, 0.8], [-2.0, -2.0])
        assert float(mol_mean(p)) == pytest.approx(0.5, abs=1e-9)

    def test_mode_seek_picks_heaviest_component(self):
        p = mol([0.1, 2.0, -1.0], [0.2, 0.7, 0.9], [-2.0] * 3)
        assert float(mol_mode_seek(p)) == pytest.approx(0.7, abs=1e-9)

    def test_mode_seek_avoids_bimodal_valley(self):
        # mean of a symmetric bimodal mixture sits between the modes;
        # mode-seeking must land on one of them
        p = mol([0.0, 0.0], [0.1, 0.9], [-4.0, -4.0])
        assert float(mol_mode_seek(p)) in (pytest.approx(0.1), pytest.approx(0.9))

    def test_mode_seek_batched_and_clamped(self):
        locs = torch.tensor([[[1.7, 0.3], [-0.5, 0.4]]])
        logits = torch.tensor([[[2.0, 0.0], [3.0, 0.0]]])
        out = mol_mode_seek(MixtureOfLogistics(logits, locs, torch.zeros(1, 2, 2) - 2))
        assert out.shape == (1, 2)
        assert out[0, 0] == 1.0 and out[0, 1] == 0.0


class TestGradients:
    def test_finite_difference_agreement(self, rng):
        p = random_params(rng, k=5)
        xs = torch.tensor(rng.uniform(0, 1, size=64), dtype=torch.float64)
        assert mol_nll_grad_check(p, xs) <= 1e-4

    def test_gradient_stationary_at_mode(self):
        mu = 0.5
        p = mol([0.0], [mu], [math.log(0.1)])
        locs = p.locs.clone().requires_grad_(True)
        q = MixtureOfLogistics(p.logits, locs, p.log_scales)
        nll = mol_nll(q, torch.tensor([mu], dtype=torch.float64))
        (grad,) = torch.autograd.grad(nll, locs)
        assert abs(float(grad)) <= 1e-6

    def test_mean_nll_invariant_under_dataset_doubling(self, rng):
        p = random_params(rng)
        xs = torch.tensor(rng.uniform(0, 1, size=16), dtype=torch.float64)

        def grad_of(points):
            locs = p.locs.clone().requires_grad_(True)
            q = MixtureOfLogistics(p.logits, locs, p.log_scales)
            return torch.autograd.grad(mol_nll(q, points), locs)[0]

        assert torch.allclose(grad_of(xs), grad_of(torch.cat([xs, xs])), atol=1e-12)

    def test_logistic_log_pdf_matches_closed_form(self):
        x, mu, s = 0.3, 0.6, 0.07
        z = (x - mu) / s
        expected = math.log(math.exp(-z) / (s * (1 + math.exp(-z)) ** 2))
        got = float(
            logistic_log_pdf(
                torch.tensor(x, dtype=torch.float64),
                torch.tensor(mu, dtype=torch.float64),
                torch.tensor(math.log(s), dtype=torch.float64),
            )
        )
        assert got == pytest.approx(expected, abs=1e-9)
