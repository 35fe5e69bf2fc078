"""Mixture-of-logistics distributions for scalar placement attributes.

Continuous (non-discretized) densities: each attribute lives in normalized
[0, 1] space and its negative log-likelihood is analytic, so training uses
exact gradients. Log-scales are clamped below at -7 to avoid degenerate
spikes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

LOG_SCALE_MIN = -7.0


@dataclass
class MixtureOfLogistics:
    """Parameter block for one scalar attribute: (..., K) tensors."""

    logits: torch.Tensor
    locs: torch.Tensor
    log_scales: torch.Tensor

    def __post_init__(self):
        if self.logits.shape != self.locs.shape or self.logits.shape != self.log_scales.shape:
            raise ValueError("mixture parameter shapes must match")
        if self.logits.shape[-1] < 1:
            raise ValueError("need at least one mixture component")

    @property
    def n_components(self) -> int:
        return self.logits.shape[-1]

    def weights(self) -> torch.Tensor:
        return torch.softmax(self.logits, dim=-1)


def logistic_log_pdf(x: torch.Tensor, loc: torch.Tensor, log_scale: torch.Tensor) -> torch.Tensor:
    log_s = torch.clamp(log_scale, min=LOG_SCALE_MIN)
    z = (x - loc) / torch.exp(log_s)
    return -z - log_s - 2.0 * F.softplus(-z)


def mol_log_prob(params: MixtureOfLogistics, x: torch.Tensor) -> torch.Tensor:
    """log sum_k w_k logistic(x; mu_k, s_k), via log-sum-exp.

    ``x`` broadcasts against the leading dims of the parameter block; the
    component axis is reduced.
    """
    xk = torch.as_tensor(x, dtype=params.locs.dtype, device=params.locs.device)
    xk = xk.unsqueeze(-1)
    log_w = torch.log_softmax(params.logits, dim=-1)
    return torch.logsumexp(log_w + logistic_log_pdf(xk, params.locs, params.log_scales), dim=-1)


def mol_sample(
    params: MixtureOfLogistics,
    rng: np.random.Generator,
    clamp: bool = True,
) -> np.ndarray:
    """Inverse-CDF sampling: pick a component, then mu + s*(log u - log(1-u)).

    Returns an array shaped like the parameter block minus the component axis,
    clamped to [0, 1] for downstream denormalization.
    """
    w = params.weights().detach().cpu().numpy()
    locs = params.locs.detach().cpu().numpy()
    scales = np.exp(np.clip(params.log_scales.detach().cpu().numpy(), LOG_SCALE_MIN, None))
    lead = w.shape[:-1]
    k = w.shape[-1]
    flat_w = w.reshape(-1, k)
    out = np.empty(flat_w.shape[0])
    for i in range(flat_w.shape[0]):
        comp = rng.choice(k, p=flat_w[i] / flat_w[i].sum())
        u = rng.uniform(1e-7, 1 - 1e-7)
        out[i] = locs.reshape(-1, k)[i, comp] + scales.reshape(-1, k)[i, comp] * (
            np.log(u) - np.log1p(-u)
        )
    out = out.reshape(lead) if lead else out[0]
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out


def mol_mode_seek(params: MixtureOfLogistics, clamp: bool = True) -> np.ndarray:
    """Location of the highest-weight component per attribute (greedy decode).

    Unlike the mixture mean this never lands between modes of a multimodal
    mixture; shape matches :func:`mol_sample`.
    """
    w = params.weights().detach().cpu().numpy()
    locs = params.locs.detach().cpu().numpy()
    comp = w.argmax(axis=-1)
    out = np.take_along_axis(locs, comp[..., None], axis=-1)[..., 0]
    if out.ndim == 0:
        out = float(out)
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out


def mol_mean(params: MixtureOfLogistics) -> torch.Tensor:
    """Mixture mean (each logistic component's mean is its location)."""
    return (params.weights() * params.locs).sum(dim=-1)


def mol_nll(params: MixtureOfLogistics, xs: torch.Tensor) -> torch.Tensor:
    return -mol_log_prob(params, xs).mean()


def mol_nll_grad_check(
    params: MixtureOfLogistics,
    xs: torch.Tensor,
    h: float = 1e-5,
) -> float:
    """Max relative error of autograd vs central finite differences on mean NLL."""
    flat = torch.cat(
        [params.logits.reshape(-1), params.locs.reshape(-1), params.log_scales.reshape(-1)]
    ).double()
    shape = params.logits.shape
    n = flat.numel() // 3
    xs64 = torch.as_tensor(xs, dtype=torch.float64)

    def nll(theta: torch.Tensor) -> torch.Tensor:
        p = MixtureOfLogistics(
            theta[:n].reshape(shape), theta[n : 2 * n].reshape(shape), theta[2 * n :].reshape(shape)
        )
        return mol_nll(p, xs64)

    theta = flat.clone().requires_grad_(True)
    analytic = torch.autograd.grad(nll(theta), theta)[0]

    fd = torch.empty_like(flat)
    for i in range(flat.numel()):
        hi = flat.clone()
        lo = flat.clone()
        hi[i] += h
        lo[i] -= h
        fd[i] = (nll(hi) - nll(lo)) / (2 * h)
    scale = torch.maximum(analytic.abs(), torch.full_like(fd, 1e-3))
    return float(((analytic - fd).abs() / scale).max())
