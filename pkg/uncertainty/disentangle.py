"""
Aleatoric / epistemic disentanglement of predictive samples.

Regression samples combine into one Gaussian whose variance splits exactly
into the mean of the sampled variances (aleatoric) and the variance of the
sampled means (epistemic). Classification splits the logit variances the same
way and pushes each part through the sampling softmax.
"""
from dataclasses import dataclass

import numpy as np
from scipy import special

from autodiff import tensor as T
from autodiff.exceptions import ConfigurationError, ContractError, DomainError
from autodiff.rng import gaussian_noise
from uncertainty.networks import Task


@dataclass(frozen=True)
class SamplingSoftmaxConfig:
    sample_count: int = 100

    def __post_init__(self):
        if self.sample_count < 1:
            raise ConfigurationError(f"sample_count must be positive, got {self.sample_count}")


@dataclass
class RegressionDisentangled:
    mean: np.ndarray
    predictive_variance: np.ndarray
    aleatoric_variance: np.ndarray
    epistemic_variance: np.ndarray


@dataclass
class ClassificationDisentangled:
    """Batched: logit/probability fields are (batch, classes), entropies are (batch,)."""
    mean_logits: np.ndarray
    aleatoric_logit_var: np.ndarray
    epistemic_logit_var: np.ndarray
    p_pred: np.ndarray
    p_ale: np.ndarray
    p_epi: np.ndarray
    h_pred: np.ndarray
    h_ale: np.ndarray
    h_epi: np.ndarray

    def __len__(self):
        return self.mean_logits.shape[0]

    def point(self, index):
        return {
            'p_pred': self.p_pred[index].tolist(),
            'p_ale': self.p_ale[index].tolist(),
            'p_epi': self.p_epi[index].tolist(),
            'h_pred': float(self.h_pred[index]),
            'h_ale': float(self.h_ale[index]),
            'h_epi': float(self.h_epi[index]),
        }


def combine_gaussian_mixture(samples):
    """Moment-matched single Gaussian ``(mu_*, sigma^2_*)`` of the equally weighted sample mixture."""
    aleatoric, epistemic = decompose_variance(samples)
    return samples.means.mean(axis=0), aleatoric + epistemic


def decompose_variance(samples):
    """``(aleatoric, epistemic)``: mean of the sampled variances and population variance of the sampled means."""
    aleatoric = samples.variances.mean(axis=0)
    # Centre on the first sample so identical samples give exactly zero.
    centred = samples.means - samples.means[0]
    epistemic = np.maximum(centred.var(axis=0), 0.0)
    return aleatoric, epistemic


def regression_uncertainty(samples):
    mean, predictive = combine_gaussian_mixture(samples)
    aleatoric, epistemic = decompose_variance(samples)
    return RegressionDisentangled(mean, predictive, aleatoric, epistemic)


def draw_logit_noise(shape, config, rng):
    return gaussian_noise((config.sample_count,) + tuple(shape), rng)


def sampling_softmax(mean, variance, config=None, rng=None, noise=None):
    """
    Monte-Carlo estimate of ``E[softmax(z)]`` for ``z ~ N(mean, variance)``.

    Differentiable in ``mean`` and ``variance`` through the reparameterised
    draws ``z_j = mean + sqrt(variance) * eps_j``. Pass ``noise`` to reuse draws.
    """
    config = config or SamplingSoftmaxConfig()
    mean, variance = T.as_tensor(mean), T.as_tensor(variance)
    if mean.shape != variance.shape:
        raise ContractError(f"Logit mean {mean.shape} and variance {variance.shape} differ")
    if np.any(variance.data < 0):
        raise DomainError("sampling_softmax: negative logit variance")
    if not np.any(variance.data > 0):
        return T.softmax(mean)

    if noise is None:
        if rng is None:
            raise ConfigurationError("sampling_softmax needs an RngStream or explicit noise")
        noise = draw_logit_noise(mean.shape, config, rng)
    logits = T.add(mean, T.mul(T.sqrt(variance), noise))
    return T.mean(T.softmax(logits), axis=0)


def entropy(p):
    """Natural-log Shannon entropy over the last axis; zero entries contribute nothing."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0):
        raise DomainError("entropy: probabilities must be non-negative")
    return special.entr(p).sum(axis=-1)


def _require_classification(samples):
    if samples.task is not Task.CLASSIFICATION:
        raise ContractError("Logit disentanglement needs classification samples")


def disentangle_logits(samples):
    """Per-class ``(mean logits, aleatoric logit variance, epistemic logit variance)``."""
    _require_classification(samples)
    mean_logits = samples.means.mean(axis=0)
    aleatoric, epistemic = decompose_variance(samples)
    return mean_logits, aleatoric, epistemic


def classification_uncertainty(samples, config=None, rng=None):
    """
    Predictive, aleatoric and epistemic class distributions and their entropies.

    The three sampling softmax evaluations share one set of noise draws.
    """
    config = config or SamplingSoftmaxConfig()
    mean_logits, aleatoric, epistemic = disentangle_logits(samples)
    noise = draw_logit_noise(mean_logits.shape, config, rng) if rng is not None else None

    def probabilities(variance):
        if noise is None and np.any(variance > 0):
            raise ConfigurationError("classification_uncertainty needs an RngStream")
        return sampling_softmax(mean_logits, variance, config, noise=noise).data

    p_pred = probabilities(aleatoric + epistemic)
    p_ale = probabilities(aleatoric)
    p_epi = probabilities(epistemic)
    return ClassificationDisentangled(
        mean_logits=mean_logits,
        aleatoric_logit_var=aleatoric,
        epistemic_logit_var=epistemic,
        p_pred=p_pred,
        p_ale=p_ale,
        p_epi=p_epi,
        h_pred=entropy(p_pred),
        h_ale=entropy(p_ale),
        h_epi=entropy(p_epi),
    )


def mean_probability_entropy(samples, config=None, rng=None):
    """
    Diagnostic predictive entropy: entropy of the pass-averaged sampling softmax probabilities.

    Returns ``(mean probabilities, entropy)``.
    """
    _require_classification(samples)
    config = config or SamplingSoftmaxConfig()
    noise = draw_logit_noise(samples.means.shape[1:], config, rng) if rng is not None else None
    per_pass = [
        sampling_softmax(samples.means[i], samples.variances[i], config, noise=noise).data
        for i in range(samples.count)
    ]
    mean_probabilities = np.mean(per_pass, axis=0)
    return mean_probabilities, entropy(mean_probabilities)
