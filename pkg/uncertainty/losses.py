from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from autodiff import tensor as T
from autodiff.exceptions import ConfigurationError, DomainError

PROBABILITY_FLOOR = 1e-12


class LossKind(str, Enum):
    NLL = 'nll'
    BETA_NLL = 'beta_nll'
    SOFT_CE = 'soft_ce'


@dataclass(frozen=True)
class LossConfig:
    kind: LossKind = LossKind.NLL
    beta: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', LossKind(self.kind))
        if self.kind is LossKind.BETA_NLL:
            if self.beta is None or not 0.0 <= self.beta <= 1.0:
                raise ConfigurationError(f"beta_nll needs beta in [0, 1], got {self.beta}")
        elif self.beta is not None:
            raise ConfigurationError(f"beta is only meaningful for beta_nll, not {self.kind.value}")


def _pointwise_nll(mean, variance, target):
    variance = T.as_tensor(variance)
    if np.any(variance.data <= 0):
        raise DomainError("Gaussian NLL needs strictly positive variances")
    residual = T.sub(mean, target)
    return T.add(
        T.mul(T.log(variance), 0.5),
        T.div(T.square(residual), T.mul(variance, 2.0)),
    )


def gaussian_nll(mean, variance, target):
    """Batch mean of ``log(var)/2 + (mean - y)^2 / (2 var)``."""
    return T.mean(_pointwise_nll(mean, variance, target))


def beta_nll(mean, variance, target, beta):
    """Gaussian NLL with each point weighted by the gradient-blocked factor ``var ** beta``."""
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    variance = T.as_tensor(variance)
    weight = T.stop_gradient(T.Tensor(np.power(variance.data, beta)))
    return T.mean(T.mul(weight, _pointwise_nll(mean, variance, target)))


def soft_cross_entropy(predicted, target):
    """Batch mean of ``-sum_c p_true,c log p_pred,c`` with predictions clamped away from zero."""
    predicted, target = T.as_tensor(predicted), T.as_tensor(target)
    log_p = T.log(T.clip_min(predicted, PROBABILITY_FLOOR))
    per_point = T.neg(T.sum(T.mul(target, log_p), axis=-1))
    return T.mean(per_point)


def regression_loss(config, prediction, target):
    if config.kind is LossKind.NLL:
        return gaussian_nll(prediction.mean, prediction.variance, target)
    if config.kind is LossKind.BETA_NLL:
        return beta_nll(prediction.mean, prediction.variance, target, config.beta)
    raise ConfigurationError(f"{config.kind.value} is not a regression loss")
