from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from autodiff import tensor as T
from autodiff.exceptions import DimensionError, ParameterError
from autodiff.rng import gaussian_noise

# Added to every emitted std / variance so the NLL never divides by zero.
SIGMA_FLOOR = 1e-6

# Flipout posteriors start close to deterministic.
FLIPOUT_INITIAL_SIGMA = 1e-3


class ForwardMode(str, Enum):
    DETERMINISTIC = 'deterministic'
    STOCHASTIC = 'stochastic'


class Activation(str, Enum):
    LINEAR = 'linear'
    RELU = 'relu'
    SOFTPLUS = 'softplus'

    def apply(self, x):
        if self is Activation.RELU:
            return T.relu(x)
        if self is Activation.SOFTPLUS:
            return T.softplus(x)
        return x


@dataclass
class GaussianPrediction:
    """Per-input mean and variance; ``std`` is only set by regression heads."""
    mean: T.Tensor
    variance: T.Tensor
    std: Optional[T.Tensor] = None


def _check_probability(p):
    if not 0.0 <= p < 1.0:
        raise ParameterError(f"Drop probability must lie in [0, 1), got {p}")
    return float(p)


def _require_rng(rng, layer):
    if rng is None:
        raise ParameterError(f"{layer} needs an RngStream in stochastic mode")
    return rng


def fan_in_uniform(fan_in, shape, rng):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, shape)


class Layer:
    kind = ''
    stochastic = False

    def parameters(self):
        return []

    def forward(self, x, mode=ForwardMode.DETERMINISTIC, rng=None):
        raise NotImplementedError

    def __call__(self, x, mode=ForwardMode.DETERMINISTIC, rng=None):
        return self.forward(x, mode, rng)


class DenseLayer(Layer):
    kind = 'dense'

    def __init__(self, weights, bias, activation=Activation.LINEAR):
        self.weights = weights if isinstance(weights, T.Tensor) else T.parameter(weights)
        self.bias = bias if isinstance(bias, T.Tensor) else T.parameter(bias)
        self.activation = Activation(activation)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise DimensionError(
                f"Dense weights {self.weights.shape} and bias {self.bias.shape} disagree on fan-out"
            )

    @classmethod
    def initialize(cls, fan_in, fan_out, activation, rng, **kwargs):
        return cls(fan_in_uniform(fan_in, (fan_out, fan_in), rng), np.zeros(fan_out), activation, **kwargs)

    @property
    def fan_in(self):
        return self.weights.shape[1]

    @property
    def fan_out(self):
        return self.weights.shape[0]

    def parameters(self):
        return [('weights', self.weights), ('bias', self.bias)]

    def _check_input(self, x):
        if x.shape[-1] != self.fan_in:
            raise DimensionError(f"{self.kind}: input width {x.shape[-1]} != fan-in {self.fan_in}")

    def _affine(self, x, weights):
        return self.activation.apply(T.add(T.matmul(x, T.transpose(weights)), self.bias))

    def forward(self, x, mode=ForwardMode.DETERMINISTIC, rng=None):
        x = T.as_tensor(x)
        self._check_input(x)
        return self._affine(x, self.weights)


class McDropout(Layer):
    """Inverted dropout that stays active at inference when run stochastically."""
    kind = 'dropout'
    stochastic = True

    def __init__(self, drop_probability=0.25):
        self.drop_probability = _check_probability(drop_probability)

    def forward(self, x, mode=ForwardMode.DETERMINISTIC, rng=None):
        x = T.as_tensor(x)
        if ForwardMode(mode) is ForwardMode.DETERMINISTIC or self.drop_probability == 0.0:
            return x
        keep = 1.0 - self.drop_probability
        mask = _require_rng(rng, self.kind).bernoulli(keep, x.shape) / keep
        return T.mul(x, T.Tensor(mask))


class DropConnectDense(DenseLayer):
    """Dense layer whose weight entries are dropped per stochastic pass."""
    kind = 'dropconnect'
    stochastic = True

    def __init__(self, weights, bias, activation=Activation.LINEAR, drop_probability=0.10):
        super().__init__(weights, bias, activation)
        self.drop_probability = _check_probability(drop_probability)

    def forward(self, x, mode=ForwardMode.DETERMINISTIC, rng=None):
        x = T.as_tensor(x)
        self._check_input(x)
        if ForwardMode(mode) is ForwardMode.DETERMINISTIC or self.drop_probability == 0.0:
            return self._affine(x, self.weights)
        keep = 1.0 - self.drop_probability
        mask = _require_rng(rng, self.kind).bernoulli(keep, self.weights.shape) / keep
        return self._affine(x, T.mul(self.weights, T.Tensor(mask)))


class FlipoutDense(Layer):
    """
    Mean-field Gaussian dense layer sampled with Flipout.

    One Gaussian perturbation matrix is drawn per batch and decorrelated per
    example with random sign vectors on the input and output side. The bias is
    deterministic and no prior term exists.
    """
    kind = 'flipout'
    stochastic = True

    def __init__(self, weight_mean, weight_rho, bias, activation=Activation.LINEAR):
        self.weight_mean = weight_mean if isinstance(weight_mean, T.Tensor) else T.parameter(weight_mean)
        self.weight_rho = weight_rho if isinstance(weight_rho, T.Tensor) else T.parameter(weight_rho)
        self.bias = bias if isinstance(bias, T.Tensor) else T.parameter(bias)
        self.activation = Activation(activation)
        if self.weight_mean.shape != self.weight_rho.shape or self.bias.shape != (self.weight_mean.shape[0],):
            raise DimensionError("Flipout mean, rho and bias shapes disagree")

    @classmethod
    def initialize(cls, fan_in, fan_out, activation, rng):
        rho = np.full((fan_out, fan_in), float(T.softplus_inverse(FLIPOUT_INITIAL_SIGMA)))
        return cls(fan_in_uniform(fan_in, (fan_out, fan_in), rng), rho, np.zeros(fan_out), activation)

    @property
    def fan_in(self):
        return self.weight_mean.shape[1]

    @property
    def fan_out(self):
        return self.weight_mean.shape[0]

    @property
    def weight_sigma(self):
        return np.logaddexp(0.0, self.weight_rho.data)

    def parameters(self):
        return [('weight_mean', self.weight_mean), ('weight_rho', self.weight_rho), ('bias', self.bias)]

    def forward(self, x, mode=ForwardMode.DETERMINISTIC, rng=None):
        x = T.as_tensor(x)
        if x.ndim != 2 or x.shape[-1] != self.fan_in:
            raise DimensionError(f"flipout: expected a (batch, {self.fan_in}) input, got {x.shape}")
        base = T.add(T.matmul(x, T.transpose(self.weight_mean)), self.bias)
        if ForwardMode(mode) is ForwardMode.STOCHASTIC:
            rng = _require_rng(rng, self.kind)
            batch = x.shape[0]
            epsilon = gaussian_noise(self.weight_mean.shape, rng)
            input_signs = T.Tensor(rng.signs((batch, self.fan_in)))
            output_signs = T.Tensor(rng.signs((batch, self.fan_out)))
            delta = T.mul(T.softplus(self.weight_rho), epsilon)
            perturbation = T.mul(T.matmul(T.mul(x, input_signs), T.transpose(delta)), output_signs)
            base = T.add(base, perturbation)
        return self.activation.apply(base)


class GaussianRegressionHead(Layer):
    """Parallel Dense(1, linear) mean and Dense(1, softplus) std heads."""
    kind = 'regression_head'

    def __init__(self, mean_head, std_head):
        self.mean_head = mean_head
        self.std_head = std_head

    @classmethod
    def initialize(cls, features, rng):
        return cls(
            DenseLayer.initialize(features, 1, Activation.LINEAR, rng),
            DenseLayer.initialize(features, 1, Activation.SOFTPLUS, rng),
        )

    def parameters(self):
        return [(f'mean_head.{name}', p) for name, p in self.mean_head.parameters()] + \
               [(f'std_head.{name}', p) for name, p in self.std_head.parameters()]

    def forward(self, features, mode=ForwardMode.DETERMINISTIC, rng=None):
        mean = self.mean_head(features)
        std = T.add(self.std_head(features), SIGMA_FLOOR)
        return GaussianPrediction(mean=mean, variance=T.square(std), std=std)


class GaussianLogitHead(Layer):
    """Per-class logit mean (linear) and logit variance (softplus) layers."""
    kind = 'logit_head'

    def __init__(self, mean_layer, var_layer):
        self.mean_layer = mean_layer
        self.var_layer = var_layer

    @classmethod
    def initialize(cls, features, classes, rng):
        return cls(
            DenseLayer.initialize(features, classes, Activation.LINEAR, rng),
            DenseLayer.initialize(features, classes, Activation.SOFTPLUS, rng),
        )

    @property
    def classes(self):
        return self.mean_layer.fan_out

    def parameters(self):
        return [(f'mean_layer.{name}', p) for name, p in self.mean_layer.parameters()] + \
               [(f'var_layer.{name}', p) for name, p in self.var_layer.parameters()]

    def forward(self, features, mode=ForwardMode.DETERMINISTIC, rng=None):
        mean = self.mean_layer(features)
        variance = T.add(self.var_layer(features), SIGMA_FLOOR)
        return GaussianPrediction(mean=mean, variance=variance)
