import logging
from enum import Enum

from autodiff.exceptions import ConfigurationError
from uncertainty.layers import (
    Activation,
    DenseLayer,
    DropConnectDense,
    FlipoutDense,
    ForwardMode,
    GaussianLogitHead,
    GaussianRegressionHead,
    McDropout,
)

logger = logging.getLogger(__name__)


class Task(str, Enum):
    REGRESSION = 'regression'
    CLASSIFICATION = 'classification'


class UqMethod(str, Enum):
    BASELINE = 'baseline'
    MC_DROPOUT = 'mc_dropout'
    MC_DROPCONNECT = 'mc_dropconnect'
    FLIPOUT = 'flipout'
    ENSEMBLE = 'ensemble'


class Network:
    """A trunk of (possibly stochastic) layers feeding a two-headed Gaussian output block."""

    def __init__(self, task, method, trunk, head):
        self.task = Task(task)
        self.method = UqMethod(method)
        self.trunk = list(trunk)
        self.head = head

    def __repr__(self):
        layers = ' - '.join(layer.kind for layer in self.trunk)
        return f"<Network {self.task.value}/{self.method.value}: {layers} -> {self.head.kind}>"

    @property
    def is_stochastic(self):
        return any(layer.stochastic for layer in self.trunk)

    def layers(self):
        return self.trunk + [self.head]

    def parameters(self):
        named = []
        for index, layer in enumerate(self.trunk):
            named.extend((f'trunk.{index}.{name}', p) for name, p in layer.parameters())
        named.extend((f'head.{name}', p) for name, p in self.head.parameters())
        return named

    def forward(self, x, mode=ForwardMode.DETERMINISTIC, rng=None):
        hidden = x
        for layer in self.trunk:
            hidden = layer(hidden, mode, rng)
        return self.head(hidden, mode, rng)

    __call__ = forward


def build_network(task, method, input_dim, hidden_units, output_dim, rng,
                  dropout_p=0.25, dropconnect_p=0.10):
    """
    Trunk per UQ method followed by the task head.

    Regression puts dropout after each hidden Dense layer, classification
    before it. DropConnect and Flipout replace the hidden Dense layers.
    Ensemble members use the baseline trunk.
    """
    task, method = Task(task), UqMethod(method)
    trunk = []
    fan_in = input_dim
    for units in hidden_units:
        if method is UqMethod.MC_DROPCONNECT:
            trunk.append(DropConnectDense.initialize(
                fan_in, units, Activation.RELU, rng, drop_probability=dropconnect_p,
            ))
        elif method is UqMethod.FLIPOUT:
            trunk.append(FlipoutDense.initialize(fan_in, units, Activation.RELU, rng))
        elif method is UqMethod.MC_DROPOUT:
            dense = DenseLayer.initialize(fan_in, units, Activation.RELU, rng)
            if task is Task.CLASSIFICATION:
                trunk.extend([McDropout(dropout_p), dense])
            else:
                trunk.extend([dense, McDropout(dropout_p)])
        else:
            trunk.append(DenseLayer.initialize(fan_in, units, Activation.RELU, rng))
        fan_in = units

    if task is Task.REGRESSION:
        if output_dim != 1:
            raise ConfigurationError(f"Regression networks predict one output, got {output_dim}")
        head = GaussianRegressionHead.initialize(fan_in, rng)
    else:
        head = GaussianLogitHead.initialize(fan_in, output_dim, rng)

    network = Network(task, method, trunk, head)
    logger.debug(f"Built {network!r}")
    return network
