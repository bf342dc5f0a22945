from dataclasses import dataclass, field

import numpy as np

from autodiff.exceptions import DimensionError

ADAM_EPSILON = 1e-8


@dataclass
class AdamState:
    step: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)


def adam_step(params, grads, state, lr=1e-3, beta1=0.9, beta2=0.999, epsilon=ADAM_EPSILON):
    """
    One bias-corrected Adam update.

    ``params`` and ``grads`` map names to arrays; a parameter without a
    gradient is treated as having a zero gradient. Returns the updated
    parameters as new arrays and advances ``state`` in place.
    """
    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    step_size = lr / correction1

    updated = {}
    for name, value in params.items():
        value = np.asarray(value, dtype=np.float64)
        g = np.asarray(grads.get(name, np.zeros_like(value)), dtype=np.float64)
        if g.shape != value.shape:
            raise DimensionError(f"Gradient for {name} has shape {g.shape}, parameter has {value.shape}")

        if name not in state.first_moment:
            state.first_moment[name] = np.zeros_like(value)
            state.second_moment[name] = np.zeros_like(value)
        m, v = state.first_moment[name], state.second_moment[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)

        denominator = np.sqrt(v / correction2) + epsilon
        updated[name] = value - step_size * m / denominator
    return updated, state


class Adam:
    """Adam over a network's named parameter Tensors; updates their data in place."""

    def __init__(self, named_parameters, lr=1e-3, beta1=0.9, beta2=0.999, epsilon=ADAM_EPSILON):
        self.named_parameters = list(named_parameters)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.state = AdamState()

    def step(self, gradients):
        """``gradients`` maps parameter Tensors to gradient Tensors, as returned by ``backward``."""
        params = {name: tensor.data for name, tensor in self.named_parameters}
        grads = {name: gradients[tensor].data for name, tensor in self.named_parameters if tensor in gradients}
        updated, _ = adam_step(params, grads, self.state, self.lr, self.beta1, self.beta2, self.epsilon)
        for name, tensor in self.named_parameters:
            tensor.data = updated[name]
