import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from autodiff.exceptions import ConfigurationError, TrainingDivergedError
from autodiff.rng import RngStream
from autodiff.tape import GradientTape, backward
from experiments.optim import Adam
from uncertainty.disentangle import SamplingSoftmaxConfig, sampling_softmax
from uncertainty.layers import ForwardMode
from uncertainty.losses import LossConfig, LossKind, regression_loss, soft_cross_entropy
from uncertainty.methods import Ensemble, UqMethodConfig
from uncertainty.networks import Task, UqMethod, build_network

logger = logging.getLogger(__name__)

TASK_DEFAULTS = {
    Task.REGRESSION: dict(epochs=700, batch_size=32, hidden_units=(32, 32), loss=LossConfig(LossKind.NLL)),
    Task.CLASSIFICATION: dict(epochs=120, batch_size=64, hidden_units=(256, 256), loss=LossConfig(LossKind.SOFT_CE)),
}

# Per-run stream layout: initial weights, mini-batch order, layer and logit noise.
_INIT_STREAM, _SHUFFLE_STREAM, _NOISE_STREAM = 0, 1, 2


@dataclass(frozen=True)
class TrainConfig:
    task: Task
    uq: UqMethodConfig
    loss: LossConfig
    epochs: int
    batch_size: int
    hidden_units: tuple
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    seed: int = 0
    softmax_samples: int = 100
    log_every: int = 50

    def __post_init__(self):
        object.__setattr__(self, 'task', Task(self.task))
        object.__setattr__(self, 'hidden_units', tuple(int(u) for u in self.hidden_units))
        if self.epochs < 1 or self.batch_size < 1 or self.softmax_samples < 1:
            raise ConfigurationError("epochs, batch_size and softmax_samples must be positive")
        if not self.hidden_units or min(self.hidden_units) < 1:
            raise ConfigurationError(f"hidden_units must be positive widths, got {self.hidden_units}")
        if self.learning_rate <= 0 or not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ConfigurationError("Adam needs lr > 0 and moment rates in [0, 1)")
        classification_loss = self.loss.kind is LossKind.SOFT_CE
        if classification_loss != (self.task is Task.CLASSIFICATION):
            raise ConfigurationError(f"{self.loss.kind.value} loss cannot train a {self.task.value} model")

    @classmethod
    def for_task(cls, task, uq=None, **overrides):
        task = Task(task)
        values = dict(TASK_DEFAULTS[task])
        values.update(overrides)
        return cls(task=task, uq=uq or UqMethodConfig(), **values)

    @property
    def method(self):
        return self.uq.kind

    def as_mapping(self):
        return {
            'task': self.task.value,
            'method': self.uq.kind.value,
            'loss': self.loss.kind.value,
            'beta': self.loss.beta,
            'epochs': self.epochs,
            'batch_size': self.batch_size,
            'hidden_units': ','.join(str(u) for u in self.hidden_units),
            'learning_rate': self.learning_rate,
            'adam_beta1': self.adam_beta1,
            'adam_beta2': self.adam_beta2,
            'seed': self.seed,
            'forward_passes': self.uq.forward_passes,
            'ensemble_size': self.uq.ensemble_size,
            'dropout_p': self.uq.dropout_p,
            'dropconnect_p': self.uq.dropconnect_p,
            'softmax_samples': self.softmax_samples,
            'log_every': self.log_every,
        }


@dataclass
class TrainingResult:
    model: object
    histories: list = field(default_factory=list)
    seeds: list = field(default_factory=list)

    @property
    def final_loss(self):
        finals = [history[-1] for history in self.histories if history]
        return float(np.mean(finals)) if finals else None


def _check_dataset(config, dataset):
    is_classification = dataset.kind == 'soft_label'
    if is_classification != (config.task is Task.CLASSIFICATION):
        raise ConfigurationError(f"A {config.task.value} config cannot train on {dataset.kind} data")


def _batch_loss(config, prediction, targets, rng):
    if config.task is Task.REGRESSION:
        return regression_loss(config.loss, prediction, targets)
    probabilities = sampling_softmax(
        prediction.mean, prediction.variance, SamplingSoftmaxConfig(config.softmax_samples), rng,
    )
    return soft_cross_entropy(probabilities, targets)


def train_network(config, dataset, method=None, seed=None):
    """
    Fit one network with shuffled mini-batch Adam.

    Returns ``(network, history)`` where ``history`` holds the mean loss of
    every epoch. Stochastic methods train with their randomness active.
    """
    _check_dataset(config, dataset)
    method = UqMethod(method or config.method)
    seed = config.seed if seed is None else seed
    rng = RngStream(seed)
    inputs, targets = dataset.inputs, dataset.targets
    output_dim = targets.shape[1]

    network = build_network(
        config.task, method, inputs.shape[1], config.hidden_units, output_dim, rng.derive(_INIT_STREAM),
        dropout_p=config.uq.dropout_p, dropconnect_p=config.uq.dropconnect_p,
    )
    optimizer = Adam(network.parameters(), config.learning_rate, config.adam_beta1, config.adam_beta2)
    shuffle_rng, noise_rng = rng.derive(_SHUFFLE_STREAM), rng.derive(_NOISE_STREAM)
    mode = ForwardMode.STOCHASTIC if network.is_stochastic else ForwardMode.DETERMINISTIC

    history = []
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(len(inputs))
        losses = []
        for step, start in enumerate(range(0, len(inputs), config.batch_size)):
            batch = order[start:start + config.batch_size]
            with GradientTape():
                prediction = network(inputs[batch], mode, noise_rng)
                loss = _batch_loss(config, prediction, targets[batch], noise_rng)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDivergedError(
                    f"Loss became {value} at epoch {epoch}, step {step} ({method.value}, seed {seed})",
                    epoch=epoch, step=step,
                )
            optimizer.step(backward(loss))
            losses.append(value)
        history.append(float(np.mean(losses)))
        if config.log_every and (epoch + 1) % config.log_every == 0:
            logger.info(f"[{method.value} seed={seed}] epoch {epoch + 1}/{config.epochs} loss {history[-1]:.5f}")
    return network, history


def _train_member(arguments):
    config, dataset, seed = arguments
    return train_network(config, dataset, UqMethod.ENSEMBLE, seed)


def train_ensemble(config, dataset, workers=1):
    """Members are baseline networks seeded ``seed + i``; results keep member order."""
    seeds = [config.seed + index for index in range(config.uq.ensemble_size)]
    jobs = [(config, dataset, seed) for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trained = list(pool.map(_train_member, jobs))
    else:
        trained = [_train_member(job) for job in jobs]
    members, histories = zip(*trained)
    logger.info(f"Trained an ensemble of {len(members)} members (seeds {seeds})")
    return TrainingResult(Ensemble(list(members), seeds), list(histories), seeds)


def train(config, dataset, workers=1):
    if config.method is UqMethod.ENSEMBLE:
        return train_ensemble(config, dataset, workers)
    network, history = train_network(config, dataset)
    return TrainingResult(network, [history], [config.seed])