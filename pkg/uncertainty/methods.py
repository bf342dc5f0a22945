import logging
from dataclasses import dataclass

import numpy as np

from autodiff import tensor as T
from autodiff.exceptions import ConfigurationError, ContractError
from uncertainty.layers import ForwardMode
from uncertainty.networks import Network, Task, UqMethod

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UqMethodConfig:
    kind: UqMethod = UqMethod.BASELINE
    forward_passes: int = 20
    ensemble_size: int = 5
    dropout_p: float = 0.25
    dropconnect_p: float = 0.10

    def __post_init__(self):
        object.__setattr__(self, 'kind', UqMethod(self.kind))
        if self.forward_passes < 1 or self.ensemble_size < 1:
            raise ConfigurationError("forward_passes and ensemble_size must be positive")
        for name in ('dropout_p', 'dropconnect_p'):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1)")

    @property
    def sample_count(self):
        """Number of predictive samples one input yields: one per member for ensembles."""
        return self.ensemble_size if self.kind is UqMethod.ENSEMBLE else self.forward_passes


@dataclass
class PredictionSamples:
    """
    M predictive samples for a batch of inputs.

    ``means`` and ``variances`` have shape (M, batch, outputs); for
    classification the outputs are per-class logit means and variances.
    """
    task: Task
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        self.task = Task(self.task)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        if self.means.ndim == 1:
            self.means = self.means[:, None, None]
            self.variances = self.variances[:, None, None]
        elif self.means.ndim == 2:
            self.means = self.means[:, None, :]
            self.variances = self.variances[:, None, :]
        if self.means.shape[0] == 0:
            raise ContractError("Prediction samples are empty")
        if self.means.shape != self.variances.shape:
            raise ContractError(f"Mean samples {self.means.shape} and variance samples {self.variances.shape} differ")
        if np.any(self.variances < 0):
            raise ContractError("Sampled variances must be non-negative")

    @property
    def count(self):
        return self.means.shape[0]

    @classmethod
    def from_predictions(cls, task, predictions):
        if not predictions:
            raise ContractError("Prediction samples are empty")
        return cls(
            task,
            np.stack([p.mean.data for p in predictions]),
            np.stack([p.variance.data for p in predictions]),
        )


class Ensemble:
    """Independently initialised baseline networks evaluated one deterministic pass each."""

    method = UqMethod.ENSEMBLE

    def __init__(self, members, seeds=None):
        if not members:
            raise ConfigurationError("An ensemble needs at least one member")
        self.members = list(members)
        self.seeds = list(seeds) if seeds is not None else list(range(len(self.members)))
        tasks = {member.task for member in self.members}
        if len(tasks) != 1:
            raise ConfigurationError("Ensemble members must solve the same task")
        self.task = tasks.pop()

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __repr__(self):
        return f"<Ensemble of {len(self.members)} {self.task.value} networks>"


def _check_model(model, config):
    if config.kind is UqMethod.ENSEMBLE:
        if not isinstance(model, Ensemble):
            raise ConfigurationError("Ensemble sampling needs an Ensemble of members")
        return
    if not isinstance(model, Network):
        raise ConfigurationError(f"{config.kind.value} sampling needs a single network, got {model!r}")
    if model.method is not config.kind and not (
            config.kind is UqMethod.BASELINE and model.method is UqMethod.ENSEMBLE):
        raise ConfigurationError(
            f"Config asks for {config.kind.value} but the network was built for {model.method.value}"
        )


def sample_predictions(model, x, config, rng=None):
    """Turn a trained model (or ensemble) into the configured number of predictive samples for ``x``."""
    _check_model(model, config)
    x = T.Tensor(x)

    if config.kind is UqMethod.ENSEMBLE:
        predictions = [member(x, ForwardMode.DETERMINISTIC) for member in model]
    elif config.kind is UqMethod.BASELINE:
        predictions = [model(x, ForwardMode.DETERMINISTIC)] * config.forward_passes
    else:
        if rng is None:
            raise ConfigurationError(f"{config.kind.value} sampling needs an RngStream")
        predictions = [
            model(x, ForwardMode.STOCHASTIC, rng.derive(index))
            for index in range(config.forward_passes)
        ]

    samples = PredictionSamples.from_predictions(model.task, predictions)
    logger.debug(f"Drew {samples.count} {config.kind.value} samples for {x.shape[0]} inputs")
    return samples
