"""
Synthetic datasets for the reproduction runs.

``toy_regression``: y = x sin x + e1 x + e2 with e1, e2 ~ N(0, 0.3^2), 1000
training points on [0, 10] and 200 out-of-distribution points on [10, 15].

``soft_label``: eight Gaussian clusters on a circle in the plane; every point
is labelled by ten simulated annotators voting from its true class posterior.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import special

from autodiff.exceptions import ConfigurationError, SerializationError
from autodiff.rng import RngStream

logger = logging.getLogger(__name__)

NOISE_STD = 0.3
TRAIN_POINTS = 1000
OOD_POINTS = 200
TRAIN_RANGE = (0.0, 10.0)
OOD_RANGE = (10.0, 15.0)

CLASSES = 8
ANNOTATORS = 10
CLUSTER_RADIUS = 2.5
CLUSTER_STD = 1.0

TEST_STREAM = 1


def noiseless_mean(x):
    x = np.asarray(x, dtype=np.float64)
    return x * np.sin(x)


def true_noise_std(x):
    """Std of e1 x + e2 at ``x``."""
    x = np.asarray(x, dtype=np.float64)
    return NOISE_STD * np.sqrt(x ** 2 + 1.0)


@dataclass
class ToyRegressionDataset:
    x_train: np.ndarray
    y_train: np.ndarray
    x_ood: np.ndarray
    y_ood: np.ndarray
    noise_std: float = NOISE_STD
    seed: int = 0

    kind = 'toy_regression'

    @property
    def inputs(self):
        return self.x_train[:, None]

    @property
    def targets(self):
        return self.y_train[:, None]

    def __len__(self):
        return len(self.x_train)


@dataclass
class SoftLabelDataset:
    inputs: np.ndarray
    labels: np.ndarray
    posteriors: np.ndarray
    classes: np.ndarray
    centers: np.ndarray
    cluster_std: float = CLUSTER_STD
    seed: int = 0

    kind = 'soft_label'

    @property
    def targets(self):
        return self.labels

    @property
    def class_count(self):
        return self.labels.shape[1]

    def __len__(self):
        return len(self.inputs)


def _noisy_targets(x, rng):
    heteroscedastic = rng.normal(x.shape) * NOISE_STD
    homoscedastic = rng.normal(x.shape) * NOISE_STD
    return noiseless_mean(x) + heteroscedastic * x + homoscedastic


def gen_toy_regression(seed):
    rng = RngStream(seed)
    x_train = rng.uniform(*TRAIN_RANGE, TRAIN_POINTS)
    y_train = _noisy_targets(x_train, rng)
    x_ood = rng.uniform(*OOD_RANGE, OOD_POINTS)
    y_ood = _noisy_targets(x_ood, rng)
    logger.info(f"Generated toy regression data with seed {seed}")
    return ToyRegressionDataset(x_train, y_train, x_ood, y_ood, NOISE_STD, seed)


def cluster_centers(classes=CLASSES, radius=CLUSTER_RADIUS):
    angles = 2.0 * np.pi * np.arange(classes) / classes
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def class_posterior(points, centers, cluster_std=CLUSTER_STD):
    """Exact posterior over equally likely isotropic Gaussian clusters of a shared std."""
    points = np.atleast_2d(points)
    squared = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
    return special.softmax(-squared / (2.0 * cluster_std ** 2), axis=-1)


def annotator_votes(posteriors, rng, annotators=ANNOTATORS):
    """Vote histograms of ``annotators`` independent draws per row, as fractions."""
    posteriors = posteriors / posteriors.sum(axis=-1, keepdims=True)
    return rng.multinomial(annotators, posteriors) / annotators


def gen_soft_label_classification(n_points, seed, stream=0, classes=CLASSES,
                                  radius=CLUSTER_RADIUS, cluster_std=CLUSTER_STD):
    if n_points < 1:
        raise ConfigurationError(f"n_points must be positive, got {n_points}")
    rng = RngStream(seed, stream)
    centers = cluster_centers(classes, radius)
    labels_true = rng.permutation(np.arange(n_points) % classes)
    inputs = centers[labels_true] + cluster_std * rng.normal((n_points, 2))
    posteriors = class_posterior(inputs, centers, cluster_std)
    votes = annotator_votes(posteriors, rng)
    logger.info(f"Generated {n_points} soft-label points with seed {seed} (stream {stream})")
    return SoftLabelDataset(inputs, votes, posteriors, labels_true, centers, cluster_std, seed)


def save_dataset(dataset, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(dataset, ToyRegressionDataset):
        arrays = dict(x_train=dataset.x_train, y_train=dataset.y_train, x_ood=dataset.x_ood,
                      y_ood=dataset.y_ood, noise_std=dataset.noise_std)
    else:
        arrays = dict(inputs=dataset.inputs, labels=dataset.labels, posteriors=dataset.posteriors,
                      classes=dataset.classes, centers=dataset.centers, cluster_std=dataset.cluster_std)
    with path.open('wb') as handle:
        np.savez(handle, kind=dataset.kind, seed=dataset.seed, **arrays)
    return path


def _from_archive(kind, seed, archive):
    if kind == ToyRegressionDataset.kind:
        return ToyRegressionDataset(
            archive['x_train'], archive['y_train'], archive['x_ood'], archive['y_ood'],
            float(archive['noise_std']), seed,
        )
    if kind == SoftLabelDataset.kind:
        return SoftLabelDataset(
            archive['inputs'], archive['labels'], archive['posteriors'], archive['classes'],
            archive['centers'], float(archive['cluster_std']), seed,
        )
    raise SerializationError(f"Unknown dataset kind {kind!r}")


def load_dataset(path):
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise SerializationError(f"Cannot read dataset {path}: {exc}") from exc
    with archive:
        try:
            return _from_archive(str(archive['kind']), int(archive['seed']), archive)
        except KeyError as exc:
            raise SerializationError(f"Dataset {path} is missing {exc}") from None


def export_regression_csv(dataset, path):
    frame = pd.concat([
        pd.DataFrame({'split': 'train', 'x': dataset.x_train, 'y': dataset.y_train}),
        pd.DataFrame({'split': 'ood', 'x': dataset.x_ood, 'y': dataset.y_ood}),
    ])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, sep=';', index=False, float_format='%.10g', lineterminator='\n')
    return path
