"""
Sampling-softmax error study.

For a fixed Gaussian logit distribution, repeat the Monte-Carlo estimate of
the expected softmax with N draws and measure how far it lands from a
high-N reference, and how often it flips the predicted class.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from autodiff.exceptions import ConfigurationError, ContractError
from autodiff.rng import RngStream
from uncertainty.disentangle import SamplingSoftmaxConfig, sampling_softmax

logger = logging.getLogger(__name__)

REFERENCE_SAMPLES = 100_000
DEFAULT_SAMPLE_GRID = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000)
DEFAULT_TRIALS = 100

SWEEP_COLUMNS = ('num_samples', 'mean_error', 'std_error', 'mean_miss')
FLOAT_FORMAT = '%.10g'

# Upper bound on draws * trials * classes held in memory at once.
_CHUNK_BUDGET = 4_000_000

# Reference estimates use derived stream 0; sample count N uses stream N.
_REFERENCE_STREAM = 0


@dataclass(frozen=True)
class LogitDistSpec:
    means: tuple
    stds: tuple

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        stds = tuple(float(s) for s in self.stds)
        if len(means) != len(stds) or len(means) < 2:
            raise ConfigurationError(f"Need matching means and stds for at least two classes, got {means} / {stds}")
        if any(s < 0 for s in stds):
            raise ConfigurationError(f"Logit standard deviations must be non-negative, got {stds}")
        object.__setattr__(self, 'means', means)
        object.__setattr__(self, 'stds', stds)

    @property
    def mean_array(self):
        return np.array(self.means)

    @property
    def variance_array(self):
        return np.square(np.array(self.stds))

    def permuted(self, order):
        return LogitDistSpec(tuple(self.means[i] for i in order), tuple(self.stds[i] for i in order))

    def __str__(self):
        return f"N({list(self.means)}, {list(self.stds)})"


@dataclass(frozen=True)
class SweepRow:
    num_samples: int
    mean_error: float
    std_error: float
    mean_miss: float


PRESETS = {
    'wide': LogitDistSpec((10.0, 0.0), (10.0, 10.0)),
    'dominant': LogitDistSpec((100.0, 0.0), (100.0, 10.0)),
    'tied': LogitDistSpec((0.0, 0.0), (10.0, 10.0)),
}

BINARY_GRID_MEANS = ((50.0, 10.0), (50.0, 50.0), (50.0, 100.0))
BINARY_GRID_STDS = ((0.0, 1.0), (0.0, 50.0), (0.0, 100.0))


def reference_probs(spec, rng):
    """Best available estimate of the expected softmax: the sampling softmax at N = 100000."""
    config = SamplingSoftmaxConfig(REFERENCE_SAMPLES)
    return sampling_softmax(spec.mean_array, spec.variance_array, config, rng).data


def _estimates(spec, num_samples, trials, rng):
    classes = len(spec.means)
    chunk = max(1, min(trials, _CHUNK_BUDGET // (num_samples * classes)))
    config = SamplingSoftmaxConfig(num_samples)
    parts = []
    for start in range(0, trials, chunk):
        size = min(chunk, trials - start)
        mean = np.tile(spec.mean_array, (size, 1))
        variance = np.tile(spec.variance_array, (size, 1))
        parts.append(sampling_softmax(mean, variance, config, rng).data)
    return np.concatenate(parts)


def sweep(spec, sample_counts=DEFAULT_SAMPLE_GRID, trials=DEFAULT_TRIALS, rng=None, reference=None):
    """
    One row per sample count, ascending.

    Every trial is an independent estimate; its error is the L2 distance to
    the reference and it misses when its argmax differs from the reference
    argmax. Trials for one sample count run as a single batch on that count's
    derived stream.
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be positive, got {trials}")
    counts = sorted({int(n) for n in sample_counts})
    if not counts or counts[0] < 1:
        raise ConfigurationError(f"Sample counts must be positive, got {list(sample_counts)}")
    rng = rng or RngStream(0)
    if reference is None:
        reference = reference_probs(spec, rng.derive(_REFERENCE_STREAM))
    target_class = int(np.argmax(reference))

    rows = []
    for num_samples in counts:
        estimates = _estimates(spec, num_samples, trials, rng.derive(num_samples))
        errors = np.linalg.norm(estimates - reference, axis=-1)
        misses = np.argmax(estimates, axis=-1) != target_class
        row = SweepRow(num_samples, float(errors.mean()), float(errors.std()), float(misses.mean()))
        logger.debug(f"{spec} N={num_samples}: error {row.mean_error:.3g} miss {row.mean_miss:.3g}")
        rows.append(row)
    logger.info(f"Swept {spec} over {len(counts)} sample counts x {trials} trials")
    return rows


def binary_probability_grid(num_samples=REFERENCE_SAMPLES, rng=None):
    """Sampling-softmax probabilities for every (means, stds) pair of the two-class grid."""
    rng = rng or RngStream(0)
    config = SamplingSoftmaxConfig(num_samples)
    records = []
    index = 0
    for means in BINARY_GRID_MEANS:
        for stds in BINARY_GRID_STDS:
            spec = LogitDistSpec(means, stds)
            p = sampling_softmax(spec.mean_array, spec.variance_array, config, rng.derive(index)).data
            records.append({
                'mean_0': means[0], 'mean_1': means[1],
                'std_0': stds[0], 'std_1': stds[1],
                'p_0': float(p[0]), 'p_1': float(p[1]),
            })
            index += 1
    return records


def _write_frame(frame, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, sep=';', index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def emit_sweep_csv(rows, path):
    if not rows:
        raise ContractError("No sweep rows to write")
    frame = pd.DataFrame([[getattr(row, c) for c in SWEEP_COLUMNS] for row in rows], columns=list(SWEEP_COLUMNS))
    return _write_frame(frame, path)


def read_sweep_csv(path):
    frame = pd.read_csv(path, sep=';')
    return [
        SweepRow(int(r.num_samples), float(r.mean_error), float(r.std_error), float(r.mean_miss))
        for r in frame.itertuples(index=False)
    ]


def emit_grid_csv(records, path):
    if not records:
        raise ContractError("No grid records to write")
    return _write_frame(pd.DataFrame.from_records(records), path)
