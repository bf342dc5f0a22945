import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from autodiff.exceptions import ContractError
from autodiff.rng import RngStream
from experiments.datasets import OOD_RANGE, TRAIN_RANGE, true_noise_std
from uncertainty.disentangle import (
    SamplingSoftmaxConfig,
    classification_uncertainty,
    entropy,
    mean_probability_entropy,
    regression_uncertainty,
)
from uncertainty.losses import soft_cross_entropy
from uncertainty.methods import sample_predictions

logger = logging.getLogger(__name__)

REGRESSION_COLUMNS = ('x', 'pred_mu', 'pred_sigma', 'pred_sigma_ale', 'pred_sigma_epi')
FLOAT_FORMAT = '%.10g'
GRID_STEP = 0.05
IN_DISTRIBUTION_WINDOW = (1.0, 9.0)
OOD_WINDOW = (11.0, OOD_RANGE[1])
PANEL_SIZE = 5

_SAMPLE_STREAM, _SOFTMAX_STREAM, _DIAGNOSTIC_STREAM = 0, 1, 2


def default_grid(start=TRAIN_RANGE[0], stop=OOD_RANGE[1], step=GRID_STEP):
    count = int(round((stop - start) / step)) + 1
    return start + step * np.arange(count)


@dataclass(frozen=True)
class RegressionRow:
    x: float
    pred_mu: float
    pred_sigma: float
    pred_sigma_ale: float
    pred_sigma_epi: float


def eval_regression_disentangled(model, uq_config, grid=None, rng=None):
    """One row per grid point: combined mean and the predictive, aleatoric and epistemic stds."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    samples = sample_predictions(model, grid[:, None], uq_config, rng or RngStream(0))
    result = regression_uncertainty(samples)
    columns = (
        grid,
        result.mean[:, 0],
        np.sqrt(result.predictive_variance[:, 0]),
        np.sqrt(result.aleatoric_variance[:, 0]),
        np.sqrt(result.epistemic_variance[:, 0]),
    )
    return [RegressionRow(*(float(c) for c in values)) for values in zip(*columns)]


def emit_disentangled_csv(rows, path):
    if not rows:
        raise ContractError("No regression rows to write")
    frame = pd.DataFrame([asdict(row) for row in rows], columns=list(REGRESSION_COLUMNS))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, sep=';', index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def read_disentangled_csv(path):
    frame = pd.read_csv(path, sep=';')
    return [RegressionRow(*(float(v) for v in record)) for record in frame.itertuples(index=False)]


def _window_mean(x, values, window):
    selected = values[(x >= window[0]) & (x <= window[1])]
    return float(selected.mean()) if selected.size else math.nan


def summarize_regression(rows):
    x = np.array([row.x for row in rows])
    epistemic = np.array([row.pred_sigma_epi for row in rows])
    aleatoric = np.array([row.pred_sigma_ale for row in rows])

    inside = _window_mean(x, epistemic, IN_DISTRIBUTION_WINDOW)
    outside = _window_mean(x, epistemic, OOD_WINDOW)
    if inside > 0:
        ratio = outside / inside
    else:
        ratio = math.inf if outside > 0 else math.nan

    training = (x >= TRAIN_RANGE[0]) & (x <= TRAIN_RANGE[1])
    if np.ptp(aleatoric[training]) > 0:
        correlation = float(stats.pearsonr(aleatoric[training], true_noise_std(x[training]))[0])
    else:
        correlation = math.nan
    return {
        'epistemic_in_distribution': inside,
        'epistemic_ood': outside,
        'ood_ratio': ratio,
        'aleatoric_noise_pearson': correlation,
    }


@dataclass
class ClassificationEvaluation:
    disentangled: object
    labels: np.ndarray
    accuracy: float
    soft_cross_entropy: float
    true_entropy: np.ndarray
    mean_probability_entropy: np.ndarray

    def __len__(self):
        return len(self.labels)


def eval_classification_disentangled(model, uq_config, dataset, rng=None, softmax_config=None):
    rng = rng or RngStream(0)
    softmax_config = softmax_config or SamplingSoftmaxConfig()
    samples = sample_predictions(model, dataset.inputs, uq_config, rng.derive(_SAMPLE_STREAM))
    disentangled = classification_uncertainty(samples, softmax_config, rng.derive(_SOFTMAX_STREAM))
    _, diagnostic_entropy = mean_probability_entropy(samples, softmax_config, rng.derive(_DIAGNOSTIC_STREAM))

    labels = np.asarray(dataset.labels)
    accuracy = float(np.mean(np.argmax(disentangled.p_pred, axis=-1) == np.argmax(labels, axis=-1)))
    loss = soft_cross_entropy(disentangled.p_pred, labels).item()
    logger.info(f"Classification accuracy {accuracy:.4f}, soft cross-entropy {loss:.4f} on {len(labels)} points")
    return ClassificationEvaluation(disentangled, labels, accuracy, loss, entropy(labels), diagnostic_entropy)


def classification_summary(evaluation):
    d = evaluation.disentangled
    if np.ptp(d.h_ale) > 0 and np.ptp(evaluation.true_entropy) > 0:
        correlation = float(stats.pearsonr(d.h_ale, evaluation.true_entropy)[0])
    else:
        correlation = math.nan
    return {
        'accuracy': evaluation.accuracy,
        'soft_cross_entropy': evaluation.soft_cross_entropy,
        'mean_h_pred': float(d.h_pred.mean()),
        'mean_h_ale': float(d.h_ale.mean()),
        'mean_h_epi': float(d.h_epi.mean()),
        'mean_probability_entropy': float(evaluation.mean_probability_entropy.mean()),
        'h_ale_true_entropy_pearson': correlation,
    }


def top_entropy_panel(evaluation, count=PANEL_SIZE):
    """The ``count`` points with the most ambiguous true labels, most ambiguous first."""
    order = np.argsort(-evaluation.true_entropy, kind='stable')[:count]
    panel = []
    for rank, index in enumerate(order):
        entry = {
            'rank': rank,
            'index': int(index),
            'true': evaluation.labels[index].tolist(),
            'h_true': float(evaluation.true_entropy[index]),
        }
        entry.update(evaluation.disentangled.point(index))
        panel.append(entry)
    return panel


def epistemic_entropy_ratio(summaries):
    """Mean H_epi of Flipout over Ensemble; ``None`` unless both methods were evaluated."""
    flipout, ensemble = summaries.get('flipout'), summaries.get('ensemble')
    if not flipout or not ensemble:
        return None
    if ensemble['mean_h_epi'] == 0:
        return math.inf if flipout['mean_h_epi'] > 0 else math.nan
    return flipout['mean_h_epi'] / ensemble['mean_h_epi']


def _panel_frame(reports):
    records = []
    for method, report in reports.items():
        for entry in report['panel']:
            for kind, entropy_key in (('true', 'h_true'), ('p_pred', 'h_pred'), ('p_ale', 'h_ale'), ('p_epi', 'h_epi')):
                record = {'method': method, 'rank': entry['rank'], 'index': entry['index'],
                          'distribution': kind, 'entropy': entry[entropy_key]}
                record.update({f'p_{c}': p for c, p in enumerate(entry[kind])})
                records.append(record)
    return pd.DataFrame.from_records(records)


def emit_report(reports, path, ratio=None):
    """
    Write the per-method panels and metrics.

    ``.json`` paths get the full nested report; anything else gets one CSV
    row per (method, point, distribution).
    """
    if not reports:
        raise ContractError("No evaluated models to report")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == '.json':
        payload = {'methods': reports, 'flipout_ensemble_epistemic_ratio': ratio}
        path.write_text(json.dumps(payload, indent=2, default=float))
    else:
        _panel_frame(reports).to_csv(path, sep=';', index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def emit_classification_csv(evaluation, path):
    """Per-point entropies and the three distributions of every test input."""
    d = evaluation.disentangled
    frame = pd.DataFrame({
        'index': np.arange(len(evaluation)),
        'h_true': evaluation.true_entropy,
        'h_pred': d.h_pred,
        'h_ale': d.h_ale,
        'h_epi': d.h_epi,
    })
    for name, values in (('true', evaluation.labels), ('p_pred', d.p_pred), ('p_ale', d.p_ale), ('p_epi', d.p_epi)):
        for c in range(values.shape[1]):
            frame[f'{name}_{c}'] = values[:, c]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, sep=';', index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path
