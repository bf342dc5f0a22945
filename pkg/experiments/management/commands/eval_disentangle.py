import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from autodiff.exceptions import UncertaintyToolkitError
from autodiff.rng import RngStream
from experiments.config import config_from_manifest, default_seed
from experiments.datasets import TEST_STREAM, gen_soft_label_classification, load_dataset
from experiments.evaluation import (
    GRID_STEP,
    classification_summary,
    default_grid,
    emit_classification_csv,
    emit_disentangled_csv,
    eval_classification_disentangled,
    eval_regression_disentangled,
    summarize_regression,
)
from uncertainty.disentangle import SamplingSoftmaxConfig
from uncertainty.networks import Task
from uncertainty.persistence import load_models

CLASSIFICATION_TEST_POINTS = 1000


class Command(BaseCommand):
    help = 'Split the predictive uncertainty of a saved model into aleatoric and epistemic parts.'
    logger = logging.getLogger(__name__)

    def add_arguments(self, parser):
        parser.add_argument('model_dir')
        parser.add_argument('--data', help='Soft-label test set .npz; generated from the model seed when omitted.')
        parser.add_argument('--grid', type=float, nargs=2, metavar=('START', 'STOP'),
                            help='Regression grid bounds.')
        parser.add_argument('--step', type=float, default=GRID_STEP)
        parser.add_argument('--seed', type=int, default=None)
        parser.add_argument('--out', help='Output CSV path.')

    def handle(self, *args, **options):
        model_dir = Path(options['model_dir'])
        try:
            model, manifest = load_models(model_dir)
            config = config_from_manifest(manifest)
            rng = RngStream(default_seed(options['seed']))
            out = options['out'] or model_dir / 'disentangled.csv'

            if config.task is Task.REGRESSION:
                grid = default_grid(*options['grid'], options['step']) if options['grid'] else None
                rows = eval_regression_disentangled(model, config.uq, grid, rng)
                path = emit_disentangled_csv(rows, out)
                summary = summarize_regression(rows)
                count = len(rows)
            else:
                if options['data']:
                    dataset = load_dataset(options['data'])
                else:
                    dataset = gen_soft_label_classification(CLASSIFICATION_TEST_POINTS, config.seed, stream=TEST_STREAM)
                evaluation = eval_classification_disentangled(
                    model, config.uq, dataset, rng, SamplingSoftmaxConfig(config.softmax_samples),
                )
                path = emit_classification_csv(evaluation, out)
                summary = classification_summary(evaluation)
                count = len(evaluation)
        except UncertaintyToolkitError as exc:
            self.logger.error(f"Evaluation of {model_dir} failed: {exc}")
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(f"Cannot read or write: {exc}") from exc

        for key, value in summary.items():
            self.logger.info(f"{manifest['method']} {key}: {value:.5f}")
        self.stdout.write(self.style.SUCCESS(f"Wrote {count} rows to {path}"))
