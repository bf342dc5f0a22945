import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from autodiff.exceptions import UncertaintyToolkitError
from autodiff.rng import RngStream
from experiments.config import config_from_manifest, default_seed
from experiments.datasets import load_dataset
from experiments.evaluation import (
    classification_summary,
    emit_report,
    epistemic_entropy_ratio,
    eval_classification_disentangled,
    top_entropy_panel,
)
from uncertainty.disentangle import SamplingSoftmaxConfig
from uncertainty.networks import Task
from uncertainty.persistence import load_models


class Command(BaseCommand):
    help = 'Compare classification models on the test points with the most ambiguous labels.'
    logger = logging.getLogger(__name__)

    def add_arguments(self, parser):
        parser.add_argument('model_dirs', nargs='+')
        parser.add_argument('--data', required=True, help='Soft-label test set .npz.')
        parser.add_argument('--panel', type=int, default=5, help='Points per method in the panel.')
        parser.add_argument('--seed', type=int, default=None)
        parser.add_argument('--out', help='Output path; .json for the full report, otherwise CSV.')

    def handle(self, *args, **options):
        seed = default_seed(options['seed'])
        reports = {}
        try:
            dataset = load_dataset(options['data'])
            for model_dir in options['model_dirs']:
                model, manifest = load_models(model_dir)
                config = config_from_manifest(manifest)
                if config.task is not Task.CLASSIFICATION:
                    raise CommandError(f"{model_dir} holds a {config.task.value} model")
                evaluation = eval_classification_disentangled(
                    model, config.uq, dataset, RngStream(seed), SamplingSoftmaxConfig(config.softmax_samples),
                )
                key = self._key(reports, manifest['method'])
                reports[key] = {
                    'model_dir': str(model_dir),
                    'metrics': classification_summary(evaluation),
                    'panel': top_entropy_panel(evaluation, options['panel']),
                }

            ratio = epistemic_entropy_ratio({key: report['metrics'] for key, report in reports.items()})
            path = emit_report(reports, options['out'] or settings.UQD_ARTIFACTS_DIR / 'report.json', ratio)
        except UncertaintyToolkitError as exc:
            self.logger.error(f"Report failed: {exc}")
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(f"Cannot read or write: {exc}") from exc

        if ratio is not None:
            self.logger.info(f"Flipout/Ensemble mean epistemic entropy ratio: {ratio:.3f}")
        self.stdout.write(self.style.SUCCESS(f"Reported {len(reports)} model(s) to {path}"))

    @staticmethod
    def _key(reports, method):
        key, suffix = method, 2
        while key in reports:
            key = f'{method}_{suffix}'
            suffix += 1
        return key
