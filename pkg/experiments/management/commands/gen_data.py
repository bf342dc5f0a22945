import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from autodiff.exceptions import UncertaintyToolkitError
from experiments.config import default_seed
from experiments.datasets import (
    TEST_STREAM,
    SoftLabelDataset,
    ToyRegressionDataset,
    export_regression_csv,
    gen_soft_label_classification,
    gen_toy_regression,
    save_dataset,
)


class Command(BaseCommand):
    help = 'Generate the toy regression data or the soft-label classification proxy.'
    logger = logging.getLogger(__name__)

    def add_arguments(self, parser):
        parser.add_argument('kind', choices=[ToyRegressionDataset.kind, SoftLabelDataset.kind])
        parser.add_argument('--seed', type=int, default=None)
        parser.add_argument('--points', type=int, default=2000, help='Soft-label points to draw.')
        parser.add_argument('--split', choices=['train', 'test'], default='train',
                            help='Soft-label split; the test split uses its own random stream.')
        parser.add_argument('--csv', help='Also export toy regression data as CSV.')
        parser.add_argument('--out', help='Output .npz path.')

    def handle(self, *args, **options):
        seed = default_seed(options['seed'])
        kind = options['kind']
        if options['csv'] and kind != ToyRegressionDataset.kind:
            raise CommandError("--csv is only available for toy_regression")

        try:
            if kind == ToyRegressionDataset.kind:
                dataset = gen_toy_regression(seed)
                name = f'{kind}_seed{seed}.npz'
            else:
                stream = TEST_STREAM if options['split'] == 'test' else 0
                dataset = gen_soft_label_classification(options['points'], seed, stream=stream)
                name = f"{kind}_{options['split']}_seed{seed}.npz"
            path = save_dataset(dataset, options['out'] or settings.UQD_ARTIFACTS_DIR / name)
            if options['csv']:
                export_regression_csv(dataset, options['csv'])
        except UncertaintyToolkitError as exc:
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(f"Cannot write dataset: {exc}") from exc

        self.logger.info(f"{kind} dataset with seed {seed} written to {path}")
        self.stdout.write(self.style.SUCCESS(f"Wrote {len(dataset)} {kind} points to {path}"))
