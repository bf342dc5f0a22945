import json
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from django.utils import timezone

from autodiff.exceptions import UncertaintyToolkitError
from experiments.config import load_train_config, write_train_config
from experiments.datasets import gen_soft_label_classification, gen_toy_regression, load_dataset
from experiments.models import TrainingRun
from experiments.training import train
from uncertainty.networks import Task
from uncertainty.persistence import config_digest, save_models

CLASSIFICATION_TRAIN_POINTS = 2000


class Command(BaseCommand):
    help = 'Train a model from a KEY=VALUE config file and save it as a UQD1 model directory.'
    logger = logging.getLogger(__name__)

    def add_arguments(self, parser):
        parser.add_argument('config', help='Path to the training config file.')
        parser.add_argument('--data', help='Dataset .npz; generated from the config seed when omitted.')
        parser.add_argument('--out', help='Model directory.')
        parser.add_argument('--workers', type=int, default=None, help='Processes for ensemble members.')

    def handle(self, *args, **options):
        try:
            config = load_train_config(options['config'])
            dataset = self._dataset(config, options['data'])
        except UncertaintyToolkitError as exc:
            raise CommandError(str(exc)) from exc

        mapping = config.as_mapping()
        name = f"{config.task.value}_{config.method.value}_{config.loss.kind.value}_seed{config.seed}"
        out = Path(options['out'] or settings.UQD_ARTIFACTS_DIR / 'models' / name)
        workers = options['workers'] or settings.UQD_WORKERS

        run = TrainingRun.objects.create(
            task=config.task.value,
            method=config.method.value,
            loss=config.loss.kind.value,
            beta=config.loss.beta,
            seed=config.seed,
            epochs=config.epochs,
            artifact_dir=str(out),
            config_digest=config_digest(mapping),
        )
        self.logger.info(f"Run {run.pk}: training {name} on {len(dataset)} points")

        try:
            result = train(config, dataset, workers=workers)
            save_models(result.model, out, mapping, result.seeds)
            write_train_config(config, out / 'config.env')
            (out / 'history.json').write_text(json.dumps(result.histories))
        except (UncertaintyToolkitError, OSError) as exc:
            run.status = TrainingRun.FAILED
            run.error = str(exc)
            run.finished_at = timezone.now()
            run.save()
            self.logger.error(f"Run {run.pk} failed: {exc}")
            raise CommandError(str(exc)) from exc

        run.status = TrainingRun.COMPLETED
        run.final_loss = result.final_loss
        run.finished_at = timezone.now()
        run.save()
        self.stdout.write(self.style.SUCCESS(f"Run {run.pk}: saved {name} to {out} (final loss {run.final_loss:.5f})"))

    @staticmethod
    def _dataset(config, path):
        if path:
            return load_dataset(path)
        if config.task is Task.REGRESSION:
            return gen_toy_regression(config.seed)
        return gen_soft_label_classification(CLASSIFICATION_TRAIN_POINTS, config.seed)
