import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from autodiff.exceptions import UncertaintyToolkitError
from autodiff.rng import RngStream
from calibration.sweep import (
    DEFAULT_SAMPLE_GRID,
    DEFAULT_TRIALS,
    PRESETS,
    REFERENCE_SAMPLES,
    LogitDistSpec,
    binary_probability_grid,
    emit_grid_csv,
    emit_sweep_csv,
    sweep,
)


class Command(BaseCommand):
    help = 'Measure sampling-softmax error and class flips against the number of samples N.'
    logger = logging.getLogger(__name__)

    def add_arguments(self, parser):
        parser.add_argument('--preset', choices=sorted(PRESETS), help='Named logit distribution.')
        parser.add_argument('--means', type=float, nargs='+', help='Logit means, one per class.')
        parser.add_argument('--stds', type=float, nargs='+', help='Logit standard deviations, one per class.')
        parser.add_argument('--samples', type=int, nargs='+', default=list(DEFAULT_SAMPLE_GRID),
                            help='Sample counts N to sweep.')
        parser.add_argument('--trials', type=int, default=DEFAULT_TRIALS)
        parser.add_argument('--seed', type=int, default=None)
        parser.add_argument('--grid', action='store_true',
                            help='Emit the two-class probability grid instead of a sweep.')
        parser.add_argument('--grid-samples', type=int, default=REFERENCE_SAMPLES)
        parser.add_argument('--out', help='Output CSV path.')

    def handle(self, *args, **options):
        seed = options['seed'] if options['seed'] is not None else (settings.UQD_SEED or 0)
        rng = RngStream(seed)

        try:
            if options['grid']:
                out = options['out'] or settings.UQD_ARTIFACTS_DIR / 'sampling_softmax_grid.csv'
                path = emit_grid_csv(binary_probability_grid(options['grid_samples'], rng), out)
                self.stdout.write(self.style.SUCCESS(f"Wrote probability grid to {path}"))
                return

            spec = self._spec(options)
            rows = sweep(spec, options['samples'], options['trials'], rng)
            out = options['out'] or settings.UQD_ARTIFACTS_DIR / 'sampling_softmax_sweep.csv'
            path = emit_sweep_csv(rows, out)
        except UncertaintyToolkitError as exc:
            self.logger.error(f"Sweep failed: {exc}")
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(f"Cannot write output: {exc}") from exc

        self.logger.info(f"Sweep of {spec} finished with seed {seed}")
        self.stdout.write(self.style.SUCCESS(f"Wrote {len(rows)} rows to {path}"))

    @staticmethod
    def _spec(options):
        if options['preset']:
            if options['means'] or options['stds']:
                raise CommandError("Use either --preset or --means/--stds, not both")
            return PRESETS[options['preset']]
        if not options['means'] or not options['stds']:
            raise CommandError("Give --preset or both --means and --stds")
        return LogitDistSpec(tuple(options['means']), tuple(options['stds']))
