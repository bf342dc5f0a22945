import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase
from scipy import special, stats

from autodiff.exceptions import ConfigurationError, ContractError
from autodiff.rng import RngStream
from calibration.sweep import (
    DEFAULT_SAMPLE_GRID,
    PRESETS,
    LogitDistSpec,
    SweepRow,
    binary_probability_grid,
    emit_sweep_csv,
    read_sweep_csv,
    reference_probs,
    sweep,
)

EXPECTED_GRID = {
    ((50.0, 10.0), (0.0, 1.0)): 1.0,
    ((50.0, 10.0), (0.0, 50.0)): 0.79,
    ((50.0, 10.0), (0.0, 100.0)): 0.66,
    ((50.0, 50.0), (0.0, 1.0)): 0.5,
    ((50.0, 50.0), (0.0, 50.0)): 0.5,
    ((50.0, 50.0), (0.0, 100.0)): 0.5,
    ((50.0, 100.0), (0.0, 1.0)): 0.0,
    ((50.0, 100.0), (0.0, 50.0)): 0.16,
    ((50.0, 100.0), (0.0, 100.0)): 0.31,
}


class LogitDistSpecTests(SimpleTestCase):

    def test_negative_std(self):
        with self.assertRaises(ConfigurationError):
            LogitDistSpec((0.0, 1.0), (1.0, -1.0))

    def test_length_mismatch(self):
        with self.assertRaises(ConfigurationError):
            LogitDistSpec((0.0, 1.0, 2.0), (1.0, 1.0))

    def test_variances_are_squared_stds(self):
        np.testing.assert_array_equal(PRESETS['wide'].variance_array, [100.0, 100.0])


class ReferenceTests(SimpleTestCase):

    def test_zero_stds_give_softmax(self):
        spec = LogitDistSpec((2.0, 0.0, -1.0), (0.0, 0.0, 0.0))
        np.testing.assert_array_equal(reference_probs(spec, RngStream(1)), special.softmax(spec.mean_array))

    def test_symmetric_means(self):
        p = reference_probs(LogitDistSpec((50.0, 50.0), (0.0, 50.0)), RngStream(2))
        np.testing.assert_allclose(p, [0.5, 0.5], atol=0.005)

    def test_independent_references_agree(self):
        spec = PRESETS['wide']
        first = reference_probs(spec, RngStream(3))
        second = reference_probs(spec, RngStream(4))
        self.assertLess(np.linalg.norm(first - second), 0.01)


class SweepTests(SimpleTestCase):

    def test_deterministic_spec_has_no_error(self):
        spec = LogitDistSpec((1.0, 0.0), (0.0, 0.0))
        for row in sweep(spec, (1, 10, 100), trials=20, rng=RngStream(1)):
            self.assertEqual((row.mean_error, row.std_error, row.mean_miss), (0.0, 0.0, 0.0))

    def test_rows_are_ascending_and_bounded(self):
        rows = sweep(PRESETS['wide'], (50, 1, 10, 10), trials=20, rng=RngStream(2))
        self.assertEqual([row.num_samples for row in rows], [1, 10, 50])
        for row in rows:
            self.assertGreaterEqual(row.mean_error, 0.0)
            self.assertTrue(0.0 <= row.mean_miss <= 1.0)

    def test_error_falls_with_sample_count(self):
        rows = sweep(PRESETS['wide'], DEFAULT_SAMPLE_GRID, trials=100, rng=RngStream(3))
        correlation = stats.spearmanr(np.log([r.num_samples for r in rows]), [r.mean_error for r in rows])[0]
        self.assertLess(correlation, -0.9)

    def test_hundred_samples_rarely_flip_the_class(self):
        row, = sweep(PRESETS['wide'], (100,), trials=10_000, rng=RngStream(4))
        self.assertLess(row.mean_miss, 0.005)

    def test_doubling_samples_shrinks_error_by_root_two(self):
        counts = (25, 50, 100, 200, 400, 800, 1600)
        rows = sweep(PRESETS['wide'], counts, trials=400, rng=RngStream(5))
        ratios = [a.mean_error / b.mean_error for a, b in zip(rows, rows[1:])]
        self.assertAlmostEqual(np.mean(ratios), math.sqrt(2), delta=0.25 * math.sqrt(2))

    def test_class_order_does_not_matter(self):
        spec = PRESETS['dominant']
        rng = RngStream(6)
        reference = reference_probs(spec, rng.derive(0))
        straight = sweep(spec, (20,), trials=2000, rng=rng, reference=reference)[0]
        swapped = sweep(spec.permuted((1, 0)), (20,), trials=2000, rng=RngStream(7), reference=reference[::-1])[0]
        self.assertAlmostEqual(straight.mean_error, swapped.mean_error, delta=0.1 * straight.mean_error)

    def test_same_seed_same_rows(self):
        self.assertEqual(
            sweep(PRESETS['tied'], (5, 50), trials=10, rng=RngStream(8)),
            sweep(PRESETS['tied'], (5, 50), trials=10, rng=RngStream(8)),
        )

    def test_invalid_arguments(self):
        with self.assertRaises(ConfigurationError):
            sweep(PRESETS['wide'], (10,), trials=0)
        with self.assertRaises(ConfigurationError):
            sweep(PRESETS['wide'], (0, 10), trials=1)


class BinaryGridTests(SimpleTestCase):

    def test_grid_matches_known_probabilities(self):
        records = binary_probability_grid(rng=RngStream(9))
        self.assertEqual(len(records), 9)
        for record in records:
            key = ((record['mean_0'], record['mean_1']), (record['std_0'], record['std_1']))
            self.assertAlmostEqual(record['p_0'], EXPECTED_GRID[key], delta=0.02)
            self.assertAlmostEqual(record['p_0'] + record['p_1'], 1.0, places=12)


class SweepCsvTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.path = Path(self.tmp.name) / 'sweep.csv'

    def test_single_row_file(self):
        emit_sweep_csv([SweepRow(10, 0.123456789, 0.01, 0.0)], self.path)
        lines = self.path.read_text().splitlines()
        self.assertEqual(len(lines), 2)
        self.assertEqual(lines[0], 'num_samples;mean_error;std_error;mean_miss')

    def test_values_survive_a_reread(self):
        rows = [SweepRow(1, 0.3141592653589793, 0.2, 0.25), SweepRow(1000, 1.23456789e-5, 4e-6, 0.0)]
        emit_sweep_csv(rows, self.path)
        for written, read in zip(rows, read_sweep_csv(self.path)):
            self.assertEqual(read.num_samples, written.num_samples)
            for field in ('mean_error', 'std_error', 'mean_miss'):
                self.assertAlmostEqual(getattr(read, field), getattr(written, field),
                                       delta=1e-9 * max(1.0, abs(getattr(written, field))))

    def test_empty_rows(self):
        with self.assertRaises(ContractError):
            emit_sweep_csv([], self.path)


class SweepCommandTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_preset_sweep(self):
        out = self.root / 'wide.csv'
        call_command('ssoftmax_sweep', preset='wide', samples=[1, 10], trials=5, seed=1, out=str(out), stdout=StringIO())
        self.assertEqual(len(out.read_text().splitlines()), 3)

    def test_explicit_distribution(self):
        out = self.root / 'explicit.csv'
        call_command('ssoftmax_sweep', '--means', '1', '0', '0', '--stds', '1', '1', '1',
                     '--samples', '5', '--trials', '3', '--out', str(out))
        self.assertTrue(out.read_text().startswith('num_samples;'))

    def test_grid_mode(self):
        out = self.root / 'grid.csv'
        call_command('ssoftmax_sweep', grid=True, grid_samples=1000, out=str(out))
        self.assertEqual(len(out.read_text().splitlines()), 10)

    def test_missing_distribution(self):
        with self.assertRaises(CommandError):
            call_command('ssoftmax_sweep', samples=[1], trials=1, out=str(self.root / 'x.csv'))

    def test_invalid_distribution(self):
        with self.assertRaises(CommandError):
            call_command('ssoftmax_sweep', '--means', '1', '0', '--stds', '1', '-1', '--out', str(self.root / 'x.csv'))
