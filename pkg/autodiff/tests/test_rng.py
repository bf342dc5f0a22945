import numpy as np
from django.test import SimpleTestCase

from autodiff.rng import RngStream, gaussian_noise


class RngStreamTests(SimpleTestCase):

    def test_same_key_reproduces_draws(self):
        first = gaussian_noise((4, 5), RngStream(42, 3))
        second = gaussian_noise((4, 5), RngStream(42, 3))
        np.testing.assert_array_equal(first.data, second.data)
        self.assertFalse(first.requires_grad)

    def test_distinct_streams_differ(self):
        first = gaussian_noise((16,), RngStream(42, 0))
        second = gaussian_noise((16,), RngStream(42, 1))
        self.assertTrue(np.any(first.data != second.data))

    def test_derived_streams_are_reproducible_and_distinct(self):
        root = RngStream(5)
        np.testing.assert_array_equal(root.derive(2).normal(8), RngStream(5).derive(2).normal(8))
        self.assertTrue(np.any(root.derive(1).normal(8) != root.derive(2).normal(8)))

    def test_draw_sequence_advances(self):
        rng = RngStream(9)
        first = rng.normal(4)
        second = rng.normal(4)
        self.assertTrue(np.any(first != second))
        self.assertGreater(rng.counter, 0)

    def test_standard_normal_moments(self):
        draws = gaussian_noise((100_000,), RngStream(2024)).data
        self.assertLess(abs(draws.mean()), 0.02)
        self.assertLess(abs(draws.std() - 1.0), 0.02)

    def test_signs_are_plus_or_minus_one(self):
        signs = RngStream(1).signs((1000,))
        self.assertTrue(set(np.unique(signs)) <= {-1.0, 1.0})
