import numpy as np

from autodiff.tensor import Tensor

_MASK64 = (1 << 64) - 1


class RngStream:
    """
    Counter-based random stream keyed by ``(seed, stream_id)``.

    Draws come from numpy's Philox generator whose 128-bit key is derived from
    the pair, so the sequence depends only on the key and on how many values
    were drawn before. Streams are owned by one worker at a time; hand a
    ``derive``-d child to each parallel task instead of sharing one.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,)).generate_state(2, np.uint64)
        self._bit_generator = np.random.Philox(key=key)
        self.generator = np.random.Generator(self._bit_generator)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, counter={self.counter})"

    @property
    def counter(self):
        words = self._bit_generator.state['state']['counter']
        return int(words[0]) | (int(words[1]) << 64)

    def derive(self, index):
        """Child stream for sub-task ``index`` (pass, member, trial, ...)."""
        mixed = np.random.SeedSequence(self.stream_id, spawn_key=(int(index),)).generate_state(1, np.uint64)[0]
        return RngStream(self.seed, int(mixed))

    def normal(self, shape):
        return self.generator.standard_normal(shape)

    def uniform(self, low, high, shape):
        return self.generator.uniform(low, high, shape)

    def bernoulli(self, keep_probability, shape):
        return self.generator.random(shape) < keep_probability

    def signs(self, shape):
        return np.where(self.generator.random(shape) < 0.5, -1.0, 1.0)

    def permutation(self, n):
        return self.generator.permutation(n)

    def integers(self, high, shape=None):
        return self.generator.integers(0, high, size=shape)

    def multinomial(self, trials, probabilities):
        return self.generator.multinomial(trials, probabilities)


def gaussian_noise(shape, rng):
    """Standard-normal draws; the result never requires gradients."""
    return Tensor(rng.normal(shape), requires_grad=False)
