import math

import numpy as np
from django.test import SimpleTestCase

from autodiff import tensor as T
from autodiff.exceptions import ContractError, DimensionError, DomainError, TapeStateError
from autodiff.rng import RngStream
from autodiff.tape import GradientTape, backward
from autodiff.testing import autodiff_gradient, numerical_gradient, relative_error


class PrimitiveForwardTests(SimpleTestCase):

    def test_softmax_of_equal_logits_is_uniform(self):
        np.testing.assert_allclose(T.softmax(T.Tensor([0.0, 0.0])).data, [0.5, 0.5])

    def test_softmax_survives_large_logits(self):
        out = T.softmax(T.Tensor([[1000.0, 900.0], [50.0, 100.0]])).data
        self.assertTrue(np.all(np.isfinite(out)))
        np.testing.assert_allclose(out.sum(axis=-1), [1.0, 1.0])

    def test_softplus_at_zero_is_ln2(self):
        self.assertAlmostEqual(T.softplus(T.Tensor(0.0)).item(), math.log(2.0), places=12)

    def test_identity_matmul(self):
        a = np.arange(12.0).reshape(3, 4)
        np.testing.assert_array_equal(T.matmul(T.Tensor(np.eye(3)), T.Tensor(a)).data, a)

    def test_shape_mismatch_raises_dimension_error(self):
        with self.assertRaises(DimensionError):
            T.add(T.Tensor(np.ones(3)), T.Tensor(np.ones(4)))
        with self.assertRaises(DimensionError):
            T.matmul(T.Tensor(np.ones((2, 3))), T.Tensor(np.ones((2, 3))))

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            T.log(T.Tensor([1.0, 0.0]))
        with self.assertRaises(DomainError):
            T.div(T.Tensor([1.0]), T.Tensor([0.0]))

    def test_operations_outside_a_tape_do_not_require_grad(self):
        w = T.parameter([1.0, 2.0])
        out = w * 3.0
        self.assertFalse(out.requires_grad)
        self.assertIsNone(out.tape_node)


class BackwardTests(SimpleTestCase):

    def test_square_gradient(self):
        x = T.parameter(3.0)
        with GradientTape():
            loss = T.square(x)
        self.assertAlmostEqual(backward(loss)[x].item(), 6.0)

    def test_softplus_gradient_at_zero(self):
        x = T.parameter(0.0)
        with GradientTape():
            loss = T.softplus(x)
        self.assertAlmostEqual(backward(loss)[x].item(), 0.5)

    def test_non_scalar_loss_is_rejected(self):
        x = T.parameter([1.0, 2.0])
        with GradientTape():
            out = x * 2.0
        with self.assertRaises(ContractError):
            backward(out)

    def test_loss_without_tape_raises_state_error(self):
        loss = T.Tensor(1.0, requires_grad=True) * 2.0
        with self.assertRaises(TapeStateError):
            backward(T.sum(loss))

    def test_tape_is_single_use(self):
        x = T.parameter(2.0)
        with GradientTape():
            loss = T.square(x)
        backward(loss)
        with self.assertRaises(TapeStateError):
            backward(loss)

    def test_constants_receive_no_gradient_slot(self):
        x = T.parameter([1.0, 2.0])
        c = T.Tensor([3.0, 4.0])
        with GradientTape():
            loss = T.sum(x * c)
        grads = backward(loss)
        self.assertIn(x, grads)
        self.assertNotIn(c, grads)
        np.testing.assert_allclose(grads[x].data, [3.0, 4.0])

    def test_stop_gradient_blocks_one_factor(self):
        t = T.parameter(2.0)
        with GradientTape():
            loss = T.stop_gradient(t) * t
        self.assertEqual(T.stop_gradient(t).item(), t.item())
        self.assertAlmostEqual(backward(loss)[t].item(), 2.0)

    def test_stop_gradient_alone_gives_no_gradient(self):
        t = T.parameter([1.0, -2.0])
        with GradientTape():
            loss = T.sum(T.stop_gradient(t))
        self.assertNotIn(t, backward(loss))

    def test_three_layer_composite_matches_finite_differences(self):
        rng = RngStream(7)
        x = rng.normal((5, 4))
        w1, w2, w3 = rng.normal((4, 6)), rng.normal((6, 6)), rng.normal((6, 3))

        def build(a, b, c):
            h = T.relu(T.matmul(T.Tensor(x), a))
            h = T.softplus(T.matmul(h, b))
            return T.mean(T.square(T.matmul(h, c)))

        leaves = [T.parameter(w) for w in (w1, w2, w3)]
        analytic = autodiff_gradient(build, leaves)
        arrays = [w1, w2, w3]
        for index, grad in enumerate(analytic):
            def value(array, index=index):
                args = [T.Tensor(a) for a in arrays]
                args[index] = T.Tensor(array)
                return build(*args).item()

            numeric = numerical_gradient(value, arrays[index])
            self.assertLess(relative_error(grad, numeric), 1e-4)

    def test_every_primitive_matches_finite_differences(self):
        rng = RngStream(11)
        unary = {
            'exp': T.exp,
            'log': T.log,
            'square': T.square,
            'sqrt': T.sqrt,
            'relu': T.relu,
            'softplus': T.softplus,
            'softmax': T.softmax,
            'neg': T.neg,
            'transpose': T.transpose,
        }
        weights = rng.normal((3, 4))

        for trial in range(100):
            base = rng.uniform(0.2, 2.0, (3, 4))
            other = rng.uniform(0.5, 1.5, (3, 4))
            name = list(unary)[trial % len(unary)]
            fn = unary[name]
            cases = {
                name: lambda a: T.sum(T.mul(fn(a), T.Tensor(weights if fn is not T.transpose else weights.T))),
                'add': lambda a: T.sum(T.square(T.add(a, T.Tensor(other)))),
                'sub': lambda a: T.sum(T.square(T.sub(T.Tensor(other), a))),
                'mul': lambda a: T.sum(T.mul(a, T.mul(a, T.Tensor(other)))),
                'div': lambda a: T.sum(T.div(T.Tensor(other), a)),
                'matmul': lambda a: T.sum(T.square(T.matmul(a, T.Tensor(other.T)))),
                'mean': lambda a: T.sum(T.mean(T.square(a), axis=0)),
                'sum_axis': lambda a: T.sum(T.square(T.sum(a, axis=1))),
                'clip_min': lambda a: T.sum(T.square(T.clip_min(a, 1.0))),
            }
            for label, build in cases.items():
                leaf = T.parameter(base)
                (analytic,) = autodiff_gradient(build, [leaf])
                numeric = numerical_gradient(lambda array: build(T.Tensor(array)).item(), base)
                self.assertLess(relative_error(analytic, numeric), 1e-4, msg=label)

    def test_broadcast_gradient_is_reduced_to_operand_shape(self):
        bias = T.parameter([1.0, 2.0, 3.0])
        x = T.Tensor(np.ones((4, 3)))
        with GradientTape():
            loss = T.sum(x + bias)
        np.testing.assert_allclose(backward(loss)[bias].data, [4.0, 4.0, 4.0])

    def test_fixed_seed_runs_are_bit_identical(self):
        def run():
            rng = RngStream(3)
            w = T.parameter(rng.normal((4, 2)))
            x = T.Tensor(rng.normal((8, 4)))
            with GradientTape():
                loss = T.mean(T.square(T.softmax(T.matmul(x, w))))
            return loss.item(), backward(loss)[w].data

        first, second = run(), run()
        self.assertEqual(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])
