import numpy as np

from autodiff.tape import GradientTape, backward


def numerical_gradient(fn, array, h=1e-5):
    """Central finite differences of the scalar ``fn(array)`` w.r.t. every entry of ``array``."""
    array = np.array(array, dtype=np.float64)
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + h
        upper = fn(array.copy())
        array[index] = original - h
        lower = fn(array.copy())
        array[index] = original
        grad[index] = (upper - lower) / (2.0 * h)
    return grad


def autodiff_gradient(build_loss, leaves):
    """Run ``build_loss(*leaves)`` under a fresh tape and return the gradient of each leaf."""
    with GradientTape():
        loss = build_loss(*leaves)
    grads = backward(loss)
    return [grads[leaf].data if leaf in grads else np.zeros_like(leaf.data) for leaf in leaves]


def relative_error(actual, expected, floor=1e-6):
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(actual), np.abs(expected)), floor)
    return float(np.max(np.abs(actual - expected) / scale))
