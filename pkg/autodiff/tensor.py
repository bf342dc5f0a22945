import numpy as np
from scipy import special

from autodiff.exceptions import DimensionError, DomainError
from autodiff.tape import active_tape


class Tensor:
    """Dense float64 array that can take part in a gradient tape."""

    def __init__(self, data, requires_grad=False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.tape_node = None

    @classmethod
    def _wrap(cls, array, requires_grad=False):
        tensor = cls.__new__(cls)
        tensor.data = np.asarray(array, dtype=np.float64)
        tensor.requires_grad = requires_grad
        tensor.tape_node = None
        return tensor

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self.data.item()

    def __repr__(self):
        flag = ', requires_grad=True' if self.requires_grad else ''
        return f"Tensor({np.array2string(self.data, precision=4)}{flag})"

    def __len__(self):
        return len(self.data)

    def __neg__(self):
        return neg(self)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(value):
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data):
    """Leaf tensor that receives gradients."""
    return Tensor(data, requires_grad=True)


def _result(name, array, inputs, backward):
    tape = active_tape()
    requires_grad = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(array, requires_grad=requires_grad)
    if requires_grad:
        tape.record(name, inputs, out, backward)
    return out


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _conform(name, a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{name}: shapes {a.shape} and {b.shape} do not conform") from None


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _conform('add', a, b)
    return _result(
        'add', a.data + b.data, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _conform('sub', a, b)
    return _result(
        'sub', a.data - b.data, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _conform('mul', a, b)
    return _result(
        'mul', a.data * b.data, (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _conform('div', a, b)
    if np.any(b.data == 0):
        raise DomainError("div: division by zero")
    return _result(
        'div', a.data / b.data, (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / np.square(b.data), b.shape),
        ),
    )


def neg(a):
    a = as_tensor(a)
    return _result('neg', -a.data, (a,), lambda g: (-g,))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} are not matmul-compatible")
    return _result(
        'matmul', a.data @ b.data, (a, b),
        lambda g: (g @ b.data.T, a.data.T @ g),
    )


def transpose(a):
    a = as_tensor(a)
    if a.ndim != 2:
        raise DimensionError(f"transpose: expected a matrix, got shape {a.shape}")
    return _result('transpose', a.data.T, (a,), lambda g: (g.T,))


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.data)
    return _result('exp', out, (a,), lambda g: (g * out,))


def log(a):
    a = as_tensor(a)
    if np.any(a.data <= 0):
        raise DomainError("log: argument must be strictly positive")
    return _result('log', np.log(a.data), (a,), lambda g: (g / a.data,))


def square(a):
    a = as_tensor(a)
    return _result('square', np.square(a.data), (a,), lambda g: (2.0 * g * a.data,))


def sqrt(a):
    a = as_tensor(a)
    if np.any(a.data < 0):
        raise DomainError("sqrt: argument must be non-negative")
    out = np.sqrt(a.data)

    def backward(g):
        # zero entries get a zero gradient instead of an infinite one
        safe = np.where(out > 0, out, 1.0)
        return (np.where(out > 0, 0.5 * g / safe, 0.0),)

    return _result('sqrt', out, (a,), backward)


def sum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _result('sum', out, (a,), backward)


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size // max(out.size, 1)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return _result('mean', out, (a,), backward)


def relu(a):
    a = as_tensor(a)
    active = a.data > 0
    return _result('relu', np.where(active, a.data, 0.0), (a,), lambda g: (g * active,))


def softplus(a):
    a = as_tensor(a)
    return _result(
        'softplus', np.logaddexp(0.0, a.data), (a,),
        lambda g: (g * special.expit(a.data),),
    )


def softmax(a):
    """Softmax over the last axis."""
    a = as_tensor(a)
    out = special.softmax(a.data, axis=-1)
    return _result(
        'softmax', out, (a,),
        lambda g: (out * (g - np.sum(g * out, axis=-1, keepdims=True)),),
    )


def clip_min(a, floor):
    a = as_tensor(a)
    kept = a.data > floor
    return _result('clip_min', np.where(kept, a.data, floor), (a,), lambda g: (g * kept,))


def stop_gradient(a):
    """Identity in the forward direction, a constant to the tape."""
    a = as_tensor(a)
    return Tensor(a.data, requires_grad=False)


def softplus_inverse(value):
    value = np.asarray(value, dtype=np.float64)
    return value + np.log(-np.expm1(-value))
