import logging
import threading

import numpy as np

from autodiff.exceptions import ContractError, TapeStateError

logger = logging.getLogger(__name__)

_local = threading.local()


def _tape_stack():
    stack = getattr(_local, 'stack', None)
    if stack is None:
        stack = _local.stack = []
    return stack


def active_tape():
    """Innermost tape opened on the current thread, or None."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Node:
    """One recorded primitive: its inputs, its output and the rule mapping the output gradient back."""

    __slots__ = ('inputs', 'output', 'backward', 'name', 'tape')

    def __init__(self, name, inputs, output, backward, tape):
        self.name = name
        self.inputs = inputs
        self.output = output
        self.backward = backward
        self.tape = tape

    def __repr__(self):
        return f"<Node {self.name} -> {self.output.shape}>"


class GradientTape:
    """
    Records primitive operations performed inside a ``with`` block.

    A tape is single use: computing a gradient consumes it. Tapes are confined
    to the thread that opened them.
    """

    def __init__(self):
        self.nodes = []
        self.consumed = False

    def __enter__(self):
        if self.consumed:
            raise TapeStateError("Cannot reopen a consumed gradient tape")
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False

    def __len__(self):
        return len(self.nodes)

    def record(self, name, inputs, output, backward):
        if self.consumed:
            raise TapeStateError("Gradient tape was already consumed")
        node = Node(name, inputs, output, backward, self)
        self.nodes.append(node)
        output.tape_node = node
        return node

    def gradient(self, loss):
        """Replay the tape in reverse and return ``{leaf: gradient}`` for every grad-required leaf reaching ``loss``."""
        from autodiff.tensor import Tensor

        if self.consumed:
            raise TapeStateError("Gradient tape was already consumed")
        if loss.data.size != 1:
            raise ContractError(f"Loss must be a scalar, got shape {loss.shape}")

        grads = {id(loss): np.ones_like(loss.data)}
        leaves = {}
        if loss.requires_grad and loss.tape_node is None:
            leaves[id(loss)] = loss

        for node in reversed(self.nodes):
            grad_out = grads.pop(id(node.output), None)
            if grad_out is None:
                continue
            for tensor, grad in zip(node.inputs, node.backward(grad_out)):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                grads[key] = grads[key] + grad if key in grads else grad
                if tensor.tape_node is None:
                    leaves[key] = tensor

        self.consumed = True
        self.nodes = []
        return {tensor: Tensor(grads[key]) for key, tensor in leaves.items()}


def backward(loss):
    """Gradients of a scalar ``loss`` with respect to every grad-required leaf it depends on."""
    if loss.data.size != 1:
        raise ContractError(f"Loss must be a scalar, got shape {loss.shape}")

    if loss.tape_node is not None:
        tape = loss.tape_node.tape
    else:
        tape = active_tape()
    if tape is None:
        raise TapeStateError("No active gradient tape recorded this loss")
    return tape.gradient(loss)
