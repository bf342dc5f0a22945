"""
Flat binary parameter files.

Layout (all integers and floats little-endian)::

    b"UQD1"  uint32 layer_count
    per layer:
        uint8 kind  uint8 activation  float64 drop_probability  uint8 array_count
        per array: uint8 ndim  uint32 * ndim extents  float64 * prod(extents)
"""
import struct
from pathlib import Path

import numpy as np

from autodiff import tensor as T
from autodiff.exceptions import SerializationError
from uncertainty.layers import (
    Activation,
    DenseLayer,
    DropConnectDense,
    FlipoutDense,
    GaussianLogitHead,
    GaussianRegressionHead,
    McDropout,
)
from uncertainty.networks import Network, Task, UqMethod

MAGIC = b'UQD1'

KIND_TAGS = {
    'dense': 1,
    'dropout': 2,
    'dropconnect': 3,
    'flipout': 4,
    'regression_head': 5,
    'logit_head': 6,
}
ACTIVATION_TAGS = {Activation.LINEAR: 0, Activation.RELU: 1, Activation.SOFTPLUS: 2}

_TAG_KINDS = {tag: kind for kind, tag in KIND_TAGS.items()}
_TAG_ACTIVATIONS = {tag: activation for activation, tag in ACTIVATION_TAGS.items()}


def _layer_record(layer):
    activation = getattr(layer, 'activation', Activation.LINEAR)
    drop_probability = getattr(layer, 'drop_probability', 0.0)
    if isinstance(layer, GaussianRegressionHead):
        arrays = [layer.mean_head.weights, layer.mean_head.bias, layer.std_head.weights, layer.std_head.bias]
    elif isinstance(layer, GaussianLogitHead):
        arrays = [layer.mean_layer.weights, layer.mean_layer.bias, layer.var_layer.weights, layer.var_layer.bias]
    else:
        arrays = [p for _, p in layer.parameters()]

    chunks = [struct.pack('<BBdB', KIND_TAGS[layer.kind], ACTIVATION_TAGS[activation], drop_probability, len(arrays))]
    for array in arrays:
        data = array.data
        chunks.append(struct.pack(f'<B{data.ndim}I', data.ndim, *data.shape))
        chunks.append(data.astype('<f8').tobytes())
    return b''.join(chunks)


def dumps_network(network):
    layers = network.layers()
    return MAGIC + struct.pack('<I', len(layers)) + b''.join(_layer_record(layer) for layer in layers)


def save_network(network, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_network(network))
    return path


class _Reader:
    def __init__(self, payload):
        self.payload = payload
        self.offset = 0

    def unpack(self, fmt):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.payload):
            raise SerializationError("Model file is truncated")
        values = struct.unpack_from(fmt, self.payload, self.offset)
        self.offset += size
        return values

    def array(self):
        (ndim,) = self.unpack('<B')
        shape = self.unpack(f'<{ndim}I')
        count = int(np.prod(shape, dtype=np.int64))
        end = self.offset + 8 * count
        if end > len(self.payload):
            raise SerializationError("Model file is truncated")
        data = np.frombuffer(self.payload, dtype='<f8', count=count, offset=self.offset).reshape(shape)
        self.offset = end
        return T.parameter(data.astype(np.float64))


def _build_layer(kind, activation, drop_probability, arrays):
    if kind == 'dense':
        return DenseLayer(*arrays, activation=activation)
    if kind == 'dropout':
        return McDropout(drop_probability)
    if kind == 'dropconnect':
        return DropConnectDense(*arrays, activation=activation, drop_probability=drop_probability)
    if kind == 'flipout':
        return FlipoutDense(*arrays, activation=activation)
    if kind == 'regression_head':
        return GaussianRegressionHead(
            DenseLayer(arrays[0], arrays[1], Activation.LINEAR),
            DenseLayer(arrays[2], arrays[3], Activation.SOFTPLUS),
        )
    return GaussianLogitHead(
        DenseLayer(arrays[0], arrays[1], Activation.LINEAR),
        DenseLayer(arrays[2], arrays[3], Activation.SOFTPLUS),
    )


def _infer_method(trunk):
    kinds = {layer.kind for layer in trunk}
    if 'dropout' in kinds:
        return UqMethod.MC_DROPOUT
    if 'dropconnect' in kinds:
        return UqMethod.MC_DROPCONNECT
    if 'flipout' in kinds:
        return UqMethod.FLIPOUT
    return UqMethod.BASELINE


def loads_network(payload, method=None):
    if payload[:4] != MAGIC:
        raise SerializationError("Not a UQD1 model file")
    reader = _Reader(payload)
    reader.offset = 4
    (layer_count,) = reader.unpack('<I')
    layers = []
    for _ in range(layer_count):
        kind_tag, activation_tag, drop_probability, array_count = reader.unpack('<BBdB')
        if kind_tag not in _TAG_KINDS or activation_tag not in _TAG_ACTIVATIONS:
            raise SerializationError(f"Unknown layer tag {kind_tag}/{activation_tag}")
        arrays = [reader.array() for _ in range(array_count)]
        layers.append(_build_layer(_TAG_KINDS[kind_tag], _TAG_ACTIVATIONS[activation_tag], drop_probability, arrays))

    if not layers or layers[-1].kind not in ('regression_head', 'logit_head'):
        raise SerializationError("Model file does not end with an output head")
    trunk, head = layers[:-1], layers[-1]
    task = Task.REGRESSION if head.kind == 'regression_head' else Task.CLASSIFICATION
    return Network(task, method or _infer_method(trunk), trunk, head)


def load_network(path, method=None):
    return loads_network(Path(path).read_bytes(), method=method)
