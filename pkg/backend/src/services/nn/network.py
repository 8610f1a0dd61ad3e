"""
Dense network engine: layer specs, parameters, forward pass and reverse-mode gradients.

Hidden layers compute LayerNorm(ReLU(W h + b)) (layer norm optional); the output layer is
linear. Gaussian networks emit, for each head, a mean block followed by a log-variance
block of the latent width.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from typing import Any, ClassVar, Iterator

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveInt, model_validator

from backend.src.common.constants import LAYER_NORM_EPSILON
from backend.src.common.enums import OutputHead
from backend.src.common.known_exception import ShapeMismatchError

logger = logging.getLogger(__name__)


class NetworkSpec(BaseModel):
    """
    Architecture of a multilayer perceptron.

    ``layer_widths`` lists the input width, the hidden widths and the output width.
    For a Gaussian head the output width is the latent dimension of one head; the final
    linear layer then emits ``2 * gaussian_heads * latent`` values.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    layer_widths: tuple[PositiveInt, ...]
    layer_norm: bool = False
    output_head: OutputHead = OutputHead.PLAIN
    gaussian_heads: PositiveInt = 1

    @model_validator(mode="after")
    def check_layers(self) -> NetworkSpec:
        if len(self.layer_widths) < 3:
            raise ValueError("a network needs an input, at least one hidden and an output layer")
        return self

    @property
    def input_dim(self) -> int:
        return self.layer_widths[0]

    @property
    def output_dim(self) -> int:
        """Width of one output head (latent dimension for Gaussian heads)."""
        return self.layer_widths[-1]

    @property
    def hidden_count(self) -> int:
        return len(self.layer_widths) - 2

    @property
    def linear_output_dim(self) -> int:
        """Width of the final linear layer."""
        if self.output_head is OutputHead.GAUSSIAN:
            return 2 * self.gaussian_heads * self.output_dim
        return self.output_dim

    def layer_shapes(self) -> list[tuple[int, int]]:
        """(fan_out, fan_in) of every linear layer."""
        widths = list(self.layer_widths[:-1]) + [self.linear_output_dim]
        return [(widths[k + 1], widths[k]) for k in range(len(widths) - 1)]


@dataclass
class NetworkParams:
    """
    Weights (fan_out, fan_in), biases and layer-norm gains/offsets of one network.

    ``gains`` and ``offsets`` hold one entry per hidden layer when layer norm is on and
    are empty otherwise.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    gains: list[np.ndarray] = field(default_factory=list)
    offsets: list[np.ndarray] = field(default_factory=list)

    def tensors(self) -> list[np.ndarray]:
        """Parameters ordered by layer index, then weight, bias, gain, offset."""
        ordered: list[np.ndarray] = []
        for k, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            ordered.extend((weight, bias))
            if k < len(self.gains):
                ordered.extend((self.gains[k], self.offsets[k]))
        return ordered

    def with_tensors(self, tensors: list[np.ndarray]) -> NetworkParams:
        """Rebuilds a parameter set of the same layout from ``tensors()`` order."""
        stream = iter(tensors)
        weights, biases, gains, offsets = [], [], [], []
        for k in range(len(self.weights)):
            weights.append(next(stream))
            biases.append(next(stream))
            if k < len(self.gains):
                gains.append(next(stream))
                offsets.append(next(stream))
        return NetworkParams(weights, biases, gains, offsets)

    def copy(self) -> NetworkParams:
        return self.with_tensors([t.copy() for t in self.tensors()])

    def zeros_like(self) -> NetworkParams:
        return self.with_tensors([np.zeros_like(t) for t in self.tensors()])

    @property
    def count(self) -> int:
        """Flat parameter count."""
        return int(sum(t.size for t in self.tensors()))


class CompositeParams:
    """
    Mixin for dataclasses bundling several networks and free arrays.

    Subclasses list their trainable fields in ``param_fields``; every listed field is a
    ``NetworkParams`` or an ``np.ndarray``. All other fields are carried over unchanged.
    """

    param_fields: ClassVar[tuple[str, ...]] = ()

    def tensors(self) -> list[np.ndarray]:
        ordered: list[np.ndarray] = []
        for name in self.param_fields:
            value = getattr(self, name)
            if isinstance(value, NetworkParams):
                ordered.extend(value.tensors())
            else:
                ordered.append(value)
        return ordered

    def with_tensors(self, tensors: list[np.ndarray]) -> Any:
        stream: Iterator[np.ndarray] = iter(tensors)
        values: dict[str, Any] = {}
        for item in fields(self):  # type: ignore[arg-type]
            value = getattr(self, item.name)
            if item.name not in self.param_fields:
                values[item.name] = value
            elif isinstance(value, NetworkParams):
                values[item.name] = value.with_tensors(
                    [next(stream) for _ in range(len(value.tensors()))]
                )
            else:
                values[item.name] = next(stream)
        return type(self)(**values)

    def copy(self) -> Any:
        return self.with_tensors([t.copy() for t in self.tensors()])

    def zeros_like(self) -> Any:
        return self.with_tensors([np.zeros_like(t) for t in self.tensors()])


def init_params(
    spec: NetworkSpec, rng: np.random.Generator, output_scale: float = 1.0
) -> NetworkParams:
    """
    Seeded fan-in uniform initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).

    Layer-norm gains start at 1 and offsets at 0. ``output_scale`` multiplies the final
    layer, which keeps initial policies close to their bias.
    """
    weights, biases = [], []
    shapes = spec.layer_shapes()
    for k, (fan_out, fan_in) in enumerate(shapes):
        bound = 1.0 / np.sqrt(fan_in)
        weight = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        bias = rng.uniform(-bound, bound, size=fan_out)
        if k == len(shapes) - 1:
            weight *= output_scale
            bias *= output_scale
        weights.append(weight)
        biases.append(bias)

    gains, offsets = [], []
    if spec.layer_norm:
        for width in spec.layer_widths[1:-1]:
            gains.append(np.ones(width))
            offsets.append(np.zeros(width))
    return NetworkParams(weights, biases, gains, offsets)


def flatten(params: NetworkParams | CompositeParams) -> np.ndarray:
    """Concatenates all parameters in ``tensors()`` order, each row-major."""
    return np.concatenate([t.ravel() for t in params.tensors()])


def unflatten(template: Any, vector: np.ndarray) -> Any:
    """
    Inverse of ``flatten`` against a template with the target layout.

    Raises:
        ShapeMismatchError: If the vector length does not match the template.
    """
    shapes = [t.shape for t in template.tensors()]
    total = int(sum(int(np.prod(s)) for s in shapes))
    if vector.size != total:
        raise ShapeMismatchError("unflatten parameters", total, vector.size)
    tensors, offset = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        tensors.append(np.asarray(vector[offset : offset + size], dtype=np.float64).reshape(shape))
        offset += size
    return template.with_tensors(tensors)


@dataclass
class LayerTrace:
    """Intermediate values of one hidden layer."""

    layer_input: np.ndarray
    pre_activation: np.ndarray
    normalized: np.ndarray | None = None
    inv_std: np.ndarray | None = None


@dataclass
class GradientRecord:
    """
    Everything a backward pass needs from one forward evaluation.

    The record keeps a reference to the parameters it was produced with.
    """

    spec: NetworkSpec
    params: NetworkParams
    inputs: np.ndarray
    hidden: list[LayerTrace]
    final_input: np.ndarray
    output: np.ndarray
    squeeze: bool

    def replay(self) -> np.ndarray:
        """Re-runs the forward pass; the result is bit-identical to ``output``."""
        output, _ = mlp_forward(self.params, self.spec, self.inputs)
        return output[0] if self.squeeze else output


def _layer_norm(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = values.mean(axis=-1, keepdims=True)
    var = values.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LAYER_NORM_EPSILON)
    return (values - mean) * inv_std, inv_std


def mlp_forward(
    params: NetworkParams, spec: NetworkSpec, inputs: np.ndarray
) -> tuple[np.ndarray, GradientRecord]:
    """
    Forward pass over a single feature vector or a (batch, features) matrix.

    Returns:
        (output, record); the output keeps the batch layout of ``inputs``.

    Raises:
        ShapeMismatchError: If the feature width does not match the first layer.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    squeeze = inputs.ndim == 1
    batch = inputs[None, :] if squeeze else inputs
    if batch.ndim != 2 or batch.shape[1] != spec.input_dim:
        raise ShapeMismatchError("mlp forward", (None, spec.input_dim), inputs.shape)

    hidden: list[LayerTrace] = []
    activation = batch
    for k in range(spec.hidden_count):
        pre = activation @ params.weights[k].T + params.biases[k]
        relu = np.maximum(pre, 0.0)
        trace = LayerTrace(layer_input=activation, pre_activation=pre)
        if spec.layer_norm:
            normalized, inv_std = _layer_norm(relu)
            trace.normalized = normalized
            trace.inv_std = inv_std
            activation = normalized * params.gains[k] + params.offsets[k]
        else:
            activation = relu
        hidden.append(trace)

    output = activation @ params.weights[-1].T + params.biases[-1]
    record = GradientRecord(
        spec=spec,
        params=params,
        inputs=batch,
        hidden=hidden,
        final_input=activation,
        output=output,
        squeeze=squeeze,
    )
    return (output[0] if squeeze else output), record


def backward(
    record: GradientRecord, output_gradient: np.ndarray
) -> tuple[NetworkParams, np.ndarray]:
    """
    Reverse-mode gradients of a recorded forward pass.

    Args:
        record: Record returned by ``mlp_forward``.
        output_gradient: d(loss)/d(output), same layout as the forward output.

    Returns:
        (parameter gradients, input gradient)

    Raises:
        ShapeMismatchError: If the seed gradient does not match the recorded output.
    """
    grad = np.asarray(output_gradient, dtype=np.float64)
    if record.squeeze:
        grad = grad[None, :]
    if grad.shape != record.output.shape:
        raise ShapeMismatchError("mlp backward", record.output.shape, grad.shape)

    params = record.params
    weight_grads: list[np.ndarray] = [np.empty(0)] * len(params.weights)
    bias_grads: list[np.ndarray] = [np.empty(0)] * len(params.biases)
    gain_grads: list[np.ndarray] = [np.empty(0)] * len(params.gains)
    offset_grads: list[np.ndarray] = [np.empty(0)] * len(params.offsets)

    weight_grads[-1] = grad.T @ record.final_input
    bias_grads[-1] = grad.sum(axis=0)
    grad = grad @ params.weights[-1]

    for k in reversed(range(len(record.hidden))):
        trace = record.hidden[k]
        if record.spec.layer_norm:
            gain_grads[k] = (grad * trace.normalized).sum(axis=0)
            offset_grads[k] = grad.sum(axis=0)
            d_norm = grad * params.gains[k]
            grad = trace.inv_std * (
                d_norm
                - d_norm.mean(axis=-1, keepdims=True)
                - trace.normalized
                * (d_norm * trace.normalized).mean(axis=-1, keepdims=True)
            )
        grad = grad * (trace.pre_activation > 0.0)
        weight_grads[k] = grad.T @ trace.layer_input
        bias_grads[k] = grad.sum(axis=0)
        grad = grad @ params.weights[k]

    input_grad = grad[0] if record.squeeze else grad
    return NetworkParams(weight_grads, bias_grads, gain_grads, offset_grads), input_grad
