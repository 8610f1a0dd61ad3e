"""
Adam optimizer and gradient clipping over parameter containers.

A parameter container is any object exposing ``tensors()`` and ``with_tensors(list)``
(``NetworkParams`` and ``CompositeParams`` subclasses).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Protocol, TypeVar

import numpy as np

from backend.src.common.known_exception import NonFiniteError, ShapeMismatchError

logger = logging.getLogger(__name__)


class ParameterSet(Protocol):
    """Protocol for trainable parameter containers."""

    def tensors(self) -> list[np.ndarray]: ...

    def with_tensors(self, tensors: list[np.ndarray]) -> Any: ...


P = TypeVar("P", bound=ParameterSet)


@dataclass
class AdamState:
    """First/second moment accumulators and hyperparameters of Adam."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def adam_init(
    params: ParameterSet,
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> AdamState:
    """Zero moments shaped like ``params``."""
    tensors = params.tensors()
    return AdamState(
        first_moment=[np.zeros_like(t) for t in tensors],
        second_moment=[np.zeros_like(t) for t in tensors],
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(params: P, grads: ParameterSet, state: AdamState) -> tuple[P, AdamState]:
    """
    One bias-corrected Adam descent step.

    Returns new parameter and state objects; the inputs are not modified.

    Raises:
        NonFiniteError: If any gradient entry is not finite; nothing is updated.
        ShapeMismatchError: If gradient and parameter layouts differ.
    """
    values = params.tensors()
    gradients = grads.tensors()
    if len(values) != len(gradients) or len(values) != len(state.first_moment):
        raise ShapeMismatchError("adam step", len(values), len(gradients))
    for value, gradient in zip(values, gradients):
        if value.shape != gradient.shape:
            raise ShapeMismatchError("adam step", value.shape, gradient.shape)
        if not np.all(np.isfinite(gradient)):
            raise NonFiniteError("adam step", "gradient")

    step = state.step + 1
    correction1 = 1.0 - state.beta1**step
    correction2 = 1.0 - state.beta2**step
    new_values, first, second = [], [], []
    for value, gradient, m, v in zip(
        values, gradients, state.first_moment, state.second_moment
    ):
        m_next = state.beta1 * m + (1.0 - state.beta1) * gradient
        v_next = state.beta2 * v + (1.0 - state.beta2) * gradient * gradient
        update = (m_next / correction1) / (np.sqrt(v_next / correction2) + state.epsilon)
        new_values.append(value - state.learning_rate * update)
        first.append(m_next)
        second.append(v_next)

    new_state = AdamState(
        first_moment=first,
        second_moment=second,
        step=step,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
    )
    return params.with_tensors(new_values), new_state


def global_norm(grads: ParameterSet) -> float:
    return float(np.sqrt(sum(float(np.sum(t * t)) for t in grads.tensors())))


def clip_by_global_norm(grads: P, max_norm: float) -> tuple[P, float]:
    """Rescales gradients so their joint L2 norm is at most ``max_norm``."""
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return grads, norm
    scale = max_norm / norm
    return grads.with_tensors([t * scale for t in grads.tensors()]), norm


def add_gradients(left: P, right: ParameterSet) -> P:
    """Elementwise sum of two gradient containers of the same layout."""
    return left.with_tensors([a + b for a, b in zip(left.tensors(), right.tensors())])
