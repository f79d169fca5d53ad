"""A small fully connected Q-network with rectifier hidden layers, in numpy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike
    from numpy.typing import NDArray

DEFAULT_LAYER_SIZES = (5, 32, 32, 7)


@dataclass(frozen=True, eq=False)
class QNetwork:
    """Weights are stored (fan_in, fan_out) so a batch multiplies on the left."""

    weights: tuple[NDArray[np.float64], ...]
    biases: tuple[NDArray[np.float64], ...]

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            msg = "QNetwork needs one bias vector per weight matrix"
            raise ValueError(msg)
        for layer, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                msg = f"layer {layer}: weight {w.shape} and bias {b.shape} do not line up"
                raise ValueError(msg)
        for previous, current in zip(self.weights, self.weights[1:], strict=False):
            if previous.shape[1] != current.shape[0]:
                msg = f"layer widths {previous.shape} -> {current.shape} do not chain"
                raise ValueError(msg)

    @classmethod
    def initialise(
        cls,
        layer_sizes: Sequence[int] = DEFAULT_LAYER_SIZES,
        rng: np.random.Generator | None = None,
    ) -> QNetwork:
        """He-uniform weights and zero biases."""
        rng = rng if rng is not None else np.random.default_rng()
        weights = []
        biases = []
        for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:], strict=False):
            limit = np.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(tuple(weights), tuple(biases))

    @classmethod
    def from_parameters(cls, parameters: Sequence[NDArray[np.float64]]) -> QNetwork:
        return cls(tuple(parameters[0::2]), tuple(parameters[1::2]))

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    def parameters(self) -> list[NDArray[np.float64]]:
        """Parameters in layer order: W1, b1, W2, b2, ..."""
        out: list[NDArray[np.float64]] = []
        for w, b in zip(self.weights, self.biases, strict=True):
            out.extend((w, b))
        return out

    def flat_parameters(self) -> NDArray[np.float64]:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def with_flat_parameters(self, flat: ArrayLike) -> QNetwork:
        values = np.asarray(flat, dtype=np.float64)
        expected = sum(p.size for p in self.parameters())
        if values.shape != (expected,):
            msg = f"expected {expected} parameters, got shape {values.shape}"
            raise ValueError(msg)
        rebuilt = []
        offset = 0
        for p in self.parameters():
            rebuilt.append(values[offset : offset + p.size].reshape(p.shape).copy())
            offset += p.size
        return QNetwork.from_parameters(rebuilt)

    def _layers(self, obs: NDArray[np.float64]) -> tuple[list[NDArray[np.float64]], list[NDArray[np.float64]]]:
        inputs = [obs]
        pre_activations = []
        last = len(self.weights) - 1
        for layer, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            z = inputs[-1] @ w + b
            pre_activations.append(z)
            inputs.append(z if layer == last else np.maximum(z, 0.0))
        return inputs, pre_activations

    def forward(self, obs: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(obs, dtype=np.float64)
        inputs, _ = self._layers(np.atleast_2d(x))
        return inputs[-1][0] if x.ndim == 1 else inputs[-1]

    def gradients(
        self,
        obs: ArrayLike,
        actions: ArrayLike,
        targets: ArrayLike,
    ) -> tuple[float, list[NDArray[np.float64]]]:
        """MSE between Q(s, a) of the taken actions and ``targets``, with its gradient."""
        x = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        taken = np.asarray(actions, dtype=np.intp)
        y = np.asarray(targets, dtype=np.float64)
        batch = x.shape[0]
        if batch == 0:
            msg = "cannot compute gradients of an empty batch"
            raise ValueError(msg)

        inputs, pre_activations = self._layers(x)
        rows = np.arange(batch)
        error = inputs[-1][rows, taken] - y
        loss = float(np.mean(error**2))

        upstream = np.zeros_like(inputs[-1])
        upstream[rows, taken] = 2 * error / batch
        grads: list[NDArray[np.float64]] = []
        for layer in reversed(range(len(self.weights))):
            if layer != len(self.weights) - 1:
                upstream = upstream * (pre_activations[layer] > 0)
            grads.append(upstream.sum(axis=0))
            grads.append(inputs[layer].T @ upstream)
            upstream = upstream @ self.weights[layer].T
        grads.reverse()
        return loss, grads


def forward(net: QNetwork, obs: ArrayLike) -> NDArray[np.float64]:
    return net.forward(obs)
