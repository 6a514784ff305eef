"""
Feed-forward network engine.

Dense layers with relu/tanh hidden activations and a softmax output. The
loss plugs in at the softmax output: `backward` receives dL/dh for every
sample and applies the softmax Jacobian itself. All arithmetic is float64.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from src.models.errors import TrainingDivergenceError, ValidationError


class Activation(str, Enum):
    RELU = "relu"
    TANH = "tanh"


@dataclass(frozen=True)
class Architecture:
    """Layer sizes from input to output (k classes) plus the hidden activation."""

    layer_sizes: Tuple[int, ...]
    activation: Activation = Activation.RELU

    def __post_init__(self):
        sizes = tuple(self.layer_sizes)
        if len(sizes) < 2:
            raise ValidationError(f"Architecture needs at least 2 layer sizes, got {list(sizes)}")
        for size in sizes:
            if isinstance(size, (bool, float, str)) or not isinstance(size, (int, np.integer)) or size < 1:
                raise ValidationError(f"Layer sizes must be positive integers, got {list(sizes)}")
        try:
            activation = Activation(self.activation)
        except ValueError:
            raise ValidationError(f"Unknown activation {self.activation!r}; expected relu or tanh")
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in sizes))
        object.__setattr__(self, "activation", activation)

    @property
    def n_layers(self) -> int:
        """Number of weight layers."""
        return len(self.layer_sizes) - 1

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]

    def layer_shape(self, index: int) -> Tuple[int, int]:
        return self.layer_sizes[index], self.layer_sizes[index + 1]

    def to_dict(self) -> dict:
        return {"layer_sizes": list(self.layer_sizes), "activation": self.activation.value}

    @classmethod
    def from_dict(cls, data: dict) -> "Architecture":
        return cls(tuple(data["layer_sizes"]), Activation(data["activation"]))


@dataclass
class BaseNetwork:
    arch: Architecture
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    rng_seed: int = 0

    def __post_init__(self):
        if len(self.weights) != self.arch.n_layers or len(self.biases) != self.arch.n_layers:
            raise ValidationError(
                f"Expected {self.arch.n_layers} weight layers, got {len(self.weights)} weights "
                f"and {len(self.biases)} biases")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            fan_in, fan_out = self.arch.layer_shape(i)
            if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
                raise ValidationError(
                    f"Layer {i}: expected shapes {(fan_in, fan_out)} and {(fan_out,)}, "
                    f"got {w.shape} and {b.shape}")

    def copy(self) -> "BaseNetwork":
        return BaseNetwork(self.arch, [w.copy() for w in self.weights],
                           [b.copy() for b in self.biases], self.rng_seed)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass
class Gradients:
    """Parameter gradients, shaped like the network's parameters."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(g)) for g in self.weights + self.biases)


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre_activations: List[np.ndarray] = field(default_factory=list)
    activations: List[np.ndarray] = field(default_factory=list)
    probs: Optional[np.ndarray] = None


def init_network(arch: Architecture, seed: int) -> BaseNetwork:
    """Glorot-uniform weights, zero biases, drawn in layer order from one seeded stream."""
    if not isinstance(arch, Architecture):
        raise ValidationError(f"Expected an Architecture, got {type(arch).__name__}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for i in range(arch.n_layers):
        fan_in, fan_out = arch.layer_shape(i)
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return BaseNetwork(arch, weights, biases, int(seed))


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activation_grad(z: np.ndarray, a: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return (z > 0).astype(np.float64)
    return 1.0 - a * a


def _as_batch(net: BaseNetwork, x) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.arch.n_inputs:
        raise ValidationError(
            f"Input dimension mismatch: network expects {net.arch.n_inputs} features, "
            f"got array of shape {np.shape(x)}")
    return x, single


def forward_cache(net: BaseNetwork, x) -> ForwardCache:
    """Forward pass keeping the intermediate values needed by backprop."""
    x, _ = _as_batch(net, x)
    cache = ForwardCache(inputs=x)
    a = x
    last = net.arch.n_layers - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        cache.pre_activations.append(z)
        if i < last:
            a = _activate(z, net.arch.activation)
            cache.activations.append(a)
    cache.probs = softmax(cache.pre_activations[-1], axis=1)
    return cache


def forward(net: BaseNetwork, x) -> np.ndarray:
    """Soft targets for one sample (1-D input) or a batch (2-D input)."""
    x, single = _as_batch(net, x)
    probs = forward_cache(net, x).probs
    return probs[0] if single else probs


def softmax_backward(probs: np.ndarray, output_grads: np.ndarray) -> np.ndarray:
    """Map dL/dh to dL/dz through the softmax Jacobian, row by row."""
    inner = np.sum(output_grads * probs, axis=1, keepdims=True)
    return probs * (output_grads - inner)


def backward_from_cache(net: BaseNetwork, cache: ForwardCache, output_grads) -> Gradients:
    output_grads = np.asarray(output_grads, dtype=np.float64)
    if output_grads.shape != cache.probs.shape:
        raise ValidationError(
            f"Output gradient shape {output_grads.shape} does not match "
            f"softmax output shape {cache.probs.shape}")
    delta = softmax_backward(cache.probs, output_grads)
    n_layers = net.arch.n_layers
    grad_w: List[np.ndarray] = [None] * n_layers
    grad_b: List[np.ndarray] = [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        a_prev = cache.inputs if i == 0 else cache.activations[i - 1]
        grad_w[i] = a_prev.T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            da = delta @ net.weights[i].T
            delta = da * _activation_grad(cache.pre_activations[i - 1],
                                          cache.activations[i - 1], net.arch.activation)
    return Gradients(grad_w, grad_b)


def backward(net: BaseNetwork, batch, output_grads) -> Gradients:
    """Parameter gradients of sum_i <output_grads[i], h(x_i)> over the batch."""
    batch, single = _as_batch(net, batch)
    output_grads = np.asarray(output_grads, dtype=np.float64)
    if single and output_grads.ndim == 1:
        output_grads = output_grads[None, :]
    return backward_from_cache(net, forward_cache(net, batch), output_grads)


def sgd_step(net: BaseNetwork, grads: Gradients, lr: float, epoch: Optional[int] = None) -> BaseNetwork:
    """Plain SGD: params - lr * grads. Returns a new network."""
    if not lr > 0:
        raise ValidationError(f"Learning rate must be positive, got {lr}")
    if len(grads.weights) != net.arch.n_layers or len(grads.biases) != net.arch.n_layers:
        raise ValidationError("Gradient layer count does not match the network")
    for w, gw, b, gb in zip(net.weights, grads.weights, net.biases, grads.biases):
        if w.shape != gw.shape or b.shape != gb.shape:
            raise ValidationError(f"Gradient shapes {gw.shape}/{gb.shape} do not match {w.shape}/{b.shape}")
    if not grads.is_finite():
        raise TrainingDivergenceError("Non-finite gradient", epoch=epoch)
    return BaseNetwork(
        net.arch,
        [w - lr * gw for w, gw in zip(net.weights, grads.weights)],
        [b - lr * gb for b, gb in zip(net.biases, grads.biases)],
        net.rng_seed,
    )


def flatten_params(net: BaseNetwork) -> np.ndarray:
    """All parameters as one vector: per layer, the weights (row-major) then the biases."""
    return np.concatenate([p.ravel() for w, b in zip(net.weights, net.biases) for p in (w, b)])


def params_equal(a: BaseNetwork, b: BaseNetwork, layers: Optional[Sequence[int]] = None) -> bool:
    """Bit-exact comparison of two networks (optionally restricted to some layers)."""
    if a.arch != b.arch:
        return False
    indices = range(a.arch.n_layers) if layers is None else layers
    return all(np.array_equal(a.weights[i], b.weights[i]) and np.array_equal(a.biases[i], b.biases[i])
               for i in indices)
