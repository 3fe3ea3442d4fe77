"""Feed-forward networks of affine layers, forward traces and the text format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionError, as_matrix, as_vector

ACTIVATIONS = ("identity", "relu", "gelu")
FORMAT_HEADER = "attribnet v1"

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def gelu(x: np.ndarray) -> np.ndarray:
    """tanh approximation of GELU."""
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * (x + _GELU_A * x**3)))


def gelu_derivative(x: np.ndarray) -> np.ndarray:
    u = _GELU_C * (x + _GELU_A * x**3)
    th = np.tanh(u)
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th**2) * du


def activate(tag: str, x: np.ndarray) -> np.ndarray:
    if tag == "identity":
        return x.copy()
    if tag == "relu":
        return relu(x)
    if tag == "gelu":
        return gelu(x)
    raise ValueError(f"unknown activation {tag!r}")


def activation_derivative(tag: str, pre: np.ndarray) -> np.ndarray:
    """Diagonal of the activation Jacobian at pre-activation ``pre``."""
    if tag == "identity":
        return np.ones_like(pre)
    if tag == "relu":
        return (pre > 0).astype(np.float64)
    if tag == "gelu":
        return gelu_derivative(pre)
    raise ValueError(f"unknown activation {tag!r}")


@dataclass(frozen=True, eq=False)
class Layer:
    """Affine map ``W z + b`` followed by an activation."""

    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        w = as_matrix(self.weight, "weight")
        b = as_vector(self.bias, "bias")
        if b.shape[0] != w.shape[0]:
            raise DimensionError(f"bias dim {b.shape[0]} != weight rows {w.shape[0]}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        w = w.copy()
        b = b.copy()
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Layer):
            return NotImplemented
        return (
            self.activation == other.activation
            and np.array_equal(self.weight, other.weight)
            and np.array_equal(self.bias, other.bias)
        )


@dataclass(frozen=True)
class Network:
    """Ordered affine layers. The network output is the last pre-activation;
    the activation tag of the last layer only shows up in the trace."""

    layers: tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        for i in range(1, len(layers)):
            if layers[i].in_dim != layers[i - 1].out_dim:
                raise DimensionError(
                    f"layer {i} expects input dim {layers[i].in_dim}, previous layer emits {layers[i - 1].out_dim}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def dims(self) -> list[int]:
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    def width(self, index: int) -> int:
        """Width of feature map ``index`` (0 is the input)."""
        return self.dims[index]

    def upstream_activation(self, i: int) -> str:
        """Activation that produced the input of layer ``i``."""
        return "identity" if i == 0 else self.layers[i - 1].activation


@dataclass(frozen=True)
class FeatureTrace:
    input: np.ndarray
    pre_activations: list[np.ndarray] = field(default_factory=list)
    post_activations: list[np.ndarray] = field(default_factory=list)

    @property
    def output(self) -> np.ndarray:
        return self.pre_activations[-1]

    def layer_input(self, i: int) -> np.ndarray:
        """Feature map entering layer ``i`` (the input vector for ``i == 0``)."""
        return self.input if i == 0 else self.post_activations[i - 1]

    def layer_input_pre(self, i: int) -> np.ndarray:
        """Pre-activation that produced the input of layer ``i``."""
        return self.input if i == 0 else self.pre_activations[i - 1]


def forward(net: Network, x) -> FeatureTrace:
    x = as_vector(x, "input")
    if x.shape[0] != net.input_dim:
        raise DimensionError(f"input dim {x.shape[0]} != network input dim {net.input_dim}")
    pre, post = [], []
    z = x
    for layer in net.layers:
        g = layer.weight @ z + layer.bias
        z = activate(layer.activation, g)
        pre.append(g)
        post.append(z)
    return FeatureTrace(x, pre, post)


def layer_rng(seed: int, *key: int) -> np.random.Generator:
    """PCG64 generator for substream ``key`` of ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def random_network(dims, sigma: float, seed: int, activation: str = "relu") -> Network:
    """Random network with i.i.d. N(0, sigma^2) weights and zero biases.

    Each weight row is drawn from its own substream keyed by (seed, layer, row),
    so the result does not depend on generation order.
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise ValueError("dims needs at least an input and an output width")
    if any(d < 1 for d in dims):
        raise ValueError("all widths must be positive")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    layers = []
    n = len(dims) - 1
    for i in range(n):
        rows = [layer_rng(seed, i, r).normal(0.0, sigma, size=dims[i]) for r in range(dims[i + 1])]
        act = "identity" if i == n - 1 else activation
        layers.append(Layer(np.array(rows), np.zeros(dims[i + 1]), act))
    return Network(tuple(layers))


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def serialize_network(net: Network) -> str:
    lines = [FORMAT_HEADER, "dims " + " ".join(str(d) for d in net.dims)]
    for i, layer in enumerate(net.layers):
        lines.append(f"layer {i} activation={layer.activation}")
        for row in layer.weight:
            lines.append(" ".join(_fmt(v) for v in row))
        lines.append(" ".join(_fmt(v) for v in layer.bias))
    return "\n".join(lines) + "\n"


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_network(text: str) -> Network:
    """Parse the ``attribnet v1`` text format; raises ParseError with a line number."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if content:
            rows.append((lineno, content.split()))
    if not rows:
        raise ParseError("empty network file")
    it = iter(rows)

    def take(what):
        try:
            return next(it)
        except StopIteration:
            raise ParseError(f"unexpected end of file, expected {what}") from None

    lineno, tok = take("header")
    if " ".join(tok) != FORMAT_HEADER:
        raise ParseError(f"expected header {FORMAT_HEADER!r}", lineno)
    lineno, tok = take("dims line")
    if tok[0] != "dims":
        raise ParseError("expected 'dims d0 d1 ...'", lineno)
    try:
        dims = [int(t) for t in tok[1:]]
    except ValueError:
        raise ParseError("dims must be integers", lineno) from None
    if len(dims) < 2:
        raise ParseError("dims needs at least two entries (empty layer list)", lineno)
    if any(d < 1 for d in dims):
        raise ParseError("dims must be positive", lineno)

    def numbers(lineno, tok, expected, what):
        if len(tok) != expected:
            raise ParseError(f"{what}: expected {expected} values, found {len(tok)}", lineno)
        try:
            vals = [float(t) for t in tok]
        except ValueError as exc:
            raise ParseError(f"{what}: {exc}", lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError(f"{what}: non-finite value", lineno)
        return vals

    layers = []
    for i in range(len(dims) - 1):
        lineno, tok = take(f"block for layer {i}")
        if len(tok) != 3 or tok[0] != "layer" or not tok[2].startswith("activation="):
            raise ParseError(f"expected 'layer {i} activation=<tag>'", lineno)
        if tok[1] != str(i):
            raise ParseError(f"expected layer index {i}, found {tok[1]}", lineno)
        act = tok[2].split("=", 1)[1]
        if act not in ACTIVATIONS:
            raise ParseError(f"unknown activation {act!r}", lineno)
        weight = []
        for r in range(dims[i + 1]):
            lineno, tok = take(f"weight row {r} of layer {i}")
            weight.append(numbers(lineno, tok, dims[i], f"layer {i} weight row {r}"))
        lineno, tok = take(f"bias of layer {i}")
        bias = numbers(lineno, tok, dims[i + 1], f"layer {i} bias")
        layers.append(Layer(np.array(weight), np.array(bias), act))
    extra = next(it, None)
    if extra is not None:
        raise ParseError("trailing content after last layer (dims declare fewer layers)", extra[0])
    try:
        return Network(tuple(layers))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def load_network(path) -> Network:
    with open(path) as fh:
        return parse_network(fh.read())


def save_network(net: Network, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_network(net))
