"""Network data model, interchange IO, forward evaluation, and region affine maps.

A network is an ordered list of affine layers. Every layer except the last
applies ReLU; the last layer is either ReLU or identity (identity models a
logits head, whose softmax is never analyzed). Activation patterns cover the
hidden layers only and use 1-based unit indices. The boundary convention is
fixed everywhere: a pre-activation of exactly zero counts as inactive.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    NonFiniteValueError,
    ParseError,
)

ACTIVATIONS = ("relu", "identity")


def _as_float_array(value, what, ndim):
    arr = np.array(value, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise DimensionMismatchError(f"{what}: expected {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError(f"{what}: contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Layer:
    """One affine layer: y = act(weights @ x + bias)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        w = _as_float_array(self.weights, "layer weights", 2)
        b = _as_float_array(self.bias, "layer bias", 1)
        if w.shape[0] != b.shape[0]:
            raise DimensionMismatchError(
                f"layer weights {w.shape} do not match bias length {b.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ParseError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def out_dim(self):
        return self.weights.shape[0]

    @property
    def in_dim(self):
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable feed-forward ReLU network.

    layers[:-1] are the hidden layers (ReLU); layers[-1] is the output layer
    (ReLU or identity). Dimension chaining is validated on construction.
    """

    layers: tuple
    input_dim: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise DimensionMismatchError("a network needs at least one layer")
        if self.input_dim <= 0:
            raise DimensionMismatchError("input_dim must be positive")
        prev = self.input_dim
        for k, layer in enumerate(layers):
            if not isinstance(layer, Layer):
                raise ParseError("layers must be Layer instances")
            if layer.in_dim != prev:
                raise DimensionMismatchError(
                    f"layer {k + 1} expects input {layer.in_dim}, previous width is {prev}"
                )
            prev = layer.out_dim
        for layer in layers[:-1]:
            if layer.activation != "relu":
                raise ParseError("only the last layer may use identity activation")
        meta = dict(self.metadata or {})
        for k, v in meta.items():
            if not isinstance(k, str) or not isinstance(v, str):
                raise ParseError("metadata must map strings to strings")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "metadata", meta)

    @property
    def num_hidden_layers(self):
        return len(self.layers) - 1

    @property
    def hidden_widths(self):
        return tuple(layer.out_dim for layer in self.layers[:-1])

    @property
    def output_dim(self):
        return self.layers[-1].out_dim

    @property
    def widths(self):
        """Full architecture [n_0, n_1, ..., n_{L+1}]."""
        return (self.input_dim,) + tuple(layer.out_dim for layer in self.layers)

    @property
    def total_hidden_units(self):
        return sum(self.hidden_widths)

    def with_metadata(self, **extra):
        meta = dict(self.metadata)
        meta.update({k: str(v) for k, v in extra.items()})
        return Network(self.layers, self.input_dim, meta)


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box of valid inputs."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_float_array(self.lower, "domain lower", 1)
        up = _as_float_array(self.upper, "domain upper", 1)
        if lo.shape != up.shape:
            raise DimensionMismatchError("domain bounds have different lengths")
        if np.any(lo > up):
            raise DimensionMismatchError("domain has lower > upper in some coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @classmethod
    def uniform(cls, dim, lo, hi):
        return cls(np.full(dim, float(lo)), np.full(dim, float(hi)))

    @classmethod
    def around(cls, center, delta):
        """Hypercube |x_i - center_i| <= delta."""
        c = np.asarray(center, dtype=np.float64)
        d = float(delta)
        if d < 0:
            raise DimensionMismatchError("delta must be nonnegative")
        return cls(c - d, c + d)

    @property
    def dim(self):
        return self.lower.shape[0]

    def center(self):
        return (self.lower + self.upper) / 2.0

    def contains(self, x, atol=0.0):
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def sample(self, rng, n):
        """n uniform points, shape (n, dim)."""
        u = rng.random((int(n), self.dim))
        return self.lower + u * (self.upper - self.lower)

    def to_jsonable(self):
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_jsonable(cls, obj):
        return cls(np.asarray(obj["lower"]), np.asarray(obj["upper"]))


@dataclass(frozen=True)
class ActivationPattern:
    """Per hidden layer, the sorted tuple of active unit indices (1-based)."""

    sets: tuple

    def __post_init__(self):
        canon = tuple(tuple(sorted(set(int(i) for i in s))) for s in self.sets)
        for s in canon:
            if s and s[0] < 1:
                raise DimensionMismatchError("unit indices are 1-based")
        object.__setattr__(self, "sets", canon)

    @classmethod
    def from_active_bools(cls, bools_per_layer):
        sets = []
        for b in bools_per_layer:
            b = np.asarray(b, dtype=bool)
            sets.append(tuple((np.nonzero(b)[0] + 1).tolist()))
        return cls(tuple(sets))

    @classmethod
    def from_bitstrings(cls, text):
        """Parse "10110|01|1" (one bitstring per hidden layer)."""
        sets = []
        for part in text.split("|"):
            if part == "":
                sets.append(())
                continue
            if any(ch not in "01" for ch in part):
                raise ParseError(f"bad pattern bitstring {text!r}")
            sets.append(tuple(i + 1 for i, ch in enumerate(part) if ch == "1"))
        return cls(tuple(sets))

    def to_bitstrings(self, widths):
        if len(widths) != len(self.sets):
            raise DimensionMismatchError("pattern/widths layer count mismatch")
        parts = []
        for width, s in zip(widths, self.sets):
            if s and s[-1] > width:
                raise DimensionMismatchError("pattern index exceeds layer width")
            active = set(s)
            parts.append("".join("1" if i + 1 in active else "0" for i in range(width)))
        return "|".join(parts)

    def prefix(self, length):
        return self.sets[:length]

    def num_layers(self):
        return len(self.sets)


@dataclass(frozen=True)
class AffineMap:
    """x -> matrix @ x + offset."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        m = _as_float_array(self.matrix, "affine matrix", 2)
        c = _as_float_array(self.offset, "affine offset", 1)
        if m.shape[0] != c.shape[0]:
            raise DimensionMismatchError("affine matrix/offset row mismatch")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", c)

    def apply(self, x):
        return self.matrix @ np.asarray(x, dtype=np.float64) + self.offset


def _check_input(net, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.input_dim:
        raise DimensionMismatchError(
            f"input has shape {x.shape}, network expects ({net.input_dim},)"
        )
    return x


def forward(net, x):
    """Evaluate the network. Returns (output vector, ActivationPattern).

    The pattern marks units with strictly positive pre-activation; exact zeros
    count as inactive.
    """
    x = _check_input(net, x)
    h = x
    bools = []
    for layer in net.layers[:-1]:
        g = layer.weights @ h + layer.bias
        bools.append(g > 0.0)
        h = np.maximum(g, 0.0)
    out_layer = net.layers[-1]
    y = out_layer.weights @ h + out_layer.bias
    if out_layer.activation == "relu":
        y = np.maximum(y, 0.0)
    return y, ActivationPattern.from_active_bools(bools)


def forward_batch(net, X):
    """Vectorized forward over rows of X. Returns (outputs, active bool mats).

    outputs has shape (n, output_dim); the second element is a list with one
    (n, n_l) boolean matrix per hidden layer.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise DimensionMismatchError(f"batch shape {X.shape} does not fit input_dim")
    h = X
    bools = []
    for layer in net.layers[:-1]:
        g = h @ layer.weights.T + layer.bias
        bools.append(g > 0.0)
        h = np.maximum(g, 0.0)
    out_layer = net.layers[-1]
    y = h @ out_layer.weights.T + out_layer.bias
    if out_layer.activation == "relu":
        y = np.maximum(y, 0.0)
    return y, bools


def output_preactivation(net, x):
    """Output-layer pre-activation (the affine value before any final ReLU)."""
    x = _check_input(net, x)
    h = x
    for layer in net.layers[:-1]:
        h = np.maximum(layer.weights @ h + layer.bias, 0.0)
    out_layer = net.layers[-1]
    return out_layer.weights @ h + out_layer.bias


def _pattern_masks(net, pattern):
    if pattern.num_layers() != net.num_hidden_layers:
        raise DimensionMismatchError("pattern layer count does not match network")
    masks = []
    for layer, s in zip(net.layers[:-1], pattern.sets):
        if s and s[-1] > layer.out_dim:
            raise DimensionMismatchError("pattern index exceeds layer width")
        m = np.zeros(layer.out_dim)
        for i in s:
            m[i - 1] = 1.0
        masks.append(m)
    return masks


def region_affine_map(net, pattern):
    """Affine map of the output pre-activation on the region keyed by pattern.

    Composes the layers with inactive rows zeroed. For any x whose forward
    pattern equals the argument, applying the map reproduces the output-layer
    pre-activation (so the post-ReLU output too, after clamping when the last
    layer is ReLU).
    """
    masks = _pattern_masks(net, pattern)
    A = None
    c = None
    for layer, m in zip(net.layers[:-1], masks):
        if A is None:
            A = layer.weights.copy()
            c = layer.bias.copy()
        else:
            A = layer.weights @ A
            c = layer.weights @ c + layer.bias
        A *= m[:, None]
        c = c * m
    out = net.layers[-1]
    if A is None:
        return AffineMap(out.weights.copy(), out.bias.copy())
    return AffineMap(out.weights @ A, out.weights @ c + out.bias)


def region_preactivation_maps(net, pattern):
    """Per hidden layer, the affine map x -> pre-activations g^l on the region.

    Returns a list of (matrix, offset) pairs, one per hidden layer, computed
    with the pattern's masks applied to all earlier layers.
    """
    masks = _pattern_masks(net, pattern)
    maps = []
    A = np.eye(net.input_dim)
    c = np.zeros(net.input_dim)
    for layer, m in zip(net.layers[:-1], masks):
        G = layer.weights @ A
        d = layer.weights @ c + layer.bias
        maps.append((G, d))
        A = G * m[:, None]
        c = d * m
    return maps


def preactivation_intervals(net, domain):
    """Interval-arithmetic bounds of every pre-activation over the domain.

    Returns a list over all layers (hidden and output) of (lo, hi) arrays.
    Conservative: true ranges are contained in the reported intervals.
    """
    if domain.dim != net.input_dim:
        raise DimensionMismatchError("domain does not fit the network input")
    lo = domain.lower.copy()
    hi = domain.upper.copy()
    out = []
    for k, layer in enumerate(net.layers):
        w = layer.weights
        wp = np.maximum(w, 0.0)
        wn = np.minimum(w, 0.0)
        g_lo = wp @ lo + wn @ hi + layer.bias
        g_hi = wp @ hi + wn @ lo + layer.bias
        out.append((g_lo, g_hi))
        if k < len(net.layers) - 1 or layer.activation == "relu":
            lo = np.maximum(g_lo, 0.0)
            hi = np.maximum(g_hi, 0.0)
        else:
            lo, hi = g_lo, g_hi
    return out


# ---------------------------------------------------------------------------
# Interchange IO
# ---------------------------------------------------------------------------

INTERCHANGE_VERSION = 1


def _reject_constant(token):
    raise ParseError(f"non-finite literal {token!r} in document")


def network_to_jsonable(net):
    return {
        "version": INTERCHANGE_VERSION,
        "input_dim": int(net.input_dim),
        "layers": [
            {
                "weights": [list(map(float, row)) for row in layer.weights],
                "bias": [float(v) for v in layer.bias],
                "activation": layer.activation,
            }
            for layer in net.layers
        ],
        "metadata": dict(net.metadata),
    }


def save_network(net):
    """Serialize to interchange JSON bytes. Round-trips bit-exactly."""
    doc = network_to_jsonable(net)
    return (json.dumps(doc, indent=1, allow_nan=False) + "\n").encode("utf-8")


def network_from_jsonable(doc):
    if not isinstance(doc, dict):
        raise ParseError("interchange document must be a JSON object")
    try:
        version = doc["version"]
        input_dim = doc["input_dim"]
        raw_layers = doc["layers"]
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}") from None
    if version != INTERCHANGE_VERSION:
        raise ParseError(f"unsupported interchange version {version!r}")
    if not isinstance(input_dim, int) or isinstance(input_dim, bool):
        raise ParseError("input_dim must be an integer")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ParseError("layers must be a nonempty list")
    layers = []
    for k, rl in enumerate(raw_layers):
        if not isinstance(rl, dict):
            raise ParseError(f"layer {k + 1} is not an object")
        try:
            w = rl["weights"]
            b = rl["bias"]
            act = rl["activation"]
        except KeyError as exc:
            raise ParseError(f"layer {k + 1}: missing field {exc.args[0]!r}") from None
        try:
            w_arr = np.array(w, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"layer {k + 1}: ragged or non-numeric weights") from exc
        if w_arr.ndim != 2:
            raise ParseError(f"layer {k + 1}: weights must be a matrix")
        layers.append(Layer(w_arr, np.asarray(b, dtype=np.float64), act))
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise ParseError("metadata must be an object")
    return Network(tuple(layers), input_dim, metadata)


def load_network(source):
    """Parse interchange JSON from bytes, str, or a binary file object."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return network_from_jsonable(doc)


def load_network_file(path):
    with open(path, "rb") as fh:
        return load_network(fh)


def save_network_file(net, path):
    data = save_network(net)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def fingerprint(net):
    """Content hash of the functional part of the network (metadata excluded)."""
    doc = network_to_jsonable(net)
    doc.pop("metadata", None)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
