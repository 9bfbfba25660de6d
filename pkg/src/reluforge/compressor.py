"""Loss-less stability compression.

Using a stability report over a box domain D, remove hidden units that are
provably inactive on D, fold stably-active units whose weight rows depend
linearly on already-kept active rows into the successor layer, collapse
layers whose kept units are all stably active, and degenerate to a constant
network when a whole layer dies. Every transformation preserves the
network's function on D exactly (up to float arithmetic); the emitted trace
replays to the identical compressed network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParseError, ReportMismatchError
from .network import Layer, Network, fingerprint
from .stability import STABLY_ACTIVE, STABLY_INACTIVE

DEPENDENCE_TOL = 1e-8

TRACE_FORMAT = "compression-trace"
TRACE_VERSION = 1


def linear_dependence(basis_rows, candidate, tol=DEPENDENCE_TOL):
    """Coefficients alpha with candidate = sum alpha_k basis_k, or None.

    Decided by least-squares residual in the sup norm, relative to
    max(1, |candidate|_inf). An empty basis only spans the zero vector.
    """
    cand = np.asarray(candidate, dtype=np.float64)
    basis = np.asarray(basis_rows, dtype=np.float64)
    if basis.size == 0:
        basis = basis.reshape(0, cand.shape[0])
    scale = max(1.0, float(np.max(np.abs(cand))) if cand.size else 0.0)
    if basis.shape[0] == 0:
        if float(np.max(np.abs(cand), initial=0.0)) <= tol * scale:
            return np.zeros(0)
        return None
    alpha, *_ = np.linalg.lstsq(basis.T, cand, rcond=None)
    resid = cand - basis.T @ alpha
    if float(np.max(np.abs(resid))) <= tol * scale:
        return alpha
    return None


# ---------------------------------------------------------------------------
# primitive edits over a mutable [weights, bias, activation] layer list;
# shared by the compressor and by trace replay so both produce identical bits
# ---------------------------------------------------------------------------


def _delete_unit(layers, layer, unit):
    W, b, act = layers[layer - 1]
    layers[layer - 1] = (np.delete(W, unit - 1, axis=0), np.delete(b, unit - 1), act)
    W2, b2, act2 = layers[layer]
    layers[layer] = (np.delete(W2, unit - 1, axis=1), b2, act2)


def _fold_unit(layers, layer, unit, targets, alphas):
    W, b, act = layers[layer - 1]
    W2, b2, act2 = layers[layer]
    col = W2[:, unit - 1].copy()
    W2 = W2.copy()
    correction = float(b[unit - 1])
    for k, a in zip(targets, alphas):
        W2[:, k - 1] = W2[:, k - 1] + a * col
        correction -= a * float(b[k - 1])
    b2 = b2 + col * correction
    layers[layer] = (W2, b2, act2)
    _delete_unit(layers, layer, unit)


def _collapse_layer(layers, layer):
    W, b, _ = layers[layer - 1]
    W2, b2, act2 = layers[layer]
    layers[layer - 1 : layer + 1] = [(W2 @ W, b2 + W2 @ b, act2)]


def _constant_collapse(layers, input_dim, probe):
    # pre-activation of the output layer at the probe point; activations of
    # the dying layer are identically zero on D so this value is the
    # network's constant output pre-activation everywhere on D
    h = np.asarray(probe, dtype=np.float64)
    g = h
    for k, (W, b, act) in enumerate(layers):
        g = W @ h + b
        if k < len(layers) - 1:
            h = np.maximum(g, 0.0)
    out_act = layers[-1][2]
    layers[:] = [(np.zeros((g.shape[0], input_dim)), g, out_act)]


def _apply_action(layers, input_dim, action):
    kind = action["action"]
    if kind == "removed-inactive":
        _delete_unit(layers, action["layer"], action["unit"])
    elif kind == "folded-active":
        _fold_unit(
            layers,
            action["layer"],
            action["unit"],
            action["targets"],
            np.asarray(action["alphas"], dtype=np.float64),
        )
    elif kind == "collapsed-layer":
        _collapse_layer(layers, action["layer"])
    elif kind == "constant-collapse":
        _constant_collapse(layers, input_dim, action["probe"])
    else:
        raise ParseError(f"unknown trace action {kind!r}")


@dataclass(frozen=True)
class CompressionTrace:
    """Audit record of one compression run; replays bit-for-bit."""

    fingerprint_before: str
    fingerprint_after: str
    widths_before: tuple
    widths_after: tuple
    actions: tuple

    def counts(self):
        out = {
            "removed-inactive": 0,
            "folded-active": 0,
            "collapsed-layer": 0,
            "constant-collapse": 0,
        }
        for a in self.actions:
            out[a["action"]] += 1
        return out

    def to_jsonable(self):
        return {
            "format": TRACE_FORMAT,
            "version": TRACE_VERSION,
            "fingerprint_before": self.fingerprint_before,
            "fingerprint_after": self.fingerprint_after,
            "widths_before": list(self.widths_before),
            "widths_after": list(self.widths_after),
            "actions": [dict(a) for a in self.actions],
        }

    def to_json(self, indent=1):
        return json.dumps(self.to_jsonable(), indent=indent, allow_nan=False)

    @classmethod
    def from_jsonable(cls, doc):
        if not isinstance(doc, dict) or doc.get("format") != TRACE_FORMAT:
            raise ParseError("not a compression-trace document")
        if doc.get("version") != TRACE_VERSION:
            raise ParseError(f"unsupported trace version {doc.get('version')!r}")
        try:
            return cls(
                fingerprint_before=str(doc["fingerprint_before"]),
                fingerprint_after=str(doc["fingerprint_after"]),
                widths_before=tuple(int(w) for w in doc["widths_before"]),
                widths_after=tuple(int(w) for w in doc["widths_after"]),
                actions=tuple(dict(a) for a in doc["actions"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed compression trace: {exc}") from exc

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
        return cls.from_jsonable(doc)


def _to_network(layers, input_dim, metadata):
    return Network(
        tuple(Layer(W, b, act) for W, b, act in layers), input_dim, metadata
    )


def stability_compression(net, domain, report):
    """Compress net on D using the report's per-unit classes.

    Returns (compressed_network, trace). Only provably-stable units trigger
    edits, so a conservatively relaxed report merely compresses less. Layers
    are processed front to back and every decision is made against the
    already-edited weights, because removing or folding a unit changes the
    rows its layer's successors see.
    """
    report.validate_for(net, domain)
    classes = report.classes()
    layers = [
        (layer.weights.copy(), layer.bias.copy(), layer.activation)
        for layer in net.layers
    ]
    actions = []
    cur = 1  # index of the processed layer inside the edited net
    became_constant = False

    for l in range(1, net.num_hidden_layers + 1):
        n_l = net.layers[l - 1].out_dim
        kept_active = []  # current row indices whose rows form the fold basis
        unstable = False
        r = 1
        for i in range(1, n_l + 1):
            cls = classes[(l, i)]
            W, b, _ = layers[cur - 1]
            layer_would_die = i == n_l and not kept_active and not unstable
            if cls == STABLY_INACTIVE:
                if layer_would_die:
                    probe = [float(v) for v in domain.center()]
                    _constant_collapse(layers, net.input_dim, probe)
                    actions.append(
                        {
                            "action": "constant-collapse",
                            "probe": probe,
                            "output_preactivation": [
                                float(v) for v in layers[0][1]
                            ],
                            "orig_layer": l,
                        }
                    )
                    became_constant = True
                    break
                actions.append(
                    {
                        "action": "removed-inactive",
                        "layer": cur,
                        "unit": r,
                        "orig_layer": l,
                        "orig_unit": i,
                    }
                )
                _delete_unit(layers, cur, r)
                continue
            if cls == STABLY_ACTIVE:
                basis = W[[k - 1 for k in kept_active], :]
                alpha = linear_dependence(basis, W[r - 1])
                if alpha is None or layer_would_die:
                    # independent row, or a zero row that is all the layer
                    # has left: keep the unit
                    kept_active.append(r)
                    r += 1
                    continue
                actions.append(
                    {
                        "action": "folded-active",
                        "layer": cur,
                        "unit": r,
                        "targets": list(kept_active),
                        "alphas": [float(a) for a in alpha],
                        "orig_layer": l,
                        "orig_unit": i,
                    }
                )
                _fold_unit(layers, cur, r, kept_active, alpha)
                continue
            unstable = True
            r += 1
        if became_constant:
            break
        if not unstable:
            # every kept unit is stably active: the layer acts affinely on D
            actions.append({"action": "collapsed-layer", "layer": cur, "orig_layer": l})
            _collapse_layer(layers, cur)
        else:
            cur += 1

    compressed = _to_network(layers, net.input_dim, net.metadata)
    trace = CompressionTrace(
        fingerprint_before=fingerprint(net),
        fingerprint_after=fingerprint(compressed),
        widths_before=net.widths,
        widths_after=compressed.widths,
        actions=tuple(actions),
    )
    return compressed, trace


def replay_trace(net, trace):
    """Re-apply a trace's actions to net; must end at the recorded result."""
    if fingerprint(net) != trace.fingerprint_before:
        raise ReportMismatchError("trace was recorded for a different network")
    layers = [
        (layer.weights.copy(), layer.bias.copy(), layer.activation)
        for layer in net.layers
    ]
    for action in trace.actions:
        _apply_action(layers, net.input_dim, action)
    replayed = _to_network(layers, net.input_dim, net.metadata)
    if fingerprint(replayed) != trace.fingerprint_after:
        raise ReportMismatchError("replay did not reproduce the recorded network")
    return replayed
