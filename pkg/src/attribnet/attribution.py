"""Per-layer transition matrices and chained attribution maps.

A transition matrix for a layer ``g: R^S -> R^R`` has S rows (inputs) and R
columns (outputs). For the gradient it is the transposed Jacobian; for the LRP
rules entry ``(b, a)`` is the share of output ``a`` attributed to input ``b``.
Attributions are obtained by pushing the output weighting ``q`` backwards,
``v <- M v``, one layer at a time.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import DimensionError, as_vector, top_singular_value
from .network import FeatureTrace, Layer, Network, activation_derivative, forward

RULE_KINDS = ("gradient", "gradient_times_input", "lrp_beta", "lrp_gamma")
DEGENERACY_FLOOR = 1e-12


@dataclass(frozen=True)
class Rule:
    kind: str
    beta: float = 0.0
    gamma: float = 0.0
    backward_bias: bool = False

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.kind == "lrp_beta" and not self.beta >= 0:
            raise ValueError("LRP-beta requires beta >= 0")
        if self.kind == "lrp_gamma" and not self.gamma > 0:
            raise ValueError("LRP-gamma requires gamma > 0")

    @classmethod
    def gradient(cls) -> Rule:
        return cls("gradient")

    @classmethod
    def gradient_times_input(cls) -> Rule:
        return cls("gradient_times_input")

    @classmethod
    def lrp_beta(cls, beta: float, backward_bias: bool = False) -> Rule:
        return cls("lrp_beta", beta=float(beta), backward_bias=backward_bias)

    @classmethod
    def lrp_gamma(cls, gamma: float, backward_bias: bool = False) -> Rule:
        return cls("lrp_gamma", gamma=float(gamma), backward_bias=backward_bias)

    @property
    def is_lrp(self) -> bool:
        return self.kind in ("lrp_beta", "lrp_gamma")

    @property
    def is_gradient(self) -> bool:
        return self.kind in ("gradient", "gradient_times_input")

    @property
    def label(self) -> str:
        if self.kind == "lrp_beta":
            return f"lrp-beta={self.beta:g}"
        if self.kind == "lrp_gamma":
            return f"lrp-gamma={self.gamma:g}"
        return {"gradient": "gradient", "gradient_times_input": "grad-x-input"}[self.kind]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "beta": self.beta, "gamma": self.gamma, "backward_bias": self.backward_bias}

    @classmethod
    def from_dict(cls, d: dict) -> Rule:
        return cls(d["kind"], float(d.get("beta", 0.0)), float(d.get("gamma", 0.0)), bool(d.get("backward_bias", False)))


@dataclass(frozen=True)
class TransitionMatrix:
    matrix: np.ndarray
    rule: Rule
    layer_index: int = 0
    degenerate_columns: tuple[int, ...] = ()

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def is_degenerate(self) -> bool:
        return bool(self.degenerate_columns)


@dataclass(frozen=True)
class AttributionMap:
    layer_index: int
    values: np.ndarray
    rule: Rule
    q: np.ndarray
    degenerate: dict[int, tuple[int, ...]] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(self.values.sum())


def _check_input(layer: Layer, z_in) -> np.ndarray:
    z = as_vector(z_in, "z_in")
    if z.shape[0] != layer.in_dim:
        raise DimensionError(f"z_in has dim {z.shape[0]}, layer expects {layer.in_dim}")
    return z


def _contributions(layer: Layer, z: np.ndarray, backward_bias: bool) -> np.ndarray:
    # R x S (or R x S+1 with the bias as a virtual input of value 1)
    contrib = layer.weight * z[None, :]
    if backward_bias:
        contrib = np.hstack([contrib, layer.bias[:, None]])
    return contrib


def jacobian_transition(layer: Layer, upstream_pre, upstream_activation: str = "identity", layer_index: int = 0,
                        rule: Rule | None = None) -> TransitionMatrix:
    """Transposed Jacobian of ``g(sigma(p)) = W sigma(p) + b`` with respect to ``p``.

    ``upstream_pre`` is the pre-activation fed through ``upstream_activation``
    to form the layer input (for the first layer: the network input itself).
    """
    p = _check_input(layer, upstream_pre)
    d = activation_derivative(upstream_activation, p)
    return TransitionMatrix(d[:, None] * layer.weight.T, rule or Rule.gradient(), layer_index, ())


def lrp_beta_transition(layer: Layer, z_in, beta: float, backward_bias: bool = False,
                        layer_index: int = 0) -> TransitionMatrix:
    """LRP-beta transition.

    Positive and negative contributions ``w_ab z_b`` are normalized separately
    and weighted with ``1 + beta`` and ``-beta``. A side whose sum vanishes is
    dropped, and when only one side remains it is weighted by 1 so the column
    still sums to 1. Columns with no contribution at all are zeroed and
    reported as degenerate.
    """
    if not beta >= 0:
        raise ValueError("beta must be >= 0")
    z = _check_input(layer, z_in)
    contrib = _contributions(layer, z, backward_bias)
    pos = np.clip(contrib, 0.0, None)
    neg = np.clip(contrib, None, 0.0)
    psum = pos.sum(axis=1)
    nsum = neg.sum(axis=1)
    scale = np.abs(contrib).sum(axis=1)
    has_p = (scale > 0) & (psum > DEGENERACY_FLOOR * scale)
    has_n = (scale > 0) & (-nsum > DEGENERACY_FLOOR * scale)

    pos_share = np.divide(pos, psum[:, None], out=np.zeros_like(pos), where=has_p[:, None])
    neg_share = np.divide(neg, nsum[:, None], out=np.zeros_like(neg), where=has_n[:, None])
    both = has_p & has_n
    wp = np.where(both, 1.0 + beta, 1.0)
    wn = np.where(both, -beta, 1.0)
    att = wp[:, None] * pos_share + wn[:, None] * neg_share
    degenerate = tuple(int(a) for a in np.flatnonzero(~(has_p | has_n)))
    M = att.T[: layer.in_dim]
    return TransitionMatrix(M, Rule.lrp_beta(beta, backward_bias), layer_index, degenerate)


def lrp_gamma_transition(layer: Layer, z_in, gamma: float, backward_bias: bool = False,
                         layer_index: int = 0) -> TransitionMatrix:
    """LRP-gamma transition: ``(c + gamma c_+) / sum(c + gamma c_+)`` per column,
    with ``c = w_ab z_b``. Columns whose denominator vanishes are zeroed and
    reported as degenerate."""
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    z = _check_input(layer, z_in)
    contrib = _contributions(layer, z, backward_bias)
    terms = contrib + gamma * np.clip(contrib, 0.0, None)
    denom = terms.sum(axis=1)
    scale = np.abs(terms).sum(axis=1)
    ok = (scale > 0) & (np.abs(denom) >= DEGENERACY_FLOOR * scale)
    att = np.divide(terms, denom[:, None], out=np.zeros_like(terms), where=ok[:, None])
    degenerate = tuple(int(a) for a in np.flatnonzero(~ok))
    M = att.T[: layer.in_dim]
    return TransitionMatrix(M, Rule.lrp_gamma(gamma, backward_bias), layer_index, degenerate)


def layer_transition(net: Network, trace: FeatureTrace, i: int, rule: Rule) -> TransitionMatrix:
    """Transition of layer ``i`` at the activations recorded in ``trace``."""
    layer = net.layers[i]
    if rule.is_gradient:
        return jacobian_transition(layer, trace.layer_input_pre(i), net.upstream_activation(i), i, rule)
    z = trace.layer_input(i)
    if rule.kind == "lrp_beta":
        return lrp_beta_transition(layer, z, rule.beta, rule.backward_bias, i)
    return lrp_gamma_transition(layer, z, rule.gamma, rule.backward_bias, i)


def transitions(net: Network, trace: FeatureTrace, rule: Rule) -> list[TransitionMatrix]:
    return [layer_transition(net, trace, i, rule) for i in range(net.depth)]


def check_q(q, net: Network, require_simplex: bool = False) -> np.ndarray:
    q = as_vector(q, "q")
    if q.shape[0] != net.output_dim:
        raise DimensionError(f"q has dim {q.shape[0]}, network output dim is {net.output_dim}")
    if require_simplex and (np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12):
        raise ValueError("q must be non-negative and sum to 1")
    return q


def attribute(net: Network, x, rule: Rule, q, target_layer: int = 0,
              trace: FeatureTrace | None = None) -> AttributionMap:
    """Attribution of ``sum_u q_u f_u`` at feature map ``target_layer`` (0 = input).

    Runs the forward pass, builds the transitions of layers
    ``n-1 .. target_layer`` at the recorded activations and applies them to
    ``q``. For ``gradient_times_input`` the result is multiplied entrywise by
    the feature map it refers to.
    """
    if trace is None:
        trace = forward(net, x)
    q = check_q(q, net)
    if not 0 <= target_layer <= net.depth - 1:
        raise ValueError(f"target_layer must be in [0, {net.depth - 1}], got {target_layer}")
    v = q
    degenerate = {}
    for i in range(net.depth - 1, target_layer - 1, -1):
        tm = layer_transition(net, trace, i, rule)
        if tm.degenerate_columns:
            degenerate[i] = tm.degenerate_columns
        v = tm.matrix @ v
    if rule.kind == "gradient_times_input":
        v = v * trace.layer_input(target_layer)
    return AttributionMap(target_layer, v, rule, q, degenerate)


def attribute_all_layers(net: Network, x, rule: Rule, q, trace: FeatureTrace | None = None) -> list[AttributionMap]:
    """Attribution maps at every feature map; entry ``k`` refers to layer ``k``."""
    if trace is None:
        trace = forward(net, x)
    q = check_q(q, net)
    maps = [None] * net.depth
    v = q
    degenerate = {}
    for i in range(net.depth - 1, -1, -1):
        tm = layer_transition(net, trace, i, rule)
        if tm.degenerate_columns:
            degenerate[i] = tm.degenerate_columns
        v = tm.matrix @ v
        vals = v * trace.layer_input(i) if rule.kind == "gradient_times_input" else v
        maps[i] = AttributionMap(i, vals, rule, q, dict(degenerate))
    return maps


class GradientRange(NamedTuple):
    value: float
    converged: bool


def gradient_value_range(net: Network, lipschitz: float = 1.0) -> GradientRange:
    """``2 L^(n-1) prod_l ||W_l||_2`` with spectral norms from power iteration."""
    if not lipschitz > 0:
        raise ValueError("lipschitz constant must be positive")
    value = 2.0 * lipschitz ** (net.depth - 1)
    converged = True
    for layer in net.layers:
        sv = top_singular_value(layer.weight)
        value *= sv.value
        converged &= sv.converged
    return GradientRange(value, converged)


def map_to_json(amap: AttributionMap) -> str:
    return json.dumps(
        {
            "layer_index": amap.layer_index,
            "rule": amap.rule.to_dict(),
            "q": amap.q.tolist(),
            "degenerate": {str(k): list(v) for k, v in amap.degenerate.items()},
            "values": amap.values.tolist(),
        },
        indent=2,
    )


def map_from_json(text: str) -> AttributionMap:
    d = json.loads(text)
    return AttributionMap(
        int(d["layer_index"]),
        np.array(d["values"], dtype=np.float64),
        Rule.from_dict(d["rule"]),
        np.array(d["q"], dtype=np.float64),
        {int(k): tuple(v) for k, v in d.get("degenerate", {}).items()},
    )


def map_to_csv(amap: AttributionMap) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "value"])
    for i, v in enumerate(amap.values):
        w.writerow([i, repr(float(v))])
    return buf.getvalue()


def values_from_csv(text: str) -> np.ndarray:
    rows = list(csv.DictReader(io.StringIO(text)))
    return np.array([float(r["value"]) for r in sorted(rows, key=lambda r: int(r["index"]))])
