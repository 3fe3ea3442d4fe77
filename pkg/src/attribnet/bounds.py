"""Closed-form caps for LRP transitions and their empirical verification.

The caps cover the dominant singular value of one-layer LRP-beta transitions,
the singular value attained by the normalized ones vector, the per-depth sums
of positive and negative attribution mass under LRP-beta and LRP-gamma, and
the resulting value ranges that feed Hoeffding's inequality.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .attribution import (
    Rule,
    TransitionMatrix,
    attribute_all_layers,
    check_q,
    gradient_value_range,
    layer_transition,
)
from .linalg import top_singular_value
from .network import FeatureTrace, Network, forward

SLACK = 1e-9


class OneVectorCheck(NamedTuple):
    empirical: float
    expected: float
    skipped: str | None = None

    @property
    def ok(self) -> bool:
        return self.skipped is None and abs(self.empirical - self.expected) < 1e-9


def one_vector_singular_check(tm: TransitionMatrix) -> OneVectorCheck:
    """Compare ``||M^T 1_S / sqrt(S)||`` with ``sqrt(R / S)``."""
    S, R = tm.matrix.shape
    expected = math.sqrt(R / S)
    if not tm.rule.is_lrp:
        return OneVectorCheck(float("nan"), expected, "rule is not relevance conserving")
    if tm.rule.backward_bias:
        return OneVectorCheck(float("nan"), expected, "backward bias breaks conservation")
    if tm.degenerate_columns:
        return OneVectorCheck(float("nan"), expected, f"degenerate columns {list(tm.degenerate_columns)}")
    u = np.full(S, 1.0 / math.sqrt(S))
    return OneVectorCheck(float(np.linalg.norm(tm.matrix.T @ u)), expected)


def beta_svd_cap(R: int, beta: float) -> tuple[float, float]:
    """(tight, relaxed) caps on the singular values of an LRP-beta transition."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    tight = math.sqrt(R) * math.sqrt((1 + beta) ** 2 + beta**2)
    relaxed = math.sqrt(R) * (1 + math.sqrt(2) * beta)
    return tight, relaxed


def beta_sequential_caps(t: int, beta: float) -> tuple[float, float]:
    """(pos_cap, neg_floor) for the attribution sums ``t`` layers below the output."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta == 0:
        return 1.0, 0.0
    return 2 ** (t - 1) * (1 + beta) ** t, -(2 ** (t - 1)) * beta * (1 + beta) ** (t - 1)


def b_gamma(gamma: float) -> float:
    if not gamma > 1:
        raise ValueError("gamma must be > 1")
    r = math.sqrt(gamma)
    return max(1.0 / (r - 1.0), (1.0 + gamma) / (1.0 + gamma - r))


def gamma_sequential_caps(t: int, gamma: float) -> tuple[float, float, float]:
    """(pos_cap, neg_floor, b_gamma) for LRP-gamma, valid when gamma > 1."""
    if t < 1:
        raise ValueError("t must be >= 1")
    b = b_gamma(gamma)
    r = math.sqrt(gamma)
    grow = 2 ** (t - 1) * b ** (t - 1)
    return grow * (1 + gamma) / (1 + gamma - r), -grow / (r - 1), b


def beta_value_range(n: int, beta: float) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta == 0:
        return 1.0
    return 2 ** (n - 1) * (1 + 2 * beta) * (1 + beta) ** (n - 1)


def gamma_value_range(n: int, gamma: float) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    b = b_gamma(gamma)
    r = math.sqrt(gamma)
    return 2 ** (n - 1) * b ** (n - 1) * ((1 + gamma) / (1 + gamma - r) + 1 / (r - 1))


def expected_weight_norm(R: int, sigma: float) -> float:
    """``sqrt(R) * sigma``.

    This is the root of ``E||w||^2`` for ``w ~ N(0, sigma^2 I_R)``; the exact
    mean of the norm is smaller by the chi-distribution factor
    ``sqrt(2) Gamma((R+1)/2) / (Gamma(R/2) sqrt(R))``.
    """
    if R < 1 or not sigma > 0:
        raise ValueError("need R >= 1 and sigma > 0")
    return math.sqrt(R) * sigma


@dataclass
class NeuronCondition:
    layer_index: int
    neuron: int
    neg_mass: float
    pos_mass: float
    satisfied: bool | None  # None: no positive mass, outside the condition's scope


@dataclass
class GammaCondition:
    gamma: float
    per_neuron: list[NeuronCondition] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.satisfied is not False for c in self.per_neuron)

    def layer_ok(self, layer_index: int) -> bool:
        return all(c.satisfied is not False for c in self.per_neuron if c.layer_index == layer_index)

    @property
    def out_of_scope(self) -> list[NeuronCondition]:
        return [c for c in self.per_neuron if c.satisfied is None]


def gamma_condition(trace: FeatureTrace, net: Network, gamma: float) -> GammaCondition:
    """Check ``gamma^(-1/2) * neg_mass < pos_mass`` for every neuron of every layer."""
    if not gamma > 1:
        raise ValueError("gamma must be > 1")
    out = GammaCondition(gamma)
    scale = gamma**-0.5
    for i, layer in enumerate(net.layers):
        contrib = layer.weight * trace.layer_input(i)[None, :]
        pos = np.clip(contrib, 0.0, None).sum(axis=1)
        neg = -np.clip(contrib, None, 0.0).sum(axis=1)
        for a in range(layer.out_dim):
            sat = bool(scale * neg[a] < pos[a]) if pos[a] > 0 else None
            out.per_neuron.append(NeuronCondition(i, a, float(neg[a]), float(pos[a]), sat))
    return out


@dataclass
class LayerRow:
    layer_index: int
    t: int
    rule: str
    empirical_sigma_max: float
    sigma_cap: float | None
    one_vector_sv: float | None
    one_vector_expected: float | None
    pos_sum: float
    pos_cap: float | None
    neg_sum: float
    neg_floor: float | None
    gamma_condition_ok: bool | None
    degenerate: bool
    sigma_status: str = "n/a"
    one_vector_status: str = "n/a"
    lemma_status: str = "n/a"
    note: str = ""

    @property
    def failed(self) -> bool:
        return "fail" in (self.sigma_status, self.one_vector_status, self.lemma_status)


@dataclass
class BoundsReport:
    rule: Rule
    dims: list[int]
    per_layer: list[LayerRow]
    value_range: float | None
    value_range_kind: str
    total_relevance: float
    gamma_condition_ok: bool | None = None

    @property
    def failed(self) -> bool:
        return any(r.failed for r in self.per_layer)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule.to_dict(),
            "dims": self.dims,
            "global": {
                "value_range": self.value_range,
                "value_range_kind": self.value_range_kind,
                "total_relevance": self.total_relevance,
                "gamma_condition_ok": self.gamma_condition_ok,
                "failed": self.failed,
            },
            "per_layer": [asdict(r) for r in self.per_layer],
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2)

    def to_table(self) -> str:
        cols = [
            ("layer", lambda r: str(r.layer_index)),
            ("t", lambda r: str(r.t)),
            ("sigma_max", lambda r: _num(r.empirical_sigma_max)),
            ("sigma_cap", lambda r: _num(r.sigma_cap)),
            ("sv(1)", lambda r: _num(r.one_vector_sv)),
            ("sqrt(R/S)", lambda r: _num(r.one_vector_expected)),
            ("pos_sum", lambda r: _num(r.pos_sum)),
            ("pos_cap", lambda r: _num(r.pos_cap)),
            ("neg_sum", lambda r: _num(r.neg_sum)),
            ("neg_floor", lambda r: _num(r.neg_floor)),
            ("sigma", lambda r: r.sigma_status),
            ("1-vec", lambda r: r.one_vector_status),
            ("lemma", lambda r: r.lemma_status),
            ("note", lambda r: r.note),
        ]
        cells = [[h for h, _ in cols]] + [[f(r) for _, f in cols] for r in self.per_layer]
        widths = [max(len(row[j]) for row in cells) for j in range(len(cols))]
        lines = [f"rule {self.rule.label}  dims {' '.join(map(str, self.dims))}"]
        for row in cells:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        lines.append(f"value range ({self.value_range_kind}): {_num(self.value_range)}")
        lines.append(f"total relevance at input: {_num(self.total_relevance)}")
        lines.append("RESULT: " + ("FAIL" if self.failed else "ok"))
        return "\n".join(lines)


def _num(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return f"{v:.6g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def verify_network(net: Network, x, rule: Rule, q, trace: FeatureTrace | None = None) -> BoundsReport:
    """Evaluate every applicable cap on ``net`` at input ``x``.

    Row ``t`` (1..n) describes the feature map ``n - t`` and the transition of
    the layer consuming it. Rows whose transition chain contains degenerate
    columns are informational only, as are LRP-gamma lemma rows when the
    gamma condition fails somewhere in the network or gamma <= 1.
    """
    if trace is None:
        trace = forward(net, x)
    q = check_q(q, net, require_simplex=rule.is_lrp)
    n = net.depth
    maps = attribute_all_layers(net, x, rule, q, trace=trace)

    gcond = None
    gamma_ok = None
    gamma_note = ""
    if rule.kind == "lrp_gamma":
        if rule.gamma > 1:
            gcond = gamma_condition(trace, net, rule.gamma)
            gamma_ok = gcond.ok
            if not gamma_ok:
                gamma_note = "gamma condition violated"
        else:
            gamma_ok = False
            gamma_note = "gamma <= 1"

    rows = []
    chain_degenerate = False
    for t in range(1, n + 1):
        k = n - t
        tm = layer_transition(net, trace, k, rule)
        chain_degenerate |= tm.is_degenerate
        sv = top_singular_value(tm.matrix)
        vals = maps[k].values
        pos_sum = float(vals[vals > 0].sum())
        neg_sum = float(vals[vals < 0].sum())

        sigma_cap = beta_svd_cap(net.layers[k].out_dim, rule.beta)[0] if rule.kind == "lrp_beta" else None
        ov = one_vector_singular_check(tm) if rule.is_lrp else None

        pos_cap = neg_floor = None
        if rule.kind == "lrp_beta":
            pos_cap, neg_floor = beta_sequential_caps(t, rule.beta)
        elif rule.kind == "lrp_gamma" and rule.gamma > 1:
            pos_cap, neg_floor, _ = gamma_sequential_caps(t, rule.gamma)

        row = LayerRow(
            layer_index=k,
            t=t,
            rule=rule.label,
            empirical_sigma_max=sv.value,
            sigma_cap=sigma_cap,
            one_vector_sv=None if ov is None or ov.skipped else ov.empirical,
            one_vector_expected=None if ov is None else ov.expected,
            pos_sum=pos_sum,
            pos_cap=pos_cap,
            neg_sum=neg_sum,
            neg_floor=neg_floor,
            gamma_condition_ok=gamma_ok,
            degenerate=tm.is_degenerate,
        )
        notes = []
        if not sv.converged:
            notes.append("power iteration did not converge")
        if chain_degenerate:
            notes.append("degenerate columns in chain")
        elif rule.backward_bias:
            notes.append("backward bias: caps not applicable")
        else:
            if sigma_cap is not None:
                row.sigma_status = _status(sv.value <= sigma_cap * (1 + SLACK))
            if ov is not None and ov.skipped is None:
                row.one_vector_status = _status(ov.ok)
            lemma_applies = pos_cap is not None and (rule.kind == "lrp_beta" or gamma_ok)
            if lemma_applies:
                row.lemma_status = _status(pos_sum <= pos_cap * (1 + SLACK) and neg_sum >= neg_floor * (1 + SLACK))
            elif gamma_note:
                notes.append(gamma_note)
        row.note = "; ".join(notes)
        rows.append(row)

    if rule.kind == "lrp_beta":
        vr, kind = beta_value_range(n, rule.beta), "lrp-beta"
    elif rule.kind == "lrp_gamma":
        vr, kind = (gamma_value_range(n, rule.gamma), "lrp-gamma") if rule.gamma > 1 else (None, "undefined for gamma <= 1")
    else:
        gr = gradient_value_range(net)
        vr, kind = gr.value, "gradient" if gr.converged else "gradient (power iteration not converged)"

    return BoundsReport(rule, net.dims, rows, vr, kind, maps[0].total, gamma_ok)
