"""Convergence experiment: how fast do averages of augmented attribution maps settle?

For each base input, 2m augmentations are drawn from disjoint substreams
``(base, 0..m-1)`` and ``(base, m..2m-1)``. Each rule's maps are averaged per
half and the halves are compared with s1 (unnormalized) or s2 (l2-normalized
means). The per-input statistics of the two rules are then compared by the
ratio of their medians and a one-sided paired Wilcoxon test.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .attribution import Rule, attribute
from .augment import Augmenter
from .network import Network, forward
from .stats import UndefinedStatistic, WilcoxonResult, s1, s2, wilcoxon_one_sided


@dataclass
class SamplePair:
    index: int
    s_a: float
    s_b: float


@dataclass
class ConvergenceRun:
    rule_a: Rule
    rule_b: Rule
    m: int
    reps: int
    normalization: str
    seed: int
    augmentation: dict
    per_sample: list[SamplePair]
    median_a: float
    median_b: float
    median_ratio: float
    wilcoxon: WilcoxonResult
    excluded: list[int] = field(default_factory=list)
    zero_handling: str = "wilcoxon (zero differences dropped)"

    @property
    def wilcoxon_p(self) -> float:
        return self.wilcoxon.p

    def to_dict(self) -> dict:
        return {
            "rule_a": self.rule_a.to_dict(),
            "rule_b": self.rule_b.to_dict(),
            "m": self.m,
            "reps": self.reps,
            "normalization": self.normalization,
            "seed": self.seed,
            "augmentation": self.augmentation,
            "median_a": self.median_a,
            "median_b": self.median_b,
            "median_ratio": self.median_ratio,
            "wilcoxon": self.wilcoxon._asdict(),
            "excluded": self.excluded,
            "zero_handling": self.zero_handling,
            "per_sample": [{"index": p.index, "s_a": p.s_a, "s_b": p.s_b} for p in self.per_sample],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> ConvergenceRun:
        d = json.loads(text)
        return cls(
            Rule.from_dict(d["rule_a"]),
            Rule.from_dict(d["rule_b"]),
            d["m"],
            d["reps"],
            d["normalization"],
            d["seed"],
            d["augmentation"],
            [SamplePair(p["index"], p["s_a"], p["s_b"]) for p in d["per_sample"]],
            d["median_a"],
            d["median_b"],
            d["median_ratio"],
            WilcoxonResult(**d["wilcoxon"]),
            d["excluded"],
            d["zero_handling"],
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "s_a", "s_b", "difference"])
        for p in self.per_sample:
            w.writerow([p.index, repr(p.s_a), repr(p.s_b), repr(p.s_a - p.s_b)])
        return buf.getvalue()


def map_for_statistic(net: Network, x: np.ndarray, rule: Rule, q: np.ndarray) -> np.ndarray:
    """Input-space map as averaged by the experiment; the plain gradient is squared."""
    values = attribute(net, x, rule, q, 0).values
    return values**2 if rule.kind == "gradient" else values


def _statistic(normalization: str):
    if normalization == "none":
        return s1
    if normalization == "l2":
        return s2
    raise ValueError(f"normalization must be 'none' or 'l2', got {normalization!r}")


def _q_for(net: Network, x: np.ndarray, q) -> np.ndarray:
    if q is None:
        out = forward(net, x).output
        e = np.zeros(net.output_dim)
        e[int(np.argmax(out))] = 1.0
        return e
    return np.asarray(q, dtype=np.float64)


def convergence_experiment(
    net: Network,
    base_inputs,
    rule_a: Rule,
    rule_b: Rule,
    augmenter: Augmenter,
    m: int,
    normalization: str = "none",
    seed: int = 0,
    q=None,
) -> ConvergenceRun:
    """Compare how quickly two rules' averaged maps converge.

    ``rule_a`` is expected to be the gradient-type rule so that a median ratio
    above 1 means rule_a converges more slowly. ``q`` defaults to the one-hot
    vector of the class predicted for each base input.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    base_inputs = [np.asarray(x, dtype=np.float64) for x in base_inputs]
    if not base_inputs:
        raise ValueError("need at least one base input")
    stat = _statistic(normalization)

    pairs, excluded = [], []
    for j, x in enumerate(base_inputs):
        qj = _q_for(net, x, q)
        augmented = [augmenter(x, seed, (j, i)) for i in range(2 * m)]
        maps_a = [map_for_statistic(net, xi, rule_a, qj) for xi in augmented]
        maps_b = maps_a if rule_b == rule_a else [map_for_statistic(net, xi, rule_b, qj) for xi in augmented]
        try:
            sa = stat(maps_a[:m], maps_a[m:])
            sb = stat(maps_b[:m], maps_b[m:])
        except UndefinedStatistic:
            excluded.append(j)
            continue
        pairs.append(SamplePair(j, sa, sb))

    s_a = np.array([p.s_a for p in pairs])
    s_b = np.array([p.s_b for p in pairs])
    if pairs:
        med_a, med_b = float(np.median(s_a)), float(np.median(s_b))
        ratio = med_a / med_b if med_b > 0 else (1.0 if med_a == 0 else float("inf"))
    else:
        med_a = med_b = ratio = float("nan")
    test = wilcoxon_one_sided(s_a - s_b, "greater") if pairs else WilcoxonResult(0.0, 1.0, "degenerate", 0)
    return ConvergenceRun(
        rule_a, rule_b, m, len(base_inputs), normalization, seed, augmenter.to_dict(),
        pairs, med_a, med_b, ratio, test, excluded,
    )


def summary_table(runs: list[ConvergenceRun]) -> str:
    """Aligned table with one row per run: augmentation, m, p-value, ratio."""
    header = ["augmentation", "norm", "comparison", "m", "p-value", "ratio", "median_a", "median_b"]
    rows = [header]
    for r in runs:
        rows.append([
            r.augmentation["kind"],
            r.normalization,
            f"{r.rule_a.label} vs {r.rule_b.label}",
            str(r.m),
            f"{r.wilcoxon.p:.3g}",
            f"{r.median_ratio:.4g}",
            f"{r.median_a:.4g}",
            f"{r.median_b:.4g}",
        ])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows)
