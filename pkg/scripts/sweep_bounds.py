"""Check every bound on a sweep of seeded random relu networks.

Prints one line per rule with the number of layer rows that passed, failed or
were not applicable, and writes the failing reports (if any) as JSON.

    python scripts/sweep_bounds.py --nets 500
"""

import argparse
from collections import Counter
from pathlib import Path

import numpy as np

from attribnet import Rule, random_network, verify_network
from attribnet.network import layer_rng


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nets", type=int, default=500)
    p.add_argument("--max-depth", type=int, default=6)
    p.add_argument("--max-width", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/bounds")
    args = p.parse_args()

    rules = [Rule.lrp_beta(b) for b in (0.0, 0.5, 1.0, 2.0)] + [Rule.lrp_gamma(g) for g in (4.0, 100.0, 1000.0)]
    counts = {r.label: Counter() for r in rules}
    failures = []
    for k in range(args.nets):
        g = layer_rng(args.seed, 1, k)
        depth = int(g.integers(1, args.max_depth + 1))
        dims = [int(v) for v in g.integers(2, args.max_width + 1, size=depth + 1)]
        net = random_network(dims, float(g.choice([0.5, 1.0, 2.0])), seed=args.seed * 100_000 + k)
        x = g.normal(size=dims[0])
        q = np.full(net.output_dim, 1.0 / net.output_dim)
        for rule in rules:
            report = verify_network(net, x, rule, q)
            for row in report.per_layer:
                for status in (row.sigma_status, row.one_vector_status, row.lemma_status):
                    counts[rule.label][status] += 1
            if report.failed:
                failures.append((k, report))

    for label, c in counts.items():
        print(f"{label:>16}  pass {c['pass']:6d}  fail {c['fail']:4d}  n/a {c['n/a']:6d}")
    if failures:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for k, report in failures:
            (out / f"net{k}_{report.rule.label}.json").write_text(report.to_json() + "\n")
        print(f"{len(failures)} failing reports written to {out}")
    else:
        print("no bound violations")


if __name__ == "__main__":
    main()
