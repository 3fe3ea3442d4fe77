"""Gradient vs LRP-beta=0 convergence sweep on random relu networks.

Writes one JSON and CSV per (weight sigma, m) plus summary.txt into --out.

    python scripts/run_convergence.py --out runs/convergence
"""

import argparse
from pathlib import Path

from attribnet import Augmenter, Rule, convergence_experiment, random_network, summary_table
from attribnet.augment import image_to_vector, random_image
from attribnet.network import layer_rng


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--sigmas", default="1,2", help="weight standard deviations")
    p.add_argument("--m", default="25,50,100")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--noise-sigma", type=float, default=1.0)
    p.add_argument("--norm", choices=("none", "l2"), default="none")
    p.add_argument("--photometric", action="store_true", help="also run on synthetic 3x8x8 images")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/convergence")
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ms = [int(v) for v in args.m.split(",")]
    rules = (Rule.gradient(), Rule.lrp_beta(0.0))
    dims = [args.width] * args.depth + [args.classes]
    bases = [layer_rng(args.seed, 77, j).normal(size=dims[0]) for j in range(args.reps)]

    runs = []
    for k, sw in enumerate(float(v) for v in args.sigmas.split(",")):
        net = random_network(dims, sw, seed=args.seed + k)
        for m in ms:
            run = convergence_experiment(net, bases, *rules, Augmenter("gaussian", args.noise_sigma), m, args.norm, args.seed)
            runs.append(run)
            stem = f"gaussian_sw{sw:g}_{args.norm}_m{m}"
            (out / f"{stem}.json").write_text(run.to_json() + "\n")
            (out / f"{stem}.csv").write_text(run.to_csv())

    if args.photometric:
        net = random_network([192] + dims[1:], 1.0, seed=args.seed + 100)
        images = [image_to_vector(random_image(8, 8, args.seed, j)) for j in range(args.reps)]
        for m in ms:
            run = convergence_experiment(net, images, *rules, Augmenter("photometric", image_shape=(8, 8)), m, args.norm, args.seed)
            runs.append(run)
            stem = f"photometric_{args.norm}_m{m}"
            (out / f"{stem}.json").write_text(run.to_json() + "\n")
            (out / f"{stem}.csv").write_text(run.to_csv())

    table = summary_table(runs)
    (out / "summary.txt").write_text(table + "\n")
    print(table)


if __name__ == "__main__":
    main()
