"""Command line front end: ``attribnet {gen,attribute,bounds,converge}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .attribution import Rule, attribute, map_to_csv, map_to_json
from .augment import Augmenter, PhotometricRanges, image_to_vector, random_image
from .bounds import verify_network
from .experiment import convergence_experiment, summary_table
from .network import ParseError, layer_rng, load_network, random_network, serialize_network

SEED_ENV = "ATTRIBNET_SEED"
RULE_NAMES = {"gradient": "gradient", "grad-x-input": "gradient_times_input", "lrp-beta": "lrp_beta", "lrp-gamma": "lrp_gamma"}

# substream tags so weights, base inputs and augmentations never share draws
_BASE_STREAM = 7


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def make_rule(name: str, beta: float = 0.0, gamma: float = 100.0, backward_bias: bool = False) -> Rule:
    if name not in RULE_NAMES:
        raise UsageError(f"unknown rule {name!r}; choose from {', '.join(RULE_NAMES)}")
    kind = RULE_NAMES[name]
    try:
        if kind == "lrp_beta":
            return Rule.lrp_beta(beta, backward_bias)
        if kind == "lrp_gamma":
            return Rule.lrp_gamma(gamma, backward_bias)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return Rule(kind)


def parse_rule_spec(spec: str, backward_bias: bool = False) -> Rule:
    """``gradient``, ``grad-x-input``, ``lrp-beta:1`` or ``lrp-gamma:100``."""
    name, _, param = spec.partition(":")
    if name == "lrp-beta":
        return make_rule(name, beta=float(param or 0.0), backward_bias=backward_bias)
    if name == "lrp-gamma":
        return make_rule(name, gamma=float(param or 100.0), backward_bias=backward_bias)
    if param:
        raise UsageError(f"rule {name!r} takes no parameter")
    return make_rule(name)


def parse_q(spec: str, out_dim: int) -> np.ndarray:
    if spec == "uniform":
        return np.full(out_dim, 1.0 / out_dim)
    if spec.startswith("onehot:"):
        try:
            k = int(spec.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad onehot index in {spec!r}") from None
        if not 0 <= k < out_dim:
            raise UsageError(f"onehot index {k} out of range for output dim {out_dim}")
        q = np.zeros(out_dim)
        q[k] = 1.0
        return q
    if spec.startswith("csv:"):
        q = read_vector(Path(spec.split(":", 1)[1]))
        if q.shape[0] != out_dim:
            raise UsageError(f"q has dim {q.shape[0]}, network output dim is {out_dim}")
        return q
    raise UsageError(f"--q must be uniform, onehot:K or csv:PATH, got {spec!r}")


def read_vector(path: Path) -> np.ndarray:
    text = path.read_text().replace(",", " ")
    try:
        return np.array([float(t) for t in text.split()])
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def read_vectors(path: Path) -> list[np.ndarray]:
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        try:
            out.append(np.array([float(t) for t in line.split()]))
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from None
    return out


def resolve_input(args, dim: int, seed: int) -> np.ndarray:
    if args.input_file:
        x = read_vector(Path(args.input_file))
    elif args.input == "random":
        x = layer_rng(seed, _BASE_STREAM, 0).normal(size=dim)
    elif args.input:
        try:
            x = np.array(_float_list(args.input))
        except argparse.ArgumentTypeError as exc:
            raise UsageError(str(exc)) from None
    else:
        raise UsageError("an input is required: --input v1,v2,... | --input random | --input-file PATH")
    if x.shape[0] != dim:
        raise UsageError(f"input has dim {x.shape[0]}, network expects {dim}")
    return x


def _load(path: str):
    try:
        return load_network(path)
    except FileNotFoundError:
        raise UsageError(f"network file not found: {path}") from None
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text if text.endswith("\n") else text + "\n")


def cmd_gen(args) -> int:
    dims = args.dims
    if len(dims) < 2:
        raise UsageError("--dims needs at least two widths (input and output)")
    if any(d < 1 for d in dims):
        raise UsageError("--dims entries must be positive")
    if not args.sigma > 0:
        raise UsageError("--sigma must be positive")
    net = random_network(dims, args.sigma, args.seed)
    _write(serialize_network(net), Path(args.out) if args.out else None)
    return 0


def _add_rule_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rule", default="lrp-beta", help="gradient | grad-x-input | lrp-beta | lrp-gamma")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=100.0)
    p.add_argument("--backward-bias", action="store_true", help="treat biases as absorbing virtual inputs")


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="comma-separated input vector, or 'random' (seeded normal draw)")
    p.add_argument("--input-file", help="file holding the input vector")


def cmd_attribute(args) -> int:
    net = _load(args.net)
    rule = make_rule(args.rule, args.beta, args.gamma, args.backward_bias)
    x = resolve_input(args, net.input_dim, args.seed)
    q = parse_q(args.q, net.output_dim)
    if not 0 <= args.layer <= net.depth - 1:
        raise UsageError(f"--layer must be in [0, {net.depth - 1}] for a depth-{net.depth} network")
    amap = attribute(net, x, rule, q, args.layer)
    out = Path(args.out) if args.out else None
    fmt = args.format or ("json" if out is not None and out.suffix == ".json" else "csv")
    _write(map_to_json(amap) if fmt == "json" else map_to_csv(amap), out)
    return 0


def cmd_bounds(args) -> int:
    net = _load(args.net)
    rule = make_rule(args.rule, args.beta, args.gamma, args.backward_bias)
    x = resolve_input(args, net.input_dim, args.seed)
    q = parse_q(args.q, net.output_dim)
    if rule.is_lrp and (np.any(q < 0) or abs(q.sum() - 1) > 1e-12):
        raise UsageError("bounds checks need q >= 0 with sum 1")
    report = verify_network(net, x, rule, q)
    print(report.to_table())
    if args.out:
        _write(report.to_json(), Path(args.out))
    return 1 if report.failed else 0


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None


def parse_ranges(text: str | None, base: PhotometricRanges) -> PhotometricRanges:
    """``brightness=0.9:1.1,hue=-0.05:0.05`` overrides on top of ``base``."""
    d = base.to_dict()
    if text:
        for item in text.split(","):
            name, _, span = item.partition("=")
            if name not in d:
                raise UsageError(f"unknown photometric range {name!r}")
            try:
                lo, hi = (float(v) for v in span.split(":"))
            except ValueError:
                raise UsageError(f"range {item!r} must look like name=lo:hi") from None
            d[name] = [lo, hi]
    try:
        return PhotometricRanges.from_dict(d)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _bases(args, net, aug: Augmenter, reps: int, seed: int) -> list[np.ndarray]:
    spec = args.bases or "random"
    if spec == "random":
        if aug.kind == "photometric":
            h, w = aug.image_shape
            return [image_to_vector(random_image(h, w, seed, j)) for j in range(reps)]
        return [layer_rng(seed, _BASE_STREAM, j).normal(size=net.input_dim) for j in range(reps)]
    vectors = read_vectors(Path(spec))
    if len(vectors) < reps:
        raise UsageError(f"{spec} holds {len(vectors)} inputs, --reps asks for {reps}")
    for v in vectors[:reps]:
        if v.shape[0] != net.input_dim:
            raise UsageError(f"base input of dim {v.shape[0]} does not match network input dim {net.input_dim}")
    return vectors[:reps]


def cmd_converge(args) -> int:
    cfg = _load_config(args.config)
    net = _load(args.net)
    reps = args.reps if args.reps is not None else int(cfg.get("reps", 100))
    if reps < 1:
        raise UsageError("--reps must be >= 1")
    ms = args.m if args.m is not None else [int(v) for v in cfg.get("m", [25])]
    if not ms or any(m < 1 for m in ms):
        raise UsageError("--m values must be >= 1")
    kind = args.aug or cfg.get("aug", "gaussian")
    norm = args.norm or cfg.get("norm", "none")
    if norm not in ("none", "l2"):
        raise UsageError("--norm must be none or l2")
    ranges = parse_ranges(args.ranges, PhotometricRanges.from_dict(cfg.get("ranges", {})))
    if kind == "gaussian":
        sigma = args.noise_sigma if args.noise_sigma is not None else float(cfg.get("noise_sigma", 1.0))
        if sigma < 0:
            raise UsageError("--noise-sigma must be >= 0")
        aug = Augmenter("gaussian", noise_sigma=sigma)
    elif kind == "photometric":
        if net.input_dim % 3:
            raise UsageError(f"photometric augmentation needs input dim divisible by 3, got {net.input_dim}")
        side = int(round((net.input_dim // 3) ** 0.5))
        shape = tuple(cfg.get("image_shape", (side, side)))
        if 3 * shape[0] * shape[1] != net.input_dim:
            raise UsageError(f"network input dim {net.input_dim} is not a 3x{shape[0]}x{shape[1]} image")
        aug = Augmenter("photometric", ranges=ranges, image_shape=shape)
    else:
        raise UsageError("--aug must be gaussian or photometric")
    rules = args.rules or cfg.get("rules", "gradient,lrp-beta:0")
    names = [r for r in rules.split(",") if r]
    if len(names) != 2:
        raise UsageError("--rules needs exactly two comma-separated rules, e.g. gradient,lrp-beta:0")
    rule_a, rule_b = (parse_rule_spec(r) for r in names)

    bases = _bases(args, net, aug, reps, args.seed)
    runs = [convergence_experiment(net, bases, rule_a, rule_b, aug, m, norm, args.seed) for m in ms]
    table = summary_table(runs)
    print(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for run in runs:
            stem = f"{aug.kind}_{norm}_m{run.m}"
            (out / f"{stem}.json").write_text(run.to_json() + "\n")
            (out / f"{stem}.csv").write_text(run.to_csv())
        (out / "summary.txt").write_text(table + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attribnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help=f"random seed (default: ${SEED_ENV} or 0)")
        p.add_argument("--out", help="output path")

    p = sub.add_parser("gen", help="generate a random relu network")
    p.add_argument("--dims", type=_int_list, required=True, help="widths d0,d1,...,dn")
    p.add_argument("--sigma", type=float, default=1.0, help="weight standard deviation")
    common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("attribute", help="compute an attribution map")
    p.add_argument("--net", required=True)
    _add_input_flags(p)
    _add_rule_flags(p)
    p.add_argument("--q", default="uniform", help="uniform | onehot:K | csv:PATH")
    p.add_argument("--layer", type=int, default=0, help="feature map index, 0 = input")
    p.add_argument("--format", choices=("csv", "json"))
    common(p)
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("bounds", help="verify singular-value and value-range caps")
    p.add_argument("--net", required=True)
    _add_input_flags(p)
    _add_rule_flags(p)
    p.add_argument("--q", default="uniform", help="uniform | onehot:K | csv:PATH")
    common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("converge", help="run the augmentation convergence experiment")
    p.add_argument("--net", required=True)
    p.add_argument("--bases", help="file with one base input per line, or 'random' (default)")
    p.add_argument("--rules", help="pair like gradient,lrp-beta:0 (gradient-type rule first)")
    p.add_argument("--aug", choices=("gaussian", "photometric"))
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--ranges", help="photometric overrides, e.g. brightness=0.9:1.1,hue=-0.05:0.05")
    p.add_argument("--config", help="JSON file with defaults (m, reps, aug, norm, noise_sigma, ranges, rules)")
    p.add_argument("--m", type=_int_list, help="augmentations per half, comma-separated for a sweep")
    p.add_argument("--reps", type=int, help="number of base inputs")
    p.add_argument("--norm", choices=("none", "l2"))
    common(p)
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except UsageError as exc:
        parser.exit(2, f"attribnet {args.command}: error: {exc}\n")
    except ParseError as exc:
        parser.exit(2, f"attribnet {args.command}: parse error: {exc}\n")
    except ValueError as exc:
        parser.exit(2, f"attribnet {args.command}: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
