import numpy as np
import pytest

from attribnet.attribution import Rule
from attribnet.augment import Augmenter, image_to_vector, random_image
from attribnet.experiment import ConvergenceRun, convergence_experiment, map_for_statistic, summary_table
from attribnet.network import Layer, Network, layer_rng, random_network


@pytest.fixture(scope="module")
def small_net():
    return random_network([6, 8, 8, 3], 1.0, seed=11)


def _bases(n, dim, seed=0):
    return [layer_rng(seed, 99, j).normal(size=dim) for j in range(n)]


def test_self_comparison_is_degenerate(small_net):
    run = convergence_experiment(small_net, _bases(5, 6), Rule.gradient(), Rule.gradient(), Augmenter(), m=4)
    assert run.wilcoxon.method == "degenerate" and run.wilcoxon_p == 1.0
    assert run.median_ratio == 1.0


def test_reproducible_and_seed_sensitive(small_net):
    args = (small_net, _bases(6, 6), Rule.gradient(), Rule.lrp_beta(0.0), Augmenter(), 5)
    a = convergence_experiment(*args, seed=3)
    b = convergence_experiment(*args, seed=3)
    c = convergence_experiment(*args, seed=4)
    assert a.to_json() == b.to_json()
    assert a.to_json() != c.to_json()


def test_json_and_csv_round_trip(small_net):
    run = convergence_experiment(small_net, _bases(6, 6), Rule.gradient(), Rule.lrp_beta(0.0), Augmenter(), 5, "l2")
    back = ConvergenceRun.from_json(run.to_json())
    assert back.to_dict() == run.to_dict()
    lines = run.to_csv().strip().splitlines()
    assert lines[0] == "index,s_a,s_b,difference"
    for line, p in zip(lines[1:], run.per_sample):
        i, sa, sb, _ = line.split(",")
        assert int(i) == p.index and float(sa) == p.s_a and float(sb) == p.s_b


def test_squared_gradient_map(small_net):
    x = np.linspace(-1, 1, 6)
    from attribnet.attribution import attribute
    g = attribute(small_net, x, Rule.gradient(), [1.0, 0.0, 0.0]).values
    np.testing.assert_array_equal(map_for_statistic(small_net, x, Rule.gradient(), np.array([1.0, 0.0, 0.0])), g**2)


def test_zero_mean_maps_are_excluded_under_l2():
    # all-negative weights into a relu layer: every hidden unit is dead, maps are zero
    net = Network((Layer(-np.ones((2, 2)), np.full(2, -100.0), "relu"), Layer(np.ones((1, 2)), [0.0], "identity")))
    run = convergence_experiment(net, [np.ones(2)] * 3, Rule.gradient(), Rule.lrp_beta(0.0), Augmenter(noise_sigma=0.1), 3, "l2")
    assert run.excluded == [0, 1, 2] and run.per_sample == []
    with pytest.raises(ValueError):
        convergence_experiment(net, [np.ones(2)], Rule.gradient(), Rule.lrp_beta(0.0), Augmenter(), 3, "cosine")


def test_statistic_shrinks_with_m(small_net):
    bases = _bases(20, 6)
    lo = convergence_experiment(small_net, bases, Rule.gradient(), Rule.lrp_beta(0.0), Augmenter(), 10)
    hi = convergence_experiment(small_net, bases, Rule.gradient(), Rule.lrp_beta(0.0), Augmenter(), 40)
    assert hi.median_a < lo.median_a and hi.median_b < lo.median_b


def test_photometric_run_and_summary_table():
    net = random_network([48, 16, 4], 1.0, seed=2)
    bases = [image_to_vector(random_image(4, 4, seed=0, index=j)) for j in range(4)]
    aug = Augmenter("photometric", image_shape=(4, 4))
    run = convergence_experiment(net, bases, Rule.gradient(), Rule.lrp_beta(0.0), aug, 3)
    table = summary_table([run, run])
    lines = table.splitlines()
    assert lines[0].split()[:4] == ["augmentation", "norm", "comparison", "m"]
    assert len(lines) == 3 and lines[1].startswith("photometric")
