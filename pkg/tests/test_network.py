import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from attribnet.linalg import DimensionError
from attribnet.network import (
    Layer,
    Network,
    ParseError,
    activate,
    forward,
    gelu,
    gelu_derivative,
    parse_network,
    random_network,
    serialize_network,
)


def test_single_identity_layer_keeps_pre_and_post():
    net = Network((Layer(np.eye(2), np.zeros(2), "relu"),))
    tr = forward(net, [1.0, -1.0])
    np.testing.assert_array_equal(tr.output, [1.0, -1.0])
    np.testing.assert_array_equal(tr.post_activations[0], [1.0, 0.0])


def test_two_layer_hand_forward():
    net = Network((Layer([[1.0, 1.0]], [0.0], "relu"), Layer([[2.0]], [0.0], "identity")))
    np.testing.assert_array_equal(forward(net, [1.0, 2.0]).output, [6.0])


def test_zero_input_zero_bias_gives_zero_output():
    net = random_network([5, 4, 3], 1.0, seed=3)
    np.testing.assert_array_equal(forward(net, np.zeros(5)).output, np.zeros(3))


def test_forward_rejects_wrong_dim():
    net = random_network([3, 2], 1.0, seed=0)
    with pytest.raises(DimensionError):
        forward(net, [1.0, 2.0])


def test_incompatible_layers_rejected():
    with pytest.raises(DimensionError):
        Network((Layer(np.ones((3, 2)), np.zeros(3)), Layer(np.ones((1, 4)), np.zeros(1), "identity")))


def test_random_network_shapes_and_tags():
    net = random_network([4, 3, 2], 1.0, seed=11)
    assert [l.weight.shape for l in net.layers] == [(3, 4), (2, 3)]
    assert [l.activation for l in net.layers] == ["relu", "identity"]
    assert all(not l.bias.any() for l in net.layers)


def test_random_network_is_deterministic():
    a = serialize_network(random_network([4, 3, 2], 0.7, seed=5))
    b = serialize_network(random_network([4, 3, 2], 0.7, seed=5))
    assert a == b
    assert a != serialize_network(random_network([4, 3, 2], 0.7, seed=6))


def test_row_norms_match_expected_weight_norm():
    # rows of a 100x100 N(0, 0.25) matrix: mean of ||row||_2 should sit near 0.5 * sqrt(100)
    net = random_network([100, 100], 0.5, seed=2024)
    norms = np.linalg.norm(net.layers[0].weight, axis=1)
    assert abs(norms.mean() - 5.0) / 5.0 < 0.05


def test_round_trip():
    net = random_network([4, 3, 2], 1.0, seed=1)
    assert parse_network(serialize_network(net)) == net


def test_round_trip_with_bias_gelu_and_comments():
    net = Network((Layer([[0.1, -1e-300], [3.0, 1 / 3]], [0.5, -2.0], "gelu"), Layer([[1.0, 2.0]], [1e17], "identity")))
    text = "# fixture\n" + serialize_network(net).replace("dims", "dims  ") + "\n# end\n"
    assert parse_network(text) == net


def test_parse_rejects_dim_mismatch():
    text = "attribnet v1\ndims 2 1\nlayer 0 activation=identity\n1 2 3\n0\n"
    with pytest.raises(ParseError) as err:
        parse_network(text)
    assert err.value.line == 4


def test_parse_rejects_empty_layer_list():
    with pytest.raises(ParseError):
        parse_network("attribnet v1\ndims 3\n")


@pytest.mark.parametrize("text", [
    "",
    "attribnet v2\ndims 1 1\n",
    "attribnet v1\ndims 1 1\nlayer 0 activation=tanh\n1\n0\n",
    "attribnet v1\ndims 1 1\nlayer 0 activation=identity\n1\n",
    "attribnet v1\ndims 1 1\nlayer 0 activation=identity\nx\n0\n",
    "attribnet v1\ndims 1 1\nlayer 0 activation=identity\n1\n0\n5\n",
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_network(text)


def test_gelu_derivative_matches_finite_difference():
    x = np.linspace(-4, 4, 41)
    h = 1e-6
    np.testing.assert_allclose(gelu_derivative(x), (gelu(x + h) - gelu(x - h)) / (2 * h), atol=1e-8)


dims_strategy = st.lists(st.integers(1, 6), min_size=2, max_size=5)


@given(dims_strategy, st.integers(0, 2**32), st.floats(0.01, 5.0))
def test_round_trip_property(dims, seed, sigma):
    net = random_network(dims, sigma, seed)
    assert parse_network(serialize_network(net)) == net


@given(dims_strategy, st.integers(0, 1000), st.floats(0.01, 100.0))
def test_bias_free_relu_network_is_positively_homogeneous(dims, seed, c):
    net = random_network(dims, 1.0, seed)
    x = np.random.default_rng(seed).normal(size=dims[0])
    np.testing.assert_allclose(forward(net, c * x).output, c * forward(net, x).output, rtol=1e-10, atol=1e-10)


@given(dims_strategy, st.integers(0, 1000))
def test_trace_consistency(dims, seed):
    net = random_network(dims, 1.0, seed)
    tr = forward(net, np.random.default_rng(seed).normal(size=dims[0]))
    assert len(tr.pre_activations) == len(tr.post_activations) == net.depth
    for layer, pre, post in zip(net.layers, tr.pre_activations, tr.post_activations):
        assert np.array_equal(activate(layer.activation, pre), post)
    assert np.array_equal(tr.output, tr.pre_activations[-1])
