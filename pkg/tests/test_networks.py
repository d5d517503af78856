import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import automorphisms
from strategies import patrols
from uniformpatrol.errors import InvalidParams, InvalidSize
from uniformpatrol.networks import (
    MIN_SIZE,
    Family,
    NodeClass,
    build_matrix,
    build_network,
    is_symmetric,
    network_to_dict,
    param_space,
    random_walk_params,
)
from uniformpatrol.serialize import dumps


@pytest.mark.parametrize("name,family", [
    ("star", Family.STAR), ("LINE", Family.LINE), ("sic", Family.STAR_IN_CIRCLE),
    ("star-in-circle", Family.STAR_IN_CIRCLE), ("e", Family.STAR_IN_CIRCLE), ("complete", Family.COMPLETE),
])
def test_family_parse(name, family):
    assert Family.parse(name) is family


def test_family_parse_rejects_unknown():
    with pytest.raises(ValueError):
        Family.parse("hypercube")


@pytest.mark.parametrize("family", list(Family))
def test_min_size_enforced(family):
    build_network(family, MIN_SIZE[family])
    with pytest.raises(InvalidSize):
        build_network(family, MIN_SIZE[family] - 1)


def test_star_layout():
    net = build_network("star", 3)
    assert net.nodes == (1, 2, 3, 4)
    assert net.center == 4
    assert net.leaves == (1, 2, 3)
    assert net.node_class[1] is NodeClass.END


def test_line_layout():
    net = build_network("line", 5)
    assert net.leaves == (1, 5)
    assert net.center == 3
    assert net.representatives() == (1, 2, 3)
    assert build_network("line", 4).center is None


def test_star_in_circle_adjacency():
    net = build_network("sic", 4)
    assert net.adjacency[1] == frozenset({2, 4, 5})
    assert net.adjacency[5] == frozenset({1, 2, 3, 4})


@pytest.mark.parametrize("family,n,params,expected", [
    ("circle", 4, [0.5], [[0, .5, 0, .5], [.5, 0, .5, 0], [0, .5, 0, .5], [.5, 0, .5, 0]]),
    ("star", 2, [0.25, 1.0], [[0, 0, 1], [0, 0, 1], [.25, .25, .5]]),
    ("line", 4, [0.4, 0.5, 1.0], [[0, 1, 0, 0], [.4, .1, .5, 0], [0, .5, .1, .4], [0, 0, 1, 0]]),
])
def test_known_matrices(family, n, params, expected):
    T = build_matrix(build_network(family, n), params)
    np.testing.assert_allclose(T, expected, atol=1e-15)


@given(patrols())
def test_rows_are_distributions(case):
    net, x = case
    T = build_matrix(net, x)
    assert np.all(T >= 0)
    np.testing.assert_allclose(T.sum(axis=1), 1.0, atol=1e-12)


@given(patrols())
def test_moves_follow_edges(case):
    net, x = case
    T = build_matrix(net, x)
    allowed = net.adjacency_matrix() | np.eye(net.size, dtype=bool)
    assert np.all(T[~allowed] == 0)


@given(patrols(max_size=5))
def test_invariant_under_every_automorphism(case):
    net, x = case
    T = build_matrix(net, x)
    for perm in automorphisms(net):
        P = np.eye(net.size)[list(perm)]
        np.testing.assert_allclose(P @ T @ P.T, T, atol=1e-12)


@given(patrols(max_size=5))
def test_symmetry_check_agrees_with_networkx(case):
    net, x = case
    assert is_symmetric(net, build_matrix(net, x))


@pytest.mark.parametrize("family,n", [(f, n) for f in Family for n in (MIN_SIZE[f], 5)])
def test_random_walk_is_uniform_over_neighbours(family, n):
    net = build_network(family, n)
    T = build_matrix(net, random_walk_params(net))
    for v in net.nodes:
        nb = sorted(net.adjacency[v])
        np.testing.assert_allclose(T[v - 1, [u - 1 for u in nb]], 1.0 / len(nb), atol=1e-15)


@pytest.mark.parametrize("family,n,params", [
    ("star", 3, [0.4, 1.0]),
    ("star", 3, [0.2]),
    ("circle", 5, [0.6]),
    ("line", 4, [0.7, 0.4, 1.0]),
    ("sic", 4, [0.4, 0.3, 0.2]),
    ("complete", 4, [-0.1]),
    ("circle", 5, [float("nan")]),
])
def test_infeasible_params_rejected(family, n, params):
    with pytest.raises(InvalidParams):
        build_matrix(build_network(family, n), params)


def test_boundary_params_accepted():
    T = build_matrix(build_network("star", 3), [0.0, 0.0])
    np.testing.assert_array_equal(T, np.eye(4))


def test_params_by_name():
    net = build_network("line", 4)
    a = build_matrix(net, {"p": 0.3, "q": 0.6, "kappa": 1.0})
    b = build_matrix(net, [0.3, 0.6, 1.0])
    np.testing.assert_array_equal(a, b)
    with pytest.raises(InvalidParams):
        build_matrix(net, {"p": 0.3})


@pytest.mark.parametrize("family,n,names", [
    ("star", 4, ("p", "s")),
    ("line", 4, ("p", "q", "kappa")),
    ("line", 5, ("p", "q", "c", "kappa")),
    ("line", 6, ("p2", "q2", "p3", "q3", "kappa")),
    ("circle", 6, ("p",)),
    ("sic", 4, ("p", "q", "r")),
])
def test_param_names(family, n, names):
    assert param_space(build_network(family, n)).names == names


def test_grid_is_feasible():
    space = param_space(build_network("sic", 4))
    g = space.grid(9)
    assert len(g) > 0
    assert np.all(space.feasible(g))


def test_matrix_json_uses_17_digits():
    net = build_network("complete", 4)
    text = dumps(network_to_dict(net, build_matrix(net, [1 / 3])))
    assert '"family": "complete"' in text
    assert "0.33333333333333331" in text
