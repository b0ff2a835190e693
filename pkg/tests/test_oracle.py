import math

import numpy as np
import pytest

from gmap.cliquetree import build_clique_tree
from gmap.combinators import Product, Sum, identity_eta
from gmap.errors import BudgetExceeded
from gmap.generate import random_model
from gmap.inference import collect_messages
from gmap.model import build_model
from gmap.oracle import brute_force, brute_force_message, brute_force_message_table, side_of


def test_two_var_product():
    m = build_model([2, 2], [((0, 1), [1, 2, 4, 3])], [((0,), [[0], [1]])])
    sol = brute_force(m, Product(identity_eta))
    assert (sol.p, sol.y, sol.G) == (4, (1, 0), (1,))


def test_all_minus_inf():
    m = build_model([2, 2], [((0, 1), [-math.inf] * 4)])
    assert not brute_force(m, Sum()).feasible


def test_budget():
    m = build_model([2] * 12, [((t,), [0.0, 0.0]) for t in range(12)])
    with pytest.raises(BudgetExceeded):
        brute_force(m, Sum(), budget=1000)


def test_lexicographic_tie():
    m = build_model([2, 2], [((0, 1), [1, 1, 1, 1])])
    assert brute_force(m, Sum()).y == (0, 0)


def test_leaf_message_values():
    m = build_model([2, 2, 2], [((0, 1), [1, 2, 4, 3]), ((1, 2), [0.0] * 4)], [((0,), [[0], [1]])])
    tree = build_clique_tree(m)
    leaf = next(n.id for n in tree.nodes if n.variables == (0, 1))
    other = next(n.id for n in tree.nodes if n.variables == (1, 2))
    got = [brute_force_message(tree, leaf, other, (s,), (l,)) for s, l in ((0, 0), (0, 1), (1, 0), (1, 1))]
    assert got == [1, 4, 2, 3]
    assert brute_force_message(tree, leaf, other, (0,), (5,)) == -math.inf


def test_side_of():
    m = build_model([2] * 4, [((t, t + 1), [0.0] * 4) for t in range(3)])
    tree = build_clique_tree(m)
    for i, j in tree.edges:
        a, b = side_of(tree, i, j), side_of(tree, j, i)
        assert not a & b and len(a | b) == len(tree.nodes)


@pytest.mark.parametrize("seed", range(5))
def test_engine_tables_match(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, 5, 2, "tree", P=1)
    tree = build_clique_tree(m)
    for (i, j), tab in collect_messages(tree).items():
        ref = brute_force_message_table(tree, i, j)
        assert {k: e[0] for k, e in tab.items()} == ref
