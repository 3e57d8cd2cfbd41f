import numpy as np
import pytest

from ggmtree.errors import DomainError, ShapeError
from ggmtree.tree import FiniteSubtree


def test_root_singleton():
    t = FiniteSubtree.singleton(3)
    assert t.n_edges == 4
    assert all(e.kind == "down" for e in t.edges)
    assert t.incidence.tolist() == np.eye(4, dtype=int).tolist()


def test_non_root_singleton_has_up_edge():
    t = FiniteSubtree.singleton(2, (1, 0))
    assert [e.kind for e in t.edges] == ["up", "down", "down"]
    assert t.incidence[0].tolist() == [-1, 0, 0]


def test_ball_counts():
    t = FiniteSubtree.ball(2, 2)
    assert len(t) == 1 + 3 + 6
    assert t.n_edges == 3 + 6 + 12
    assert t.max_depth == 3


def test_degrees_bounded():
    t = FiniteSubtree.ball(3, 1, center_depth=2)
    for v in t.vertices:
        deg = sum(1 for e in t.edges if e.child == v or e.parent == v)
        assert deg <= 4


def test_path_signs():
    t = FiniteSubtree(2, [(0,), (0, 1)])
    row = t.incidence[[y for y, _ in t.boundary].index((0, 1, 0))]
    assert row[t.edge_index[(0, 1)]] == 1 and row[t.edge_index[(0, 1, 0)]] == 1
    assert row[t.edge_index[(0,)]] == 0


def test_rejects_disconnected():
    with pytest.raises(ShapeError):
        FiniteSubtree(2, [(), (0, 0)])


def test_rejects_bad_index():
    with pytest.raises(DomainError):
        FiniteSubtree(2, [(0, 2)])
    with pytest.raises(DomainError):
        FiniteSubtree(1, [()])


def test_zeta_vector():
    t = FiniteSubtree.singleton(2)
    assert t.zeta_vector({(0,): 1, (1,): -2, (2,): 0}).tolist() == [1, -2, 0]
    with pytest.raises(ShapeError):
        t.zeta_vector({(0,): 1})
    with pytest.raises(ShapeError):
        t.zeta_vector([1, 2])
