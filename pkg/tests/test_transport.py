import time

import numpy as np
import pytest

from summkit.transport import TransportError, transport

from oracles import transport_bfs_enumeration


def random_instance(rng, m, n):
    a = rng.random(m) + 0.01
    b = rng.random(n) + 0.01
    a /= a.sum()
    b /= b.sum()
    return a, b, rng.random((m, n)) * 10


def test_forced_flows():
    total, flow = transport([1.0], [1.0], np.array([[7.0]]))
    assert total == 7.0 and flow[0, 0] == 1.0
    total, flow = transport([0.5, 0.5], [1.0], np.array([[0.0], [4.0]]))
    assert total == 2.0


def test_prefers_cheap_diagonal():
    total, flow = transport([0.5, 0.5], [0.5, 0.5], np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert total == 0.0
    np.testing.assert_allclose(flow, [[0.5, 0.0], [0.0, 0.5]])


def test_validation():
    with pytest.raises(ValueError):
        transport([1.0], [0.5], np.zeros((1, 1)))
    with pytest.raises(ValueError):
        transport([-1.0, 2.0], [1.0], np.zeros((2, 1)))
    with pytest.raises(ValueError):
        transport([1.0], [1.0], np.zeros((2, 1)))


def test_flow_is_feasible():
    rng = np.random.default_rng(0)
    for _ in range(50):
        m, n = rng.integers(1, 9, size=2)
        a, b, c = random_instance(rng, m, n)
        total, flow = transport(a, b, c)
        assert (flow >= 0).all()
        np.testing.assert_allclose(flow.sum(axis=1), a, atol=1e-12)
        np.testing.assert_allclose(flow.sum(axis=0), b, atol=1e-12)
        assert total == pytest.approx(float((flow * c).sum()))


def test_matches_vertex_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(100):
        m, n = rng.integers(1, 5, size=2)
        a, b, c = random_instance(rng, m, n)
        assert transport(a, b, c)[0] == pytest.approx(
            transport_bfs_enumeration(a, b, c), abs=1e-9)


def test_degenerate_marginals():
    # equal sub-sums force degenerate pivots; zero masses are allowed
    rng = np.random.default_rng(2)
    for _ in range(50):
        m, n = rng.integers(2, 5, size=2)
        a = np.full(m, 1.0 / m)
        b = np.full(n, 1.0 / n)
        b[0] = 0.0
        b /= b.sum()
        c = rng.integers(0, 3, size=(m, n)).astype(float)
        assert transport(a, b, c)[0] == pytest.approx(
            transport_bfs_enumeration(a, b, c), abs=1e-9)


def test_transposition_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(30):
        a, b, c = random_instance(rng, 6, 4)
        assert transport(a, b, c)[0] == pytest.approx(transport(b, a, c.T)[0], abs=1e-12)


def test_scales_to_hundreds():
    rng = np.random.default_rng(4)
    a, b, c = random_instance(rng, 150, 150)
    start = time.perf_counter()
    total, flow = transport(a, b, c)
    assert time.perf_counter() - start < 30
    np.testing.assert_allclose(flow.sum(axis=1), a, atol=1e-9)


def test_iteration_cap():
    rng = np.random.default_rng(5)
    a, b, c = random_instance(rng, 20, 20)
    with pytest.raises(TransportError):
        transport(a, b, c, max_iter=1)
