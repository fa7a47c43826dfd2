import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modalpca.errors import (ChartSingularityError, DimensionError, InvalidArgumentError,
                             InvalidFrameError, InvalidPointError)
from modalpca.manifold import build_chart, chart_forward, chart_inverse, chart_inverse_jacobian


def random_instance(rng, d, k):
    """Unit v0 and k-1 orthonormal constraints, all mutually orthogonal."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, k)))
    return Q[:, 0], [Q[:, j] for j in range(1, k)]


def check_chart(chart, tol=1e-10):
    U, v0 = chart.U, chart.v0
    assert np.allclose(U.T @ U, np.eye(U.shape[1]), atol=tol)
    assert np.max(np.abs(U.T @ v0)) < tol
    for c in chart.constraints:
        assert np.max(np.abs(U.T @ c)) < tol and abs(v0 @ c) < tol
    assert abs(np.linalg.norm(v0) - 1) < 1e-12


def test_build_chart_complement_of_axis():
    e3 = np.array([0.0, 0.0, 1.0])
    chart = build_chart(e3)
    assert chart.U.shape == (3, 2)
    check_chart(chart)
    assert np.allclose(chart.U, np.eye(3)[:, :2])


def test_build_chart_forced():
    e = np.eye(3)
    chart = build_chart(e[2], [e[0]])
    assert chart.U.shape == (3, 1)
    assert np.allclose(np.abs(chart.U[:, 0]), e[1])


def test_build_chart_random_d5():
    rng = np.random.default_rng(3)
    v0, cons = random_instance(rng, 5, 3)
    chart = build_chart(v0, cons)
    assert chart.dim == 2
    check_chart(chart)


def test_build_chart_deterministic():
    rng = np.random.default_rng(4)
    v0, cons = random_instance(rng, 6, 2)
    assert np.array_equal(build_chart(v0, cons).U, build_chart(v0, cons).U)


def test_build_chart_errors():
    e = np.eye(3)
    with pytest.raises(InvalidFrameError):
        build_chart(np.array([1.0, 1.0, 0.0]))
    with pytest.raises(InvalidFrameError):
        build_chart(e[0], [np.array([1.0, 1.0, 0.0]) / np.sqrt(2)])
    with pytest.raises(DimensionError):
        build_chart(e[0], [e[1], e[2]])


def test_forward_examples():
    rng = np.random.default_rng(5)
    v0, cons = random_instance(rng, 4, 2)
    chart = build_chart(v0, cons)
    assert np.allclose(chart_forward(chart, v0), 0.0)
    u = chart.U[:, 0]
    assert np.allclose(chart_forward(chart, u), chart.U.T @ u)


def test_forward_errors():
    e = np.eye(3)
    chart = build_chart(e[2], [e[0]])
    with pytest.raises(ChartSingularityError):
        chart_forward(chart, -e[2])
    with pytest.raises(InvalidPointError):
        chart_forward(chart, (e[0] + e[2]) / np.sqrt(2))


def test_inverse_examples():
    rng = np.random.default_rng(6)
    v0, cons = random_instance(rng, 5, 2)
    chart = build_chart(v0, cons)
    assert np.allclose(chart_inverse(chart, np.zeros(3)), v0)
    far = chart_inverse(chart, 1e6 * np.array([0.6, 0.0, 0.8]))
    assert np.allclose(far, -v0, atol=1e-5)
    with pytest.raises(InvalidArgumentError):
        chart_inverse(chart, np.array([np.nan, 0.0, 0.0]))


def test_round_trip_1000_instances():
    rng = np.random.default_rng(7)
    failures = 0
    for _ in range(1000):
        d = int(rng.integers(2, 12))
        k = int(rng.integers(1, d))
        v0, cons = random_instance(rng, d, k)
        chart = build_chart(v0, cons)
        beta = rng.standard_normal(chart.dim) * rng.choice([0.1, 1.0, 5.0])
        v = chart_inverse(chart, beta)
        ok = abs(np.linalg.norm(v) - 1) < 1e-12
        ok &= all(abs(v @ c) < 1e-10 for c in cons)
        ok &= np.max(np.abs(chart_forward(chart, v) - beta)) < 1e-10 * max(1.0, np.linalg.norm(beta) ** 2)
        w = chart_inverse(chart, rng.standard_normal(chart.dim))
        ok &= np.max(np.abs(chart_inverse(chart, chart_forward(chart, w)) - w)) < 1e-10
        failures += not ok
    assert failures == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.data())
def test_inverse_always_admissible(d, data):
    seed = data.draw(st.integers(0, 2 ** 32 - 1))
    k = data.draw(st.integers(1, d - 1))
    rng = np.random.default_rng(seed)
    v0, cons = random_instance(rng, d, k)
    chart = build_chart(v0, cons)
    beta = np.array(data.draw(st.lists(st.floats(-1e4, 1e4), min_size=chart.dim, max_size=chart.dim)))
    v = chart_inverse(chart, beta)
    assert abs(np.linalg.norm(v) - 1) < 1e-12
    assert all(abs(v @ c) < 1e-10 for c in cons)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(8)
    v0, cons = random_instance(rng, 5, 2)
    chart = build_chart(v0, cons)
    beta = rng.standard_normal(3) * 0.7
    J = chart_inverse_jacobian(chart, beta)
    step = 1e-6
    fd = np.column_stack([(chart_inverse(chart, beta + step * e) - chart_inverse(chart, beta - step * e)) / (2 * step)
                          for e in np.eye(3)])
    assert np.allclose(J, fd, atol=1e-8)
