import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phyplan.numerics import (
    DenseNetwork,
    FormatError,
    LBFGSConfig,
    NumericError,
    ShapeError,
    Var,
    forward,
    forward_tangent,
    forward_with_input_jacobian,
    gradient,
    lbfgs_minimize,
    network_from_bytes,
    network_to_bytes,
    table1_sizes,
    xavier_init,
)
from phyplan.numerics import autodiff as ad
from phyplan.numerics.network import fused_tangent_forward
from phyplan.numerics.serialize import read_network, write_network


def naive_forward(net, x):
    """Straight-line reference: one neuron at a time."""
    h = list(map(float, x))
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        out = []
        for i in range(w.shape[0]):
            s = b[i]
            for j in range(w.shape[1]):
                s += w[i, j] * h[j]
            out.append(np.tanh(s) if k < len(net.weights) - 1 else s)
        h = out
    return np.array(h)


def fd_jacobian(net, x, h=1e-5):
    jac = np.zeros((net.n_inputs, net.n_outputs))
    for i in range(net.n_inputs):
        e = np.zeros(net.n_inputs)
        e[i] = h
        jac[i] = (forward(net, x + e) - forward(net, x - e)) / (2 * h)
    return jac


def fd_grad(f, p, h=1e-6):
    g = np.zeros_like(p)
    for i in range(len(p)):
        e = np.zeros_like(p)
        e[i] = h
        g[i] = (f(p + e) - f(p - e)) / (2 * h)
    return g


# initialization ------------------------------------------------------------


def test_xavier_scalar_net_has_unit_variance_scale():
    draws = np.array([xavier_init([1, 1], s).weights[0][0, 0] for s in range(4000)])
    assert draws.var() == pytest.approx(1.0, rel=0.1)


def test_xavier_is_deterministic_per_seed():
    a, b = xavier_init(table1_sizes(2, 3), 42), xavier_init(table1_sizes(2, 3), 42)
    assert np.array_equal(a.flat(), b.flat())
    assert not np.array_equal(a.flat(), xavier_init(table1_sizes(2, 3), 43).flat())


def test_xavier_first_layer_variance_matches_formula():
    net = xavier_init([1] + [40] * 8 + [2], 1)
    assert net.weights[0].var() == pytest.approx(2.0 / 41.0, rel=0.2)
    assert all(np.all(b == 0) for b in net.biases)


def test_table1_shape_has_ten_layers():
    sizes = table1_sizes(2, 3)
    assert len(sizes) == 10 and sizes[0] == 2 and sizes[-1] == 3 and set(sizes[1:-1]) == {40}


@pytest.mark.parametrize("sizes", [[], [3], [2, 0, 1], [0, 2]])
def test_xavier_rejects_bad_sizes(sizes):
    with pytest.raises(ShapeError):
        xavier_init(sizes, 0)


def test_network_rejects_inconsistent_weights():
    with pytest.raises(ShapeError):
        DenseNetwork((2, 3), (np.zeros((2, 3)),), (np.zeros(3),))


def test_network_rejects_other_activations():
    with pytest.raises(ValueError):
        DenseNetwork((1, 1), (np.ones((1, 1)),), (np.zeros(1),), hidden_activation="relu")


def test_weights_are_read_only():
    net = xavier_init([2, 3, 1], 0)
    with pytest.raises(ValueError):
        net.weights[0][0, 0] = 1.0


def test_flat_round_trip_is_layer_major():
    net = xavier_init([2, 3, 1], 5)
    flat = net.flat()
    assert np.array_equal(flat[:6], net.weights[0].ravel())
    assert np.array_equal(flat[6:9], net.biases[0])
    assert np.array_equal(flat[9:12], net.weights[1].ravel())
    assert np.array_equal(DenseNetwork.from_flat(net.layer_sizes, flat).flat(), flat)


# forward -----------------------------------------------------------------


def test_zero_network_outputs_zero():
    net = DenseNetwork.from_flat(table1_sizes(3, 2), np.zeros(xavier_init(table1_sizes(3, 2), 0).n_params))
    assert np.array_equal(forward(net, [0.3, -2.0, 5.0]), np.zeros(2))


def test_single_tanh_unit():
    net = DenseNetwork((1, 1, 1), (np.ones((1, 1)), np.ones((1, 1))), (np.zeros(1), np.zeros(1)))
    for x in (-2.0, 0.0, 0.7):
        assert forward(net, [x])[0] == pytest.approx(np.tanh(x), abs=1e-15)


def test_forward_matches_naive_reimplementation():
    net = xavier_init(table1_sizes(3, 2), 7)
    rng = np.random.default_rng(0)
    for x in rng.normal(size=(20, 3)):
        np.testing.assert_allclose(forward(net, x), naive_forward(net, x), rtol=1e-12, atol=1e-14)


def test_forward_batch_equals_rows():
    net = xavier_init(table1_sizes(2, 2), 3)
    xs = np.random.default_rng(1).normal(size=(5, 2))
    batch = forward(net, xs)
    for x, y in zip(xs, batch):
        np.testing.assert_allclose(forward(net, x), y, rtol=1e-14, atol=1e-15)


def test_forward_dimension_mismatch():
    with pytest.raises(ShapeError):
        forward(xavier_init([2, 3, 1], 0), [1.0, 2.0, 3.0])


# input jacobian ---------------------------------------------------------------


def test_linear_net_jacobian_is_transpose():
    w = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    net = DenseNetwork((3, 2), (w,), (np.zeros(2),))
    res = forward_with_input_jacobian(net, [1.0, -1.0, 2.0])
    assert np.array_equal(res.input_jacobian, w.T)
    assert res.input_jacobian.shape == (3, 2)


def test_constant_net_has_zero_jacobian():
    sizes = [2, 4, 3]
    net = DenseNetwork.from_flat(sizes, np.zeros(xavier_init(sizes, 0).n_params))
    assert np.array_equal(forward_with_input_jacobian(net, [0.5, 0.1]).input_jacobian, np.zeros((2, 3)))


def test_jacobian_matches_finite_differences_at_100_points():
    net = xavier_init(table1_sizes(3, 2), 11)
    rng = np.random.default_rng(2)
    for x in rng.uniform(-1, 1, size=(100, 3)):
        res = forward_with_input_jacobian(net, x)
        np.testing.assert_array_equal(res.value, forward(net, x))
        np.testing.assert_allclose(res.input_jacobian, fd_jacobian(net, x), rtol=1e-5, atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n_in=st.integers(1, 4), n_out=st.integers(1, 3),
       width=st.integers(1, 12), depth=st.integers(0, 3))
def test_jacobian_property_random_shapes(seed, n_in, n_out, width, depth):
    net = xavier_init([n_in] + [width] * depth + [n_out], seed)
    x = np.random.default_rng(seed).uniform(-1, 1, n_in)
    np.testing.assert_allclose(forward_with_input_jacobian(net, x).input_jacobian,
                               fd_jacobian(net, x), rtol=1e-5, atol=1e-8)


def test_tangent_forward_matches_jacobian_column():
    net = xavier_init(table1_sizes(2, 3), 4)
    xs = np.random.default_rng(3).uniform(-1, 1, (6, 2))
    direction = np.array([0.0, 2.5])
    y, dy = forward_tangent(net.flat(), net.layer_sizes, xs, direction)
    for x, yi, dyi in zip(xs, y, dy):
        res = forward_with_input_jacobian(net, x)
        np.testing.assert_allclose(yi, res.value, rtol=1e-13)
        np.testing.assert_allclose(dyi, direction @ res.input_jacobian, rtol=1e-12, atol=1e-14)


def test_fused_op_matches_generic_tape():
    sizes = table1_sizes(2, 2)
    rng = np.random.default_rng(5)
    params = xavier_init(sizes, 6).flat()
    x = rng.uniform(-1, 1, (7, 2))
    direction = np.array([0.0, 1.7])
    seed = rng.normal(size=(7 + 4, 2))

    def via_fused(p):
        return (fused_tangent_forward(p, sizes, x, direction, 4) * seed).sum()

    def via_tape(p):
        y, dy = forward_tangent(p, sizes, x[3:], direction)
        y0, _ = forward_tangent(p, sizes, x[:3], direction)
        return ((ad.concat([y0, y, dy], axis=0)) * seed).sum()

    l1, g1 = gradient(via_fused, params)
    l2, g2 = gradient(via_tape, params)
    assert l1 == pytest.approx(l2, rel=1e-13)
    np.testing.assert_allclose(g1, g2, rtol=1e-10, atol=1e-13)


# reverse mode -----------------------------------------------------------------


def test_gradient_of_squared_norm():
    loss, grad = gradient(lambda p: (p * p).sum(), np.array([1.0, 2.0]))
    assert loss == 5.0
    np.testing.assert_array_equal(grad, [2.0, 4.0])


def test_gradient_of_linear_net_data_loss():
    x, y = 1.5, 0.4

    def objective(p):
        pred = forward_tangent(p, (1, 1), np.array([[x]]), None)[0]
        return ((pred - y) ** 2).sum()

    w, b = 0.7, 0.0
    loss, grad = gradient(objective, np.array([w, b]))
    assert loss == pytest.approx((w * x - y) ** 2)
    assert grad[0] == pytest.approx(2 * (w * x - y) * x, rel=1e-14)


def test_gradient_rejects_non_finite():
    with pytest.raises(NumericError), np.errstate(divide="ignore"):
        gradient(lambda p: (p / 0.0).sum(), np.array([1.0]))


@pytest.mark.parametrize("op", [
    lambda a, b: (a * b + a / (b + 3.0) - a ** 3).sum(),
    lambda a, b: (ad.tanh(a @ b.T) * ad.sin(a).mean()).sum(),
    lambda a, b: (ad.cos(a[0:2]) * a[[0, 0, 1]].sum() + a.T.reshape(-1).exp().sum()).sum(),
])
def test_var_ops_match_finite_differences(op):
    rng = np.random.default_rng(9)
    a0, b0 = rng.normal(size=(3, 2)) * 0.5, rng.normal(size=(3, 2)) * 0.5
    n = a0.size

    def objective(p):
        return op(p[:n].reshape(3, 2), p[n:].reshape(3, 2))

    p0 = np.concatenate([a0.ravel(), b0.ravel()])
    _, grad = gradient(objective, p0)

    def scalar(p):
        return float(objective(Var(p)).value)

    np.testing.assert_allclose(grad, fd_grad(scalar, p0), rtol=1e-6, atol=1e-8)


def test_numpy_scalars_defer_to_var():
    v = Var(np.array([1.0, 2.0]))
    out = np.float64(2.0) * v
    assert isinstance(out, Var)


# L-BFGS -----------------------------------------------------------------


def quadratic(c):
    def fun(p):
        d = p - c
        return float(d @ d), 2 * d
    return fun


def rosenbrock(p):
    x, y = p
    f = (1 - x) ** 2 + 100 * (y - x * x) ** 2
    return f, np.array([-2 * (1 - x) - 400 * x * (y - x * x), 200 * (y - x * x)])


def test_lbfgs_quadratic():
    res = lbfgs_minimize(quadratic(np.array([3.0, -1.0])), np.zeros(2), LBFGSConfig())
    np.testing.assert_allclose(res.x, [3.0, -1.0], atol=1e-8)
    assert res.iterations <= 5
    assert res.status == "converged"


def test_lbfgs_rosenbrock():
    res = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), LBFGSConfig(max_iterations=200))
    assert res.fun < 1e-6
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-3)


def test_lbfgs_zero_iterations_returns_init():
    x0 = np.array([0.5, 0.5])
    x, history = lbfgs_minimize(rosenbrock, x0, LBFGSConfig(max_iterations=0))
    assert np.array_equal(x, x0) and history == []


def test_lbfgs_history_non_increasing():
    res = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), LBFGSConfig(max_iterations=60))
    assert all(b <= a for a, b in zip(res.history, res.history[1:]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), dim=st.integers(1, 8))
def test_lbfgs_convex_quadratics_reach_tiny_gradient(seed, dim):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim))
    h = a @ a.T + 0.5 * np.eye(dim)
    c = rng.normal(size=dim)

    def fun(p):
        return float(0.5 * p @ h @ p - c @ p), h @ p - c

    res = lbfgs_minimize(fun, np.zeros(dim), LBFGSConfig(gradient_tolerance=1e-11, max_iterations=500))
    assert np.linalg.norm(fun(res.x)[1]) < 1e-10


def test_lbfgs_reports_line_search_failure_without_raising():
    # descent direction exists but the objective is a step function
    def fun(p):
        return float(np.floor(p[0])), np.array([1.0])

    res = lbfgs_minimize(fun, np.array([0.5]), LBFGSConfig(max_iterations=10))
    assert res.status == "line_search_failed"
    assert np.isfinite(res.fun)


def test_lbfgs_non_finite_start_is_flagged():
    res = lbfgs_minimize(lambda p: (np.nan, np.zeros(1)), np.zeros(1), LBFGSConfig())
    assert res.status == "non_finite"


@pytest.mark.parametrize("kwargs", [dict(memory=0), dict(wolfe_c1=0.9, wolfe_c2=0.1), dict(learning_rate=0),
                                    dict(max_iterations=-1)])
def test_lbfgs_config_validation(kwargs):
    with pytest.raises(ValueError):
        LBFGSConfig(**kwargs)


# serialization --------------------------------------------------------------


def test_network_bytes_round_trip():
    net = xavier_init(table1_sizes(3, 2), 8)
    raw = network_to_bytes(net, {"mu": 0.25, "l": 0.5})
    back, named = network_from_bytes(raw)
    assert back.layer_sizes == net.layer_sizes
    assert np.array_equal(back.flat(), net.flat())
    assert named == {"l": 0.5, "mu": 0.25}


def test_serialized_layout_header():
    net = xavier_init([2, 3, 1], 0)
    raw = network_to_bytes(net)
    assert raw.startswith(b"PHYPLAN-NET")
    version = int.from_bytes(raw[11:15], "little")
    assert version == 1
    # params appear little-endian in flattening order
    params = np.frombuffer(raw, dtype="<f8", count=net.n_params, offset=raw.index(net.flat().astype("<f8").tobytes()))
    assert np.array_equal(params, net.flat())


def test_corrupt_record_rejected():
    raw = network_to_bytes(xavier_init([2, 3, 1], 0))
    with pytest.raises(FormatError):
        network_from_bytes(b"NOT-A-NET" + raw[9:])
    with pytest.raises(FormatError):
        network_from_bytes(raw[:40])


def test_stream_api_leaves_trailing_bytes():
    buf = io.BytesIO()
    write_network(buf, xavier_init([1, 2, 1], 0))
    buf.write(b"tail")
    buf.seek(0)
    read_network(buf)
    assert buf.read() == b"tail"
