import math

import numpy as np
import pytest
from helpers import conv_arch, dense_arch, masked_copy, numeric_grad, rel_error

from orderdrop import kernels
from orderdrop.nn import (
    Architecture,
    Network,
    NonFiniteError,
    OptimizerState,
    WidthError,
    backward,
    cross_entropy,
    dense,
    forward,
    kl_divergence,
    sgd_step,
    softmax,
)
from orderdrop.nn.losses import cross_entropy_batch, kl_batch
from orderdrop.od import make_uniform_k

U5 = make_uniform_k(5).values


def test_full_width_matches_plain_composition():
    arch = Architecture((3,), (dense(4, bias=False), dense(2, od=False, bias=False)))
    net = Network(arch, seed=1)
    x = np.random.default_rng(0).standard_normal((5, 3))
    V, U = net.params["0.weight"], net.params["1.weight"]
    np.testing.assert_array_equal(forward(net, x, 1.0), x @ V.T @ U.T)


@pytest.mark.parametrize("p", [0.2, 0.5, 0.7, 1.0])
def test_dense_masking_equivalence(p):
    arch = Architecture((6,), (dense(10), dense(4, od=False)))
    net = Network(arch, widths=(p, 1.0) if p < 1 else (1.0,), seed=3)
    x = np.random.default_rng(1).standard_normal((20, 6))
    np.testing.assert_allclose(forward(net, x, p), forward(masked_copy(net, p), x, 1.0), rtol=0, atol=1e-12)


def test_shape_and_width_errors():
    net = Network(dense_arch(), widths=U5)
    with pytest.raises(ValueError):
        forward(net, np.zeros((2, 5)), 1.0)
    with pytest.raises(WidthError):
        forward(net, np.zeros((2, 4)), 0.3)


def test_nonfinite_reports_layer():
    net = Network(dense_arch(), seed=0)
    net.params["2.weight"][0, 0] = np.inf
    with pytest.raises(NonFiniteError) as err:
        forward(net, np.ones((2, 4)), 1.0)
    assert err.value.layer == 2


def test_zero_weight_bias_gradient_closed_form():
    arch = Architecture((3,), (dense(4), dense(2, od=False)))
    net = Network(arch)
    for v in net.params.values():
        v[...] = 0.0
    x = np.random.default_rng(0).standard_normal((2, 3))
    y = np.array([0, 1])
    _, g = backward(net, x, y, 1.0)
    expected = np.mean(softmax(np.zeros(2)) - np.eye(2)[y], axis=0)
    np.testing.assert_allclose(g["1.bias"], expected, atol=1e-15)


def test_dropped_units_get_exact_zero_gradient():
    arch = Architecture((5,), (dense(10), dense(10), dense(3, od=False)))
    net = Network(arch, widths=U5, seed=2)
    rng = np.random.default_rng(0)
    _, g = backward(net, rng.standard_normal((8, 5)), rng.integers(0, 3, 8), 0.2)
    assert np.all(g["0.weight"][2:] == 0) and np.all(g["0.bias"][2:] == 0)
    assert np.all(g["1.weight"][2:] == 0) and np.all(g["1.weight"][:, 2:] == 0)
    assert np.all(g["2.weight"][:, 2:] == 0)
    assert np.any(g["0.weight"][:2] != 0)


def _fd_check(net, x, y, p, loss="ce"):
    targets = y
    value, g = backward(net, x, targets, p, loss)

    def f():
        return backward(net, x, targets, p, loss)[0]

    for name, w in net.params.items():
        num = numeric_grad(f, w)
        assert rel_error(g[name], num) <= 1e-4, name


@pytest.mark.parametrize("p", [0.2, 0.6, 1.0])
@pytest.mark.parametrize("bn", [False, True])
def test_dense_gradients_finite_difference(p, bn):
    net = Network(dense_arch(bn=bn), widths=U5, seed=4)
    assert sum(v.size for v in net.params.values()) <= 1000
    rng = np.random.default_rng(5)
    _fd_check(net, rng.standard_normal((6, 4)), rng.integers(0, 3, 6), p)


@pytest.mark.parametrize("p", [0.2, 0.6, 1.0])
@pytest.mark.parametrize("bn", [False, True])
def test_conv_gradients_finite_difference(p, bn):
    net = Network(conv_arch(bn=bn, filters=(5, 4)), widths=U5, seed=6)
    assert sum(v.size for v in net.params.values()) <= 1000
    rng = np.random.default_rng(7)
    _fd_check(net, rng.standard_normal((3, 1, 8, 8)), rng.integers(0, 3, 3), p)


def test_mse_gradients_finite_difference():
    arch = Architecture((5,), (dense(5, bias=False), dense(5, od=False, bias=False)))
    net = Network(arch, widths=U5, seed=1)
    rng = np.random.default_rng(2)
    _fd_check(net, rng.standard_normal((4, 5)), rng.standard_normal((4, 5)), 0.6, loss="mse")


def test_cross_entropy_examples():
    assert cross_entropy(np.zeros(7), 3) == pytest.approx(math.log(7), abs=1e-15)
    assert cross_entropy(np.array([1000.0, 0.0]), 0) == pytest.approx(0.0, abs=1e-300)
    assert cross_entropy(np.array([1.0, 0.0]), 1) == pytest.approx(math.log(1 + math.e), abs=1e-12)
    assert round(cross_entropy(np.array([1.0, 0.0]), 1), 4) == 1.3133


def test_kl_examples():
    z = np.array([0.3, -1.0, 2.0])
    assert kl_divergence(z, z) == 0.0
    v = kl_divergence(np.zeros(2), np.array([math.log(3), 0.0]))
    assert v == pytest.approx(0.5 * math.log(2 / 3) + 0.5 * math.log(2), abs=1e-15)
    assert round(v, 4) == 0.1438
    rng = np.random.default_rng(0)
    for _ in range(200):
        assert kl_divergence(rng.standard_normal(4) * 3, rng.standard_normal(4) * 3, rng.uniform(0.2, 5)) >= 0


def test_softmax_sums_to_one():
    z = np.random.default_rng(0).standard_normal((50, 9)) * 20
    assert np.max(np.abs(softmax(z).sum(axis=1) - 1)) <= 1e-12


@pytest.mark.parametrize("T", [1.0, 2.5])
def test_loss_logit_gradients_finite_difference(T):
    rng = np.random.default_rng(3)
    s, t, y = rng.standard_normal((4, 5)), rng.standard_normal((4, 5)), rng.integers(0, 5, 4)
    _, g = cross_entropy_batch(s, y)
    assert rel_error(g, numeric_grad(lambda: cross_entropy_batch(s, y)[0], s)) <= 1e-4
    _, gs, gt = kl_batch(s, t, T)
    assert rel_error(gs, numeric_grad(lambda: kl_batch(s, t, T)[0], s)) <= 1e-4
    assert rel_error(gt, numeric_grad(lambda: kl_batch(s, t, T)[0], t)) <= 1e-4


def test_sgd_examples():
    g = np.array([1.0, -2.0, 0.5])
    params = {"w": np.array([1.0, 1.0, 1.0])}
    sgd_step(params, {"w": g}, OptimizerState(lr=0.1))
    np.testing.assert_allclose(params["w"], 1.0 - 0.1 * g, atol=1e-15)

    params = {"w": np.array([3.0, 4.0])}
    sgd_step(params, {"w": np.zeros(2)}, OptimizerState(lr=0.1, momentum=0.9))
    np.testing.assert_array_equal(params["w"], [3.0, 4.0])

    params = {"w": np.zeros(3)}
    state = OptimizerState(lr=1.0, momentum=0.9)
    sgd_step(params, {"w": g}, state)
    sgd_step(params, {"w": g}, state)
    np.testing.assert_allclose(params["w"], -(1 + 1.9) * g, atol=1e-14)


def test_sgd_leaves_untouched_region_alone():
    net = Network(dense_arch(), widths=U5, seed=0)
    before = {k: v.copy() for k, v in net.params.items()}
    state = OptimizerState(lr=0.5, momentum=0.9)
    rng = np.random.default_rng(1)
    for _ in range(3):
        _, g = backward(net, rng.standard_normal((5, 4)), rng.integers(0, 3, 5), 0.2)
        sgd_step(net.params, g, state)
    assert np.array_equal(net.params["0.weight"][2:], before["0.weight"][2:])
    assert np.all(state.velocity["0.weight"][2:] == 0)


def test_lr_schedule():
    state = OptimizerState(lr=0.1, schedule=((0.5, 0.1), (0.75, 0.01)), total_steps=100)
    seen = []
    for step in (0, 49, 50, 74, 75, 99):
        state.step = step
        seen.append(state.current_lr())
    assert seen == pytest.approx([0.1, 0.1, 0.01, 0.01, 0.001, 0.001])


def test_bn_isolation_per_width():
    net = Network(dense_arch(bn=True), widths=U5, seed=0)
    snap = {p: {i: s.copy() for i, s in st.items()} for p, st in net.norm_stats.items()}
    x = np.random.default_rng(0).standard_normal((8, 4))
    backward(net, x, np.zeros(8, dtype=int), 0.6)
    for p in U5:
        for i, st in net.norm_stats[p].items():
            same = np.array_equal(st.mean, snap[p][i].mean) and np.array_equal(st.var, snap[p][i].var)
            assert same == (p != 0.6)
            assert np.all(st.var >= 0)


def test_seeded_determinism():
    a = Network(conv_arch(), widths=U5, seed=11)
    b = Network(conv_arch(), widths=U5, seed=11)
    for k in a.params:
        assert np.array_equal(a.params[k], b.params[k])


def test_backends_agree():
    if not kernels.compiled_available():
        pytest.skip("compiled kernels not built")
    x = np.random.default_rng(0).standard_normal((3, 2, 9, 9))
    prev = kernels.use_backend("python")
    try:
        ref = (kernels.im2col(x, 3, 3), kernels.maxpool_forward(x, 2))
        kernels.use_backend("cython")
        got = (kernels.im2col(x, 3, 3), kernels.maxpool_forward(x, 2))
    finally:
        kernels.use_backend(prev)
    assert np.array_equal(ref[0], got[0])
    assert np.array_equal(ref[1][0], got[1][0]) and np.array_equal(ref[1][1], got[1][1])
