import math

import numpy as np
import pytest
from helpers import conv_arch, dense_arch, numeric_grad, rel_error

from orderdrop.distill import (
    DistillConfig,
    distill_backward,
    distill_grads,
    distill_loss_final,
    distill_loss_general,
    teacher_width,
)
from orderdrop.nn import Network, backward, cross_entropy
from orderdrop.nn.network import backward_from_logits, forward_cached
from orderdrop.od import BelowMinimumWidth, make_uniform_k

U5 = make_uniform_k(5)
S = np.zeros(2)
T3 = np.array([math.log(3), 0.0])


def test_config_defaults():
    cfg = DistillConfig()
    assert (cfg.alpha, cfg.temperature, cfg.teacher_backprop) == (1.0, 1.0, True)
    with pytest.raises(ValueError):
        DistillConfig(temperature=0)


def test_general_examples():
    z = np.array([0.4, -0.2, 1.1])
    assert distill_loss_general(z, z * 2, 2, DistillConfig(alpha=0.0)) == pytest.approx(cross_entropy(z, 2), abs=1e-15)
    assert distill_loss_general(z, z, 0, DistillConfig(alpha=1.0)) == pytest.approx(0.0, abs=1e-15)
    v = distill_loss_general(S, T3, 0, DistillConfig(alpha=0.5))
    assert round(v, 4) == 0.4185


def test_final_examples():
    z = np.array([0.4, -0.2, 1.1])
    assert distill_loss_final(z, z, 1) == cross_entropy(z, 1)
    v = distill_loss_final(S, T3, 0)
    assert round(v, 4) == 0.4315
    eps_logits = np.array([40.0, 0.0])
    expected = 0.5 * math.log(0.5 / (1 - math.exp(-40))) + 0.5 * math.log(0.5 / math.exp(-40))
    assert distill_loss_final(S, eps_logits, 0) == pytest.approx(expected, rel=1e-9)
    with pytest.raises(ValueError):
        distill_loss_final(S, T3, 0, student_width=0.8, teacher_width=0.8)


def test_teacher_width_examples():
    assert teacher_width(U5, 0.8) == 0.8
    assert teacher_width(U5, 1.0) == 1.0
    assert teacher_width(U5, 0.35) == 0.2
    with pytest.raises(BelowMinimumWidth):
        teacher_width(U5, 0.1)


@pytest.mark.parametrize("form", ["final", "general"])
def test_logit_gradients_finite_difference(form):
    rng = np.random.default_rng(0)
    s, t, y = rng.standard_normal((4, 5)), rng.standard_normal((4, 5)), rng.integers(0, 5, 4)
    cfg = DistillConfig(alpha=0.3, temperature=2.0, form=form)
    _, gs, gt = distill_grads(s, t, y, cfg)
    assert rel_error(gs, numeric_grad(lambda: distill_grads(s, t, y, cfg)[0], s)) <= 1e-4
    assert rel_error(gt, numeric_grad(lambda: distill_grads(s, t, y, cfg)[0], t)) <= 1e-4


@pytest.mark.parametrize("form", ["final", "general"])
@pytest.mark.parametrize("p,tw", [(0.2, 0.6), (0.6, 1.0), (0.2, 1.0)])
def test_network_distill_gradients_finite_difference(form, p, tw):
    net = Network(dense_arch(bn=True), widths=U5.values, seed=1)
    rng = np.random.default_rng(2)
    x, y = rng.standard_normal((6, 4)), rng.integers(0, 3, 6)
    cfg = DistillConfig(alpha=0.5, form=form)

    def f():
        return distill_backward(net, x, y, p, tw, cfg)[0]

    _, g = distill_backward(net, x, y, p, tw, cfg)
    for name, w in net.params.items():
        assert rel_error(g[name], numeric_grad(f, w)) <= 1e-4, name


def test_gradient_support_split():
    net = Network(dense_arch(hidden=(10, 10)), widths=U5.values, seed=3)
    rng = np.random.default_rng(4)
    x, y = rng.standard_normal((8, 4)), rng.integers(0, 3, 8)
    _, g = distill_backward(net, x, y, 0.2, 0.6)
    w = g["0.weight"]
    assert np.all(w[6:] == 0)
    # units 2..5 sit in the teacher only: their gradient is exactly the teacher pass's
    t_plan = net.plan(0.6)
    s_logits, _ = forward_cached(net, x, net.plan(0.2), True)
    t_logits, t_cache = forward_cached(net, x, t_plan, True)
    _, _, dt = distill_grads(s_logits, t_logits, y)
    teacher_only = backward_from_logits(net, t_plan, t_cache, dt)
    assert np.array_equal(w[2:6], teacher_only["0.weight"][2:6])


def test_equal_width_is_plain_ce():
    net = Network(conv_arch(), widths=U5.values, seed=0)
    rng = np.random.default_rng(0)
    x, y = rng.standard_normal((4, 1, 8, 8)), rng.integers(0, 3, 4)
    a, ga = distill_backward(net, x, y, 0.6, 0.6)
    b, gb = backward(net, x, y, 0.6, "ce")
    assert a == b and all(np.array_equal(ga[k], gb[k]) for k in ga)
    with pytest.raises(ValueError):
        distill_backward(net, x, y, 0.8, 0.6)


def test_detached_teacher_changes_only_teacher_side():
    net = Network(dense_arch(hidden=(10, 10)), widths=U5.values, seed=3)
    rng = np.random.default_rng(5)
    x, y = rng.standard_normal((8, 4)), rng.integers(0, 3, 8)
    _, attached = distill_backward(net, x, y, 0.2, 1.0)
    _, detached = distill_backward(net, x, y, 0.2, 1.0, DistillConfig(teacher_backprop=False))
    assert not np.array_equal(attached["0.weight"], detached["0.weight"])
    assert np.isfinite(detached["0.weight"]).all()
