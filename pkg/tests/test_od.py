import numpy as np
import pytest
from helpers import dense_arch, masked_copy, random_arch
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from orderdrop.nn import Architecture, Network, dense, forward, kept_units
from orderdrop.od import (
    BelowMinimumWidth,
    DropoutDistribution,
    comm_savings,
    cost_model,
    dense_layer,
    extract_submodel,
    femnist_cnn,
    from_architecture,
    make_uniform_k,
    materialize_submodel,
    resnet18_cifar,
    sample_p_conditional,
    write_back,
)
from orderdrop.rng import stream

U5 = make_uniform_k(5)


def test_make_uniform_k():
    assert U5.values == pytest.approx((0.2, 0.4, 0.6, 0.8, 1.0))
    assert U5.probs == pytest.approx((0.2,) * 5)
    assert make_uniform_k(1).values == (1.0,) and make_uniform_k(1).probs == (1.0,)
    u10 = make_uniform_k(10)
    assert len(u10.values) == 10 and u10.values[0] == pytest.approx(0.1)
    with pytest.raises(ValueError):
        make_uniform_k(0)


@pytest.mark.parametrize(
    "values,probs",
    [((0.5, 0.2), (0.5, 0.5)), ((0.0, 1.0), (0.5, 0.5)), ((0.5, 1.0), (0.0, 1.0)), ((0.5, 1.0), (0.5, 0.6)), ((1.2,), (1.0,))],
)
def test_distribution_rejects_invalid(values, probs):
    with pytest.raises(ValueError):
        DropoutDistribution(values, probs)


def test_conditional_examples():
    assert U5.conditional(0.4) == ((0.2, 0.4), pytest.approx((0.5, 0.5)))
    assert U5.conditional(1.0)[1] == pytest.approx(U5.probs)
    rng = stream(0, "t")
    assert {sample_p_conditional(U5, 0.2, rng) for _ in range(50)} == {0.2}
    with pytest.raises(BelowMinimumWidth, match="client below minimum supported width"):
        sample_p_conditional(U5, 0.1, rng)


@pytest.mark.parametrize("cap", [0.2, 0.4, 0.6, 1.0])
def test_conditional_sampling_chi_square(cap):
    rng = stream(1, "chi", int(cap * 10))
    values, probs = U5.conditional(cap)
    draws = [sample_p_conditional(U5, cap, rng) for _ in range(10_000)]
    counts = np.array([sum(1 for d in draws if d == v) for v in values])
    assert counts.sum() == 10_000
    if len(values) > 1:
        assert stats.chisquare(counts, np.array(probs) * 10_000).pvalue > 0.01


def test_kept_units_examples():
    assert kept_units(0.2, 10) == 2
    assert kept_units(0.5, 7) == 4
    assert kept_units(0.6, 10) == 6
    assert kept_units(1.0, 13) == 13
    assert kept_units(0.01, 3) == 1


def test_extract_examples():
    arch = Architecture((3,), (dense(10), dense(7), dense(2, od=False)))
    net = Network(arch, widths=U5.values)
    v = extract_submodel(net, 0.2)
    assert list(v.kept_indices()[0]) == [0, 1]
    full = extract_submodel(net, 1.0)
    for name, w in full.weights().items():
        assert np.shares_memory(w, net.params[name]) and w.shape == net.params[name].shape
    assert extract_submodel(Network(arch), 0.5).kept[1] == 4
    for w in v.weights().values():
        assert any(np.shares_memory(w, base) for base in net.params.values())


@given(st.integers(1, 64), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_nestedness_property(k, p1, p2):
    lo, hi = sorted((p1, p2))
    assert kept_units(lo, k) <= kept_units(hi, k)


def test_materialize_examples():
    arch = Architecture((10,), (dense(10), dense(4, od=False)))
    net = Network(arch, widths=(0.5, 1.0), seed=2)
    same = materialize_submodel(extract_submodel(net, 1.0))
    for k in net.params:
        assert net.params[k].tobytes() == same.params[k].tobytes()
    half = materialize_submodel(extract_submodel(net, 0.5))
    x = np.random.default_rng(0).standard_normal((100, 10))
    np.testing.assert_allclose(forward(half, x, 1.0), forward(net, x, 0.5), rtol=0, atol=1e-12)
    layer = Network(Architecture((10,), (dense(10), dense(10, od=False))))
    sub = materialize_submodel(extract_submodel(layer, 0.5))
    assert sub.params["0.weight"].size == 50 and sub.params["0.bias"].size == 5
    d = Network(Architecture((10,), (dense(10, od=False),)))
    assert d.params["0.weight"].size == 100


def test_dense_block_counts_10x10():
    c = cost_model(dense_layer(10, 10, bias=False), 0.5)
    assert c.params == 25 and c.macs == 25
    assert cost_model(dense_layer(10, 10, bias=False), 1.0).macs / c.macs == 4


def test_write_back_examples():
    arch = Architecture((4,), (dense(10), dense(3, od=False)))
    net = Network(arch, widths=U5.values, seed=0)
    before = {k: v.copy() for k, v in net.params.items()}
    v = extract_submodel(net, 0.2)
    new = {k: np.full_like(w, 7.0) for k, w in v.weights().items()}
    write_back(v, new)
    assert net.params["0.weight"][2:].tobytes() == before["0.weight"][2:].tobytes()
    assert np.all(net.params["0.weight"][:2] == 7.0)
    v4 = extract_submodel(net, 0.4)
    write_back(v4, {k: np.full_like(w, -1.0) for k, w in v4.weights().items()})
    assert np.all(net.params["0.weight"][:4] == -1.0)
    assert net.params["0.weight"][4:].tobytes() == before["0.weight"][4:].tobytes()
    full = extract_submodel(net, 1.0)
    write_back(full, {k: np.zeros_like(w) for k, w in full.weights().items()})
    assert all(np.all(w == 0) for w in net.params.values())
    with pytest.raises(ValueError):
        write_back(v, {"0.weight": np.zeros((3, 3))})


def test_random_arch_extraction_equivalence():
    rng = np.random.default_rng(0)
    for _ in range(10):
        arch = random_arch(rng)
        net = Network(arch, widths=U5.values, seed=int(rng.integers(1000)))
        x = rng.standard_normal((20,) + arch.input_shape)
        for p in U5.values:
            sub = materialize_submodel(extract_submodel(net, p))
            mode = "train" if arch.batchnorm_layers() else "eval"
            ref = forward(masked_copy(net, p), x, 1.0, mode)
            np.testing.assert_allclose(forward(sub, x, 1.0, mode), ref, rtol=0, atol=1e-12)


def test_cost_table_headline_counts():
    r = cost_model(resnet18_cifar(), 1.0)
    assert abs(r.macs / 555e6 - 1) <= 0.05 and abs(r.params / 11e6 - 1) <= 0.05
    f = cost_model(femnist_cnn(), 1.0)
    assert abs(f.macs / 491e3 - 1) <= 0.05 and abs(f.params / 26e3 - 1) <= 0.05
    ratio = cost_model(resnet18_cifar(), 0.2).macs / r.macs
    assert 0.03 <= ratio <= 0.06


def test_cost_monotone_in_p():
    for desc in (resnet18_cifar(), femnist_cnn()):
        prev = None
        for p in np.linspace(0.05, 1.0, 20):
            c = cost_model(desc, p)
            if prev:
                assert c.macs >= prev.macs and c.params >= prev.params
            prev = c


def test_cost_matches_network_param_count():
    arch = dense_arch(bn=True)
    net = Network(arch, widths=U5.values)
    desc = from_architecture(arch)
    for p in U5.values:
        assert cost_model(desc, p).params == net.param_count(p)


def test_comm_savings_examples():
    assert comm_savings(femnist_cnn(), 1.0).factor == 1
    s = comm_savings(dense_layer(100, 100), 0.5)
    assert s.weight_factor == 4
    assert comm_savings(dense_layer(100, 100), 0.2).weight_factor == 25
    assert s.downstream_bytes == s.upstream_bytes == 8 * cost_model(dense_layer(100, 100), 0.5).params


def test_masked_plan_matches_zeroed_model():
    net = Network(dense_arch(hidden=(8, 6)), seed=3)
    units = {0: np.array([1, 4, 6]), 2: np.array([0, 5])}
    x = np.random.default_rng(1).standard_normal((10, 4))
    got = forward(net, x, plan=net.masked_plan(units), mode="train")
    m = net.copy()
    keep0 = np.zeros(8, bool)
    keep0[units[0]] = True
    keep1 = np.zeros(6, bool)
    keep1[units[2]] = True
    m.params["0.weight"][~keep0] = 0
    m.params["0.bias"][~keep0] = 0
    m.params["2.weight"][~keep1] = 0
    m.params["2.bias"][~keep1] = 0
    m.params["2.weight"][:, ~keep0] = 0
    m.params["4.weight"][:, ~keep1] = 0
    np.testing.assert_allclose(got, forward(m, x, 1.0, "train"), rtol=0, atol=1e-12)
