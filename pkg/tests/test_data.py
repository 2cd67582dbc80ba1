import numpy as np
import pytest
from scipy import stats

from orderdrop.data import (
    IdxFormatError,
    load_idx,
    make_classification_task,
    make_digits,
    make_linear_task,
    make_svd_matrix,
    partition_iid,
    partition_label_skew,
    read_idx,
    sample_unit_ball,
    write_idx,
)
from orderdrop.rng import stream


def _write_pair(tmp_path, images, labels):
    ip, lp = tmp_path / "img", tmp_path / "lab"
    write_idx(ip, images)
    write_idx(lp, labels)
    return ip, lp


def test_idx_round_trip_and_scaling(tmp_path):
    images = np.zeros((10_000, 28, 28), np.uint8)
    images[1] = 255
    labels = (np.arange(10_000) % 10).astype(np.uint8)
    ds = load_idx(*_write_pair(tmp_path, images, labels))
    assert len(ds) == 10_000 and ds.inputs.shape[2:] == (28, 28)
    assert np.all(ds.inputs[0] == 0.0) and np.all(ds.inputs[1] == 1.0)
    assert read_idx(tmp_path / "img").dtype == np.dtype(">u1")


def test_idx_errors(tmp_path):
    images = np.zeros((5, 4, 4), np.uint8)
    ip, lp = _write_pair(tmp_path, images, np.arange(5, dtype=np.uint8))
    data = ip.read_bytes()
    ip.write_bytes(data[:-3])
    with pytest.raises(IdxFormatError, match=f"truncated at byte {len(data) - 3}"):
        load_idx(ip, lp)
    ip.write_bytes(b"\x00\x00\x08\x02" + data[4:])
    with pytest.raises(IdxFormatError, match="bad magic"):
        load_idx(ip, lp)
    ip.write_bytes(data)
    with pytest.raises(IdxFormatError, match="outside"):
        load_idx(ip, lp, num_classes=3)


def test_unit_ball():
    x = sample_unit_ball(5, 10_000, stream(0, "ball"))
    r = np.linalg.norm(x, axis=1)
    assert r.max() <= 1.0
    assert np.all(np.abs(x.mean(axis=0)) < 0.02)
    assert stats.kstest(r, lambda t: np.clip(t, 0, 1) ** 5).pvalue > 0.01


def test_linear_task_examples():
    rng = stream(0, "lin")
    d = make_linear_task(np.eye(5), 50, rng)
    np.testing.assert_array_equal(d.inputs, d.targets)
    A = np.diag([5.0, 4, 3, 2, 1])
    assert np.array_equal(A @ np.eye(5)[0], [5, 0, 0, 0, 0])
    B = make_svd_matrix([5, 4, 3, 2, 1], rng)
    np.testing.assert_allclose(np.linalg.svd(B, compute_uv=False), [5, 4, 3, 2, 1], atol=1e-12)
    with pytest.raises(ValueError):
        make_linear_task(np.zeros((3, 3)), 5, rng)


def test_classification_task():
    d = make_classification_task("blobs", 4, 400, 0.0, stream(3, "blobs"))
    centroids = np.stack([d.inputs[d.targets == c].mean(axis=0) for c in range(4)])
    pred = np.argmin(((d.inputs[:, None] - centroids[None]) ** 2).sum(-1), axis=1)
    assert np.all(pred == d.targets)
    again = make_classification_task("blobs", 4, 400, 0.0, stream(3, "blobs"))
    assert np.array_equal(d.inputs, again.inputs)
    counts = np.bincount(make_classification_task("rings", 3, 301, 0.1, stream(1, "r")).targets)
    assert counts.max() - counts.min() <= 1


def test_partition_iid_examples():
    shards = partition_iid(100, 10, stream(0, "p"))
    assert [len(s) for s in shards] == [10] * 10
    shards = partition_iid(101, 10, stream(0, "p"))
    assert sorted(len(s) for s in shards) == [10] * 9 + [11]
    allidx = np.concatenate(shards)
    assert np.array_equal(np.sort(allidx), np.arange(101))


def test_partition_label_skew():
    labels = np.arange(1000) % 10
    shards = partition_label_skew(labels, 20, 0.5, stream(0, "skew"))
    assert np.array_equal(np.sort(np.concatenate(shards)), np.arange(1000))
    again = partition_label_skew(labels, 20, 0.5, stream(0, "skew"))
    assert all(np.array_equal(a, b) for a, b in zip(shards, again))
    iid_like = partition_label_skew(labels, 5, 1e6, stream(1, "skew"))
    for s in iid_like:
        frac = np.bincount(labels[s], minlength=10) / len(s)
        assert np.all(np.abs(frac - 0.1) < 0.05)
    with pytest.raises(ValueError):
        partition_label_skew(np.zeros(3, int), 10, 0.1, stream(0, "x"))


def test_label_skew_dominance_report():
    labels = np.arange(200) % 2
    dominant = 0
    for seed in range(20):
        for s in partition_label_skew(labels, 2, 0.1, stream(seed, "dom")):
            dominant += np.bincount(labels[s], minlength=2).max() / len(s) > 0.8
    print(f"label-skew 0.1: {dominant}/40 client shards have a >80% class")


def test_digits_deterministic():
    a, la = make_digits(20, 5)
    b, lb = make_digits(20, 5)
    assert np.array_equal(a, b) and np.array_equal(la, lb)
    assert a.shape == (20, 28, 28) and a.dtype == np.uint8
