"""Datasets and architectures named in experiment configs."""

import numpy as np

from ..data.digits import digit_datasets
from ..data.synthetic import make_classification_task
from ..nn.layers import Architecture, batchnorm, conv2d, dense, flatten, maxpool2d, relu
from ..rng import stream
from .config import data_dir


def femnist_cnn_arch(classes=62, input_shape=(1, 28, 28)):
    """5x5 convs with 10 and 20 filters, each followed by 2x2 max-pool, then a dense output."""
    return Architecture(
        input_shape,
        (conv2d(10, 5), relu(), maxpool2d(2), conv2d(20, 5), relu(), maxpool2d(2), flatten(), dense(classes, od=False)),
    )


def mlp_arch(n_in, hidden, classes, bn=False):
    layers = []
    for w in hidden:
        layers.append(dense(w, bias=not bn))
        if bn:
            layers.append(batchnorm())
        layers.append(relu())
    layers.append(dense(classes, od=False))
    return Architecture((n_in,), tuple(layers))


def load_task(cfg):
    """(train, test) Datasets for ``cfg.task``."""
    t = cfg.task
    if t.name == "digits":
        return digit_datasets(data_dir(cfg), t.train_size, t.test_size, seed=0)
    if t.name in ("blobs", "rings"):
        full = make_classification_task(t.name, t.classes, t.train_size + t.test_size, t.noise, stream(0, "task", t.name), dim=t.dim)
        idx = np.arange(len(full))
        return full.subset(idx[: t.train_size], f"{full.name}-train"), full.subset(idx[t.train_size:], f"{full.name}-test")
    raise ValueError(f"unknown task {t.name!r}")


def build_arch(cfg, train):
    a = cfg.architecture
    classes = train.num_classes
    if a.name == "femnist_cnn":
        return femnist_cnn_arch(classes, train.input_shape)
    if a.name == "mlp":
        return mlp_arch(int(np.prod(train.input_shape)), a.hidden, classes, a.batchnorm)
    raise ValueError(f"unknown architecture {a.name!r}")
