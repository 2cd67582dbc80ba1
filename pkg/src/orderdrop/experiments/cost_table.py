"""MACs, parameters and transfer sizes for the bundled architecture descriptors."""

from ..od.cost import cost_rows, femnist_cnn, resnet18_cifar, rows_to_csv
from ..od.distribution import make_uniform_k

DESCRIPTORS = {"resnet18_cifar": resnet18_cifar, "femnist_cnn": femnist_cnn}


def get_descriptor(name):
    try:
        return DESCRIPTORS[name]()
    except KeyError:
        raise ValueError(f"unknown descriptor {name!r}; choose from {sorted(DESCRIPTORS)}") from None


def run_cost_table(descriptors=("resnet18_cifar", "femnist_cnn"), dist=None):
    """One row per (descriptor, p); returns (rows, csv_text)."""
    dist = dist or make_uniform_k(5)
    rows = []
    for d in descriptors:
        desc = get_descriptor(d) if isinstance(d, str) else d
        rows += cost_rows(desc, dist.values)
    return rows, rows_to_csv(rows)
