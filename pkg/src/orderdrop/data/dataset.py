"""In-memory dataset container."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    name: str = "dataset"
    num_classes: int | None = None  # None for regression targets

    def __post_init__(self):
        if len(self.inputs) != len(self.targets):
            raise ValueError(f"{len(self.inputs)} inputs but {len(self.targets)} targets")
        if self.num_classes is not None:
            t = np.asarray(self.targets)
            if t.ndim != 1 or (len(t) and (t.min() < 0 or t.max() >= self.num_classes)):
                raise ValueError(f"labels must lie in [0, {self.num_classes})")

    def __len__(self):
        return len(self.inputs)

    @property
    def input_shape(self):
        return tuple(self.inputs.shape[1:])

    def subset(self, idx, name=None):
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(self.inputs[idx], self.targets[idx], name or self.name, self.num_classes)
