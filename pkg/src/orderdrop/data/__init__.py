from .dataset import Dataset
from .digits import digit_datasets, make_digits, render_digit, write_digit_idx
from .idx import IdxFormatError, load_idx, parse_idx, read_idx, write_idx
from .partition import partition_iid, partition_label_skew
from .synthetic import make_classification_task, make_linear_task, make_svd_matrix, sample_unit_ball

__all__ = [
    "Dataset",
    "digit_datasets",
    "make_digits",
    "render_digit",
    "write_digit_idx",
    "IdxFormatError",
    "load_idx",
    "parse_idx",
    "read_idx",
    "write_idx",
    "partition_iid",
    "partition_label_skew",
    "make_classification_task",
    "make_linear_task",
    "make_svd_matrix",
    "sample_unit_ball",
]
