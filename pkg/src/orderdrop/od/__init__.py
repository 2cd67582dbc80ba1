from ..nn.layers import kept_units
from .cost import (
    ArchCostDescriptor,
    CommSavings,
    Cost,
    CostLayer,
    comm_savings,
    cost_model,
    cost_rows,
    dense_layer,
    femnist_cnn,
    from_architecture,
    resnet18_cifar,
    rows_to_csv,
)
from .distribution import BelowMinimumWidth, DropoutDistribution, make_uniform_k, sample_p_conditional
from .submodel import SubmodelView, extract_submodel, materialize_submodel, write_back

__all__ = [
    "kept_units",
    "ArchCostDescriptor",
    "CommSavings",
    "Cost",
    "CostLayer",
    "comm_savings",
    "cost_model",
    "cost_rows",
    "dense_layer",
    "femnist_cnn",
    "from_architecture",
    "resnet18_cifar",
    "rows_to_csv",
    "BelowMinimumWidth",
    "DropoutDistribution",
    "make_uniform_k",
    "sample_p_conditional",
    "SubmodelView",
    "extract_submodel",
    "materialize_submodel",
    "write_back",
]
