from .aggregate import aggregate
from .clusters import (
    ClientState,
    DeviceCluster,
    assign_clients,
    build_clients,
    cluster_shares,
    make_clusters,
    quotas,
    select_participants,
)
from .local import (
    LocalSpec,
    UpdatePacket,
    batch_indices,
    extension_units,
    local_train_efd,
    local_train_fd,
    local_train_fjord,
    local_train_fjord_efd,
    random_units,
)
from .simulation import FederatedConfig, evaluate_global, make_clients, run_training
from .trace import COLUMNS, MetricTrace

__all__ = [
    "aggregate",
    "ClientState",
    "DeviceCluster",
    "assign_clients",
    "build_clients",
    "cluster_shares",
    "make_clusters",
    "quotas",
    "select_participants",
    "LocalSpec",
    "UpdatePacket",
    "batch_indices",
    "extension_units",
    "local_train_efd",
    "local_train_fd",
    "local_train_fjord",
    "local_train_fjord_efd",
    "random_units",
    "FederatedConfig",
    "evaluate_global",
    "make_clients",
    "run_training",
    "COLUMNS",
    "MetricTrace",
]
