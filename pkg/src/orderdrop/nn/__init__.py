from .layers import (
    Architecture,
    LayerSpec,
    batchnorm,
    conv2d,
    dense,
    flatten,
    kept_units,
    maxpool2d,
    relu,
    softmax_output,
)
from .losses import cross_entropy, kl_divergence, log_softmax, softmax
from .network import (
    Gradients,
    Network,
    NonFiniteError,
    NormStats,
    Plan,
    WidthError,
    backward,
    evaluate,
    forward,
)
from .optim import OptimizerState, scheduled_lr, sgd_step

__all__ = [
    "Architecture",
    "LayerSpec",
    "batchnorm",
    "conv2d",
    "dense",
    "flatten",
    "kept_units",
    "maxpool2d",
    "relu",
    "softmax_output",
    "cross_entropy",
    "kl_divergence",
    "log_softmax",
    "softmax",
    "Gradients",
    "Network",
    "NonFiniteError",
    "NormStats",
    "Plan",
    "WidthError",
    "backward",
    "evaluate",
    "forward",
    "OptimizerState",
    "scheduled_lr",
    "sgd_step",
]
