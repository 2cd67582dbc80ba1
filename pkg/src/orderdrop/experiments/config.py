"""Strict JSON experiment configuration with a canonical echo.

Every section is a frozen dataclass. Unknown keys are rejected, missing
keys take the experiment's defaults, and ``canonical_json`` writes every
value out so a run can be reproduced from its echo alone.
"""

import dataclasses
import json
import os
import types
import typing
from dataclasses import dataclass, field

EXPERIMENTS = ("svd", "central", "federated", "cost")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TaskSection:
    name: str = "digits"  # digits | blobs | rings
    train_size: int = 8000
    test_size: int = 2000
    classes: int = 10
    noise: float = 1.0
    dim: int = 2
    data_dir: str = ""  # empty: $ORDERDROP_DATA or ~/.cache/orderdrop


@dataclass(frozen=True)
class ArchSection:
    name: str = "femnist_cnn"  # femnist_cnn | mlp
    hidden: tuple = (64, 64)
    batchnorm: bool = False
    init: str = "uniform"


@dataclass(frozen=True)
class DropoutSection:
    k: int = 5


@dataclass(frozen=True)
class KdSection:
    enabled: bool = True
    alpha: float = 1.0
    temperature: float = 1.0
    teacher_backprop: bool = True
    form: str = "final"


@dataclass(frozen=True)
class OptimizerSection:
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 15
    schedule: tuple = ()


@dataclass(frozen=True)
class FederationSection:
    rounds: int = 200
    local_steps: int | None = None
    fraction: float = 0.1
    num_clients: int = 100
    drop_scale: float = 1.0
    partition: str = "iid"
    concentration: float = 0.5
    methods: tuple = ("fjord", "fjord_kd", "efd", "fd", "fjord_efd")
    efd_widths: tuple = (0.4, 0.6, 0.8, 1.0)
    efd_cap: float = 0.25
    fd_keep: float = 0.2
    eval_every: int = 20
    compare_drop_scale: float | None = 0.5
    centralized_baseline: bool = True


@dataclass(frozen=True)
class SvdSection:
    k: int = 5
    singular_values: tuple = (5.0, 4.0, 3.0, 2.0, 1.0)
    lr: float = 0.1
    steps: int = 10_000
    batch_size: int = 32
    record_every: int = 100
    loss: str = "sse"
    init: str = "normal"
    threshold: float = 0.1


@dataclass(frozen=True)
class CentralSection:
    arms: tuple = ("od", "od_kd", "sm", "sm1_rd")
    rd_draws: int = 3


@dataclass(frozen=True)
class CostSection:
    descriptors: tuple = ("resnet18_cifar", "femnist_cnn")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "central"
    seeds: tuple = (0, 1, 2)
    output: str = ""
    threads: int = 1
    record_wallclock: bool = False
    checkpoints: bool = True
    task: TaskSection = field(default_factory=TaskSection)
    architecture: ArchSection = field(default_factory=ArchSection)
    dropout: DropoutSection = field(default_factory=DropoutSection)
    kd: KdSection = field(default_factory=KdSection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    federation: FederationSection = field(default_factory=FederationSection)
    svd: SvdSection = field(default_factory=SvdSection)
    central: CentralSection = field(default_factory=CentralSection)
    cost: CostSection = field(default_factory=CostSection)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def to_dict(self):
        return _to_plain(self)

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [_to_plain(v) for v in obj]
    return obj


def _convert(tp, value, where):
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object")
        return build(tp, value, where)
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        return _convert(next(a for a in args if a is not type(None)), value, where)
    if tp is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return tuple(tuple(v) if isinstance(v, list) else v for v in value)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    return value


def build(cls, data, where="config", base=None):
    """Instance of dataclass ``cls`` from ``data``; unspecified fields come from ``base``."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    base = base if base is not None else cls()
    kwargs = {}
    for name in names:
        if name not in data:
            continue
        tp = hints[name]
        if dataclasses.is_dataclass(tp):
            kwargs[name] = build(tp, data[name], f"{where}.{name}", getattr(base, name)) if isinstance(data[name], dict) else _convert(tp, data[name], f"{where}.{name}")
        else:
            kwargs[name] = _convert(tp, data[name], f"{where}.{name}")
    try:
        return dataclasses.replace(base, **kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from e


def default_config(experiment):
    """Defaults for ``experiment``; federated runs use plain SGD with a step decay."""
    cfg = ExperimentConfig(experiment=experiment)
    if experiment == "federated":
        cfg = cfg.replace(
            seeds=(0,),
            optimizer=OptimizerSection(lr=0.2, momentum=0.0, batch_size=16, epochs=1, schedule=((0.5, 0.1), (0.75, 0.01))),
        )
    elif experiment == "svd":
        cfg = cfg.replace(seeds=(0, 1, 2))
    return cfg


def parse_config(text, experiment=None):
    """Parse JSON ``text`` into an ExperimentConfig; malformed JSON raises ConfigError with line/column."""
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    exp = data.get("experiment", experiment or "central")
    if experiment and exp != experiment:
        raise ConfigError(f"config is for experiment {exp!r}, not {experiment!r}")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
    return build(ExperimentConfig, data, base=default_config(exp))


def load_config(path, experiment=None):
    with open(path) as f:
        return parse_config(f.read(), experiment)


def data_dir(cfg):
    return cfg.task.data_dir or os.environ.get("ORDERDROP_DATA") or os.path.join(os.path.expanduser("~"), ".cache", "orderdrop")
