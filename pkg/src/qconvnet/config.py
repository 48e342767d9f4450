"""Run configuration: the key=value config file format and its validation."""
from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError
from .expansion import STRIDE_BLOCKS, SUPPORTED_FACTORS
from .idx import DATASETS, SUPPORTED_SIZES

REQUIRED_KEYS = ("dataset", "image_size", "kernel_size", "mult_factor")


@dataclass
class TrainConfig:
    dataset: str
    image_size: int
    kernel_size: int
    mult_factor: int
    n_kernels: int = 16
    stride_blocks: int = 2
    lrs: tuple[float, ...] = (1e-4, 1e-3, 1e-2, 1e-1)
    seeds: tuple[int, ...] = (0, 1, 2)
    epochs: int = 20
    batch_size: int = 64
    momentum: float = 0.9
    init_lo: float = -0.5
    init_hi: float = 0.5
    out_dir: str = "runs"
    data_dir: str | None = None

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ConfigError(f"dataset {self.dataset!r} unknown, expected one of {DATASETS}")
        if self.image_size not in SUPPORTED_SIZES:
            raise ConfigError(f"image_size {self.image_size} unsupported, expected one of {SUPPORTED_SIZES}")
        if self.kernel_size not in SUPPORTED_FACTORS:
            raise ConfigError(f"kernel_size {self.kernel_size} unsupported, expected one of {SUPPORTED_FACTORS}")
        if self.mult_factor not in SUPPORTED_FACTORS:
            raise ConfigError(f"mult_factor {self.mult_factor} unsupported, expected one of {SUPPORTED_FACTORS}")
        if self.n_kernels < 1:
            raise ConfigError(f"n_kernels must be positive, got {self.n_kernels}")
        if self.stride_blocks != STRIDE_BLOCKS:
            raise ConfigError(f"only stride_blocks={STRIDE_BLOCKS} is supported, got {self.stride_blocks}")
        if not self.lrs or any(lr <= 0 for lr in self.lrs):
            raise ConfigError(f"lrs must be a non-empty list of positive rates, got {self.lrs}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.init_lo > self.init_hi:
            raise ConfigError(f"init range ({self.init_lo}, {self.init_hi}) is inverted")


_PARSERS = {
    "dataset": str,
    "image_size": int,
    "kernel_size": int,
    "mult_factor": int,
    "n_kernels": int,
    "stride_blocks": int,
    "lrs": lambda v: tuple(float(x) for x in v.split(",") if x.strip()),
    "seeds": lambda v: tuple(int(x) for x in v.split(",") if x.strip()),
    "epochs": int,
    "batch_size": int,
    "momentum": float,
    "init_lo": float,
    "init_hi": float,
    "out_dir": str,
    "data_dir": str,
}


def parse_config(text: str) -> TrainConfig:
    """Parse key=value lines into a validated TrainConfig.

    Blank lines are skipped and '#' starts a comment. The key vocabulary is
    exactly the TrainConfig fields; unknown keys, malformed lines, missing
    required keys and unparsable values all raise ConfigError. A repeated
    key keeps its last value.
    """
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    return TrainConfig(**values)


def config_fields() -> tuple[str, ...]:
    return tuple(f.name for f in fields(TrainConfig))
