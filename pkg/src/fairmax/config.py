"""Training configuration and the flat ``key = value`` config file format."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

ALPHA_AUTO = "auto"
ALPHA_INV_SQRT = "1/sqrt(t)"
DEFAULT_CONSTANT_ALPHA = 1.0


@dataclass(frozen=True)
class TrainConfig:
    model: str = "logistic"
    hidden: tuple[int, ...] = (32, 32, 32)
    lam: float = 2.0
    eta1: float = 20.0
    eta2: float = 0.5
    # float, "1/sqrt(t)", or "auto" (constant for gda-normal, 1/sqrt(t) for gda-modified)
    alpha: float | str = ALPHA_AUTO
    epochs: int = 165
    batch_size: int = 128
    pretrain_clf_epochs: int = 300
    pretrain_adv_epochs: int = 300
    noise_enabled: bool = False
    noise_per_sample: bool = False
    reg_weight: float = 10.0
    fairness_floor: float = 80.0
    seed: int = 0
    freeze_adversary: bool = False
    full_batch: bool = True
    test_fraction: float = 0.3

    def __post_init__(self):
        if self.model not in ("logistic", "mlp"):
            raise ConfigError(f"model must be 'logistic' or 'mlp', got {self.model!r}")
        if self.lam < 0:
            raise ConfigError("lambda must be non-negative")
        if not (self.eta1 > 0 and self.eta2 > 0):
            raise ConfigError("eta1 and eta2 must be positive")
        if isinstance(self.alpha, str):
            if self.alpha not in (ALPHA_AUTO, ALPHA_INV_SQRT):
                raise ConfigError(f"alpha must be a number, {ALPHA_INV_SQRT!r} or "
                                  f"{ALPHA_AUTO!r}, got {self.alpha!r}")
        elif not self.alpha >= 0:
            raise ConfigError("alpha must be non-negative")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be at least 2")
        if self.pretrain_clf_epochs < 0 or self.pretrain_adv_epochs < 0:
            raise ConfigError("pretraining epochs must be non-negative")
        if self.reg_weight < 0:
            raise ConfigError("reg_weight must be non-negative")
        if not 0 <= self.fairness_floor <= 100:
            raise ConfigError("fairness_floor must lie in [0, 100]")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must lie in (0, 1)")

    def alpha_at(self, t: int, default: str | float) -> float:
        a = default if self.alpha == ALPHA_AUTO else self.alpha
        if a == ALPHA_INV_SQRT:
            return 1.0 / math.sqrt(t)
        return float(a)

    def replace(self, **changes) -> TrainConfig:
        return dataclasses.replace(self, **changes)


# config-file key -> dataclass field
KEY_ALIASES = {"lambda": "lam"}
FIELD_KEYS = {v: k for k, v in KEY_ALIASES.items()}


def _convert(name: str, raw: str, where: str):
    default = next(f.default for f in fields(TrainConfig) if f.name == name)
    raw = raw.strip()
    try:
        if name == "alpha":
            return raw if raw in (ALPHA_AUTO, ALPHA_INV_SQRT) else float(raw)
        if name == "hidden":
            return tuple(int(v) for v in raw.replace(",", " ").split())
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{where}: bad value {raw!r} for key "
                          f"{FIELD_KEYS.get(name, name)!r}") from None


def parse_overrides(pairs: dict[str, str], where: str = "<flags>") -> dict:
    known = {f.name for f in fields(TrainConfig)}
    out = {}
    for key, raw in pairs.items():
        name = KEY_ALIASES.get(key, key).replace("-", "_")
        if name not in known:
            raise ConfigError(f"{where}: unknown key {key!r}")
        out[name] = _convert(name, raw, where)
    return out


def read_config_text(text: str, source: str = "<config>") -> dict:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        pairs.update(parse_overrides({key: value}, f"{source}:{lineno}"))
    return pairs


def load_config(path=None, **overrides) -> TrainConfig:
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        values.update(read_config_text(p.read_text(), str(p)))
    values.update(overrides)
    return TrainConfig(**values)


def dump_config(cfg: TrainConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{FIELD_KEYS.get(f.name, f.name)} = {v}")
    return "\n".join(lines) + "\n"
