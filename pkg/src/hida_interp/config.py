"""Run configuration: the two precision knobs, orientation, cache and catalog."""
from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

from .cache import ENV_VAR


@dataclass(frozen=True)
class RunConfig:
    cache_dir: str | None = None
    digits: int = 20          # complex working precision (decimal digits)
    prec: int = 20            # p-adic relative precision
    orientation: str = "standard"
    catalog: str | None = None    # directory of extra q-expansion files <name>.qexp

    def __post_init__(self):
        if self.digits < 15:
            raise ValueError("digits must be at least 15")
        if self.prec < 6:
            raise ValueError("prec must be at least 6")
        if self.orientation not in ("standard", "reversed"):
            raise ValueError("orientation must be 'standard' or 'reversed'")

    @classmethod
    def from_env(cls) -> "RunConfig":
        return cls(cache_dir=os.environ.get(ENV_VAR) or None)

    def updated(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def apply(self) -> None:
        """Export the cache location for the operator-matrix cache."""
        if self.cache_dir:
            os.makedirs(self.cache_dir, exist_ok=True)
            os.environ[ENV_VAR] = self.cache_dir


_INT_KEYS = {"digits", "prec"}


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Line-based ``key = value``; '#' starts a comment."""
    known = {f.name for f in fields(RunConfig)}
    kv = {}
    for n, ln in enumerate(text.splitlines(), 1):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        key, sep, val = ln.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or key not in known:
            raise ValueError(f"config line {n}: expected one of {sorted(known)} = value")
        kv[key] = int(val) if key in _INT_KEYS else val
    return (base or RunConfig()).updated(**kv)


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), base)


def format_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {getattr(cfg, f.name)}\n" for f in fields(cfg)
                   if getattr(cfg, f.name) is not None)
