"""Job configuration: line-oriented "key = value" text with typed fields."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from typing import Optional

from sympy import isprime

from .padic import is_eisenstein


class ConfigError(ValueError):
    pass


@dataclass
class JobConfig:
    p: int = 5
    n: int = 2
    r: int = 1
    N0: int = 1
    e: int = 2
    eispoly: Optional[tuple] = None         # low to high; default x^e - p
    wmax: int = 16
    guard: int = 10
    cache_dir: str = "cache"
    out_dir: str = "reports"
    limit_chars: int = 400                  # characters per component and ring (lexicographic)
    limit_samples: int = 200                # extra random descents per component and ring
    limit_nodes: int = 20000                # lift-tree nodes per ramified search
    limit_window: int = 0                   # weak-witness window; 0 means W + (p-1) p^(n-1)
    demo_d: int = 12
    demo_emax: int = 12
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def validate(self) -> "JobConfig":
        if not isprime(self.p) or self.p < 5:
            raise ConfigError("p must be a prime >= 5")
        if self.r < 1 or self.N0 < 1 or self.N0 % self.p == 0:
            raise ConfigError("need r >= 1 and N0 >= 1 prime to p")
        if self.n < 1 or self.e < 1:
            raise ConfigError("n and e must be positive")
        if self.wmax < 2:
            raise ConfigError("weights below 2 are not supported")
        for name in ("guard", "limit_chars", "limit_nodes", "demo_d", "demo_emax"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.limit_samples < 0 or self.limit_window < 0:
            raise ConfigError("limits must be nonnegative")
        if self.eispoly is not None:
            if len(self.eispoly) - 1 != self.e or not is_eisenstein(self.eispoly, self.p):
                raise ConfigError(f"{self.eispoly} is not an Eisenstein polynomial of degree {self.e}")
        return self

    @property
    def N(self) -> int:
        return self.N0 * self.p ** self.r

    def eisenstein(self, e: Optional[int] = None) -> tuple:
        e = self.e if e is None else e
        if self.eispoly is not None and e == self.e:
            return tuple(self.eispoly)
        return (-self.p,) + (0,) * (e - 1) + (1,)

    # text form

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "extra":
                continue
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(str(c) for c in v)
            lines.append(f"{f.name} = {v}")
        for k in sorted(self.extra):
            lines.append(f"{k} = {self.extra[k]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: Optional["JobConfig"] = None) -> "JobConfig":
        cfg = base if base is not None else cls()
        types = {f.name: f for f in fields(cls)}
        for num, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {num}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in types or key == "extra":
                cfg.extra[key] = val
                continue
            setattr(cfg, key, _parse_value(key, val))
        return cfg

    @classmethod
    def load(cls, path: str, base: Optional["JobConfig"] = None) -> "JobConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), base)

    def ident(self) -> str:
        return f"p{self.p}_N{self.N}_w{self.wmax}_g{self.guard}"


def _parse_value(key: str, val: str):
    if key in ("cache_dir", "out_dir"):
        return val
    if key == "eispoly":
        if val.lower() in ("", "none"):
            return None
        return tuple(int(c) for c in val.split(","))
    try:
        return int(val)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {val!r}") from None


def default_cache_dir(cfg: JobConfig) -> str:
    return os.environ.get("CACHE_DIR", cfg.cache_dir)
