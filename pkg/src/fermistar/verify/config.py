"""Configuration of a verification run."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

__all__ = ["SUITES", "ConfigError", "SuiteConfig"]

SUITES = ("algebra", "star", "clifford", "polarization", "states", "transport",
          "metaplectic", "equivariance")


class ConfigError(ValueError):
    """Invalid verification configuration."""


@dataclass(frozen=True)
class SuiteConfig:
    """Parameters shared by all suites.

    ``samples`` sets how many random instances each randomised check draws.
    Suites whose cost grows like 4^m run at a capped dimension, reported in
    each record.
    """

    m: int = 4
    hbar: float = 1.0
    seed: int = 0
    tol: float = 1e-10
    suites: tuple = SUITES
    output: str | None = None
    samples: int = 10

    def __post_init__(self):
        if isinstance(self.suites, str):
            object.__setattr__(self, "suites", (self.suites,))
        suites = tuple(self.suites)
        if "all" in suites:
            suites = SUITES
        unknown = [s for s in suites if s not in SUITES]
        if unknown:
            raise ConfigError(f"unknown suite(s): {', '.join(unknown)}")
        object.__setattr__(self, "suites", tuple(s for s in SUITES if s in suites))
        if not isinstance(self.m, int) or self.m < 2 or self.m > 16 or self.m % 2:
            raise ConfigError("m must be an even integer between 2 and 16")
        if not self.hbar > 0:
            raise ConfigError("hbar must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.samples < 1:
            raise ConfigError("samples must be at least 1")

    def to_json(self) -> dict:
        out = asdict(self)
        out["suites"] = list(self.suites)
        out.pop("output")
        return out
