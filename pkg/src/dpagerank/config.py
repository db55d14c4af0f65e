from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Damping, default distribution and stopping parameters shared by all solvers.

    ``Z=None`` means the uniform distribution over however many nodes the
    target graph has.
    """

    d: float = 0.85
    Z: np.ndarray | None = None
    epsilon: float = 1e-9
    max_rounds: int = 1000

    def __post_init__(self):
        if not (0.0 < self.d < 1.0):
            raise ConfigError(f"damping must lie in (0, 1), got {self.d}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.max_rounds) != self.max_rounds or self.max_rounds < 1:
            raise ConfigError(f"max_rounds must be a positive integer, got {self.max_rounds}")
        if self.Z is not None:
            z = np.array(self.Z, dtype=np.float64).ravel()
            if np.any(~np.isfinite(z)) or np.any(z < 0):
                raise ConfigError("Z entries must be finite and non-negative")
            if abs(z.sum() - 1.0) > 1e-12:
                raise ConfigError(f"Z must sum to 1 (got {z.sum()!r})")
            z.setflags(write=False)
            object.__setattr__(self, "Z", z)

    def zap(self, n: int) -> np.ndarray:
        """Default distribution as a length-``n`` vector."""
        if self.Z is None:
            return np.full(n, 1.0 / n) if n else np.zeros(0)
        if self.Z.shape[0] != n:
            raise ConfigError(f"Z has length {self.Z.shape[0]}, graph has {n} nodes")
        return self.Z.copy()

    def is_uniform(self, n: int) -> bool:
        if self.Z is None:
            return True
        return self.Z.shape[0] == n and bool(np.all(self.Z == self.Z[0]))
