from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

LogTarget = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class MetropolisChain:
    samples: np.ndarray  # (steps, dim), state after each sweep
    log_targets: np.ndarray  # (steps,)
    accepted: int
    proposed: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


def metropolis(
    log_target: LogTarget,
    initial: np.ndarray,
    scales: np.ndarray,
    steps: int,
    rng: np.random.Generator,
) -> MetropolisChain:
    """Random-walk Metropolis, one Gaussian proposal per coordinate per sweep.

    Coordinates with scale 0 are held fixed.
    """
    x = np.array(initial, dtype=float)
    scales = np.asarray(scales, dtype=float)
    current = float(log_target(x))
    if not np.isfinite(current):
        raise ValueError("initial state has non-finite log target")

    moving = np.flatnonzero(scales > 0)
    samples = np.empty((steps, x.size))
    trace = np.empty(steps)
    accepted = 0
    for step in range(steps):
        noise = rng.standard_normal(moving.size)
        log_u = np.log(rng.random(moving.size))
        for j, i in enumerate(moving):
            old = x[i]
            x[i] = old + scales[i] * noise[j]
            proposed = float(log_target(x))
            if log_u[j] < proposed - current:
                current = proposed
                accepted += 1
            else:
                x[i] = old
        samples[step] = x
        trace[step] = current
    return MetropolisChain(samples, trace, accepted, steps * moving.size)
