"""Discretely-monitored payoffs: descriptors plus exact evaluation.

A payoff reads the spot at the monitoring dates t_1..t_n (optionally a
subset of them) and returns a scalar.  Evaluation is exact arithmetic on
the monitored vector; the barrier survival test is inclusive (knocked out
only when the monitored maximum exceeds H).
"""

import math
from dataclasses import dataclass

import numpy as np

PAYOFF_KINDS = (
    "asian_call",
    "up_and_out_call",
    "european_call",
    "european_put",
    "forward",
    "constant",
)

# kinds whose value depends on the final monitored date
_READS_FINAL = ("up_and_out_call", "european_call", "european_put", "forward")


@dataclass(frozen=True)
class PayoffDescriptor:
    kind: str
    strike: float = 0.0
    barrier: float = None
    level: float = None
    monitoring_subset: tuple = None

    def __post_init__(self):
        if self.kind not in PAYOFF_KINDS:
            raise ValueError(
                f"unknown payoff kind '{self.kind}'; "
                f"valid kinds: {', '.join(PAYOFF_KINDS)}"
            )
        if not (math.isfinite(self.strike) and self.strike >= 0.0):
            raise ValueError("strike must be nonnegative and finite")
        if self.kind == "up_and_out_call":
            if self.barrier is None or not (
                math.isfinite(self.barrier) and self.barrier > 0.0
            ):
                raise ValueError("barrier must be positive and finite")
        elif self.barrier is not None:
            raise ValueError("barrier only applies to up_and_out_call")
        if self.kind == "constant":
            if self.level is None or not math.isfinite(self.level):
                raise ValueError("constant payoff requires a finite level")
        elif self.level is not None:
            raise ValueError("level only applies to the constant payoff")
        if self.monitoring_subset is not None:
            sub = tuple(int(i) for i in self.monitoring_subset)
            if len(sub) == 0:
                raise ValueError("monitoring subset must be nonempty")
            if sub[0] < 1 or any(b <= a for a, b in zip(sub, sub[1:])):
                raise ValueError(
                    "monitoring subset indices must be strictly increasing "
                    "and start at 1 or later"
                )
            object.__setattr__(self, "monitoring_subset", sub)


def _subset_columns(descriptor, n):
    """0-based column indices of the monitored dates used by the payoff."""
    sub = descriptor.monitoring_subset
    if sub is None:
        return np.arange(n)
    if sub[-1] > n:
        raise ValueError("monitoring subset index out of range")
    if descriptor.kind in _READS_FINAL and sub[-1] != n:
        raise ValueError(
            "monitoring subset must include the final date for "
            f"{descriptor.kind}"
        )
    return np.asarray(sub) - 1


def evaluate_batch(descriptor, values, n):
    """Payoff of every row of a (paths, n) monitored-value matrix."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != n:
        raise ValueError("values length mismatch")
    if descriptor.kind == "constant":
        return np.full(values.shape[0], float(descriptor.level))
    cols = _subset_columns(descriptor, n)
    monitored = values[:, cols]
    k = descriptor.strike
    if descriptor.kind == "asian_call":
        return np.maximum(monitored.mean(axis=1) - k, 0.0)
    terminal = monitored[:, -1]
    if descriptor.kind == "european_call":
        return np.maximum(terminal - k, 0.0)
    if descriptor.kind == "european_put":
        return np.maximum(k - terminal, 0.0)
    if descriptor.kind == "forward":
        return terminal - k
    # up_and_out_call: pays only when the monitored maximum stayed at or
    # below the barrier
    alive = monitored.max(axis=1) <= descriptor.barrier
    return np.where(alive, np.maximum(terminal - k, 0.0), 0.0)


def evaluate(descriptor, values):
    """Payoff of a single monitored-value vector x_{t_1..t_n}."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("values must be a one-dimensional vector")
    return float(evaluate_batch(descriptor, values.reshape(1, -1), values.shape[0])[0])
