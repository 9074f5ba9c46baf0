"""Numerical tolerances and global limits.

Every tolerance used by the package lives in one record so tests and callers
agree on the defaults instead of scattering magic numbers.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_MAX_DIM = 2**20
MAX_DIM_ENV_VAR = "SCRAMBLE_MAX_DIM"


@dataclass(frozen=True)
class Tolerances:
    """Default numerical tolerances, grouped by what they guard."""

    hermiticity: float = 1e-9      # max |h - h^dag| accepted by herm_eig
    unitarity: float = 1e-9        # max |U^dag U - I| for operators that must be unitary
    normalization: float = 1e-10   # state norm / trace deviation from 1
    psd: float = 1e-9              # how negative an eigenvalue of a state may be
    divergence: float = 1e-9       # denominator cutoff for the corrected-ratio series
    probe_delta: float = 1e-4      # cutoff escalation: max probe-curve change on doubling
    thermal_tail: float = 1e-8     # cutoff escalation: truncated thermal tail weight
    zero_entry: float = 1e-12      # "first nonzero" threshold when fixing eigenvector phases


DEFAULT_TOLERANCES = Tolerances()


def max_dim() -> int:
    """Largest composite dimension any operation may allocate.

    Overridable through the SCRAMBLE_MAX_DIM environment variable.
    """
    raw = os.environ.get(MAX_DIM_ENV_VAR)
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{MAX_DIM_ENV_VAR} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"{MAX_DIM_ENV_VAR} must be positive, got {value}")
    return value
