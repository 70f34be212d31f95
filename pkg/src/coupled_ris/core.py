"""Shared primitive types: parameter representations and reference impedance."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Representation(Enum):
    """Which multiport parameter set a quantity is expressed in."""

    IMPEDANCE = "impedance"
    ADMITTANCE = "admittance"


class LoadKind(Enum):
    """Real load-matrix families: Z_I = jX (reactance) or Y_I = jB (susceptance)."""

    REACTANCE = "reactance"
    SUSCEPTANCE = "susceptance"

    @property
    def representation(self) -> Representation:
        if self is LoadKind.REACTANCE:
            return Representation.IMPEDANCE
        return Representation.ADMITTANCE


@dataclass(frozen=True)
class ReferenceImpedance:
    """Source/load reference impedance Z0 in ohms; Y0 = 1/Z0 is derived."""

    z0: float = 50.0

    def __post_init__(self):
        if not np.isfinite(self.z0) or self.z0 <= 0:
            raise ValueError(f"reference impedance must be positive and finite, got {self.z0!r}")

    @property
    def y0(self) -> float:
        return 1.0 / self.z0
