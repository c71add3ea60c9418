"""CODATA-2018 physical constants in SI units.

Values are compiled in (not taken from ``scipy.constants``) so that derived
numbers stay reproducible regardless of the installed library version.
``mu0`` and ``alpha_fs`` are derived from the others so that formulas written
with either set agree to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    epsilon0: float = 8.8541878128e-12  # F/m
    hbar: float = 1.054571817e-34  # J s
    c_light: float = 299792458.0  # m/s
    e_charge: float = 1.602176634e-19  # C, positive
    m_e: float = 9.1093837015e-31  # kg
    debye: float = 1e-21 / 299792458.0  # C m

    @property
    def mu0(self) -> float:
        """Vacuum permeability, ``1/(eps0 c^2)`` (H/m)."""
        return 1.0 / (self.epsilon0 * self.c_light ** 2)

    @property
    def alpha_fs(self) -> float:
        """Fine-structure constant ``e^2/(4 pi eps0 hbar c)``."""
        return self.e_charge ** 2 / (4.0 * math.pi * self.epsilon0 * self.hbar * self.c_light)

    @property
    def q(self) -> float:
        """Electron charge including its sign."""
        return -self.e_charge


CONST = PhysicalConstants()

# Julian year, used only for reporting decay times.
YEAR_S = 365.25 * 86400.0

TWO_PI = 2.0 * math.pi
