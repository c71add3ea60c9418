"""Derived physical scales of a configuration."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .constants import CONST, TWO_PI, YEAR_S
from .coupling import HamiltonianModel, SystemConfig, omega0_perp
from .dynamics import _g_sp

__all__ = ["ParameterReport", "format_report", "parameter_report"]

_UNITS = {
    "B0_T": "T",
    "B0_pole_T": "T",
    "omega0_perp_rad_s": "rad/s",
    "omega0_perp_over_2pi_Hz": "Hz",
    "A": "",
    "E_d_J": "J",
    "E_cr_J": "J",
    "T_min_s": "s",
    "inv_T_min_Hz": "Hz",
    "g_sp": "",
    "Gamma_sp_peak_inv_s": "1/s",
    "decay_time_years": "yr",
}


@dataclass(frozen=True)
class ParameterReport:
    """Scales of the toy model.

    ``B0_T`` is the transverse bias scale ``m* omega0_perp / e``, the field
    magnitude for a spin in the equatorial plane; a spin along the axis gives
    twice that, ``B0_pole_T``. ``E_cr_J`` is the modulus of the complex
    crossed energy. ``Gamma_sp_peak_inv_s`` is the radiation rate at a pole.
    """

    B0_T: float
    B0_pole_T: float
    omega0_perp_rad_s: float
    omega0_perp_over_2pi_Hz: float
    A: float
    E_d_J: float
    E_cr_J: float
    T_min_s: float
    inv_T_min_Hz: float
    g_sp: float
    Gamma_sp_peak_inv_s: float
    decay_time_years: float

    def as_dict(self) -> dict:
        return asdict(self)

    def consistency_errors(self, rtol: float = 1e-12) -> list[str]:
        """Violated internal relations (empty when consistent)."""
        errs = []

        def close(a, b):
            return math.isclose(a, b, rel_tol=rtol, abs_tol=0.0)

        if self.E_d_J > 0:
            if not close(self.T_min_s, math.pi * CONST.hbar / self.E_d_J):
                errs.append("T_min != pi hbar / E_d")
            if not close(self.inv_T_min_Hz * self.T_min_s, 1.0):
                errs.append("inv_T_min != 1 / T_min")
            if not close(self.Gamma_sp_peak_inv_s, self.g_sp * 2 * self.E_d_J / CONST.hbar):
                errs.append("Gamma_sp != g_sp 2 E_d / hbar")
        if not close(self.B0_pole_T, 2 * self.B0_T):
            errs.append("pole field != twice the transverse scale")
        for k, v in self.as_dict().items():
            if not (v >= 0 or math.isnan(v)):
                errs.append(f"{k} is negative")
        return errs


def parameter_report(config: SystemConfig, model: HamiltonianModel | None = None) -> ParameterReport:
    m = model if model is not None else HamiltonianModel(config)
    w_perp = omega0_perp(config)
    B_scale = config.m_star * w_perp / CONST.e_charge
    g = _g_sp(config, m)
    if m.E_d > 0:
        T = math.pi * CONST.hbar / m.E_d
        inv_T = 1.0 / T
        gamma = g * 2.0 * m.E_d / CONST.hbar
    else:
        T = inv_T = math.nan
        gamma = 0.0
    decay = 1.0 / gamma / YEAR_S if gamma > 0 else math.inf
    return ParameterReport(
        B0_T=B_scale,
        B0_pole_T=2.0 * B_scale,
        omega0_perp_rad_s=w_perp,
        omega0_perp_over_2pi_Hz=w_perp / TWO_PI,
        A=m.A,
        E_d_J=m.E_d,
        E_cr_J=abs(m.E_cr),
        T_min_s=T,
        inv_T_min_Hz=inv_T,
        g_sp=g,
        Gamma_sp_peak_inv_s=gamma,
        decay_time_years=decay,
    )


def format_report(rep: ParameterReport) -> str:
    lines = []
    for k, v in rep.as_dict().items():
        unit = _UNITS.get(k, "")
        lines.append(f"{k:<26s} {v:.6g}{' ' + unit if unit else ''}")
    return "\n".join(lines)
