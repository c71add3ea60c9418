"""Named scenarios for the figure set, plus the baseline parameter block.

The baseline is a 5 nm atom-sphere distance, ``R = d/2``, a 1 THz plasma
frequency with ``Gamma = 0.1 omega_p``, ``m* = 0.001 m_e``, a 100 D chiral
dipole and ``omega_a = 50 omega_p``. Horizons are multiples of ``T_min`` and
of the relaxation scale ``T_min |gamma_d| / |gamma_c|``; they are choices of
this package, recorded in each preset's ``note``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import InitialSection, RunSection, ScenarioConfig, SystemSection

__all__ = ["FIGURES", "Preset", "base_scenario", "base_system", "get_preset", "hydrogen_like_scenario"]


def base_scenario(**system_overrides) -> ScenarioConfig:
    return ScenarioConfig(system=SystemSection(**system_overrides))


def base_system(handedness: int = 1, ratio: float = 0.0, phase_deg: float = 0.0, **run_overrides):
    """Baseline :class:`~kramers.coupling.SystemConfig` with ``gamma_c = ratio e^{i phase} gamma_d*``."""
    sc = ScenarioConfig(
        system=SystemSection(gamma_c_ratio=ratio, gamma_c_phase_deg=phase_deg, handedness=handedness),
        run=RunSection(**run_overrides),
    )
    return sc.to_system()


def hydrogen_like_scenario() -> ScenarioConfig:
    """Doublet with ``gamma_d = -sqrt2 gamma_c`` and the ``-`` handedness."""
    return ScenarioConfig(system=SystemSection(
        gamma_c_ratio=1.0 / math.sqrt(2.0), gamma_c_phase_deg=180.0, handedness=-1,
    ))


@dataclass(frozen=True)
class Preset:
    id: str
    scenario: ScenarioConfig
    expected: str  # classification the figure illustrates
    note: str
    extras: tuple = ()  # extra output columns


def _p(pid, expected, note, *, h, ratio=0.0, phase=0.0, t_max, stride=0.01, pure=True, rho12=0.0,
       radiation=False, g_sp=None, both=False, extras=()):
    sc = ScenarioConfig(
        system=SystemSection(gamma_c_ratio=ratio, gamma_c_phase_deg=phase, handedness=h),
        initial=InitialSection(pure=pure, rho11=0.7, rho12_re=rho12),
        run=RunSection(t_max_over_Tmin=t_max, sample_stride=stride, radiation=radiation,
                       g_sp_override=g_sp, both_branches=both),
    )
    return Preset(pid, sc, expected, note, extras)


FIGURES = {
    p.id: p for p in [
        _p("2a", "time_crystal", "chiral dipole only, + handedness; three periods of T_min/0.4",
           h=1, t_max=7.5),
        _p("2b", "time_crystal", "chiral dipole only, - handedness; precesses the other way",
           h=-1, t_max=7.5),
        _p("2c", "time_crystal", "phase of rho12 over two periods; T_spin marker in the header",
           h=1, t_max=5.0, extras=("t_over_Tmin", "rho12_phase_rad")),
        _p("3a", "time_crystal", "+ handedness, gamma_c = -0.1i gamma_d*",
           h=1, ratio=0.1, phase=-90.0, t_max=20.0),
        _p("3bi", "time_crystal", "- handedness, gamma_c = 0.1 gamma_d* (real ratio)",
           h=-1, ratio=0.1, phase=0.0, t_max=20.0),
        _p("3bii", "attractor_south", "- handedness, gamma_c = +0.1i gamma_d*; 4 relaxation times",
           h=-1, ratio=0.1, phase=90.0, t_max=40.0),
        _p("3biii", "attractor_north", "- handedness, gamma_c = -0.1i gamma_d*; 4 relaxation times",
           h=-1, ratio=0.1, phase=-90.0, t_max=40.0),
        _p("4a", "attractor_north", "pure start, both time branches over +-40 T_min",
           h=-1, ratio=0.1, phase=-90.0, t_max=40.0, both=True),
        _p("4b", "attractor_north", "mixed start rho12 = 0.18 (taken real), both branches over +-40 T_min",
           h=-1, ratio=0.1, phase=-90.0, t_max=40.0, pure=False, rho12=0.18, both=True),
        _p("5a", "time_crystal", "+ handedness, gamma_c = -10i gamma_d*; fine sampling for the fast orbit",
           h=1, ratio=10.0, phase=-90.0, t_max=2.0, stride=0.0005),
        _p("5b", "attractor_north", "- handedness, gamma_c = -10i gamma_d*; capture within a fraction of T_min",
           h=-1, ratio=10.0, phase=-90.0, t_max=2.0, stride=0.0005),
        _p("6a", "plane_Sz0", "+ handedness, gamma_c = 0.1 gamma_d*, g_sp = 0.05; |Sz| decays like t^-1/2",
           h=1, ratio=0.1, phase=0.0, t_max=2000.0, stride=0.05, radiation=True, g_sp=0.05,
           extras=("t_over_Tmin",)),
        _p("6b", "attractor_north", "- handedness, gamma_c = -0.1i gamma_d*, mixed start, g_sp = 0.05",
           h=-1, ratio=0.1, phase=-90.0, t_max=60.0, pure=False, rho12=0.18, radiation=True, g_sp=0.05,
           extras=("t_over_Tmin",)),
    ]
}


def get_preset(pid: str) -> Preset:
    try:
        return FIGURES[pid]
    except KeyError:
        raise KeyError(f"unknown figure {pid!r}; available: {', '.join(FIGURES)}") from None
