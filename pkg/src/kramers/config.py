"""Scenario configuration files: sectioned ``key = value`` text in user units.

Example::

    [system]
    d_nm = 5
    gamma_c_ratio = 0.1
    gamma_c_phase_deg = -90
    handedness = -1

    [initial]
    rho11 = 0.7

    [run]
    t_max_over_Tmin = 40

Omitted keys take the defaults below. ``gamma_c`` is entered relative to
``gamma_d*``: ``gamma_c = ratio * exp(i phase) * conj(gamma_d)``.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .constants import CONST, TWO_PI
from .coupling import SystemConfig
from .medium import DrudeParams
from .states import DensityMatrix, PureState, pure_from_populations

__all__ = ["ConfigError", "InitialSection", "RunSection", "ScenarioConfig", "SystemSection", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid configuration; carries the offending field and source line."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None, source: str = "<config>"):
        where = source if line is None else f"{source}:{line}"
        what = f" {field}" if field else ""
        super().__init__(f"{where}:{what}: {message}")
        self.field = field
        self.line = line
        self.source = source


@dataclass(frozen=True)
class SystemSection:
    d_nm: float = 5.0
    R_nm: float = 2.5
    f_p_THz: float = 1.0
    gamma_over_omega_p: float = 0.1
    m_star_over_m_e: float = 0.001
    omega_a_over_omega_p: float = 50.0
    gamma_d_debye: float = 100.0
    gamma_c_ratio: float = 0.0
    gamma_c_phase_deg: float = 0.0
    handedness: int = 1


@dataclass(frozen=True)
class InitialSection:
    pure: bool = True
    rho11: float = 0.7
    delta_phi_deg: float = 0.0
    rho12_re: float = 0.0
    rho12_im: float = 0.0


@dataclass(frozen=True)
class RunSection:
    t_max_over_Tmin: float = 20.0
    rtol: float = 1e-11
    atol: float = 1e-14
    sample_stride: float = 0.01  # in units of T_min
    radiation: bool = False
    g_sp_override: float | None = None
    format: str = "csv"
    both_branches: bool = False


SECTIONS = {"system": SystemSection, "initial": InitialSection, "run": RunSection}


@dataclass(frozen=True)
class ScenarioConfig:
    system: SystemSection = field(default_factory=SystemSection)
    initial: InitialSection = field(default_factory=InitialSection)
    run: RunSection = field(default_factory=RunSection)

    def to_system(self) -> SystemConfig:
        s = self.system
        wp = TWO_PI * s.f_p_THz * 1e12
        gd = s.gamma_d_debye * CONST.debye
        phase = math.radians(s.gamma_c_phase_deg)
        gc = s.gamma_c_ratio * complex(math.cos(phase), math.sin(phase)) * gd
        return SystemConfig(
            d=s.d_nm * 1e-9,
            R=s.R_nm * 1e-9,
            drude=DrudeParams(wp, s.gamma_over_omega_p * wp),
            m_star=s.m_star_over_m_e * CONST.m_e,
            omega_a=s.omega_a_over_omega_p * wp,
            gamma_d=gd,
            gamma_c=gc,
            handedness=s.handedness,
            g_sp_override=self.run.g_sp_override,
            radiation_enabled=self.run.radiation,
        )

    @property
    def uses_density(self) -> bool:
        return self.run.radiation or not self.initial.pure

    def initial_state(self):
        """PureState for pure runs without radiation, else a DensityMatrix."""
        i = self.initial
        if i.pure:
            psi = pure_from_populations(i.rho11, math.radians(i.delta_phi_deg))
            return DensityMatrix.from_pure(psi) if self.run.radiation else psi
        return DensityMatrix.from_elements(i.rho11, complex(i.rho12_re, i.rho12_im))

    def initial_pure(self) -> PureState:
        return pure_from_populations(self.initial.rho11, math.radians(self.initial.delta_phi_deg))

    def replace(self, section: str, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **changes)})

    def to_ini(self) -> str:
        """Canonical text form; parses back to an equal config."""
        out = []
        for name in SECTIONS:
            out.append(f"[{name}]")
            sec = getattr(self, name)
            for f in dataclasses.fields(sec):
                out.append(f"{f.name} = {_format_value(getattr(sec, f.name))}")
            out.append("")
        return "\n".join(out)


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return f"{v:+d}"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_KEY_RE = re.compile(r"^\s*([^=:#;\s\[]+)\s*[=:]")
_SEC_RE = re.compile(r"^\s*\[([^\]]+)\]")


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    idx: dict = {}
    section = None
    for n, line in enumerate(text.splitlines(), start=1):
        m = _SEC_RE.match(line)
        if m:
            section = m.group(1).strip()
            idx.setdefault((section, None), n)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            idx.setdefault((section, m.group(1)), n)
    return idx


_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _convert(raw: str, ftype: str, name: str):
    raw = raw.strip()
    if ftype == "bool":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected true/false, got {raw!r}")
    if ftype == "int":
        if name == "handedness" and raw in ("+", "-"):
            return 1 if raw == "+" else -1
        return int(raw)
    if ftype == "float | None":
        if raw.lower() in ("", "none"):
            return None
        return float(raw)
    if ftype == "float":
        return float(raw)
    return raw


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ConfigError
        On syntax errors, unknown sections or keys, unconvertible values, or
        violated invariants. The message names the field and line.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.DuplicateOptionError as err:
        raise ConfigError("duplicate key", f"[{err.section}] {err.option}", err.lineno, source) from None
    except configparser.DuplicateSectionError as err:
        raise ConfigError("duplicate section", f"[{err.section}]", err.lineno, source) from None
    except configparser.MissingSectionHeaderError as err:
        raise ConfigError("key outside any section", None, err.lineno, source) from None
    except configparser.ParsingError as err:
        line = err.errors[0][0] if err.errors else None
        raise ConfigError("unparseable line", None, line, source) from None
    lines = _line_index(text)

    values = {}
    for sec_name in cp.sections():
        if sec_name not in SECTIONS:
            raise ConfigError(f"unknown section; expected one of {sorted(SECTIONS)}", f"[{sec_name}]",
                              lines.get((sec_name, None)), source)
    for sec_name, cls in SECTIONS.items():
        kw = {}
        known = {f.name: f for f in dataclasses.fields(cls)}
        if cp.has_section(sec_name):
            for key, raw in cp.items(sec_name):
                line = lines.get((sec_name, key))
                fname = f"[{sec_name}] {key}"
                if key not in known:
                    raise ConfigError(f"unknown key; expected one of {sorted(known)}", fname, line, source)
                try:
                    kw[key] = _convert(raw, str(known[key].type), key)
                except ValueError as err:
                    raise ConfigError(f"bad value {raw.strip()!r} ({err})", fname, line, source) from None
        values[sec_name] = cls(**kw)
    cfg = ScenarioConfig(**values)
    _validate(cfg, lines, source)
    return cfg


def _validate(cfg: ScenarioConfig, lines: dict, source: str) -> None:
    def fail(section, key, msg):
        raise ConfigError(msg, f"[{section}] {key}", lines.get((section, key)), source)

    s, i, r = cfg.system, cfg.initial, cfg.run
    for key in ("d_nm", "R_nm", "f_p_THz", "m_star_over_m_e", "omega_a_over_omega_p"):
        v = getattr(s, key)
        if not (math.isfinite(v) and v > 0):
            fail("system", key, f"must be positive and finite, got {v}")
    if s.d_nm < s.R_nm:
        fail("system", "d_nm", f"distance {s.d_nm} nm is smaller than the radius {s.R_nm} nm")
    for key in ("gamma_over_omega_p", "gamma_d_debye", "gamma_c_ratio"):
        v = getattr(s, key)
        if not (math.isfinite(v) and v >= 0):
            fail("system", key, f"must be non-negative and finite, got {v}")
    if not math.isfinite(s.gamma_c_phase_deg):
        fail("system", "gamma_c_phase_deg", "must be finite")
    if s.handedness not in (1, -1):
        fail("system", "handedness", f"must be +1 or -1, got {s.handedness}")
    if not 0.0 <= i.rho11 <= 1.0:
        fail("initial", "rho11", f"must lie in [0, 1], got {i.rho11}")
    if not i.pure:
        if abs(complex(i.rho12_re, i.rho12_im)) ** 2 > i.rho11 * (1.0 - i.rho11) + 1e-12:
            key = "rho12_re" if ("initial", "rho12_re") in lines else "rho12_im"
            fail("initial", key, "violates positivity |rho12|^2 <= rho11 rho22")
    elif i.rho12_re or i.rho12_im:
        fail("initial", "rho12_re" if i.rho12_re else "rho12_im",
             "coherences are set by delta_phi_deg for pure states; set pure = false to give rho12")
    if not (math.isfinite(r.t_max_over_Tmin) and r.t_max_over_Tmin != 0):
        fail("run", "t_max_over_Tmin", f"must be finite and non-zero, got {r.t_max_over_Tmin}")
    if r.t_max_over_Tmin < 0 and (r.radiation or r.both_branches):
        fail("run", "t_max_over_Tmin", "negative horizons are only allowed for radiation-free single-branch runs")
    if not r.rtol > 0:
        fail("run", "rtol", f"must be positive, got {r.rtol}")
    if not r.atol >= 0:
        fail("run", "atol", f"must be non-negative, got {r.atol}")
    if not r.sample_stride > 0:
        fail("run", "sample_stride", f"must be positive, got {r.sample_stride}")
    if abs(r.t_max_over_Tmin) / r.sample_stride > 5e6:
        fail("run", "sample_stride", "more than 5e6 samples requested")
    if r.g_sp_override is not None and not r.g_sp_override >= 0:
        fail("run", "g_sp_override", f"must be non-negative, got {r.g_sp_override}")
    if r.format not in ("csv", "jsonl"):
        fail("run", "format", f"must be csv or jsonl, got {r.format!r}")
    if r.both_branches and r.radiation:
        fail("run", "both_branches", "the negative-time branch needs time-reversal symmetry; disable radiation")


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read file ({err.strerror})", None, None, str(p)) from None
    return parse_config(text, source=str(p))
