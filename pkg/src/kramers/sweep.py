"""Phase-diagram sweeps over the linear-dipole ratio, its phase, handedness and g_sp.

Each grid point is an independent, deterministic computation, so results do
not depend on the number of worker processes. Points run in chunks of
geometrically growing length and stop early once the orbit is classified as
an attractor or as a closed orbit seen for at least two periods.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .classify import classify_orbit
from .config import ConfigError, InitialSection, RunSection, ScenarioConfig, SystemSection, _convert, _line_index
from .coupling import HamiltonianModel
from .dynamics import Tolerances, evolve_density, evolve_pure, t_min
from .states import DensityMatrix

__all__ = ["SweepPoint", "SweepSpec", "load_sweep_spec", "parse_sweep_spec", "run_point", "run_sweep"]

RECORD_KEYS = (
    "index", "handedness", "ratio", "phase_deg", "g_sp", "status", "kind", "period_over_Tmin",
    "final_Sx", "final_Sy", "final_Sz", "t_end_over_Tmin", "n_steps", "message",
)


@dataclass(frozen=True)
class SweepSpec:
    handedness: tuple = (-1,)
    ratio: tuple = (0.0, 0.1, 0.5, 2.0, 10.0)
    phase_deg: tuple = (-180.0, -135.0, -90.0, -45.0, 0.0, 45.0, 90.0, 135.0, 180.0)
    g_sp: tuple = (None,)
    budget_Tmin: float = 200.0
    rho11: float = 0.7
    rtol: float = 1e-9
    atol: float = 1e-12
    samples_per_tchar: int = 100
    first_chunk_tchar: float = 20.0
    system: SystemSection = field(default_factory=SystemSection)

    def points(self) -> list["SweepPoint"]:
        out = []
        for h in self.handedness:
            for g in self.g_sp:
                for r in self.ratio:
                    for ph in self.phase_deg:
                        out.append(SweepPoint(len(out), h, r, ph, g, self))
        return out

    def digest(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SweepPoint:
    index: int
    handedness: int
    ratio: float
    phase_deg: float
    g_sp: float | None
    spec: SweepSpec

    def scenario(self) -> ScenarioConfig:
        sysec = dataclasses.replace(
            self.spec.system, gamma_c_ratio=self.ratio, gamma_c_phase_deg=self.phase_deg, handedness=self.handedness
        )
        return ScenarioConfig(
            system=sysec,
            initial=InitialSection(rho11=self.spec.rho11),
            run=RunSection(rtol=self.spec.rtol, atol=self.spec.atol,
                           radiation=self.g_sp is not None, g_sp_override=self.g_sp),
        )


# --------------------------------------------------------------------------
# spec files
# --------------------------------------------------------------------------

_LIST_KEYS = {"handedness": int, "ratio": float, "phase_deg": float, "g_sp": "opt"}
_SCALAR_KEYS = {"budget_Tmin": float, "rho11": float, "rtol": float, "atol": float,
                "samples_per_tchar": int, "first_chunk_tchar": float}


def parse_sweep_spec(text: str, source: str = "<sweep>") -> SweepSpec:
    """Parse a ``[sweep]`` (+ optional ``[system]``) spec; lists are comma-separated.

    Raises
    ------
    ConfigError
        With field name and line number on any invalid entry.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as err:
        raise ConfigError(f"unparseable spec ({err.__class__.__name__})", None, getattr(err, "lineno", None), source) from None
    lines = _line_index(text)
    for sec in cp.sections():
        if sec not in ("sweep", "system"):
            raise ConfigError("unknown section; expected [sweep] and optionally [system]", f"[{sec}]",
                              lines.get((sec, None)), source)
    if not cp.has_section("sweep"):
        raise ConfigError("missing [sweep] section", None, None, source)
    kw = {}
    for key, raw in cp.items("sweep"):
        line = lines.get(("sweep", key))
        fname = f"[sweep] {key}"
        try:
            if key in _LIST_KEYS:
                items = [x.strip() for x in raw.split(",") if x.strip()]
                if not items:
                    raise ValueError("empty list")
                conv = _LIST_KEYS[key]
                if conv == "opt":
                    vals = tuple(None if x.lower() == "none" else float(x) for x in items)
                elif key == "handedness":
                    vals = tuple(_convert(x, "int", "handedness") for x in items)
                else:
                    vals = tuple(conv(x) for x in items)
                kw[key] = vals
            elif key in _SCALAR_KEYS:
                kw[key] = _SCALAR_KEYS[key](raw.strip())
            else:
                raise ConfigError(f"unknown key; expected one of {sorted({**_LIST_KEYS, **_SCALAR_KEYS})}",
                                  fname, line, source)
        except ValueError as err:
            if isinstance(err, ConfigError):
                raise
            raise ConfigError(f"bad value {raw.strip()!r} ({err})", fname, line, source) from None
    if cp.has_section("system"):
        known = {f.name: f for f in dataclasses.fields(SystemSection)}
        skw = {}
        for key, raw in cp.items("system"):
            line = lines.get(("system", key))
            if key not in known or key in ("gamma_c_ratio", "gamma_c_phase_deg", "handedness"):
                raise ConfigError("not settable here (unknown, or swept by the grid)", f"[system] {key}", line, source)
            try:
                skw[key] = _convert(raw, str(known[key].type), key)
            except ValueError as err:
                raise ConfigError(f"bad value {raw.strip()!r} ({err})", f"[system] {key}", line, source) from None
        kw["system"] = SystemSection(**skw)
    spec = SweepSpec(**kw)

    def fail(key, msg):
        raise ConfigError(msg, f"[sweep] {key}", lines.get(("sweep", key)), source)

    if any(h not in (1, -1) for h in spec.handedness):
        fail("handedness", "entries must be +1 or -1")
    if any(not (math.isfinite(r) and 0 <= r <= 20) for r in spec.ratio):
        fail("ratio", "entries must lie in [0, 20]")
    if any(not (math.isfinite(p) and -180 <= p <= 180) for p in spec.phase_deg):
        fail("phase_deg", "entries must lie in [-180, 180]")
    if any(g is not None and not (math.isfinite(g) and g >= 0) for g in spec.g_sp):
        fail("g_sp", "entries must be none or non-negative")
    if not (math.isfinite(spec.budget_Tmin) and spec.budget_Tmin > 0):
        fail("budget_Tmin", "must be positive and finite")
    if not 0 <= spec.rho11 <= 1:
        fail("rho11", "must lie in [0, 1]")
    if not spec.rtol > 0 or not spec.atol >= 0:
        fail("rtol", "tolerances must be positive")
    if spec.samples_per_tchar < 10:
        fail("samples_per_tchar", "need at least 10 samples per characteristic time")
    if not spec.first_chunk_tchar > 0:
        fail("first_chunk_tchar", "must be positive")
    # Validate the swept system block as a scenario would.
    try:
        spec.points()[0].scenario().to_system()
    except ValueError as err:
        raise ConfigError(str(err), "[system]", lines.get(("system", None)), source) from None
    return spec


def load_sweep_spec(path) -> SweepSpec:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read file ({err.strerror})", None, None, str(p)) from None
    return parse_sweep_spec(text, source=str(p))


# --------------------------------------------------------------------------
# one point
# --------------------------------------------------------------------------

def run_point(point: SweepPoint) -> dict:
    """Integrate and classify one grid point; failures become ``undetermined`` records."""
    rec = {k: None for k in RECORD_KEYS}
    rec.update(index=point.index, handedness=point.handedness, ratio=point.ratio,
               phase_deg=point.phase_deg, g_sp=point.g_sp, n_steps=0, message="")
    try:
        _run_point(point, rec)
    except Exception as err:  # recorded, sweep continues
        rec.update(status="error", kind="undetermined", message=f"{type(err).__name__}: {err}")
    return rec


def _run_point(point: SweepPoint, rec: dict) -> None:
    spec = point.spec
    sc = point.scenario()
    system = sc.to_system()
    model = HamiltonianModel(system)
    T = t_min(system, model)
    # Characteristic time of the fastest energy scale.
    e_ratio = max(1.0, abs(model.E_cr) / model.E_d) if model.E_d > 0 else 1.0
    t_char = T / e_ratio
    dt = t_char / spec.samples_per_tchar
    n_total = int(math.ceil(spec.budget_Tmin * T / dt))
    tol = Tolerances(rtol=spec.rtol, atol=spec.atol)
    state = sc.initial_state()
    density = isinstance(state, DensityMatrix)

    ts, blochs = [], []
    k0 = 0
    chunk = int(round(spec.first_chunk_tchar * spec.samples_per_tchar))
    cls = None
    while k0 < n_total:
        k1 = min(k0 + chunk, n_total)
        times = np.arange(k0, k1 + 1) * dt
        if density:
            tr = evolve_density(state, system, sample_times=times, tol=tol, model=model)
        else:
            tr = evolve_pure(state, system, sample_times=times, tol=tol, model=model)
        rec["n_steps"] += tr.stats.n_steps
        skip = 1 if ts else 0
        ts.append(tr.t[skip:])
        blochs.append(tr.bloch[skip:])
        state = tr.final_state
        k0 = k1
        chunk *= 2
        view = SimpleNamespace(t=np.concatenate(ts), bloch=np.concatenate(blochs), t_min=T)
        cls = classify_orbit(view)
        if cls.kind.startswith("attractor"):
            break
        if cls.kind == "time_crystal" and cls.diagnostics.get("periods_covered", 0) >= 2:
            break
    t_end = float(view.t[-1])
    rec.update(
        status="ok", kind=cls.kind,
        period_over_Tmin=None if cls.period_s is None else cls.period_s / T,
        final_Sx=cls.final_bloch[0], final_Sy=cls.final_bloch[1], final_Sz=cls.final_bloch[2],
        t_end_over_Tmin=t_end / T,
        message=cls.diagnostics.get("reason", ""),
    )


# --------------------------------------------------------------------------
# whole grid
# --------------------------------------------------------------------------

def _manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest")


def _load_manifest(path: Path, digest: str) -> dict:
    if not path.exists():
        return {}
    done = {}
    lines = path.read_text().splitlines()
    if not lines:
        return {}
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError:
        head = {}
    if head.get("spec_digest") != digest:
        raise ConfigError("manifest belongs to a different sweep spec; remove it or change --out",
                          None, None, str(path))
    for ln in lines[1:]:
        try:
            rec = json.loads(ln)
        except json.JSONDecodeError:
            continue  # torn last line from an interrupted run
        done[rec["index"]] = rec
    return done


def run_sweep(spec: SweepSpec, out=None, workers: int = 1, resume: bool = False, progress=None) -> list[dict]:
    """Run every grid point and return the records in grid order.

    With ``out`` set, completed records are appended to ``<out>.manifest`` as
    they finish and the ordered records are written to ``out`` (JSON lines)
    at the end. ``resume`` skips points already in the manifest.
    """
    points = spec.points()
    digest = spec.digest()
    done: dict = {}
    man = None
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        mpath = _manifest_path(out)
        if resume:
            done = _load_manifest(mpath, digest)
        else:
            mpath.unlink(missing_ok=True)
        new_file = not mpath.exists() or mpath.stat().st_size == 0
        man = mpath.open("a")
        if new_file:
            man.write(json.dumps({"spec_digest": digest, "n_points": len(points)}) + "\n")
            man.flush()
    todo = [p for p in points if p.index not in done]

    def record(rec):
        done[rec["index"]] = rec
        if man is not None:
            man.write(json.dumps(rec, sort_keys=True) + "\n")
            man.flush()
        if progress is not None:
            progress(rec, len(done), len(points))

    try:
        if workers <= 1:
            for p in todo:
                record(run_point(p))
        else:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                futs = [ex.submit(run_point, p) for p in todo]
                for f in as_completed(futs):
                    record(f.result())
    finally:
        if man is not None:
            man.close()
    records = [done[p.index] for p in points]
    if out is not None:
        out.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    return records
