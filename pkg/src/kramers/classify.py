"""Observable-based classification of Bloch-sphere orbits.

Categories are tested in a fixed order: stationary, closed orbit
(time crystal), pole attractor, equatorial plane; anything else is reported
as ``undetermined`` together with the numbers that ruled each category out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ClassifyParams", "OrbitClass", "classify_orbit", "first_return", "winding_turns"]

KINDS = ("time_crystal", "attractor_north", "attractor_south", "stationary", "plane_Sz0", "undetermined")


@dataclass(frozen=True)
class ClassifyParams:
    eps_orbit: float = 1e-3
    guard_tmin: float = 0.05  # no return accepted before this many T_min
    attractor_level: float = 0.999  # |Sz| / |S| over the tail
    plane_level: float = 0.05  # |Sz| over the tail
    tail_tmin: float = 1.0  # tail window is max(tail_tmin T_min, tail_fraction span)
    tail_fraction: float = 0.1


@dataclass(frozen=True)
class OrbitClass:
    kind: str
    period_s: float | None
    final_bloch: tuple
    diagnostics: dict = field(default_factory=dict)

    def __str__(self) -> str:
        s = self.kind
        if self.period_s is not None:
            s += f" (period {self.period_s:.9g} s)"
        return s


def _refine_min(t3: np.ndarray, S3: np.ndarray, S0: np.ndarray, n: int = 401):
    """Minimize ``|P(t) - S0|`` where ``P`` interpolates three samples quadratically."""
    tt = np.linspace(t3[0], t3[2], n)
    # Lagrange basis on possibly uneven nodes.
    L = np.empty((3, n))
    for k in range(3):
        others = [j for j in range(3) if j != k]
        L[k] = np.prod([(tt - t3[j]) / (t3[k] - t3[j]) for j in others], axis=0)
    P = L.T @ S3
    d2 = np.sum((P - S0) ** 2, axis=1)
    j = int(np.argmin(d2))
    tm, dm2 = tt[j], d2[j]
    if 0 < j < n - 1:
        y0, y1, y2 = d2[j - 1], d2[j], d2[j + 1]
        curv = y0 - 2 * y1 + y2
        if curv > 0:
            off = 0.5 * (y0 - y2) / curv
            tm = tt[j] + off * (tt[1] - tt[0])
            dm2 = y1 - 0.25 * (y0 - y2) * off
    return float(tm), float(np.sqrt(max(dm2, 0.0)))


def first_return(t: np.ndarray, S: np.ndarray, guard: float, eps: float):
    """First time after ``t[0] + guard`` at which ``S`` comes back within ``eps`` of ``S[0]``.

    Each local minimum of the sampled distance is refined on a quadratic
    interpolant of the Bloch vector through the three bracketing samples.
    Returns ``(t_return, distance)`` for the first qualifying minimum, else
    ``(None, closest refined distance)``.
    """
    d2 = np.sum((S - S[0]) ** 2, axis=1)
    best = np.inf
    start = int(np.searchsorted(t, t[0] + guard))
    lo = max(start, 1)
    mid = d2[lo:-1]
    cand = np.nonzero((mid <= d2[lo - 1:-2]) & (mid <= d2[lo + 1:]))[0] + lo
    for i in cand:
        tm, dm = _refine_min(t[i - 1:i + 2], S[i - 1:i + 2], S[0])
        best = min(best, dm)
        if dm < eps:
            return tm, dm
    return None, float(best)


def winding_turns(S: np.ndarray) -> float:
    """Net azimuthal turns of the transverse spin about z."""
    phi = np.unwrap(np.arctan2(S[:, 1], S[:, 0]))
    return float((phi[-1] - phi[0]) / (2 * np.pi))


def classify_orbit(traj, config=None, params: ClassifyParams = ClassifyParams()) -> OrbitClass:
    """Classify a :class:`~kramers.dynamics.Trajectory` (``config`` is accepted for API symmetry)."""
    t = np.asarray(traj.t, dtype=float)
    S = np.asarray(traj.bloch, dtype=float)
    T_min = float(traj.t_min)
    final = tuple(float(x) for x in S[-1])
    diag: dict = {"n_samples": int(len(t)), "span_Tmin": float((t[-1] - t[0]) / T_min) if len(t) else 0.0}
    if len(t) < 3:
        return OrbitClass("undetermined", None, final, {**diag, "reason": "fewer than 3 samples"})

    disp = float(np.max(np.linalg.norm(S - S[0], axis=1)))
    diag["max_displacement"] = disp
    if disp < params.eps_orbit:
        return OrbitClass("stationary", None, final, diag)

    t_ret, d_ret = first_return(t, S, params.guard_tmin * T_min, params.eps_orbit)
    diag["closest_return"] = d_ret
    if t_ret is not None:
        period = t_ret - t[0]
        first = t <= t_ret
        lo, hi = S[first, 2].min(), S[first, 2].max()
        rest = S[~first, 2]
        band_ok = rest.size == 0 or (
            rest.min() >= lo - params.eps_orbit and rest.max() <= hi + params.eps_orbit
        )
        diag["Sz_band"] = (float(lo), float(hi))
        diag["band_conserved"] = bool(band_ok)
        if band_ok:
            diag["periods_covered"] = float((t[-1] - t[0]) / period)
            return OrbitClass("time_crystal", float(period), final, diag)

    span = t[-1] - t[0]
    window = max(params.tail_tmin * T_min, params.tail_fraction * span)
    tail = t >= t[-1] - window
    if tail.sum() < 2:
        tail = np.zeros(len(t), bool)
        tail[-2:] = True
    St = S[tail]
    r = np.linalg.norm(St, axis=1)
    sz = St[:, 2]
    diag["tail_Sz_range"] = (float(sz.min()), float(sz.max()))
    diag["tail_min_polar_ratio"] = float(np.min(np.abs(sz) / np.where(r > 0, r, np.inf)))
    if np.all(r > params.eps_orbit) and np.all(np.abs(sz) >= params.attractor_level * r):
        if np.all(sz > 0):
            return OrbitClass("attractor_north", None, final, diag)
        if np.all(sz < 0):
            return OrbitClass("attractor_south", None, final, diag)
    if np.all(np.abs(sz) < params.plane_level):
        return OrbitClass("plane_Sz0", None, final, diag)
    diag["reason"] = "no closed return, no sustained pole or plane approach"
    return OrbitClass("undetermined", None, final, diag)
