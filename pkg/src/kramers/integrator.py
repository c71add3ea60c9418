"""Adaptive Dormand-Prince 5(4) stepper with dense output at fixed sample times.

Works on complex state arrays. Steps are clipped so that every requested
sample time is hit exactly (no interpolation), which keeps the sampled
trajectory bit-identical whatever the sample stride of neighbouring runs.
Integration may run backward (``t_end < t0``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["IntegrationError", "IntegratorStats", "dopri5"]

# Butcher tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# 5th minus embedded 4th order weights
_E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


class IntegrationError(RuntimeError):
    """Integration aborted; ``partial`` holds whatever was sampled so far."""

    def __init__(self, message: str, t: float, partial=None, unit: str = ""):
        super().__init__(f"{message} at t = {t:.6g}{unit}")
        self.message = message
        self.t = t
        self.partial = partial


@dataclass
class IntegratorStats:
    n_steps: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    h_min: float = np.inf
    h_max: float = 0.0
    stopped_early: bool = False
    t_final: float = 0.0
    extra: dict = field(default_factory=dict)


def dopri5(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t0: float,
    t_samples,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    h0: float | None = None,
    h_max: float = np.inf,
    max_steps: int = 10_000_000,
    check: Callable[[float, np.ndarray], str | None] | None = None,
    stop: Callable[[float, np.ndarray], bool] | None = None,
):
    """Integrate ``y' = f(t, y)`` from ``t0`` through the monotone ``t_samples``.

    Parameters
    ----------
    check : callable, optional
        Called after each accepted step; a returned string aborts with
        :class:`IntegrationError` carrying that message.
    stop : callable, optional
        Called at each sample time; returning True ends the run there.

    Returns
    -------
    ts, ys, stats
        Sample times actually reached, the states there, and counters.
    """
    t_samples = np.asarray(t_samples, dtype=float)
    y = np.array(y0, dtype=complex)
    if t_samples.size == 0:
        return np.empty(0), np.empty((0,) + y.shape, dtype=complex), IntegratorStats(t_final=t0)
    direction = 1.0 if t_samples[-1] >= t0 else -1.0
    if np.any(direction * np.diff(np.concatenate([[t0], t_samples])) < 0):
        raise ValueError("sample times must be monotone in the direction of integration")

    stats = IntegratorStats()
    ts_out: list[float] = []
    ys_out: list[np.ndarray] = []

    def partial():
        return np.array(ts_out), np.array(ys_out), stats

    t = float(t0)
    k1 = f(t, y)
    stats.n_rhs += 1
    if h0 is None:
        # Standard starting-step heuristic.
        sc = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean(np.abs(y / sc) ** 2))
        d1 = np.sqrt(np.mean(np.abs(k1 / sc) ** 2))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        span = abs(t_samples[-1] - t0)
        h = min(h, span if span > 0 else h)
    else:
        h = abs(h0)
    h = min(h, h_max)

    idx = 0
    while idx < t_samples.size and direction * (t_samples[idx] - t) <= 0:
        ts_out.append(t_samples[idx])
        ys_out.append(y.copy())
        idx += 1
        if stop is not None and stop(t, y):
            stats.stopped_early = True
            stats.t_final = t
            return partial()

    while idx < t_samples.size:
        if stats.n_steps + stats.n_rejected >= max_steps:
            raise IntegrationError(f"step budget {max_steps} exhausted", t, partial())
        target = t_samples[idx]
        remaining = abs(target - t)
        hit = h >= remaining
        hs = remaining if hit else h
        if hs <= 4 * np.finfo(float).eps * max(abs(t), 1.0) and not hit:
            raise IntegrationError("step size underflow", t, partial())
        dt = direction * hs

        k = [k1]
        for i in range(1, 7):
            a = _A[i]
            yi = y.copy()
            for j, aij in enumerate(a):
                if aij:
                    yi += dt * aij * k[j]
            k.append(f(t + _C[i] * dt, yi))
        stats.n_rhs += 6
        y_new = yi  # stage 7 state is the 5th-order solution (FSAL)
        err_vec = dt * sum(e * kk for e, kk in zip(_E, k) if e)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean(np.abs(err_vec / sc) ** 2)))
        if not np.isfinite(err):
            raise IntegrationError("non-finite state or error estimate", t, partial())

        if err <= 1.0:
            t = target if hit else t + dt
            y = y_new
            k1 = k[6]
            stats.n_steps += 1
            stats.h_min = min(stats.h_min, hs)
            stats.h_max = max(stats.h_max, hs)
            if check is not None:
                msg = check(t, y)
                if msg:
                    raise IntegrationError(msg, t, partial())
            if not (hit and hs < h):
                # A short step clipped onto a sample time says little about h.
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                h = min(hs * fac, h_max)
            if hit:
                ts_out.append(target)
                ys_out.append(y.copy())
                idx += 1
                if stop is not None and stop(t, y):
                    stats.stopped_early = True
                    break
        else:
            stats.n_rejected += 1
            h = hs * max(0.1, 0.9 * err ** -0.2)
    stats.t_final = t
    return np.array(ts_out), np.array(ys_out), stats
