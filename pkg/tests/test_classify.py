from types import SimpleNamespace

import numpy as np
import pytest

from kramers.classify import ClassifyParams, classify_orbit, first_return, winding_turns

T = 1.0


def traj(t, S):
    return SimpleNamespace(t=np.asarray(t), bloch=np.asarray(S), t_min=T)


def circle(t, z=0.4, period=2.5):
    r = np.sqrt(1 - z * z)
    ph = 2 * np.pi * t / period
    return np.stack([r * np.cos(ph), r * np.sin(ph), np.full_like(t, z)], axis=1)


def test_stationary():
    t = np.linspace(0, 10, 101)
    c = classify_orbit(traj(t, np.tile([1.0, 0, 0], (101, 1))))
    assert c.kind == "stationary" and c.period_s is None


def test_closed_orbit_period():
    t = np.linspace(0, 7.5, 751)
    c = classify_orbit(traj(t, circle(t)))
    assert c.kind == "time_crystal"
    assert c.period_s == pytest.approx(2.5, rel=1e-6)
    assert c.diagnostics["periods_covered"] == pytest.approx(3.0, rel=1e-6)


def test_refinement_beats_grid():
    # Period not on the sample grid.
    t = np.linspace(0, 10, 1001)
    c = classify_orbit(traj(t, circle(t, period=np.pi)))
    assert c.period_s == pytest.approx(np.pi, rel=1e-6)


def test_attractors():
    t = np.linspace(0, 40, 801)
    th = np.pi / 2 * (1 - np.exp(-t / 3))
    S = np.stack([np.cos(th), 0 * t, np.sin(th)], axis=1)
    assert classify_orbit(traj(t, S)).kind == "attractor_north"
    S[:, 2] *= -1
    assert classify_orbit(traj(t, S)).kind == "attractor_south"


def test_plane_decay():
    t = np.linspace(0, 2000, 4001)
    z = 0.4 / np.sqrt(1 + t)
    r = np.sqrt(1 - z ** 2)
    # Incommensurate spiral so no closed return.
    ph = 2 * np.pi * t / 2.5
    S = np.stack([r * np.cos(ph), r * np.sin(ph), z], axis=1)
    c = classify_orbit(traj(t, S))
    assert c.kind == "plane_Sz0"


def test_undetermined_reports_reason():
    t = np.linspace(0, 10, 201)
    S = np.stack([np.cos(t), np.sin(t), 0.5 * np.sin(0.37 * t) + 0.3], axis=1)
    c = classify_orbit(traj(t, S))
    assert c.kind == "undetermined" and "reason" in c.diagnostics
    assert classify_orbit(traj(t[:2], S[:2])).kind == "undetermined"


def test_band_violation_rejects_return():
    t = np.linspace(0, 10, 2001)
    S = circle(t)
    S[t > 6, 2] += 0.3
    c = classify_orbit(traj(t, S))
    assert c.kind != "time_crystal" and c.diagnostics["band_conserved"] is False


def test_guard_excludes_start():
    t = np.linspace(0, 1, 101)
    tr, d = first_return(t, circle(t), guard=0.05, eps=1e-3)
    assert tr is None and d > 0.1


def test_eps_threshold_is_used():
    t = np.linspace(0, 7.5, 751)
    S = circle(t)
    S[1:, 0] += 0.01
    assert classify_orbit(traj(t, S)).kind != "time_crystal"
    assert classify_orbit(traj(t, S), params=ClassifyParams(eps_orbit=0.05)).kind == "time_crystal"


def test_winding_sign():
    t = np.linspace(0, 5, 501)
    assert winding_turns(circle(t)) == pytest.approx(2.0)
    assert winding_turns(circle(t)[:, [1, 0, 2]]) == pytest.approx(-2.0)
