"""Drive one scenario: integrate, optionally add the negative-time branch, classify."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classify import OrbitClass, classify_orbit
from .config import ScenarioConfig
from .coupling import HamiltonianModel
from .dynamics import (
    Tolerances,
    Trajectory,
    assemble_trajectory,
    evolve_density,
    evolve_pure,
    reference_energy,
    t_min,
)
from .states import DensityMatrix, PureState, time_reverse_state

__all__ = ["RunResult", "reverse_branch", "run_scenario"]

SIGMA_Y = np.array([[0, -1j], [1j, 0]])


@dataclass
class RunResult:
    """``backward_classification`` describes the ``t -> -inf`` limit of two-branch runs."""

    trajectory: Trajectory
    classification: OrbitClass
    backward_classification: OrbitClass | None = None
    meta: dict = field(default_factory=dict)


def _time_reverse(state):
    if isinstance(state, PureState):
        return time_reverse_state(state)
    r = np.asarray(state.rho)
    return DensityMatrix(SIGMA_Y @ r.conj() @ SIGMA_Y)


def reverse_branch(traj_rev: Trajectory, model: HamiltonianModel) -> Trajectory:
    """Map a forward run of the time-reversed start onto negative times.

    Uses ``state(-t) = T^-1 state'(t)``; for pure states ``T^-1 = -T``.
    Observables are recomputed on the mapped states, so ``S(-t) = -S'(t)``
    holds by construction only through the symmetry of ``H``.
    """
    if traj_rev.kind == "pure":
        c = traj_rev.states
        ys = np.stack([c[:, 1].conj(), -c[:, 0].conj()], axis=1)
    else:
        ys = np.einsum("ij,njk,kl->nil", SIGMA_Y, traj_rev.states.conj(), SIGMA_Y)
    E_ref = reference_energy(model)
    return assemble_trajectory(
        traj_rev.kind, -traj_rev.tau, ys, traj_rev.time_scale, traj_rev.config, model, E_ref,
        traj_rev.stats, dict(traj_rev.meta, branch="negative"),
    )


def _concat(neg: Trajectory, pos: Trajectory) -> Trajectory:
    keep = neg.t < 0  # t = 0 is present in both; keep the forward copy
    cat = {k: np.concatenate([getattr(neg, k)[keep], getattr(pos, k)])
           for k in ("t", "tau", "states", "bloch", "energy", "omega_m", "Gamma_sp")}
    return Trajectory(kind=pos.kind, config=pos.config, time_scale=pos.time_scale, t_min=pos.t_min,
                      stats=pos.stats, meta=dict(pos.meta, both_branches=True), **cat)


def run_scenario(sc: ScenarioConfig, stop=None) -> RunResult:
    """Integrate a scenario and classify the forward branch.

    Raises
    ------
    IntegrationError
        Propagated from the integrator; its ``partial`` attribute holds the
        trajectory up to the failure.
    """
    system = sc.to_system()
    model = HamiltonianModel(system)
    T = t_min(system, model)
    r = sc.run
    n = int(round(abs(r.t_max_over_Tmin) / r.sample_stride)) + 1
    span = r.t_max_over_Tmin * T
    tol = Tolerances(rtol=r.rtol, atol=r.atol)
    state0 = sc.initial_state()

    def integrate(s0):
        if isinstance(s0, DensityMatrix):
            return evolve_density(s0, system, span, samples=n, tol=tol, stop=stop, model=model)
        return evolve_pure(s0, system, span, samples=n, tol=tol, stop=stop, model=model)

    fwd = integrate(state0)
    if r.t_max_over_Tmin < 0:
        # Backward run: classify in reversed time so the "start" is t = 0.
        cls = classify_orbit(_flip_time(fwd))
    else:
        cls = classify_orbit(fwd)
    meta = {
        "T_min_s": T,
        "E_d_J": model.E_d,
        "E_cr_J": model.E_cr,
        "A": model.A,
        "n_steps": fwd.stats.n_steps,
        "n_rejected": fwd.stats.n_rejected,
    }
    if not r.both_branches:
        return RunResult(fwd, cls, None, meta)
    rev = integrate(_time_reverse(state0))
    neg = reverse_branch(rev, model)
    back = classify_orbit(rev)
    back = OrbitClass(_mirror_kind(back.kind), back.period_s, tuple(-x for x in back.final_bloch), back.diagnostics)
    meta["n_steps"] += rev.stats.n_steps
    return RunResult(_concat(neg, fwd), cls, back, meta)


def _flip_time(traj: Trajectory) -> Trajectory:
    """View of a trajectory with the sample order reversed (for classification only)."""
    idx = slice(None, None, -1)
    return Trajectory(
        kind=traj.kind, t=-traj.t[idx], tau=-traj.tau[idx], states=traj.states[idx], bloch=traj.bloch[idx],
        energy=traj.energy[idx], omega_m=traj.omega_m[idx], Gamma_sp=traj.Gamma_sp[idx],
        config=traj.config, time_scale=traj.time_scale, t_min=traj.t_min, stats=traj.stats, meta=traj.meta,
    )


def _mirror_kind(kind: str) -> str:
    """Kind of the ``t -> -inf`` limit given the reversed run's ``t -> +inf`` kind."""
    return {"attractor_north": "attractor_south", "attractor_south": "attractor_north"}.get(kind, kind)


def measured_period_over_tmin(res: RunResult) -> float | None:
    p = res.classification.period_s
    return None if p is None else p / res.meta["T_min_s"]
