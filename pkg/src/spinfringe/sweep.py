"""Delay-scan protocols with nuclear memory, fringe maps, and nullclines.

``run_sweep`` reproduces the experimental protocol: at each two-pulse
delay tau the nuclear shift relaxes to quasi-equilibrium seeded with the
previous delay's result, so multistable regions retain branch memory and
the forward and backward passes disagree (hysteresis).  ``fringe_map``
and ``nullcline`` provide the static pictures the sweep traces live on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketEscapeError, NoConvergenceError
from .fringe import count_rate, pump_rate
from .meanfield import relax_to_steady, steady_states
from .params import MeanFieldParams, ModelParams, SteadyState, SweepSchedule, TraceSample

__all__ = ["run_sweep", "fringe_map", "nullcline", "NullclinePoint"]


def _jump_threshold(tau: float) -> float:
    """Half a fringe width pi/tau: adjacent basins are one fringe apart."""
    return math.pi / tau if tau > 0.0 else math.inf


def run_sweep(s: SweepSchedule, p: ModelParams, mf: MeanFieldParams) -> list[TraceSample]:
    """Scan tau with nuclear memory; round trips run forward then backward.

    Each point relaxes the mean-field drift seeded with the previous
    point's omega_f (the first point uses s.omega_init).  A sample is
    flagged ``jumped`` when omega_f moved by more than half a fringe from
    its seed, which marks a branch switch.  Solver failures propagate
    with the offending tau attached.
    """
    grid = s.grid()
    passes: list[tuple[str, np.ndarray]] = []
    if s.direction in ("forward", "round-trip"):
        passes.append(("fwd", grid))
    if s.direction in ("backward", "round-trip"):
        passes.append(("bwd", grid[::-1]))

    samples: list[TraceSample] = []
    omega = float(s.omega_init)
    index = 0
    for direction, taus in passes:
        for tau in taus:
            tau = float(tau)
            if s.reset_omega_every > 0 and index > 0 and index % s.reset_omega_every == 0:
                omega = float(s.omega_init)
            try:
                ss = relax_to_steady(omega, tau, p, mf)
            except (NoConvergenceError, BracketEscapeError) as exc:
                exc.tau = tau
                raise
            jumped = index > 0 and abs(ss.omega_f - omega) > _jump_threshold(tau)
            samples.append(TraceSample(
                tau=tau,
                omega_f=ss.omega_f,
                count=count_rate(ss.omega_f, tau, p),
                beta_f=pump_rate(ss.omega_f, p),
                stable=ss.stable,
                jumped=jumped,
                direction=direction,
            ))
            omega = ss.omega_f
            index += 1
    return samples


def fringe_map(omega_grid, tau_grid, p: ModelParams) -> np.ndarray:
    """Count rate on the outer product of the two grids.

    Returns an array of shape (len(omega_grid), len(tau_grid)); tau is
    the fast axis, matching the long-form file layout omega-major.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    tau_grid = np.asarray(tau_grid, dtype=float)
    if omega_grid.ndim != 1 or tau_grid.ndim != 1:
        raise ValueError("grids must be one-dimensional")
    if np.any(np.diff(omega_grid) <= 0) or np.any(np.diff(tau_grid) <= 0):
        raise ValueError("grids must be strictly increasing")
    return np.asarray(count_rate(omega_grid[:, None], tau_grid[None, :], p))


@dataclass(frozen=True)
class NullclinePoint:
    """Roots of the drift at one tau, with plotting branch assignments."""

    tau: float
    roots: list[SteadyState]
    branch_ids: list[int]


def nullcline(tau_grid, p: ModelParams, mf: MeanFieldParams) -> list[NullclinePoint]:
    """Steady states along a tau grid, threaded into continuation branches.

    Roots at consecutive tau values are linked to the nearest root of the
    previous point within a motion bound: a root anchored near a fringe
    feature moves by at most about (omega0 + W) |dtau| / tau per step, far
    less than the fringe spacing.  Unmatched new roots open new branch
    ids; unmatched old ones terminate (a fold annihilates a stable and an
    unstable branch together, a branch can also leave through the
    bracket edge).
    """
    points: list[NullclinePoint] = []
    next_branch = 0
    prev: list[tuple[float, int]] = []  # (omega_f, branch_id) at previous tau
    prev_tau: float | None = None
    for tau in np.asarray(tau_grid, dtype=float):
        tau = float(tau)
        roots = steady_states(tau, p, mf)
        ids: list[int] = []
        taken: set[int] = set()
        if prev_tau is None or tau <= 0.0:
            thresh = _jump_threshold(tau)
        else:
            motion = 2.0 * (p.omega0 + mf.omega_bracket) * abs(tau - prev_tau) / tau
            thresh = min(0.5 * _jump_threshold(tau),
                         max(motion, 5.0 * mf.fd_step))
        prev_tau = tau
        for r in roots:
            best = None
            best_d = thresh
            for k, (w_prev, bid) in enumerate(prev):
                if k in taken:
                    continue
                d = abs(r.omega_f - w_prev)
                if d <= best_d:
                    best, best_d = k, d
            if best is None:
                ids.append(next_branch)
                next_branch += 1
            else:
                taken.add(best)
                ids.append(prev[best][1])
        points.append(NullclinePoint(tau=tau, roots=roots, branch_ids=ids))
        prev = [(r.omega_f, bid) for r, bid in zip(roots, ids)]
    return points
