"""Adaptive stiff time integration of the semi-discrete system.

A three-stage linearly implicit Rosenbrock method advances the solution:
it is third order with the exact Jacobian, second order for an arbitrary
Jacobian approximation (W-method), and L-stable, so the diffusion operator
at fine resolution poses no step-size restriction.  An embedded
second-order solution provides the error estimate for step control.
Steps producing error estimates above tolerance, non-finite values, or
negative densities beyond -1e-12 are rejected and retried with a smaller
step, which together with the flux limiter keeps densities non-negative.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import IntegrationFailureError

__all__ = ["IntegratorConfig", "State", "StepResult", "RunStats", "step_adaptive", "integrate"]

# Coefficients of the Rosenbrock method.  gamma is the root of
# g^3 - 3 g^2 + 3/2 g - 1/6 = 0 near 0.4359, which makes the stability
# function vanish at infinity; the remaining coefficients solve the
# third-order conditions with b = (1/6, 2/3, 1/6) and additionally cancel
# the Wf tree so the order is two for any Jacobian approximation.
GAMMA = 0.43586652150845899942
A21 = 0.5
A31 = 0.5
A32 = 0.5
G21 = -0.87173304301691799883
G31 = 0.09306979112564648821
G32 = 0.77866325189127151062
B = (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0)
B_HAT = (0.18, 0.64, 0.18)

_POSITIVITY_FLOOR = -1e-12
_MAX_REJECTS_PER_STEP = 60
_JAC_REFRESH_STEPS = 12     # accepted steps between Jacobian rebuilds
_DT_FREEZE_BAND = 1.4       # keep dt (and the factorisation) for mild growth


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-5
    abs_tol: float = 1e-5
    dt_init: float = 1e-6
    dt_max: float | None = None
    t_final: float = 25.0
    output_times: Sequence[float] | None = None
    enforce_positivity: bool = True

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.output_times is not None:
            ts = np.asarray(self.output_times, dtype=float)
            if ts.size and (np.any(np.diff(ts) < 0) or ts[0] < 0 or ts[-1] > self.t_final + 1e-12):
                raise ValueError("output_times must be monotone within [0, t_final]")


@dataclass
class State:
    t: float
    u: np.ndarray
    m0: float

    def copy(self) -> "State":
        return State(t=self.t, u=self.u.copy(), m0=self.m0)


@dataclass
class StepResult:
    accepted: bool
    dt_used: float
    dt_next: float
    error_estimate: float


@dataclass
class RunStats:
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs_evals: int = 0
    n_jac_evals: int = 0
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {
            "accepted_steps": self.n_accepted,
            "rejected_steps": self.n_rejected,
            "rhs_evaluations": self.n_rhs_evals,
            "jacobian_evaluations": self.n_jac_evals,
            "wall_time_s": self.wall_time,
        }


class _ZeroOperator:
    def matvec(self, v):
        return np.zeros_like(v)

    def solve_shifted(self, c, b):
        return b.copy()


def _wrms(err: np.ndarray, u0: np.ndarray, u1: np.ndarray, cfg: IntegratorConfig) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(u0), np.abs(u1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _rosenbrock_step(u0, dt, f, W, stats: RunStats | None = None):
    """One trial step; returns (u1, err), or (None, None) when a stage blew
    up in a way step rejection can cure.  A non-finite right-hand side at
    the current (accepted) state is unrecoverable and raises."""
    f0 = f(u0)
    if stats is not None:
        stats.n_rhs_evals += 1
    if not np.all(np.isfinite(f0)):
        raise IntegrationFailureError("right-hand side is not finite")
    k1 = W.solve_shifted(GAMMA * dt, f0)
    Wk1 = W.matvec(k1)
    stage2 = u0 + dt * A21 * k1
    if not np.all(np.isfinite(stage2)):
        return None, None
    f1 = f(stage2)
    if stats is not None:
        stats.n_rhs_evals += 1
    if not np.all(np.isfinite(f1)):
        return None, None
    k2 = W.solve_shifted(GAMMA * dt, f1 + dt * G21 * Wk1)
    Wk2 = W.matvec(k2)
    stage3 = u0 + dt * (A31 * k1 + A32 * k2)
    if not np.all(np.isfinite(stage3)):
        return None, None
    f2 = f(stage3)
    if stats is not None:
        stats.n_rhs_evals += 1
    if not np.all(np.isfinite(f2)):
        return None, None
    k3 = W.solve_shifted(GAMMA * dt, f2 + dt * (G31 * Wk1 + G32 * Wk2))
    u1 = u0 + dt * (B[0] * k1 + B[1] * k2 + B[2] * k3)
    err = dt * ((B[0] - B_HAT[0]) * k1 + (B[1] - B_HAT[1]) * k2 + (B[2] - B_HAT[2]) * k3)
    return u1, err


def _attempt_step(
    state: State,
    rhs_fn: Callable[[np.ndarray], np.ndarray],
    dt_try: float,
    config: IntegratorConfig,
    W,
    stats: RunStats | None,
) -> tuple[State, StepResult]:
    u1, err = _rosenbrock_step(state.u, dt_try, rhs_fn, W, stats)
    if u1 is None or not np.all(np.isfinite(u1)):
        return state, StepResult(False, dt_try, 0.25 * dt_try, np.inf)
    est = _wrms(err, state.u, u1, config)
    if not np.isfinite(est):
        return state, StepResult(False, dt_try, 0.25 * dt_try, np.inf)
    if est > 1.0:
        fac = max(0.1, min(0.5, 0.9 * est ** (-1.0 / 3.0)))
        return state, StepResult(False, dt_try, fac * dt_try, est)
    if config.enforce_positivity and np.min(u1) < _POSITIVITY_FLOOR:
        return state, StepResult(False, dt_try, 0.5 * dt_try, est)
    fac = max(0.2, min(5.0, 0.9 * max(est, 1e-16) ** (-1.0 / 3.0)))
    new = State(t=state.t + dt_try, u=u1, m0=state.m0)
    return new, StepResult(True, dt_try, fac * dt_try, est)


def step_adaptive(
    state: State,
    rhs_fn: Callable[[np.ndarray], np.ndarray],
    dt_try: float,
    config: IntegratorConfig,
    jac_fn: Callable[[np.ndarray], object] | None = None,
    stats: RunStats | None = None,
) -> tuple[State, StepResult]:
    """Attempt a single step of size dt_try.

    Returns the advanced state on acceptance and the original state (shared
    array, unmodified) on rejection, together with the embedded error
    estimate and a step-size suggestion.  A non-finite right-hand side at
    the current state raises IntegrationFailureError.
    """
    if dt_try <= 0:
        raise ValueError("dt_try must be positive")
    W = jac_fn(state.u) if jac_fn is not None else _ZeroOperator()
    if stats is not None and jac_fn is not None:
        stats.n_jac_evals += 1
    return _attempt_step(state, rhs_fn, dt_try, config, W, stats)


def integrate(
    state0: State,
    rhs_fn: Callable[[np.ndarray], np.ndarray],
    config: IntegratorConfig,
    jac_fn: Callable[[np.ndarray], object] | None = None,
) -> tuple[list[State], RunStats]:
    """Integrate to t_final, returning snapshots at the requested times.

    Snapshots are linearly interpolated between accepted steps (the final
    time is always hit exactly).  Identical inputs give bit-identical
    trajectories on one platform; there is no internal randomness.
    """
    t_start = time.perf_counter()
    stats = RunStats()
    tf = config.t_final
    out_times = (
        np.asarray(config.output_times, dtype=float)
        if config.output_times is not None
        else np.array([tf])
    )
    dt_max = config.dt_max if config.dt_max is not None else max(tf / 10.0, 1e-12)
    dt_min = 1e-13 * max(1.0, tf)

    state = state0.copy()
    snapshots: list[State] = []
    next_out = 0
    while next_out < out_times.size and out_times[next_out] <= state.t + 1e-14:
        snapshots.append(State(t=float(out_times[next_out]), u=state.u.copy(), m0=state.m0))
        next_out += 1

    # The method is a W-method: a stale Jacobian costs only accuracy the
    # error estimator can see, so the Jacobian is refreshed lazily and the
    # step size is frozen inside a deadband to reuse factorisations.
    dt = min(config.dt_init, dt_max, max(tf - state.t, dt_min))
    rejects_in_a_row = 0
    w_op = _ZeroOperator() if jac_fn is None else None
    steps_since_jac = 0
    while state.t < tf - 1e-12 * max(1.0, tf):
        dt_step = min(dt, dt_max, tf - state.t)
        if dt_step < dt_min:
            raise IntegrationFailureError(
                f"step size collapsed below {dt_min:g} at t = {state.t:.6g}", t=state.t
            )
        if w_op is None or (jac_fn is not None and steps_since_jac >= _JAC_REFRESH_STEPS):
            w_op = jac_fn(state.u)
            stats.n_jac_evals += 1
            steps_since_jac = 0
        prev = state
        state, result = _attempt_step(state, rhs_fn, dt_step, config, w_op, stats)
        if not result.accepted:
            stats.n_rejected += 1
            rejects_in_a_row += 1
            if rejects_in_a_row > _MAX_REJECTS_PER_STEP:
                raise IntegrationFailureError(
                    f"step repeatedly rejected at t = {prev.t:.6g}", t=prev.t
                )
            if jac_fn is not None and steps_since_jac > 0:
                # retry at the same step size with a fresh Jacobian first
                w_op = None
            else:
                dt = result.dt_next
            continue
        stats.n_accepted += 1
        rejects_in_a_row = 0
        steps_since_jac += 1
        while next_out < out_times.size and out_times[next_out] <= state.t + 1e-14:
            t_o = float(out_times[next_out])
            if abs(t_o - state.t) <= 1e-14 * max(1.0, tf):
                u_o = state.u.copy()
            else:
                w = (t_o - prev.t) / (state.t - prev.t)
                u_o = (1.0 - w) * prev.u + w * state.u
            snapshots.append(State(t=t_o, u=u_o, m0=state.m0))
            next_out += 1
        fac = result.dt_next / dt_step
        if fac < 1.0 or fac > _DT_FREEZE_BAND:
            dt = result.dt_next
        else:
            dt = dt_step
    stats.wall_time = time.perf_counter() - t_start
    if not snapshots or abs(snapshots[-1].t - tf) > 1e-9 * max(1.0, tf):
        if config.output_times is None or (out_times.size and abs(out_times[-1] - tf) < 1e-12):
            snapshots.append(State(t=tf, u=state.u.copy(), m0=state.m0))
    return snapshots, stats
