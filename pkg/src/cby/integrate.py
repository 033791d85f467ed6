"""Method-of-lines time evolution: classical RK4 with CFL step control.

The integrator owns nothing but the update; physics lives in system.py.
Breakdown (loss of hyperbolicity, dt underflow, non-finite fields,
residual blow-up) halts the run with a status instead of clamping:
losing m0 positivity or mu' >= |B|^2 is a physical breakdown of the
formulation, not a numerical accident to paper over.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .blocks import char_speeds, fosh_check
from .errors import NonPositiveDensity, SingularPrincipal, StepRejected
from .fields import GridState
from .monitor import compute_report
from .stencil import StencilConfig, dissipation
from .system import rhs

TINY_SPEED = 1e-30


def cfl_dt(state, config):
    """dt = cfl * dx / max coordinate characteristic speed."""
    v_light, v_sound = char_speeds(state)
    vmax = max(v_light, v_sound, TINY_SPEED)
    return config.cfl * state.dx / vmax


def _stage_rhs(state, config):
    td = rhs(state, None, config)
    if config.dissipation_eps > 0.0:
        for karr, yarr in zip(td.arrays(), state.evolved_arrays()):
            karr += dissipation(yarr, state.dx, config)
    return td.arrays()


def _advance(state, base, ks, coef, t):
    """New state with arrays base + coef * ks at time t."""
    new = state.copy()
    for dst, y, k in zip(new.evolved_arrays(), base, ks):
        dst[...] = y + coef * k
    new.t = t
    return new


def _combine(state, base, k1, k2, k3, k4, dt, t):
    new = state.copy()
    for dst, y, a1, a2, a3, a4 in zip(new.evolved_arrays(), base, k1, k2, k3, k4):
        dst[...] = y + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    new.t = t
    return new


def _cheap_validate(state):
    """Fast per-step sanity: finite fields, invertible frame, |B| < 1, mu > 0."""
    for arr in state.evolved_arrays():
        if not np.all(np.isfinite(arr)):
            return "non-finite field values"
    det = state.frame.det()
    if np.any(np.abs(det) <= 1e-12):
        return "frame singular"
    B = state.frame.bvec()
    if np.any(np.einsum('i...,i...->...', B, B) >= 1.0):
        return "|B| >= 1"
    if state.fluid is not None and np.any(state.fluid.mu <= 0.0):
        return "non-positive density"
    return None


def rk4_step(state, dt, config=None):
    """One classical RK4 update of every evolved field.

    Raises StepRejected when the updated state fails the cheap validity
    checks, SingularPrincipal when a principal solve degenerates.
    """
    config = config or StencilConfig()
    t, h = state.t, dt
    base = [arr.copy() for arr in state.evolved_arrays()]
    k1 = _stage_rhs(state, config)
    s2 = _advance(state, base, k1, 0.5 * h, t + 0.5 * h)
    k2 = _stage_rhs(s2, config)
    s3 = _advance(state, base, k2, 0.5 * h, t + 0.5 * h)
    k3 = _stage_rhs(s3, config)
    s4 = _advance(state, base, k3, h, t + h)
    k4 = _stage_rhs(s4, config)
    new = _combine(state, base, k1, k2, k3, k4, h, t + h)
    problem = _cheap_validate(new)
    if problem:
        raise StepRejected(f"step to t = {new.t:.6g} rejected: {problem}")
    return new


@dataclass
class RunResult:
    status: str            # "complete" | "refused" | "breakdown"
    reason: str
    state: GridState
    steps: int
    last_report: Optional[object] = None

    @property
    def ok(self):
        return self.status == "complete"


@dataclass
class HaltPolicy:
    max_residual: float = 1.0e3
    min_dt: float = 1.0e-10
    max_steps: int = 1_000_000


def evolve(state, t_end, config=None, *, halt=None, every_steps=10,
           fosh_every=1, fixed_dt=None,
           on_report: Optional[Callable] = None):
    """Advance to t_end with CFL-controlled RK4 steps.

    ``on_report(state, step, report)`` fires at step 0, every
    ``every_steps`` steps, and at the end.  The run halts early with a
    breakdown status on loss of hyperbolicity, dt underflow, non-finite
    fields, a rejected step, or constraint-residual blow-up.
    """
    config = config or StencilConfig()
    halt = halt or HaltPolicy()
    if t_end <= state.t:
        raise ValueError("t_end must exceed the state time")

    report = compute_report(state, config)
    if on_report:
        on_report(state, 0, report)

    fr = fosh_check(state)
    if not fr.passed:
        return RunResult("refused", f"hyperbolicity check failed at start: {fr}",
                         state, 0, report)

    steps = 0
    while state.t < t_end - 1e-14:
        if fosh_every and steps % fosh_every == 0:
            fr = fosh_check(state)
            if not fr.passed:
                return RunResult("breakdown", f"hyperbolicity lost: {fr}",
                                 state, steps, report)
        try:
            dt = fixed_dt if fixed_dt is not None else cfl_dt(state, config)
        except SingularPrincipal as exc:
            return RunResult("breakdown", f"characteristic speeds singular: {exc}",
                             state, steps, report)
        dt = min(dt, t_end - state.t)
        if dt < halt.min_dt:
            return RunResult("breakdown", f"dt = {dt:.3e} underflowed min_dt",
                             state, steps, report)
        try:
            state = rk4_step(state, dt, config)
        except (SingularPrincipal, StepRejected, NonPositiveDensity) as exc:
            return RunResult("breakdown", str(exc), state, steps, report)
        steps += 1
        if steps >= halt.max_steps:
            return RunResult("breakdown", "step budget exhausted", state, steps, report)
        at_end = state.t >= t_end - 1e-14
        if steps % every_steps == 0 or at_end:
            report = compute_report(state, config)
            if on_report:
                on_report(state, steps, report)
            if report.max_constraint() > halt.max_residual:
                return RunResult("breakdown",
                                 f"constraint residual blow-up ({report.max_constraint():.3e})",
                                 state, steps, report)
    return RunResult("complete", "reached t_end", state, steps, report)
