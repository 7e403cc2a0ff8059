"""Plant forward dynamics, a fixed-step RK4 integrator and the closed-loop runner."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import monitors
from .adaptive import ControllerState, SingularMinorError
from .model import DimensionError, JointState
from .trace import TraceRecord

log = logging.getLogger(__name__)

COND_LIMIT = 1e12
QDOT_LIMIT = 1e3


class SingularPlantError(RuntimeError):
    def __init__(self, q, cond):
        self.q = np.array(q, dtype=float)
        self.cond = float(cond)
        super().__init__(f"plant mass matrix singular at q={self.q.tolist()} (cond={self.cond:.3e})")


class DivergenceError(RuntimeError):
    def __init__(self, t, stage=None, reason="non-finite derivative"):
        self.t = t
        self.stage = stage
        where = f" (stage {stage})" if stage is not None else ""
        super().__init__(f"{reason} at t={t:.6g} s{where}")


class SimulationError(RuntimeError):
    """Wraps any failure during a closed-loop run with its timestamp."""

    def __init__(self, t, cause):
        self.t = t
        self.cause = cause
        super().__init__(f"simulation aborted at t={t:.6g} s: {cause}")


@dataclass(frozen=True)
class ActuationMap:
    """Generalized force (0_k, tau_bar): only the last m coordinates are driven."""

    k: int
    m: int

    def generalized_force(self, tau_bar):
        tau_bar = np.asarray(tau_bar, dtype=float).reshape(-1)
        if tau_bar.size != self.m:
            raise ValueError(f"tau_bar must have {self.m} entries, got {tau_bar.size}")
        return np.concatenate((np.zeros(self.k), tau_bar))


def forward_dynamics(model, state, params, tau_bar):
    """qdd = M^-1 [(0_k, tau_bar) - C qd - g - Fv qd - F]."""
    tau = [0.0] * state.k + np.asarray(tau_bar, dtype=float).reshape(-1).tolist()
    if len(tau) != state.n:
        raise DimensionError(f"tau_bar must have {state.m} entries, got {len(tau) - state.k}")
    qdd, cond = model.forward_accel(state.q, state.qdot, params, tau)
    if not cond < COND_LIMIT:
        raise SingularPlantError(state.q, cond)
    return qdd


def rk4_step(derivative_fn, t, x, h, k1=None):
    """One classical Runge-Kutta step of x' = f(t, x).

    ``k1`` may be supplied when f(t, x) is already known.
    """
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    if k1 is None:
        k1 = derivative_fn(t, x)
    _check_stage(k1, t, 1)
    k2 = derivative_fn(t + 0.5 * h, x + 0.5 * h * k1)
    _check_stage(k2, t, 2)
    k3 = derivative_fn(t + 0.5 * h, x + 0.5 * h * k2)
    _check_stage(k3, t, 3)
    k4 = derivative_fn(t + h, x + h * k3)
    _check_stage(k4, t, 4)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_stage(kx, t, stage):
    # a sum is non-finite iff some entry is
    if not math.isfinite(kx.sum()):
        raise DivergenceError(t, stage)


@dataclass
class SimState:
    t: float
    plant: JointState
    controller: ControllerState


@dataclass
class SimResult:
    trace: list
    error: Exception | None = None
    final: SimState | None = None
    steps: int = 0

    @property
    def ok(self):
        return self.error is None


class ClosedLoop:
    """Packs plant and controller states into one vector for the integrator.

    Layout: ``[q (n), qdot (n), xi (n), pihat (p), y (m)]``.
    """

    def __init__(self, model, controller, true_params, k):
        self.model = model
        self.controller = controller
        self.true_params = np.asarray(true_params, dtype=float)
        self.k = k
        n, p = model.n, model.p
        self.n, self.p, self.m = n, p, n - k
        self.slices = (slice(0, n), slice(n, 2 * n), slice(2 * n, 3 * n),
                       slice(3 * n, 3 * n + p), slice(3 * n + p, 3 * n + p + n - k))
        self.last_output = None

    def pack(self, sim_state):
        c = sim_state.controller
        return np.concatenate((sim_state.plant.q, sim_state.plant.qdot, c.xi, c.pihat, c.y))

    def unpack(self, t, x):
        sq, sqd, sxi, spi, sy = self.slices
        return SimState(t, JointState(x[sq], x[sqd], self.k), ControllerState(x[sxi], x[spi], x[sy]))

    def evaluate(self, t, x):
        """Return ``(xdot, control_output)`` at (t, x)."""
        sq, sqd, sxi, spi, sy = self.slices
        plant = JointState(x[sq], x[sqd], self.k)
        # the controller only ever sees (t, q, qdot) and its own state
        out = self.controller(t, plant, ControllerState(x[sxi], x[spi], x[sy]))
        qdd = forward_dynamics(self.model, plant, self.true_params, out.tau_bar)
        xdot = np.concatenate((plant.qdot, qdd, out.xidot, out.pihatdot, out.ydot))
        return xdot, out

    def derivative(self, t, x):
        xdot, out = self.evaluate(t, x)
        self.last_output = out
        return xdot


def make_record(loop, sim_state, out, with_monitors=True):
    ctrl = loop.controller
    if with_monitors and ctrl.law != "passive":
        smp = monitors.sample(loop.model, sim_state.t, sim_state.plant, sim_state.controller,
                              ctrl.gains, ctrl.reference, loop.true_params, out)
        V, Vdot, ident = smp.V, smp.Vdot_analytic, smp.pihat_delta_identity
    else:
        V = Vdot = ident = np.nan
    c = sim_state.controller
    return TraceRecord(
        t=sim_state.t, q=sim_state.plant.q.copy(), qdot=sim_state.plant.qdot.copy(),
        e=out.e.copy(), s=out.s.copy(), xi=c.xi.copy(), pihat=c.pihat.copy(),
        tau_bar=out.tau_bar.copy(), det_Mn_hat=float(out.det_Mn_hat), eta=float(out.eta),
        V=float(V), Vdot=float(Vdot), pihat_delta_identity=float(ident),
    )


def simulate(model, controller, true_params, initial, duration, h=1e-3, decimate=1,
             with_monitors=True, qdot_limit=QDOT_LIMIT, on_step=None):
    """Integrate the coupled plant and controller with fixed-step RK4.

    ``initial`` is a :class:`SimState`. One record is kept every ``decimate``
    steps (the initial state is always recorded, and so is the final one).
    Errors stop the run; the partial trace comes back with the error set.
    ``on_step(sim_state, out)`` is called with the state and controller
    output at every step.
    """
    if duration < 0 or not h > 0:
        raise ValueError("duration must be >= 0 and h > 0")
    if decimate < 1:
        raise ValueError(f"decimate must be >= 1, got {decimate}")
    loop = ClosedLoop(model, controller, true_params, initial.plant.k)
    x = loop.pack(initial)
    t0 = initial.t
    n_steps = int(round(duration / h))
    trace = []
    result = SimResult(trace)
    t = t0
    try:
        for i in range(n_steps + 1):
            t = t0 + i * h
            xdot, out = loop.evaluate(t, x)
            record = i % decimate == 0 or i == n_steps
            if record or on_step is not None:
                st = loop.unpack(t, x)
                if on_step is not None:
                    on_step(st, out)
                if record:
                    trace.append(make_record(loop, st, out, with_monitors))
            if i == n_steps:
                break
            x = rk4_step(loop.derivative, t, x, h, k1=xdot)
            if not math.isfinite(x.sum()):
                raise DivergenceError(t + h, reason="non-finite state")
            if np.max(np.abs(x[loop.slices[1]])) > qdot_limit:
                raise DivergenceError(t + h, reason=f"|qdot| above {qdot_limit:g} rad/s")
            result.steps = i + 1
    except (SingularPlantError, DivergenceError, SingularMinorError, np.linalg.LinAlgError) as exc:
        log.warning("simulation aborted at t=%.6g s: %s", t, exc)
        result.error = SimulationError(t, exc)
    result.final = loop.unpack(t0 + result.steps * h, x)
    return result
