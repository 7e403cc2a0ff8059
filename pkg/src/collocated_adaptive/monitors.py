"""Runtime certificates for the closed loop: Lyapunov function, its rate,
the determinant floor and the per-step identities.

These need the true base parameters and so only exist in simulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LyapunovSample:
    V: float
    Vdot_analytic: float
    det_Mn_hat: float
    pihat_delta_identity: float
    eta: float


def integral_state(ctrl, e, rdot, gains, k):
    """Integral state y consistent with xi_c = rdot - Lambda1 e - Lambda2 y.

    This is ``int e - beta`` for the constant beta that makes the xi_c
    identity hold along the trajectory. Between reference discontinuities it
    differs from the integrated ``ctrl.y`` only by that constant.
    """
    return (rdot - gains.Lambda1 * e - ctrl.xi[k:]) / gains.Lambda2


def lyapunov_value(model, t, state, ctrl, gains, ref, true_params):
    """V = 1/2 [s'Ms + pt'Gamma^-1 pt + 2e'K L1 e + 2y'L1 K L2 y]."""
    k = state.k
    r, rdot, _ = ref(t)
    e = state.q[k:] - r
    y = integral_state(ctrl, e, rdot, gains, k)
    s = state.qdot - ctrl.xi
    M = model.mass_matrix(state.q, true_params)
    pt = ctrl.pihat - true_params
    K, L1, L2 = gains.K, gains.Lambda1, gains.Lambda2
    return 0.5 * (
        s @ M @ s
        + pt @ np.linalg.solve(gains.Gamma, pt)
        + 2.0 * e @ (K * L1 * e)
        + 2.0 * y @ (L1 * K * L2 * y)
    )


def lyapunov_rate(model, t, state, ctrl, gains, ref, true_params, eta=0.0, delta=None):
    """Closed-form dV/dt of the closed loop.

    The base expression
    ``-sn'Kn sn - (edot, L2 y)' Kbar (edot, L2 y) - s'Fv s - e'L1 K L1 e``
    holds while eta = 0. Passing a nonzero ``eta`` with its ``delta`` adds
    the desingularization contribution ``eta * pt'delta``.
    """
    k = state.k
    r, rdot, _ = ref(t)
    e = state.q[k:] - r
    edot = state.qdot[k:] - rdot
    y = integral_state(ctrl, e, rdot, gains, k)
    s = state.qdot - ctrl.xi
    s_n = s[:k]
    Fv = model.friction_matrix(true_params)
    w = edot + gains.Lambda2 * y
    rate = (
        -s_n @ (gains.Kn * s_n)
        - w @ (gains.K * w)
        - s @ Fv @ s
        - e @ (gains.Lambda1 * gains.K * gains.Lambda1 * e)
    )
    if eta and delta is not None:
        rate += eta * (ctrl.pihat - true_params) @ delta
    return float(rate)


def kbar_matrix(K):
    K = np.asarray(K, dtype=float)
    if K.ndim == 1:
        K = np.diag(K)
    return np.block([[K, K], [K, K]])


def kbar_psd_check(K):
    """True iff the block matrix [[K, K], [K, K]] is positive semidefinite."""
    return bool(np.linalg.eigvalsh(kbar_matrix(K))[0] >= -1e-12)


def pihat_delta_identity(pihat, delta, k):
    """pihat' delta - k; zero whenever det(Mn_hat) > 0."""
    return float(pihat @ delta - k)


def sample(model, t, state, ctrl, gains, ref, true_params, out):
    """Evaluate every monitor at one instant given the controller output."""
    V = lyapunov_value(model, t, state, ctrl, gains, ref, true_params)
    Vdot = lyapunov_rate(model, t, state, ctrl, gains, ref, true_params, out.eta, out.delta)
    ident = pihat_delta_identity(ctrl.pihat, out.delta, state.k) if out.det_Mn_hat > 0 else np.nan
    return LyapunovSample(V, Vdot, out.det_Mn_hat, ident, out.eta)


@dataclass(frozen=True)
class DeterminantFloorReport:
    epsilon: float
    tolerance: float
    min_det: float
    t_min: float
    initial_det: float
    eta_active_time: float
    passed: bool

    def summary(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"determinant floor {verdict}: min det(Mn_hat) = {self.min_det:.6g} at t = {self.t_min:.4g} s "
            f"(floor {self.epsilon - self.tolerance:.6g}, initial {self.initial_det:.6g}, "
            f"eta active {self.eta_active_time:.4g} s)"
        )


def determinant_floor_monitor(trace, epsilon, rel_tol=0.02):
    """Check det(Mn_hat)(t) >= epsilon - rel_tol * epsilon over a trace.

    Only meaningful when det(Mn_hat)(0) > epsilon; otherwise the report is
    marked as failed since the premise does not hold.
    """
    t = np.array([rec.t for rec in trace])
    det = np.array([rec.det_Mn_hat for rec in trace])
    eta = np.array([rec.eta for rec in trace])
    tol = rel_tol * epsilon
    i = int(np.nanargmin(det))
    dt = np.diff(t)
    active = float(np.sum(dt[(eta[:-1] != 0.0)])) if t.size > 1 else 0.0
    passed = bool(det[0] > epsilon and det[i] >= epsilon - tol)
    return DeterminantFloorReport(epsilon, tol, float(det[i]), float(t[i]), float(det[0]), active, passed)


@dataclass(frozen=True)
class MonotonicityReport:
    max_increase: float
    tolerance: float
    steps_checked: int
    steps_skipped: int
    t_worst: float
    passed: bool


def lyapunov_monotonicity(trace, switch_times=(), rel_tol=1e-6, skip_eta_active=True):
    """Check V(t+h) - V(t) <= rel_tol * max(V(0), 1) between consecutive records.

    Steps straddling a reference discontinuity are skipped (V jumps with e),
    as are steps where the desingularizing term is active at either end.
    """
    V = np.array([rec.V for rec in trace])
    t = np.array([rec.t for rec in trace])
    eta = np.array([rec.eta for rec in trace])
    tol = rel_tol * max(V[0], 1.0)
    dV = np.diff(V)
    keep = np.ones(dV.size, dtype=bool)
    for ts in switch_times:
        keep &= ~((t[:-1] < ts) & (t[1:] >= ts))
    if skip_eta_active:
        keep &= (eta[:-1] == 0.0) & (eta[1:] == 0.0)
    if not keep.any():
        return MonotonicityReport(0.0, tol, 0, int(dV.size), float("nan"), True)
    masked = np.where(keep, dV, -np.inf)
    j = int(np.argmax(masked))
    worst = float(masked[j])
    return MonotonicityReport(worst, tol, int(keep.sum()), int((~keep).sum()), float(t[j]), worst <= tol)


def convergence_ratio(trace, fraction=0.1):
    """RMS of |e| over the last ``fraction`` of the horizon over RMS over the first."""
    t = np.array([rec.t for rec in trace])
    e = np.array([np.linalg.norm(rec.e) for rec in trace])
    t0, t1 = t[0], t[-1]
    span = t1 - t0
    head = e[t <= t0 + fraction * span]
    tail = e[t >= t1 - fraction * span]
    rms_head = float(np.sqrt(np.mean(head**2)))
    rms_tail = float(np.sqrt(np.mean(tail**2)))
    return rms_tail / rms_head if rms_head > 0 else float("inf")
