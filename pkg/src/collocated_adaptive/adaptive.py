"""Adaptive tracking laws for fully actuated and underactuated arms.

Every law maps ``(t, q, qdot)`` and the controller state ``(xi, pihat, y)``
to a torque command plus the time derivatives of the controller state. No
law reads the joint acceleration.

Partition convention: the first ``k`` coordinates are unactuated, the last
``m = n - k`` are actuated and tracked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import smallmat
from .model import DimensionError, mass_minor_estimate

COND_LIMIT = 1e12
FD_STEP_Q = 1e-6
MIN_DELTA_GAMMA_DELTA = 1e-14


class SingularMinorError(RuntimeError):
    """The estimated noncollocated mass minor is singular or ill-conditioned."""

    def __init__(self, det, t=None, reason="singular"):
        self.det = float(det)
        self.t = t
        when = "" if t is None else f" at t={t:.6g} s"
        super().__init__(f"{reason} noncollocated mass minor{when} (det={self.det:.6g})")


@dataclass(frozen=True)
class Gains:
    """Controller gains; diagonal matrices are stored as their diagonals.

    ``K``, ``Lambda1`` and ``Lambda2`` have length m, ``Kn`` length k, and
    ``Gamma`` is a full p x p symmetric positive definite matrix.
    """

    K: np.ndarray
    Lambda1: np.ndarray
    Lambda2: np.ndarray
    Gamma: np.ndarray
    Kn: np.ndarray = field(default_factory=lambda: np.zeros(0))
    epsilon: float = 1.0

    def __post_init__(self):
        for name in ("K", "Lambda1", "Lambda2", "Kn"):
            v = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if v.ndim == 2:
                if np.any(v != np.diag(np.diag(v))):
                    raise ValueError(f"gain {name} must be diagonal")
                v = np.diag(v).copy()
            if np.any(v <= 0) or not np.all(np.isfinite(v)):
                raise ValueError(f"gain {name} must be positive, got {v.tolist()}")
            object.__setattr__(self, name, v)
        G = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        if G.shape[0] != G.shape[1] or not np.allclose(G, G.T):
            raise ValueError("Gamma must be a symmetric square matrix")
        if np.linalg.eigvalsh(G)[0] <= 0:
            raise ValueError("Gamma must be positive definite")
        object.__setattr__(self, "Gamma", G)
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if not (self.K.size == self.Lambda1.size == self.Lambda2.size):
            raise DimensionError("K, Lambda1 and Lambda2 must share the collocated size m")

    @property
    def m(self):
        return self.K.size

    @property
    def k(self):
        return self.Kn.size


@dataclass(frozen=True)
class ControllerState:
    """Auxiliary velocity xi, parameter estimate pihat and integral state y."""

    xi: np.ndarray
    pihat: np.ndarray
    y: np.ndarray


@dataclass
class ControlOutput:
    tau_bar: np.ndarray
    xidot: np.ndarray
    pihatdot: np.ndarray
    eta: float
    delta: np.ndarray
    s: np.ndarray
    e: np.ndarray
    edot: np.ndarray
    det_Mn_hat: float = np.nan

    @property
    def ydot(self):
        return self.e


def collocated_xidot(e, edot, rddot, gains):
    """xi_c dynamics: rddot - Lambda1 edot - Lambda2 e."""
    return rddot - gains.Lambda1 * edot - gains.Lambda2 * e


def noncollocated_xidot(Y0, s_n, pihat, gains, Mn):
    """Fictitious input xi_n chosen so that Y_n(q, qd, xi, xid) pihat = Kn s_n.

    ``Y0`` is the full regressor evaluated with acceleration argument (0_k, xid_c).
    """
    k = s_n.size
    return smallmat.solve(Mn, gains.Kn * s_n - Y0[:k] @ pihat)


def desingularizing_gain(trace_term, det_mn, delta, gains):
    """Switching gain eta: zero unless det(Mn) <= epsilon and tr(Mn^-1 U) < 0."""
    if trace_term >= 0.0 or det_mn > gains.epsilon:
        return 0.0
    dGd = delta @ gains.Gamma @ delta
    if dGd < MIN_DELTA_GAMMA_DELTA:
        raise SingularMinorError(det_mn, reason="degenerate desingularization direction for")
    return -trace_term / dGd


def lemma1_control(model, t, state, ctrl, gains, ref):
    """Fully actuated adaptive law (k = 0).

    ``ref`` is a callable returning ``(r, rdot, rddot)``.
    """
    if state.k != 0 or gains.m != model.n:
        raise DimensionError("lemma1_control needs a fully actuated partition with n x n gains")
    q, qdot = state.q, state.qdot
    r, rdot, rddot = ref(t)
    e = q - r
    edot = qdot - rdot
    xidot = collocated_xidot(e, edot, rddot, gains)
    s = qdot - ctrl.xi
    Y = model.regressor(q, qdot, ctrl.xi, xidot)
    pihatdot = -gains.Gamma @ (Y.T @ s)
    tau = Y @ ctrl.pihat - gains.K * s
    return ControlOutput(tau, xidot, pihatdot, 0.0, np.zeros(model.p), s, e, edot)


def theorem1_control(model, t, state, ctrl, gains, ref, desingularize=False):
    """Collocated adaptive law for an underactuated arm (k >= 1).

    With ``desingularize`` the parameter update carries the correction that
    keeps det(Mn_hat) above ``gains.epsilon``.
    """
    if state.k < 1:
        raise DimensionError("theorem1_control needs k >= 1; use lemma1_control when fully actuated")
    return collocated_law(model, t, state, ctrl, gains, ref, desingularize)


def collocated_law(model, t, state, ctrl, gains, ref, desingularize=False):
    """Collocated law for any k >= 0; with k = 0 it reduces to lemma1_control."""
    k = state.k
    if gains.Kn.size != k or gains.K.size != state.q.size - k:
        raise DimensionError(f"gains sized for (k, m)=({gains.k}, {gains.m}), state has ({k}, {state.m})")
    q, qdot = state.q, state.qdot
    xi, pihat = ctrl.xi, ctrl.pihat
    r, rdot, rddot = ref(t)
    e = q[k:] - r
    edot = qdot[k:] - rdot
    xidot_c = collocated_xidot(e, edot, rddot, gains)
    s = qdot - xi
    s_n = s[:k]
    det_mn = np.nan
    if k:
        Mn = model.mass_matrix(q, pihat)[:k, :k]
        det_mn = smallmat.det(Mn)
        _check_minor(Mn, det_mn, t)
        Y0 = model.regressor(q, qdot, xi, np.concatenate((np.zeros(k), xidot_c)))
        xidot_n = noncollocated_xidot(Y0, s_n, pihat, gains, Mn)
        xidot = np.concatenate((xidot_n, xidot_c))
        # Y is affine in its acceleration argument; add the mass columns of xid_n
        W = model.mass_regressor(q)
        Y = Y0 + np.tensordot(W[:, :k, :], xidot_n, axes=([1], [0])) if k > 1 else Y0 + xidot_n[0] * W[:, 0, :]
    else:
        xidot = xidot_c
        Y = model.regressor(q, qdot, xi, xidot)
    if desingularize and k:
        pihatdot, eta, delta = desingularized_adaptation(
            model, q, qdot, xi, xidot, s, pihat, gains, k, Y=Y, Mn=Mn, det_mn=det_mn, t=t, W=W
        )
    else:
        pihatdot = -gains.Gamma @ (Y.T @ s)
        eta = 0.0
        if k and det_mn > 0.0:
            delta = desingularization_direction(model, q, smallmat.inv(Mn), k, W=W)
        else:
            delta = np.zeros(model.p)
    tau_bar = Y[k:] @ pihat - gains.K * s[k:]
    return ControlOutput(tau_bar, xidot, pihatdot, eta, delta, s, e, edot, det_mn)


def _check_minor(Mn, det_mn, t):
    if not np.isfinite(det_mn) or det_mn == 0.0:
        raise SingularMinorError(det_mn, t)
    if Mn.shape[0] == 1:
        if abs(det_mn) < 1e-12:
            raise SingularMinorError(det_mn, t, reason="ill-conditioned")
    elif smallmat.cond_sym(Mn) > COND_LIMIT:
        raise SingularMinorError(det_mn, t, reason="ill-conditioned")


def regressor_mass_column(model, q, i, k):
    """Y_Mn(q, e_i): k x p map with Y_Mn(q, e_i) pi = column i of the k x k minor.

    ``i`` is zero-based.
    """
    if not 0 <= i < k <= model.n:
        raise DimensionError(f"column index {i} out of range for k={k}")
    return model.mass_regressor(q)[:k, i, :]


def grad_q_mass_column(model, q, pihat, i, k, method="auto"):
    """d/dq of column i of the estimated mass minor, shape (k, n).

    ``method`` is ``"fd"`` (central differences, step 1e-6 rad),
    ``"analytic"`` (requires ``model.mass_minor_gradient``) or ``"auto"``,
    which prefers the analytic form when the model offers one.
    """
    if method == "auto":
        method = "analytic" if hasattr(model, "mass_minor_gradient") else "fd"
    if method == "analytic":
        return model.mass_minor_gradient(q, pihat, k)[:, i, :]
    q = np.asarray(q, dtype=float)
    grad = np.empty((k, model.n))
    for j in range(model.n):
        dq = np.zeros(model.n)
        dq[j] = FD_STEP_Q
        hi = model.mass_matrix(q + dq, pihat)[:k, i]
        lo = model.mass_matrix(q - dq, pihat)[:k, i]
        grad[:, j] = (hi - lo) / (2.0 * FD_STEP_Q)
    return grad


def desingularization_direction(model, q, Mn_inv, k, W=None):
    """delta = sum_i Y_Mn(q, e_i)' Mn_hat^-1 e_i, the gradient of log det(Mn_hat) in pihat."""
    if W is None:
        W = model.mass_regressor(q)
    delta = np.zeros(model.p)
    for i in range(k):
        delta += W[:k, i, :].T @ Mn_inv[:, i]
    return delta


def desingularized_adaptation(model, q, qdot, xi, xidot, s, pihat, gains, k,
                              Y=None, Mn=None, det_mn=None, t=None, W=None):
    """Parameter update that keeps det(Mn_hat) from falling below epsilon.

    Returns ``(pihatdot, eta, delta)``. ``Y``, ``Mn`` and ``det_mn`` may be
    passed in when the caller already has them, as may the mass regressor ``W``.
    """
    if Y is None:
        Y = model.regressor(q, qdot, xi, xidot)
    if Mn is None:
        Mn = mass_minor_estimate(model, q, pihat, k)
        det_mn = smallmat.det(Mn)
    if not det_mn > 0.0:
        raise SingularMinorError(det_mn, t, reason="non-positive")
    Mn_inv = smallmat.inv(Mn)
    Yts = Y.T @ s
    GYts = gains.Gamma @ Yts
    if W is None:
        W = model.mass_regressor(q)
    W = W[:k, :k, :]
    delta = np.zeros(model.p)
    for i in range(k):
        delta += W[:, i, :].T @ Mn_inv[:, i]
    if det_mn > gains.epsilon:
        # eta is zero above the floor whatever the trace; skip computing it
        trace_term = 0.0
    else:
        trace_term = 0.0
        for i in range(k):
            upsilon_i = grad_q_mass_column(model, q, pihat, i, k) @ qdot - W[:, i, :] @ GYts
            trace_term += float(Mn_inv[i] @ upsilon_i)
    eta = desingularizing_gain(trace_term, det_mn, delta, gains)
    pihatdot = -gains.Gamma @ (Yts - eta * delta)
    return pihatdot, eta, delta


class Controller:
    """Binds a law, its gains and a reference into a step function of (t, state, ctrl)."""

    LAWS = ("lemma1", "theorem1", "theorem1-desingularized", "passive")

    def __init__(self, model, law, gains, reference, k):
        if law not in self.LAWS:
            raise ValueError(f"unknown law {law!r}; expected one of {self.LAWS}")
        if law == "lemma1" and k != 0:
            raise ValueError("lemma1 requires k = 0")
        if law.startswith("theorem1") and k < 1:
            raise ValueError(f"{law} requires k >= 1")
        self.model = model
        self.law = law
        self.gains = gains
        self.reference = reference
        self.k = k

    @property
    def desingularized(self):
        return self.law == "theorem1-desingularized"

    def __call__(self, t, state, ctrl):
        if self.law == "lemma1":
            return lemma1_control(self.model, t, state, ctrl, self.gains, self.reference)
        if self.law == "passive":
            return self._passive(t, state, ctrl)
        return theorem1_control(
            self.model, t, state, ctrl, self.gains, self.reference,
            desingularize=self.desingularized,
        )

    def _passive(self, t, state, ctrl):
        r, rdot, _ = self.reference(t)
        e = state.q[self.k:] - r
        m = state.m
        return ControlOutput(
            np.zeros(m), np.zeros(self.model.n), np.zeros(self.model.p), 0.0,
            np.zeros(self.model.p), state.qdot - ctrl.xi, e, state.qdot[self.k:] - rdot,
        )
