"""Mechanical model abstraction and the reference two-link planar arm.

A model evaluates

    M(q, pi) qdd + C(q, qd, pi) qd + g(q, pi) + Fv(pi) qd + F(q, qd, pi) = tau

with every term linear in the constant base-parameter vector ``pi``, and
supplies the Slotine-Li regressor

    Y(q, qd, xi, xid) pi = M xid + C(q, qd) xi + g + Fv xi + F.

Coordinates are ordered ``(q_n, q_c)``: the first ``k`` entries are the
unactuated (noncollocated) joints, the last ``m`` the actuated ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import smallmat

GRAVITY = 9.81


class DimensionError(ValueError):
    """A vector or matrix does not have the size the model expects."""


class NotPositiveDefiniteError(ValueError):
    """The mass matrix lost positive definiteness at configuration ``q``."""

    def __init__(self, q, min_eig):
        self.q = np.array(q, dtype=float)
        self.min_eig = float(min_eig)
        super().__init__(
            f"mass matrix not positive definite at q={self.q.tolist()} "
            f"(min eigenvalue {self.min_eig:.3e})"
        )


@dataclass(frozen=True)
class JointState:
    """Generalized coordinates and velocities with the collocation split."""

    q: np.ndarray
    qdot: np.ndarray
    k: int = 0

    def __post_init__(self):
        q, qdot = self.q, self.qdot
        if type(q) is not np.ndarray or q.ndim != 1 or q.dtype != float:
            q = np.asarray(q, dtype=float).reshape(-1)
        if type(qdot) is not np.ndarray or qdot.ndim != 1 or qdot.dtype != float:
            qdot = np.asarray(qdot, dtype=float).reshape(-1)
        if q.shape != qdot.shape:
            raise DimensionError(f"q has {q.size} entries but qdot has {qdot.size}")
        if not 0 <= self.k < q.size:
            raise DimensionError(f"need 0 <= k < n, got k={self.k}, n={q.size}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qdot)

    @property
    def n(self) -> int:
        return self.q.size

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def q_n(self):
        return self.q[: self.k]

    @property
    def q_c(self):
        return self.q[self.k :]

    @property
    def qdot_n(self):
        return self.qdot[: self.k]

    @property
    def qdot_c(self):
        return self.qdot[self.k :]


@dataclass(frozen=True)
class DynamicsQuantities:
    M: np.ndarray
    C: np.ndarray
    g: np.ndarray
    Fv: np.ndarray
    F: np.ndarray


@dataclass(frozen=True)
class PropertyBounds:
    """Empirical constants of the mass/Coriolis/gravity bounds."""

    lambda1: float
    lambda2: float
    lambda0: float
    gamma0: float
    sample_count: int


class MechanicalModel:
    """Base class for models linear in their base parameters.

    Subclasses set ``n`` and ``p`` and implement :meth:`regressor`. The
    dynamic terms are recovered from the regressor by linearity, so a
    subclass only has to get one function right; it may still override the
    term evaluators with closed forms.
    """

    n: int
    p: int
    param_names: tuple = ()

    def regressor(self, q, qdot, xi, xidot):
        raise NotImplementedError

    def nonlinear_friction(self, q, qdot, params):
        """Hook for F(q, qd, pi); zero unless a model overrides it."""
        return np.zeros(self.n)

    def mass_matrix(self, q, params):
        z = np.zeros(self.n)
        g = self.regressor(q, z, z, z) @ params
        M = np.empty((self.n, self.n))
        for i in range(self.n):
            M[:, i] = self.regressor(q, z, z, np.eye(self.n)[i]) @ params - g
        return 0.5 * (M + M.T)

    def gravity(self, q, params):
        z = np.zeros(self.n)
        return self.regressor(q, z, z, z) @ params

    def bias_forces(self, q, qdot, params):
        """C(q, qd) qd + g(q) + Fv qd + F(q, qd), i.e. Y(q, qd, qd, 0) pi + F."""
        return self.regressor(q, qdot, qdot, np.zeros(self.n)) @ params + self.nonlinear_friction(q, qdot, params)

    def forward_accel(self, q, qdot, params, tau):
        """Return ``(M^-1 (tau - bias), cond(M))`` at the true parameters."""
        M = self.mass_matrix(q, params)
        cond = smallmat.cond_sym(M)
        if not cond < math.inf or smallmat.det(M) == 0.0:
            return np.full(self.n, np.nan), math.inf
        return smallmat.solve(M, np.asarray(tau, dtype=float) - self.bias_forces(q, qdot, params)), cond

    def mass_regressor(self, q):
        """W with W[:, i, :] @ pi = column i of M(q, pi), shape (n, n, p).

        Column i is Y(q, 0, 0, e_i) - Y(q, 0, 0, 0).
        """
        z = np.zeros(self.n)
        Y0 = self.regressor(q, z, z, z)
        eye = np.eye(self.n)
        return np.stack([self.regressor(q, z, z, eye[i]) - Y0 for i in range(self.n)], axis=1)

    def coriolis(self, q, qdot, params):
        z = np.zeros(self.n)
        eye = np.eye(self.n)
        C = np.empty((self.n, self.n))
        for i in range(self.n):
            C[:, i] = (self.regressor(q, qdot, eye[i], z) - self.regressor(q, z, eye[i], z)) @ params
        return C

    def friction_matrix(self, params):
        z = np.zeros(self.n)
        q0 = np.zeros(self.n)
        g = self.regressor(q0, z, z, z) @ params
        eye = np.eye(self.n)
        return np.column_stack([self.regressor(q0, z, eye[i], z) @ params - g for i in range(self.n)])

    def check_params(self, params):
        params = np.asarray(params, dtype=float).reshape(-1)
        if params.size != self.p:
            raise DimensionError(f"expected {self.p} base parameters, got {params.size}")
        if not np.all(np.isfinite(params)):
            raise ValueError("base parameters must be finite")
        return params

    def check_vector(self, v, name="vector"):
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size != self.n:
            raise DimensionError(f"{name} must have {self.n} entries, got {v.size}")
        return v


@dataclass(frozen=True)
class TwoLinkGeometry:
    """Physical description of a planar 2R arm hanging under gravity.

    Angles are measured from the downward vertical (``q = 0`` is the hanging
    rest configuration); the second angle is relative to the first link.
    """

    m1: float
    m2: float
    l1: float
    lc1: float
    lc2: float
    I1: float
    I2: float
    fv1: float = 0.0
    fv2: float = 0.0
    g0: float = GRAVITY

    def base_params(self):
        a1 = self.I1 + self.I2 + self.m1 * self.lc1**2 + self.m2 * (self.l1**2 + self.lc2**2)
        a2 = self.I2 + self.m2 * self.lc2**2
        a3 = self.m2 * self.l1 * self.lc2
        a4 = (self.m1 * self.lc1 + self.m2 * self.l1) * self.g0
        a5 = self.m2 * self.lc2 * self.g0
        return np.array([a1, a2, a3, a4, a5, self.fv1, self.fv2])

    def energy(self, q, qdot):
        """Total mechanical energy from link kinematics, zero at hanging rest.

        Computed from centre-of-mass positions and velocities rather than the
        lumped parameters, so it serves as an independent check on the model.
        """
        q1, q2 = q
        w1 = qdot[0]
        w2 = qdot[0] + qdot[1]
        # centre-of-mass positions, y measured upward from the hip
        y1 = -self.lc1 * np.cos(q1)
        y2 = -self.l1 * np.cos(q1) - self.lc2 * np.cos(q1 + q2)
        v1 = np.array([self.lc1 * np.cos(q1), self.lc1 * np.sin(q1)]) * w1
        v2 = (
            np.array([self.l1 * np.cos(q1), self.l1 * np.sin(q1)]) * w1
            + np.array([self.lc2 * np.cos(q1 + q2), self.lc2 * np.sin(q1 + q2)]) * w2
        )
        kinetic = 0.5 * (self.m1 * v1 @ v1 + self.I1 * w1**2 + self.m2 * v2 @ v2 + self.I2 * w2**2)
        potential = self.g0 * (
            self.m1 * (y1 + self.lc1) + self.m2 * (y2 + self.l1 + self.lc2)
        )
        return kinetic + potential


class TwoLinkArm(MechanicalModel):
    """Planar 2R arm with viscous joint friction, p = 7.

    Base parameters ``(a1, a2, a3, a4, a5, fv1, fv2)``::

        M = [[a1 + 2 a3 cos q2,  a2 + a3 cos q2],
             [a2 + a3 cos q2,    a2            ]]
        g = [a4 sin q1 + a5 sin(q1 + q2),  a5 sin(q1 + q2)]
        Fv = diag(fv1, fv2)

    Gravity is folded into ``a4`` and ``a5``; a horizontal arm is the same
    model with those two parameters at zero.
    """

    n = 2
    p = 7
    param_names = ("a1", "a2", "a3", "a4", "a5", "fv1", "fv2")

    def regressor(self, q, qdot, xi, xidot):
        q1, q2 = q.tolist()
        dq1, dq2 = qdot.tolist()
        w1, w2 = xi.tolist()
        v1, v2 = xidot.tolist()
        c2, s2 = math.cos(q2), math.sin(q2)
        s1, s12 = math.sin(q1), math.sin(q1 + q2)
        return np.array([
            [v1, v2, c2 * (2.0 * v1 + v2) - s2 * (dq2 * w1 + (dq1 + dq2) * w2), s1, s12, w1, 0.0],
            [0.0, v1 + v2, c2 * v1 + s2 * dq1 * w1, 0.0, s12, 0.0, w2],
        ])

    def mass_regressor(self, q):
        c2 = math.cos(float(q[1]))
        W = np.zeros((2, 2, 7))
        W[0, 0, 0] = 1.0
        W[0, 0, 2] = 2.0 * c2
        W[0, 1, 1] = W[1, 0, 1] = W[1, 1, 1] = 1.0
        W[0, 1, 2] = W[1, 0, 2] = c2
        return W

    def mass_matrix(self, q, params):
        a1, a2, a3 = params[:3].tolist()
        c2 = math.cos(q[1])
        m12 = a2 + a3 * c2
        return np.array([[a1 + 2.0 * a3 * c2, m12], [m12, a2]])

    def coriolis(self, q, qdot, params):
        h = -float(params[2]) * math.sin(float(q[1]))
        dq1, dq2 = float(qdot[0]), float(qdot[1])
        return np.array([[h * dq2, h * (dq1 + dq2)], [-h * dq1, 0.0]])

    def gravity(self, q, params):
        q1, q2 = float(q[0]), float(q[1])
        s12 = math.sin(q1 + q2)
        a5 = float(params[4])
        return np.array([float(params[3]) * math.sin(q1) + a5 * s12, a5 * s12])

    def friction_matrix(self, params):
        return np.array([[float(params[5]), 0.0], [0.0, float(params[6])]])

    def bias_forces(self, q, qdot, params):
        a3, a4, a5, f1, f2 = params[2:7].tolist()
        q1, q2 = q.tolist()
        dq1, dq2 = qdot.tolist()
        h = -a3 * math.sin(q2)
        s12 = a5 * math.sin(q1 + q2)
        return np.array([
            h * (2.0 * dq1 + dq2) * dq2 + a4 * math.sin(q1) + s12 + f1 * dq1,
            -h * dq1 * dq1 + s12 + f2 * dq2,
        ])

    def forward_accel(self, q, qdot, params, tau):
        a1, a2, a3, a4, a5, f1, f2 = params.tolist()
        q1, q2 = q.tolist()
        dq1, dq2 = qdot.tolist()
        c2, s2 = math.cos(q2), math.sin(q2)
        m11, m12 = a1 + 2.0 * a3 * c2, a2 + a3 * c2
        h = -a3 * s2
        g2 = a5 * math.sin(q1 + q2)
        b1 = tau[0] - (h * (2.0 * dq1 + dq2) * dq2 + a4 * math.sin(q1) + g2 + f1 * dq1)
        b2 = tau[1] - (-h * dq1 * dq1 + g2 + f2 * dq2)
        det = m11 * a2 - m12 * m12
        cond = smallmat.cond_sym2(m11, m12, a2)
        if det == 0.0 or not cond < math.inf:
            return np.full(2, np.nan), math.inf
        qdd = np.array([(a2 * b1 - m12 * b2) / det, (m11 * b2 - m12 * b1) / det])
        return qdd, cond

    def mass_minor_gradient(self, q, params, k):
        """Analytic d/dq of the columns of the leading k x k mass minor.

        Returns an array of shape (k, k, n): entry ``[r, i, j]`` is the
        derivative of minor element ``(r, i)`` with respect to ``q[j]``.
        """
        s2 = math.sin(float(q[1]))
        a3 = float(params[2])
        dM = np.zeros((2, 2, 2))
        dM[0, 0, 1] = -2.0 * a3 * s2
        dM[0, 1, 1] = dM[1, 0, 1] = -a3 * s2
        return dM[:k, :k, :]


def eval_dynamics(model, state, params):
    """Evaluate M, C, g, Fv (and the nonlinear friction hook) at a state."""
    params = model.check_params(params)
    q = model.check_vector(state.q, "q")
    qdot = model.check_vector(state.qdot, "qdot")
    M = model.mass_matrix(q, params)
    M = 0.5 * (M + M.T)
    return DynamicsQuantities(
        M=M,
        C=model.coriolis(q, qdot, params),
        g=model.gravity(q, params),
        Fv=model.friction_matrix(params),
        F=model.nonlinear_friction(q, qdot, params),
    )


def eval_regressor(model, q, qdot, xi, xidot):
    """Y(q, qd, xi, xid): Coriolis and friction act on xi, M on xid."""
    return model.regressor(
        model.check_vector(q, "q"),
        model.check_vector(qdot, "qdot"),
        model.check_vector(xi, "xi"),
        model.check_vector(xidot, "xidot"),
    )


def regressor_rows_noncollocated(Y, k):
    """First k rows of the regressor (the unactuated equations)."""
    Y = np.atleast_2d(Y)
    if not 0 <= k <= Y.shape[0]:
        raise DimensionError(f"k={k} out of range for a regressor with {Y.shape[0]} rows")
    return Y[:k]


def regressor_rows_collocated(Y, k):
    Y = np.atleast_2d(Y)
    if not 0 <= k <= Y.shape[0]:
        raise DimensionError(f"k={k} out of range for a regressor with {Y.shape[0]} rows")
    return Y[k:]


def mass_minor_estimate(model, q, pihat, k):
    """Leading k x k principal minor of M(q, pihat), i.e. S M S^T."""
    if not 1 <= k <= model.n:
        raise DimensionError(f"k={k} out of range for n={model.n}")
    M = model.mass_matrix(model.check_vector(q, "q"), model.check_params(pihat))
    M = 0.5 * (M + M.T)
    return M[:k, :k].copy()


def estimate_property_bounds(model, params, sample_count=10_000, rng_seed=0,
                             q_range=np.pi, qdot_range=10.0):
    """Sample the workspace to estimate lambda1, lambda2, lambda0 and gamma0.

    Configurations are drawn uniformly from ``[-q_range, q_range]^n`` and
    velocities from ``[-qdot_range, qdot_range]^n``. Raises
    :class:`NotPositiveDefiniteError` at the first sample where M is not
    positive definite.
    """
    params = model.check_params(params)
    rng = np.random.default_rng(rng_seed)
    qs = rng.uniform(-q_range, q_range, size=(sample_count, model.n))
    qdots = rng.uniform(-qdot_range, qdot_range, size=(sample_count, model.n))
    lam1, lam2, lam0, gam0 = np.inf, 0.0, 0.0, 0.0
    for q, qdot in zip(qs, qdots):
        eigs = np.linalg.eigvalsh(model.mass_matrix(q, params))
        if eigs[0] <= 0.0:
            raise NotPositiveDefiniteError(q, eigs[0])
        lam1 = min(lam1, eigs[0])
        lam2 = max(lam2, eigs[-1])
        speed = np.linalg.norm(qdot)
        if speed > 0.0:
            lam0 = max(lam0, np.linalg.norm(model.coriolis(q, qdot, params), 2) / speed)
        gam0 = max(gam0, np.linalg.norm(model.gravity(q, params)))
    return PropertyBounds(lam1, lam2, lam0, gam0, sample_count)
