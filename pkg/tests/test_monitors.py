import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collocated_adaptive.adaptive import ControllerState, Gains
from collocated_adaptive.model import JointState, TwoLinkArm
from collocated_adaptive.monitors import (
    convergence_ratio, determinant_floor_monitor, kbar_matrix, kbar_psd_check, lyapunov_monotonicity,
    lyapunov_rate, lyapunov_value, pihat_delta_identity,
)
from collocated_adaptive.reference import constant_piecewise, sinusoid_piecewise
from collocated_adaptive.trace import TraceRecord
from strategies import angles, vec

MODEL = TwoLinkArm()
TRUE = np.array([0.31, 0.05, 0.08, 7.848, 1.962, 0.5, 0.1])
GAINS = Gains(K=[0.1], Lambda1=[5.0], Lambda2=[1.0], Gamma=0.1 * np.eye(7), Kn=[0.1], epsilon=5.0)
REF = sinusoid_piecewise([0], [-1.0], [0.6], [0.2])


def _equilibrium(t=0.7):
    r, rd, _ = REF(t)
    q = np.array([0.3, r[0]])
    qd = np.array([0.0, rd[0]])
    # xi_c = rdot - L1 e - L2 y with e = y = 0
    return JointState(q, qd, 1), ControllerState(qd.copy(), TRUE.copy(), np.zeros(1))


def test_value_zero_at_equilibrium():
    st_, ct = _equilibrium()
    assert lyapunov_value(MODEL, 0.7, st_, ct, GAINS, REF, TRUE) == pytest.approx(0.0, abs=1e-15)


def test_rate_zero_at_rest():
    ref = constant_piecewise([0], [0.2])
    st_ = JointState([0.1, 0.2], [0.0, 0.0], 1)
    ct = ControllerState(np.zeros(2), TRUE + 1.0, np.zeros(1))
    assert lyapunov_rate(MODEL, 0.0, st_, ct, GAINS, ref, TRUE) == 0.0


@given(angles, vec(2), vec(2), vec(7), vec(1), st.floats(0, 30))
def test_rate_is_nonpositive(q, qd, xi, pihat, y, t):
    rate = lyapunov_rate(MODEL, t, JointState(q, qd, 1), ControllerState(xi, pihat, y), GAINS, REF, TRUE)
    assert rate <= 0.0
    s_n = qd[0] - xi[0]
    assert rate <= -0.1 * s_n**2 + 1e-12 * (1 + abs(rate))


@given(angles, vec(2), vec(2), vec(7), st.floats(0, 30))
def test_value_nonnegative(q, qd, xi, pihat, t):
    V = lyapunov_value(MODEL, t, JointState(q, qd, 1), ControllerState(xi, pihat, np.zeros(1)), GAINS, REF, TRUE)
    assert V >= -1e-12


def test_kbar_examples():
    for K, lo, hi in (([1.0, 1.0], 0.0, 2.0), ([0.1, 0.1], 0.0, 0.2)):
        eig = np.linalg.eigvalsh(kbar_matrix(K))
        np.testing.assert_allclose(eig, [lo, lo, hi, hi], atol=1e-12)
        assert kbar_psd_check(K)


@given(vec(3, st.floats(1e-3, 100)))
def test_kbar_psd_for_positive_diagonal(K):
    assert kbar_psd_check(K)
    assert np.linalg.eigvalsh(kbar_matrix(K))[0] >= -1e-9 * K.max()


def test_kbar_rejects_negative():
    assert not kbar_psd_check([1.0, -0.5])


def test_identity_residual():
    assert pihat_delta_identity(np.array([2.0, 1.0]), np.array([0.5, 0.0]), 1) == 0.0


def _rec(t, det=6.0, eta=0.0, V=1.0, e=1.0):
    z = np.zeros(2)
    return TraceRecord(t, z, z, np.array([e]), z, z, np.zeros(7), np.zeros(1), det, eta, V, -1.0, 0.0)


def test_determinant_floor_monitor():
    ok = [_rec(0.01 * i, det=6.0 - 0.01 * i) for i in range(110)]
    rep = determinant_floor_monitor(ok, 5.0)
    assert rep.passed and rep.min_det == pytest.approx(4.91)
    bad = ok + [_rec(1.1, det=4.89)]
    assert not determinant_floor_monitor(bad, 5.0).passed
    # premise fails when det(0) is not above epsilon
    assert not determinant_floor_monitor([_rec(0.0, det=4.99)], 5.0).passed
    active = [_rec(0.0), _rec(0.5, eta=1.0), _rec(1.0)]
    assert determinant_floor_monitor(active, 5.0).eta_active_time == pytest.approx(0.5)
    assert "PASS" in rep.summary()


def test_monotonicity_monitor():
    down = [_rec(0.1 * i, V=10.0 - i) for i in range(10)]
    assert lyapunov_monotonicity(down).passed
    up = down[:5] + [_rec(0.5, V=7.0)] + down[6:]
    rep = lyapunov_monotonicity(up)
    assert not rep.passed and rep.t_worst == pytest.approx(0.4)
    # a jump at a reference switch does not count
    assert lyapunov_monotonicity(up, switch_times=(0.45,)).passed
    # nor does one while eta is active
    flagged = down[:5] + [_rec(0.5, V=7.0, eta=1.0)] + down[6:]
    rep = lyapunov_monotonicity(flagged)
    assert rep.passed and rep.steps_skipped == 2
    assert not lyapunov_monotonicity(flagged, skip_eta_active=False).passed


def test_convergence_ratio():
    trace = [_rec(0.1 * i, e=np.exp(-0.1 * i)) for i in range(101)]
    assert convergence_ratio(trace) < 0.1
    flat = [_rec(0.1 * i, e=1.0) for i in range(101)]
    assert convergence_ratio(flat) == pytest.approx(1.0)
