import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collocated_adaptive.adaptive import Controller, ControllerState, Gains
from collocated_adaptive.model import DimensionError, JointState, TwoLinkArm
from collocated_adaptive.plant import (
    ActuationMap, DivergenceError, SimState, SingularPlantError, forward_dynamics, rk4_step, simulate,
)
from collocated_adaptive.reference import constant_piecewise
from oracles import expm_taylor4, rk4_hand
from strategies import angles, params, vec

MODEL = TwoLinkArm()


def test_rk4_decay_step():
    x1 = rk4_step(lambda t, x: -x, 0.0, np.array([1.0]), 0.1)
    assert x1[0] == pytest.approx(0.9048375, abs=5e-8)
    assert x1[0] == rk4_hand(lambda x: -x, np.array([1.0]), 0.1)[0]


def test_rk4_zero_field():
    x = np.array([1.0, -2.0, 3.5])
    assert np.array_equal(rk4_step(lambda t, x: np.zeros_like(x), 0.0, x, 0.01), x)


@given(st.integers(0, 2**31))
def test_rk4_linear_system_matches_taylor_propagator(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(4, 4))
    x = rng.normal(size=4)
    h = 0.05
    np.testing.assert_allclose(rk4_step(lambda t, x: A @ x, 0.0, x, h), expm_taylor4(A, h) @ x, atol=1e-12)


def test_rk4_order():
    err = [abs(rk4_step(lambda t, x: -x, 0.0, np.array([1.0]), h)[0] - np.exp(-h)) for h in (0.1, 0.05)]
    assert np.log2(err[0] / err[1]) >= 3.9 + 1  # local error is O(h^5)


def test_rk4_divergence_reports_stage():
    calls = []

    def f(t, x):
        calls.append(t)
        return np.array([np.inf]) if len(calls) == 3 else -x

    with pytest.raises(DivergenceError) as err:
        rk4_step(f, 0.0, np.array([1.0]), 0.1)
    assert err.value.stage == 3 and err.value.t == 0.0
    with pytest.raises(ValueError):
        rk4_step(f, 0.0, np.array([1.0]), 0.0)


@given(angles, vec(2), vec(1), params)
def test_forward_dynamics_satisfies_equation_of_motion(q, qd, tau_bar, _):
    pi = np.array([0.31, 0.05, 0.08, 7.85, 1.96, 0.5, 0.1])
    st_ = JointState(q, qd, k=1)
    qdd = forward_dynamics(MODEL, st_, pi, tau_bar)
    lhs = MODEL.mass_matrix(q, pi) @ qdd + MODEL.bias_forces(q, qd, pi)
    np.testing.assert_allclose(lhs, [0.0, tau_bar[0]], atol=1e-9 * (1 + np.abs(lhs).max()))


@given(angles, vec(2), vec(2))
def test_forward_inverse_round_trip(q, qd, qdd):
    pi = np.array([0.31, 0.05, 0.08, 7.85, 1.96, 0.5, 0.1])
    tau = MODEL.regressor(q, qd, qd, qdd) @ pi
    back = forward_dynamics(MODEL, JointState(q, qd, k=0), pi, tau)
    np.testing.assert_allclose(back, qdd, atol=1e-8 * (1 + np.abs(qdd).max()))


def test_equilibrium_has_zero_acceleration():
    pi = np.array([0.31, 0.05, 0.08, 7.85, 1.96, 0.5, 0.1])
    q = np.array([0.0, 0.7])  # g_n = 0 needs a4 sin q1 + a5 sin(q1+q2) = 0; choose q1 accordingly
    q[0] = np.arctan2(-pi[4] * np.sin(q[1]), pi[3] + pi[4] * np.cos(q[1]))
    g = MODEL.gravity(q, pi)
    assert abs(g[0]) < 1e-12
    qdd = forward_dynamics(MODEL, JointState(q, [0, 0], k=1), pi, g[1:])
    np.testing.assert_allclose(qdd, 0.0, atol=1e-12)


def test_free_frictionless_zero_gravity_rest():
    pi = np.array([0.31, 0.05, 0.08, 0.0, 0.0, 0.0, 0.0])
    assert not np.any(forward_dynamics(MODEL, JointState([0.3, 1.1], [0, 0], k=1), pi, [0.0]))


def test_singular_plant():
    with pytest.raises(SingularPlantError) as err:
        forward_dynamics(MODEL, JointState([0.2, 0.4], [0, 0], k=1), np.zeros(7), [0.0])
    assert err.value.q.tolist() == [0.2, 0.4]


def test_tau_size_checked():
    with pytest.raises(DimensionError):
        forward_dynamics(MODEL, JointState([0, 0], [0, 0], k=1), np.ones(7), [0.0, 0.0])
    with pytest.raises(ValueError):
        ActuationMap(1, 1).generalized_force([1.0, 2.0])
    assert ActuationMap(1, 1).generalized_force([2.0]).tolist() == [0.0, 2.0]


def _setup(law="theorem1", pihat=None):
    gains = Gains(K=[0.1], Lambda1=[5.0], Lambda2=[1.0], Gamma=0.1 * np.eye(7), Kn=[0.1], epsilon=5.0)
    ref = constant_piecewise([0, 46], np.deg2rad([-60, -12]))
    ctrl = Controller(MODEL, law, gains, ref, 1)
    pihat = np.array([1.5, -0.11, 0.01, 2.0, -0.24, 0.05, 0.05]) if pihat is None else pihat
    init = SimState(0.0, JointState([0.0, 0.0], [0.0, 0.0], 1),
                    ControllerState(np.zeros(2), pihat, np.zeros(1)))
    return ctrl, init


TRUE = np.array([0.31, 0.05, 0.08, 7.85, 1.96, 0.5, 0.1])


def test_zero_duration_gives_initial_record():
    ctrl, init = _setup()
    res = simulate(MODEL, ctrl, TRUE, init, 0.0)
    assert res.ok and len(res.trace) == 1 and res.trace[0].t == 0.0


def test_decimation_and_final_record():
    ctrl, init = _setup()
    res = simulate(MODEL, ctrl, TRUE, init, 0.025, decimate=10)
    assert [round(r.t, 9) for r in res.trace] == [0.0, 0.01, 0.02, 0.025]
    with pytest.raises(ValueError):
        simulate(MODEL, ctrl, TRUE, init, 0.1, decimate=0)


def test_determinism():
    ctrl, init = _setup("theorem1-desingularized")
    a = simulate(MODEL, ctrl, TRUE, init, 0.5, decimate=7)
    b = simulate(MODEL, ctrl, TRUE, init, 0.5, decimate=7)
    assert a.trace == b.trace


def test_error_returns_partial_trace():
    pihat = np.array([0.0, 0.05, 0.0, 2.0, -0.24, 0.05, 0.05])
    ctrl, init = _setup(pihat=pihat)
    res = simulate(MODEL, ctrl, TRUE, init, 1.0)
    assert not res.ok
    assert "noncollocated mass minor" in str(res.error)
    assert res.trace == []


def test_on_step_sees_every_step():
    ctrl, init = _setup()
    seen = []
    simulate(MODEL, ctrl, TRUE, init, 0.05, decimate=10, on_step=lambda s, out: seen.append(s.t))
    assert len(seen) == 51


def test_controller_never_sees_acceleration():
    # the closed loop hands the controller (t, JointState, ControllerState) only
    class Spy:
        law = "theorem1"

        def __init__(self, inner):
            self.inner, self.gains, self.reference = inner, inner.gains, inner.reference

        def __call__(self, t, state, ctrl):
            assert set(vars(state)) == {"q", "qdot", "k"}
            return self.inner(t, state, ctrl)

    ctrl, init = _setup()
    assert simulate(MODEL, Spy(ctrl), TRUE, init, 0.01, with_monitors=False).ok
