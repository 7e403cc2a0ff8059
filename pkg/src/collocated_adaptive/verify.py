"""Property suite behind ``verify``: model identities, integrator order,
controller identities, Lyapunov certificates and the scenario checks.

Each property returns a :class:`PropertyResult` with the measured value,
its tolerance and the margin between them. Simulations are shared between
properties through a per-run cache.

:func:`mutation` installs a deliberate bug in the control laws so the suite
can be shown to catch it.
"""

from __future__ import annotations

import contextlib
import dataclasses
import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from . import adaptive, monitors, smallmat
from .adaptive import ControllerState
from .experiment import load_scenario
from .model import JointState, TwoLinkArm, eval_dynamics, mass_minor_estimate
from .plant import rk4_step, simulate

log = logging.getLogger(__name__)

SOFT_BUDGET_S = 300.0
DEG = math.pi / 180.0


@dataclass
class PropertyResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""
    runtime: float = 0.0

    @property
    def margin(self):
        """Distance to the tolerance, positive when passing."""
        return abs(self.tolerance - self.measured) * (1.0 if self.passed else -1.0)

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}  {self.name:<28} measured {self.measured:.4g}  tol {self.tolerance:.4g}  "
                f"margin {self.margin:+.3g}  ({self.runtime:.1f} s)  {self.detail}")

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["margin"] = self.margin
        return d


def _upper(name, measured, tol, detail=""):
    return PropertyResult(name, bool(measured <= tol), float(measured), float(tol), detail)


def _lower(name, measured, tol, detail=""):
    return PropertyResult(name, bool(measured >= tol), float(measured), float(tol), detail)


# -- per-step collector ------------------------------------------------------------

class StepMonitor:
    """Accumulates per-step checks during a simulation (passed as ``on_step``).

    ``windows`` are ``(start, end)`` intervals over which max |e| is tracked.
    Instants at a reference switch are left out of the windows since e jumps
    there by construction.
    """

    def __init__(self, model, gains, k, windows=(), switch_times=(), h=1e-3):
        self.model = model
        self.gains = gains
        self.k = k
        self.windows = tuple(windows)
        self.switch_times = tuple(switch_times)
        self.half_step = 0.5 * h
        self.window_max_e = [0.0] * len(self.windows)
        self.delta_identity = 0.0
        self.delta_checked = 0
        self.xidot_identity = 0.0
        self.eta_violations = 0
        self.eta_steps = 0
        self.min_det = math.inf
        self.t_min_det = math.nan
        self.det0 = math.nan
        self.max_tau = 0.0
        self.max_qdot_n = 0.0
        self.finite = True

    def _in_window(self, t, a, b):
        if not a <= t <= b:
            return False
        return all(abs(t - ts) >= self.half_step for ts in self.switch_times)

    def __call__(self, st, out):
        t, plant, ctrl = st.t, st.plant, st.controller
        k = self.k
        if self.windows:
            ae = max(abs(v) for v in out.e.tolist())
            for i, (a, b) in enumerate(self.windows):
                if ae > self.window_max_e[i] and self._in_window(t, a, b):
                    self.window_max_e[i] = ae
        tau = max(abs(v) for v in out.tau_bar.tolist())
        if not math.isfinite(tau):
            self.finite = False
        elif tau > self.max_tau:
            self.max_tau = tau
        if not k:
            return
        self.max_qdot_n = max(self.max_qdot_n, max(abs(v) for v in plant.qdot[:k].tolist()))
        det = out.det_Mn_hat
        if math.isnan(self.det0):
            self.det0 = det
        if det < self.min_det:
            self.min_det, self.t_min_det = det, t
        pihat = ctrl.pihat
        if det > 1e-6:
            self.delta_identity = max(self.delta_identity, abs(float(pihat @ out.delta) - k))
            self.delta_checked += 1
        Y = self.model.regressor(plant.q, plant.qdot, ctrl.xi, out.xidot)
        resid = np.abs(Y[:k] @ pihat - self.gains.Kn * out.s[:k]).max() / (1.0 + math.sqrt(pihat @ pihat))
        if resid > self.xidot_identity:
            self.xidot_identity = float(resid)
        if out.eta != 0.0:
            self.eta_steps += 1
            # eta != 0 only below the floor with a negative trace term (eta > 0)
            if not (det <= self.gains.epsilon and out.eta > 0.0):
                self.eta_violations += 1


@dataclass
class ScenarioRun:
    cfg: object
    trace: list
    error: Exception | None
    steps: StepMonitor
    wall: float


def _with(cfg, law=None, step=None):
    if law is not None:
        cfg = dataclasses.replace(cfg, controller=dataclasses.replace(cfg.controller, law=law))
    if step is not None:
        cfg = dataclasses.replace(cfg, integration=dataclasses.replace(cfg.integration, step=step))
    return cfg


class Suite:
    """Runs the properties and caches the simulations they share."""

    def __init__(self, config=None, seed=0):
        self.config = config
        self.seed = seed if config is None else config.integration.seed
        self._runs = {}

    def scenario(self, name):
        if self.config is not None and name == "custom":
            return self.config
        return load_scenario(name)

    def run(self, name, law=None, duration=None, decimate=None, step=None, windows=None, with_monitors=True):
        if windows is None:
            # one window set per bundled scenario so every property shares the same run
            windows = () if name == "custom" else ERROR_WINDOWS.get(name, ())
        key = (name, law, duration, decimate, step, tuple(windows), with_monitors)
        if key not in self._runs:
            cfg = _with(self.scenario(name), law, step)
            model = cfg.build_model()
            mon = StepMonitor(model, cfg.controller.gains, cfg.model.k, windows,
                              cfg.reference.switch_times(), cfg.integration.step)
            t0 = time.perf_counter()
            res = simulate(model, cfg.build_controller(model), cfg.model.params, cfg.initial_state(),
                           cfg.integration.duration if duration is None else duration,
                           h=cfg.integration.step,
                           decimate=cfg.output.decimate if decimate is None else decimate,
                           with_monitors=with_monitors, on_step=mon)
            self._runs[key] = ScenarioRun(cfg, res.trace, res.error, mon, time.perf_counter() - t0)
        return self._runs[key]

    def rng(self, salt):
        return np.random.default_rng([self.seed, salt])


SIM_WINDOWS = ((36.0, 46.0), (76.0, 90.0))
BASELINE_AFTER = 30.0
ERROR_WINDOWS = {"scenario_sim": SIM_WINDOWS, "lemma1_baseline": ((BASELINE_AFTER, math.inf),)}


# -- model-core -------------------------------------------------------------------

def _random_params(rng, lo=-10.0, hi=10.0):
    return rng.uniform(lo, hi, 7)


def prop_regressor_identity(suite, samples=1000):
    model = TwoLinkArm()
    rng = suite.rng(1)
    worst = 0.0
    for _ in range(samples):
        q, qd, xi, xid = (rng.uniform(-10, 10, 2) for _ in range(4))
        pi = _random_params(rng)
        d = eval_dynamics(model, JointState(q, qd), pi)
        lhs = model.regressor(q, qd, xi, xid) @ pi
        rhs = d.M @ xid + d.C @ xi + d.g + d.Fv @ xi
        worst = max(worst, float(np.linalg.norm(lhs - rhs) / (1.0 + np.linalg.norm(lhs))))
    return _upper("regressor-identity", worst, 1e-9, f"{samples} samples, |Y pi - (M xid + C xi + g + Fv xi)|/(1+|Y pi|)")


def mdot_fd(model, q, qdot, params, h=1e-6):
    """Central difference of M along the flow q + h qdot."""
    return (model.mass_matrix(q + h * qdot, params) - model.mass_matrix(q - h * qdot, params)) / (2.0 * h)


def prop_skew_symmetry(suite, samples=1000):
    model = TwoLinkArm()
    rng = suite.rng(2)
    worst = 0.0
    for _ in range(samples):
        q, qd, x = (rng.uniform(-10, 10, 2) for _ in range(3))
        pi = _random_params(rng)
        N = mdot_fd(model, q, qd, pi) - 2.0 * model.coriolis(q, qd, pi)
        scale = (x @ x) * (1.0 + np.linalg.norm(qd)) ** 2
        worst = max(worst, abs(float(x @ N @ x)) / scale)
    return _upper("skew-symmetry", worst, 1e-6, f"{samples} samples, |x'(Mdot - 2C)x| / (|x|^2 (1+|qd|)^2)")


def prop_model_identities(suite, samples=200):
    """Symmetry, linearity in pi, minor consistency and positive-definite bounds."""
    model = TwoLinkArm()
    rng = suite.rng(3)
    worst_lin = 0.0
    asym = 0.0
    minor = 0.0
    for _ in range(samples):
        st = JointState(rng.uniform(-10, 10, 2), rng.uniform(-10, 10, 2))
        p1, p2 = _random_params(rng), _random_params(rng)
        a, b = rng.uniform(-3, 3, 2)
        d1, d2 = eval_dynamics(model, st, p1), eval_dynamics(model, st, p2)
        d = eval_dynamics(model, st, a * p1 + b * p2)
        for f in ("M", "C", "g", "Fv"):
            ref = a * getattr(d1, f) + b * getattr(d2, f)
            worst_lin = max(worst_lin, float(np.max(np.abs(getattr(d, f) - ref)) / (1.0 + np.max(np.abs(ref)))))
        asym = max(asym, float(np.max(np.abs(d.M - d.M.T))))
        minor = max(minor, float(np.max(np.abs(mass_minor_estimate(model, st.q, p1, 1) - d1.M[:1, :1]))))
    measured = max(worst_lin, asym, minor)
    return _upper("model-identities", measured, 1e-12,
                  f"linearity {worst_lin:.2e}, asymmetry {asym:.1e}, minor {minor:.1e}")


# -- plant-sim ----------------------------------------------------------------------

def integrator_order(h=0.1, T=1.0):
    """Empirical global order of rk4_step on xdot = -x from the error ratio at h and h/2."""
    def err(step):
        x = np.array([1.0])
        n = int(round(T / step))
        for i in range(n):
            x = rk4_step(lambda t, y: -y, i * step, x, step)
        return abs(float(x[0]) - math.exp(-T))
    return math.log2(err(h) / err(h / 2.0))


def prop_integrator_order(suite):
    order = integrator_order()
    return _lower("integrator-order", order, 3.9, "global error on xdot = -x, h = 0.1 vs 0.05 over [0, 1]")


def energy_drift(run):
    geo = run.cfg.model.geometry
    E = np.array([geo.energy(r.q, r.qdot) for r in run.trace])
    return float(np.max(np.abs(E - E[0])) / abs(E[0])), float(E[0])


def prop_energy_conservation(suite):
    run = suite.run("energy_conservation", decimate=1, with_monitors=False)
    if run.error is not None:
        return PropertyResult("energy-conservation", False, math.inf, 1e-6, f"run failed: {run.error}")
    drift, E0 = energy_drift(run)
    return _upper("energy-conservation", drift, 1e-6,
                  f"max |E - E0| / E0 over {run.cfg.integration.duration:g} s, E0 = {E0:.4g} J")


# -- adaptive-ctrl ------------------------------------------------------------------

def _random_controller_case(rng, k):
    q = rng.uniform(-np.pi, np.pi, 2)
    qd = rng.uniform(-3, 3, 2)
    xi = rng.uniform(-3, 3, 2)
    pihat = np.array([0.31, 0.05, 0.08, 7.848, 1.962, 0.5, 0.1]) * rng.uniform(0.5, 1.5, 7)
    y = rng.uniform(-1, 1, 2 - k)
    return JointState(q, qd, k), ControllerState(xi, pihat, y)


def prop_controller_identities(suite, samples=300):
    """Reduction to the fully actuated law, the xid_n identity and the adaptation gradient."""
    from .reference import sinusoid_piecewise
    model = TwoLinkArm()
    rng = suite.rng(4)
    ref2 = sinusoid_piecewise([0.0], [[0.0, -0.5]], [[0.5, 0.6]], [[0.2, 0.3]], m=2)
    ref1 = sinusoid_piecewise([0.0], [-1.0], [0.6], [0.2], m=1)
    g0 = adaptive.Gains(K=[5, 5], Lambda1=[5, 5], Lambda2=[1, 1], Gamma=2 * np.eye(7))
    g1 = adaptive.Gains(K=[0.1], Kn=[0.1], Lambda1=[5], Lambda2=[1], Gamma=0.1 * np.eye(7), epsilon=5)
    mismatch = 0
    ident = 0.0
    grad = 0.0
    for _ in range(samples):
        t = rng.uniform(0, 10)
        st, cs = _random_controller_case(rng, 0)
        a = adaptive.lemma1_control(model, t, st, cs, g0, ref2)
        b = adaptive.collocated_law(model, t, st, cs, g0, ref2)
        if not all(np.array_equal(getattr(a, f), getattr(b, f)) for f in ("tau_bar", "pihatdot", "xidot")):
            mismatch += 1
        st, cs = _random_controller_case(rng, 1)
        out = adaptive.theorem1_control(model, t, st, cs, g1, ref1)
        Y = model.regressor(st.q, st.qdot, cs.xi, out.xidot)
        ident = max(ident, float(abs(Y[0] @ cs.pihat - g1.Kn[0] * out.s[0]) / (1 + np.linalg.norm(cs.pihat))))
        # pihatdot = -Gamma d/dpihat [pihat' Y' s], by central differences
        f = lambda p: float(p @ (Y.T @ out.s))
        fd = np.array([(f(cs.pihat + 1e-6 * e) - f(cs.pihat - 1e-6 * e)) / 2e-6 for e in np.eye(7)])
        grad = max(grad, float(np.max(np.abs(-g1.Gamma @ fd - out.pihatdot)) / (1 + np.max(np.abs(fd)))))
    measured = max(ident, grad)
    ok = mismatch == 0 and measured <= 1e-8
    detail = f"k=0 reduction mismatches {mismatch}/{samples}, xid_n identity {ident:.1e}, gradient {grad:.1e}"
    return PropertyResult("controller-identities", ok, measured, 1e-8, detail)


# -- trajectory properties ----------------------------------------------------------

TRAJECTORY_SCENARIOS = ("scenario_sim", "experiment_ref2")


def prop_step_identities(suite):
    """delta identity, xid_n identity and eta activation, checked at every step."""
    names = ("custom",) if suite.config is not None else TRAJECTORY_SCENARIOS
    delta = xid = 0.0
    viol = checked = eta_steps = 0
    for name in names:
        if suite.scenario(name).model.k == 0 or suite.scenario(name).controller.law == "passive":
            continue
        run = suite.run(name)
        s = run.steps
        delta = max(delta, s.delta_identity)
        xid = max(xid, s.xidot_identity)
        viol += s.eta_violations
        checked += s.delta_checked
        eta_steps += s.eta_steps
    return [
        _upper("delta-identity", delta, 1e-9, f"max |pihat' delta - k| over {checked} steps"),
        _upper("xidot-n-identity", xid, 1e-9, "max |Y_n pihat - Kn s_n| / (1 + |pihat|) per step"),
        _upper("eta-activation", viol, 0, f"steps with eta != 0 outside det <= eps and trace < 0 "
                                          f"({eta_steps} eta-active steps)"),
    ]


LYAP_HORIZON = 20.0


def prop_lyapunov_monotonicity(suite):
    """V(t+h) - V(t) <= 1e-6 max(V(0), 1) stepwise (Lemma 1 and eta = 0 steps of the collocated law)."""
    if suite.config is not None:
        cases = [("custom", None)]
    else:
        cases = [("lemma1_baseline", None), ("scenario_sim", "theorem1"), ("scenario_sim", None)]
    worst_ratio = -math.inf
    details = []
    for name, law in cases:
        cfg = _with(suite.scenario(name), law)
        if cfg.controller.law == "passive":
            continue
        run = suite.run(name, law=law, duration=min(LYAP_HORIZON, cfg.integration.duration), decimate=1)
        rep = monitors.lyapunov_monotonicity(run.trace, cfg.reference.switch_times())
        ratio = rep.max_increase / rep.tolerance
        worst_ratio = max(worst_ratio, ratio)
        details.append(f"{name}/{cfg.controller.law}: max dV {rep.max_increase:.2e} "
                       f"(tol {rep.tolerance:.1e}, {rep.steps_skipped} skipped)")
        if run.error is not None:
            worst_ratio = math.inf
            details.append(f"{name}: run failed: {run.error}")
    return _upper("lyapunov-monotonicity", worst_ratio, 1.0, "max dV / tol; " + "; ".join(details))


def prop_lyapunov_rate_sign(suite, samples=10_000):
    """lyapunov_rate <= 0 at random states (eta = 0)."""
    model = TwoLinkArm()
    rng = suite.rng(5)
    worst = -math.inf
    for name in ("scenario_sim", "lemma1_baseline"):
        cfg = suite.scenario(name)
        k = cfg.model.k
        gains, ref, pi = cfg.controller.gains, cfg.reference, cfg.model.params
        for _ in range(samples // 2):
            st, cs = _random_controller_case(rng, k)
            t = rng.uniform(0, cfg.integration.duration)
            rate = monitors.lyapunov_rate(model, t, st, cs, gains, ref, pi)
            worst = max(worst, rate)
    return _upper("lyapunov-rate-sign", worst, 0.0, f"max lyapunov_rate over {samples} random states")


def prop_lyapunov_rate_consistency(suite, horizon=2.0, step=1e-4):
    """Closed-form dV/dt against a central difference of V along eta = 0 trajectories."""
    if suite.config is not None:
        cases = [("custom", "theorem1" if suite.config.model.k else None)]
    else:
        cases = [("scenario_sim", "theorem1"), ("lemma1_baseline", None)]
    worst = 0.0
    details = []
    for name, law in cases:
        if _with(suite.scenario(name), law).controller.law == "passive":
            continue
        run = suite.run(name, law=law, duration=horizon, decimate=1, step=step)
        if run.error is not None:
            return PropertyResult("lyapunov-rate-consistency", False, math.inf, 1e-4, f"{name}: {run.error}")
        V = np.array([r.V for r in run.trace])
        Vd = np.array([r.Vdot for r in run.trace])
        fd = (V[2:] - V[:-2]) / (2.0 * step)
        t = np.array([r.t for r in run.trace])[1:-1]
        keep = np.ones(fd.size, dtype=bool)
        for ts in run.cfg.reference.switch_times():
            keep &= np.abs(t - ts) > 1.5 * step
        rel = float(np.max(np.abs(fd - Vd[1:-1])[keep]) / np.max(np.abs(Vd)))
        worst = max(worst, rel)
        details.append(f"{name}: {rel:.2e}")
    return _upper("lyapunov-rate-consistency", worst, 1e-4,
                  f"max |dV/dt fd - Vdot| / max |Vdot|, h = {step:g}; " + "; ".join(details))


def prop_kbar_psd(suite, samples=100):
    rng = suite.rng(6)
    worst = math.inf
    for _ in range(samples):
        K = rng.uniform(1e-3, 10.0, rng.integers(1, 4))
        worst = min(worst, float(np.linalg.eigvalsh(monitors.kbar_matrix(K))[0]))
        if not monitors.kbar_psd_check(K):
            return PropertyResult("kbar-psd", False, worst, -1e-12, "kbar_psd_check rejected a positive K")
    return _lower("kbar-psd", worst, -1e-12, f"min eigenvalue of [[K, K], [K, K]] over {samples} random K")


def prop_determinant_floor(suite):
    name = "custom" if suite.config is not None else "experiment_ref2"
    cfg = suite.scenario(name)
    eps = cfg.controller.gains.epsilon
    if cfg.controller.law != "theorem1-desingularized":
        return PropertyResult("determinant-floor", True, math.nan, math.nan, "skipped: law is not desingularized")
    run = suite.run(name)
    s = run.steps
    floor = eps - 0.02 * eps
    if run.error is not None:
        return PropertyResult("determinant-floor", False, s.min_det, floor, f"run failed: {run.error}")
    if not s.det0 > eps:
        if suite.config is not None:
            return PropertyResult("determinant-floor", True, s.min_det, floor,
                                  f"skipped: det(Mn_hat)(0) = {s.det0:.4g} <= epsilon")
        return PropertyResult("determinant-floor", False, s.det0, eps, "premise det(Mn_hat)(0) > epsilon fails")
    res = _lower("determinant-floor", s.min_det, floor,
                 f"{name}: min det {s.min_det:.5g} at t = {s.t_min_det:.4g} s, det(0) = {s.det0:.4g}, "
                 f"{run.wall:.1f} s wall")
    return res


def prop_adversarial(suite, window=5.0):
    """Plain law drops below epsilon within ``window`` seconds, the desingularized law does not."""
    cfg = suite.scenario("adversarial_desingularization")
    eps = cfg.controller.gains.epsilon
    plain = suite.run("adversarial_desingularization", law="theorem1", duration=window)
    desing = suite.run("adversarial_desingularization", law="theorem1-desingularized")
    floor = eps - 0.02 * eps
    ok = (plain.steps.min_det < eps and desing.error is None and desing.steps.min_det >= floor
          and desing.steps.det0 > eps)
    return PropertyResult("determinant-floor-adversarial", ok, desing.steps.min_det, floor,
                          f"plain law min det {plain.steps.min_det:.4g} by t = {window:g} s, "
                          f"desingularized {desing.steps.min_det:.4g}")




def prop_simulation_reproduction(suite):
    run = suite.run("scenario_sim")
    s = run.steps
    e_max = max(s.window_max_e) / DEG
    checks = {
        "|e| < 1 deg on [36,46] and [76,90]": e_max < 1.0,
        "max |tau_bar| < 50": s.finite and s.max_tau < 50.0,
        "|qdot_n| < 10": s.max_qdot_n < 10.0,
        "completed": run.error is None,
    }
    failed = [k for k, v in checks.items() if not v]
    detail = (f"window max |e| {s.window_max_e[0] / DEG:.3g} / {s.window_max_e[1] / DEG:.3g} deg, "
              f"max |tau| {s.max_tau:.3g} N m, max |qdot_n| {s.max_qdot_n:.3g} rad/s, {run.wall:.1f} s wall")
    if failed:
        detail += "; failed: " + ", ".join(failed)
    return PropertyResult("simulation-reproduction", not failed, e_max, 1.0, detail)


CONVERGED_SCENARIOS = ("scenario_sim", "experiment_ref1", "lemma1_baseline")


def prop_convergence(suite):
    names = ("custom",) if suite.config is not None else CONVERGED_SCENARIOS
    worst = 0.0
    details = []
    for name in names:
        run = suite.run(name)
        if run.error is not None:
            return PropertyResult("convergence", False, math.inf, 0.1, f"{name}: {run.error}")
        ratio = monitors.convergence_ratio(run.trace, 0.1)
        worst = max(worst, ratio)
        details.append(f"{name} {ratio:.3g}")
    return _upper("convergence", worst, 0.1, "RMS |e| last 10% / first 10%: " + ", ".join(details))


def prop_lemma1_baseline(suite):
    after = BASELINE_AFTER
    run = suite.run("lemma1_baseline")
    e = run.steps.window_max_e[0] / DEG
    ok = run.error is None and e < 0.5
    return PropertyResult("lemma1-baseline", ok, e, 0.5, f"max |e| for t > {after:g} s in deg")


PROPERTIES = {
    "regressor-identity": prop_regressor_identity,
    "skew-symmetry": prop_skew_symmetry,
    "model-identities": prop_model_identities,
    "integrator-order": prop_integrator_order,
    "energy-conservation": prop_energy_conservation,
    "controller-identities": prop_controller_identities,
    "kbar-psd": prop_kbar_psd,
    "lyapunov-rate-sign": prop_lyapunov_rate_sign,
    "lyapunov-rate-consistency": prop_lyapunov_rate_consistency,
    "lyapunov-monotonicity": prop_lyapunov_monotonicity,
    "step-identities": prop_step_identities,
    "simulation-reproduction": prop_simulation_reproduction,
    "convergence": prop_convergence,
    "lemma1-baseline": prop_lemma1_baseline,
    "determinant-floor": prop_determinant_floor,
    "determinant-floor-adversarial": prop_adversarial,
}

# properties that need the bundled scenarios rather than a user config
BUNDLED_ONLY = {"energy-conservation", "simulation-reproduction", "lemma1-baseline",
                "determinant-floor-adversarial"}

# the suite properties that constrain the control laws directly
LAW_PROPERTIES = ("lyapunov-rate-consistency", "lyapunov-monotonicity",
                  "simulation-reproduction", "determinant-floor")


def select(filter_=None, config=None):
    names = list(PROPERTIES)
    if config is not None:
        names = [n for n in names if n not in BUNDLED_ONLY]
    if filter_:
        wanted = [f.strip() for f in filter_.split(",") if f.strip()]
        names = [n for n in names if any(w in n for w in wanted)]
    return names


def run_suite(names=None, config=None, seed=0, stop_on_failure=False, stream=None):
    """Run properties by name; returns the flat list of results."""
    suite = Suite(config, seed)
    names = select(config=config) if names is None else names
    results = []
    t_start = time.perf_counter()
    for name in names:
        t0 = time.perf_counter()
        out = PROPERTIES[name](suite)
        out = out if isinstance(out, list) else [out]
        for r in out:
            r.runtime = time.perf_counter() - t0
            results.append(r)
            if stream is not None:
                print(r.line(), file=stream, flush=True)
        if stop_on_failure and not all(r.passed for r in out):
            break
    total = time.perf_counter() - t_start
    if total > SOFT_BUDGET_S:
        msg = f"suite took {total:.0f} s, above the {SOFT_BUDGET_S:.0f} s budget"
        log.warning(msg)
        if stream is not None:
            print(f"WARNING: {msg}", file=stream)
    return results


# -- mutation harness -----------------------------------------------------------------

def _flip_eta(orig):
    def gain(trace_term, det_mn, delta, gains):
        return -orig(trace_term, det_mn, delta, gains)
    return gain


def _drop_lambda2(orig):
    def xidot(e, edot, rddot, gains):
        return rddot - gains.Lambda1 * edot
    return xidot


def _drop_kn(orig):
    def xidot(Y0, s_n, pihat, gains, Mn):
        return smallmat.solve(Mn, -(Y0[:s_n.size] @ pihat))
    return xidot


MUTATIONS = {
    "flip-eta-sign": ("desingularizing_gain", _flip_eta),
    "drop-lambda2-e": ("collocated_xidot", _drop_lambda2),
    "drop-kn-sn": ("noncollocated_xidot", _drop_kn),
}


@contextlib.contextmanager
def mutation(name):
    """Temporarily replace one helper of the control laws with a buggy version."""
    attr, make = MUTATIONS[name]
    orig = getattr(adaptive, attr)
    setattr(adaptive, attr, make(orig))
    try:
        yield
    finally:
        setattr(adaptive, attr, orig)


def mutation_check(name, stream=None):
    """Run the law properties under a mutation until one fails.

    Returns ``(caught, results)``.
    """
    with mutation(name):
        results = run_suite(LAW_PROPERTIES, stop_on_failure=True, stream=stream)
    return any(not r.passed for r in results), results
