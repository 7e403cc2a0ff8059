import io
import math

import numpy as np

from collocated_adaptive import adaptive, verify
from collocated_adaptive.experiment import load_scenario


def test_property_result_line():
    r = verify._upper("x", 0.5, 1.0, "detail")
    assert r.passed and r.margin == 0.5
    assert r.line().startswith("PASS  x")
    assert verify._lower("y", 0.5, 1.0).line().startswith("FAIL  y")
    assert set(r.as_dict()) >= {"name", "passed", "measured", "tolerance"}


def test_select():
    assert verify.select() == list(verify.PROPERTIES)
    assert verify.select("lyapunov") == ["lyapunov-rate-sign", "lyapunov-rate-consistency", "lyapunov-monotonicity"]
    cfg = load_scenario("scenario_sim")
    assert not set(verify.select(config=cfg)) & verify.BUNDLED_ONLY


def test_quick_properties_pass():
    stream = io.StringIO()
    results = verify.run_suite(["model-identities", "controller-identities", "kbar-psd"], stream=stream)
    assert all(r.passed for r in results), stream.getvalue()
    assert len(stream.getvalue().splitlines()) == 3


def test_suite_caches_runs():
    suite = verify.Suite()
    a = suite.run("scenario_sim", duration=0.05)
    assert suite.run("scenario_sim", duration=0.05) is a
    assert a.steps.delta_checked == 51
    assert a.steps.det0 == 1.5 + 2 * 0.01


def test_step_monitor_excludes_switch_instant():
    mon = verify.StepMonitor(None, None, 0, windows=((0.0, 2.0),), switch_times=(1.0,), h=1e-3)
    assert mon._in_window(0.5, 0.0, 2.0)
    assert not mon._in_window(1.0, 0.0, 2.0)
    assert mon._in_window(1.001, 0.0, 2.0)


def test_mutation_context_restores():
    for name, (attr, _) in verify.MUTATIONS.items():
        orig = getattr(adaptive, attr)
        with verify.mutation(name):
            assert getattr(adaptive, attr) is not orig
        assert getattr(adaptive, attr) is orig


def test_drop_kn_mutation_breaks_identity():
    cfg = load_scenario("scenario_sim")
    model = cfg.build_model()
    init = cfg.initial_state()
    ctrl = cfg.build_controller(model)
    st = init.plant.__class__(np.array([0.1, -0.5]), np.array([0.4, 0.2]), 1)
    ok = ctrl(0.0, st, init.controller)
    with verify.mutation("drop-kn-sn"):
        bad = ctrl(0.0, st, init.controller)
    assert not np.allclose(ok.xidot[:1], bad.xidot[:1])


def test_integrator_order_value():
    assert 3.9 <= verify.integrator_order() < 4.5
    assert math.isfinite(verify.integrator_order(0.2))
