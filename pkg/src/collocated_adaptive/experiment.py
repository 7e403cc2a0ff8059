"""Bundled scenarios and the simulate-and-write-trace runner."""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import trace as tracefile
from .config import parse_config
from .plant import SimulationError, simulate

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SIM_FAILED = 1
EXIT_USAGE = 2


def scenario_dir():
    return resources.files(__package__) / "scenarios"


def list_scenarios():
    """Names of the bundled scenarios, sorted."""
    return sorted(p.name[:-4] for p in scenario_dir().iterdir() if p.name.endswith(".cfg"))


def scenario_path(name):
    """Path of a bundled scenario given its name (with or without ``.cfg``)."""
    name = name[:-4] if name.endswith(".cfg") else name
    path = scenario_dir() / f"{name}.cfg"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled scenario {name!r}; available: {', '.join(list_scenarios())}")
    return Path(str(path))


def load_scenario(name_or_path):
    """Parse a bundled scenario by name, or any config file by path."""
    p = Path(name_or_path)
    if p.suffix == ".cfg" and p.exists():
        return parse_config(p)
    return parse_config(scenario_path(str(name_or_path)))


@dataclass
class RunSummary:
    name: str
    duration: float
    final_abs_e: float
    max_abs_tau: float
    min_det: float
    eta_active_time: float
    max_abs_qdot_n: float
    error: Exception | None

    @property
    def ok(self):
        return self.error is None

    def lines(self):
        deg = np.rad2deg(self.final_abs_e)
        if not self.ok and np.isnan(self.final_abs_e):
            return [f"scenario          {self.name}", f"status            FAILED: {self.error}"]
        out = [
            f"scenario          {self.name}",
            f"simulated         {self.duration:.6g} s",
            f"final |e|         {self.final_abs_e:.6g} rad ({deg:.4g} deg)",
            f"max |tau_bar|     {self.max_abs_tau:.6g} N m",
            f"min det(Mn_hat)   {self.min_det:.6g}",
            f"eta active        {self.eta_active_time:.6g} s",
        ]
        if not np.isnan(self.max_abs_qdot_n):
            out.append(f"max |qdot_n|      {self.max_abs_qdot_n:.6g} rad/s")
        out.append("status            ok" if self.ok else f"status            FAILED: {self.error}")
        return out


def summarize(name, records, k, error=None):
    if not records:
        nan = float("nan")
        return RunSummary(name, 0.0, nan, nan, nan, 0.0, nan, error)
    t = np.array([r.t for r in records])
    e = np.array([np.linalg.norm(r.e) for r in records])
    tau = np.array([np.max(np.abs(r.tau_bar)) if r.tau_bar.size else 0.0 for r in records])
    det = np.array([r.det_Mn_hat for r in records])
    eta = np.array([r.eta for r in records])
    active = float(np.sum(np.diff(t)[eta[:-1] != 0.0])) if t.size > 1 else 0.0
    qn = np.array([np.max(np.abs(r.qdot[:k])) for r in records]) if k else np.array([np.nan])
    return RunSummary(
        name=name,
        duration=float(t[-1] - t[0]),
        final_abs_e=float(e[-1]),
        max_abs_tau=float(np.max(tau)),
        min_det=float(np.nanmin(det)) if np.any(np.isfinite(det)) else float("nan"),
        eta_active_time=active,
        max_abs_qdot_n=float(np.max(qn)),
        error=error,
    )


@dataclass
class RunResult:
    config: object
    records: list
    summary: RunSummary
    trace_path: Path | None

    @property
    def exit_code(self):
        return EXIT_OK if self.summary.ok else EXIT_SIM_FAILED


def simulate_config(cfg, decimate=None, duration=None, with_monitors=True):
    """Run a parsed scenario; returns the :class:`~collocated_adaptive.plant.SimResult`."""
    model = cfg.build_model()
    controller = cfg.build_controller(model)
    return simulate(
        model, controller, cfg.model.params, cfg.initial_state(),
        cfg.integration.duration if duration is None else duration,
        h=cfg.integration.step,
        decimate=cfg.output.decimate if decimate is None else decimate,
        with_monitors=with_monitors,
    )


def trace_metadata(cfg):
    return {
        "scenario": cfg.name,
        "config_sha256": cfg.sha256,
        "seed": cfg.integration.seed,
        "law": cfg.controller.law,
        "step": repr(cfg.integration.step),
        "decimate": cfg.output.decimate,
    }


def run(cfg, out=None, decimate=None, stream=None):
    """Simulate ``cfg``, write its CSV trace and print the summary.

    ``out`` overrides the config's trace path; a relative config path is
    taken relative to the working directory.
    """
    stream = stream or sys.stdout
    if decimate is not None and decimate < 1:
        raise ValueError("decimate must be >= 1")
    result = simulate_config(cfg, decimate=decimate)
    error = result.error
    path = Path(out) if out is not None else (Path(cfg.output.trace) if cfg.output.trace else None)
    if path is not None:
        meta = trace_metadata(cfg)
        if decimate is not None:
            meta["decimate"] = decimate
        with open(path, "w", newline="") as fh:
            tracefile.write_trace(fh, result.trace, meta, error=_reason(error))
    summary = summarize(cfg.name, result.trace, cfg.model.k, error)
    for line in summary.lines():
        print(line, file=stream)
    if path is not None:
        print(f"trace             {path}", file=stream)
    return RunResult(cfg, result.trace, summary, path)


def _reason(error):
    if error is None:
        return None
    if isinstance(error, SimulationError):
        return f"{type(error.cause).__name__}: {error}"
    return str(error)
