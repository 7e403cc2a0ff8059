"""Scenario configuration files.

Configs are YAML documents with five required blocks (``model``,
``controller``, ``reference``, ``integration``, ``output``) plus optional
``name``, ``description`` and ``initial``. Angle-valued keys carry their
unit in the key name: ``q0_deg`` or ``q0_rad`` (a bare ``q0`` is radians).
Everything is converted to SI at parse time.

Validation errors name the offending key and the line it sits on.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .adaptive import Controller, ControllerState, Gains
from .model import GRAVITY, JointState, TwoLinkArm, TwoLinkGeometry
from .plant import SimState
from .reference import ConstantSegment, PiecewiseReference, SinusoidSegment

MODEL_TYPES = {"two-link": TwoLinkArm}
REFERENCE_TYPES = ("constant-piecewise", "sinusoid-piecewise")
DEFAULT_DECIMATE = 10


class ConfigError(ValueError):
    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where = f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


# -- YAML with line numbers ---------------------------------------------------

class _Node:
    """Plain data plus the 1-based line of every key it contains."""

    __slots__ = ("value", "line")

    def __init__(self, value, line):
        self.value = value
        self.line = line


def _convert(node):
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            out[str(k.value)] = _Node(_convert(v), k.start_mark.line + 1)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_convert(v) for v in node.value]
    return yaml.constructor.SafeConstructor().construct_object(node)


class _Block:
    """Accessor over a mapping that reports missing or bad keys with line numbers."""

    def __init__(self, data, line, path, source):
        self.data = data
        self.line = line
        self.path = path
        self.source = source

    def _name(self, key):
        return f"{self.path}.{key}" if self.path else key

    def error(self, key, message):
        node = self.data.get(key)
        line = node.line if node is not None else self.line
        raise ConfigError(f"{self._name(key)}: {message}", line, self.source)

    def has(self, key):
        return key in self.data

    def raw(self, key, default=...):
        if key not in self.data:
            if default is ...:
                raise ConfigError(f"missing required key '{self._name(key)}'", self.line, self.source)
            return default
        return self.data[key].value

    def block(self, key, required=True):
        if key not in self.data:
            if required:
                self.raw(key)
            return _Block({}, self.line, self._name(key), self.source)
        value = self.data[key].value
        if not isinstance(value, dict):
            self.error(key, "expected a block of key: value pairs")
        return _Block(value, self.data[key].line, self._name(key), self.source)

    def blocks(self, key):
        value = self.raw(key)
        if not isinstance(value, list) or not value:
            self.error(key, "expected a non-empty list")
        out = []
        for i, item in enumerate(value):
            if not isinstance(item, dict):
                self.error(key, f"entry {i} must be a block")
            line = min((n.line for n in item.values()), default=self.data[key].line)
            out.append(_Block(item, line, f"{self._name(key)}[{i}]", self.source))
        return out

    def number(self, key, default=..., positive=False, nonneg=False):
        value = self.raw(key, default)
        if value is default and default is not ...:
            return value
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            self.error(key, f"expected a finite number, got {value!r}")
        if positive and not value > 0:
            self.error(key, f"must be positive, got {value}")
        if nonneg and value < 0:
            self.error(key, f"must be non-negative, got {value}")
        return float(value)

    def integer(self, key, default=..., minimum=None):
        value = self.raw(key, default)
        if value is default and default is not ...:
            return value
        if isinstance(value, bool) or not isinstance(value, int):
            self.error(key, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            self.error(key, f"must be >= {minimum}, got {value}")
        return value

    def vector(self, key, default=..., size=None, positive=False):
        value = self.raw(key, default)
        if value is default and default is not ...:
            return value
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            self.error(key, f"expected a list of numbers, got {value!r}")
        arr = np.array(value, dtype=float)
        if not np.all(np.isfinite(arr)):
            self.error(key, "entries must be finite")
        if size is not None and arr.size != size:
            self.error(key, f"expected {size} entries, got {arr.size}")
        if positive and np.any(arr <= 0):
            self.error(key, f"entries must be positive, got {arr.tolist()}")
        return arr

    def angle(self, key, default=..., size=None):
        """Vector under ``key_deg`` (converted) or ``key_rad`` / ``key`` (radians)."""
        present = [k for k in (f"{key}_deg", f"{key}_rad", key) if k in self.data]
        if len(present) > 1:
            self.error(present[1], f"give only one of {', '.join(present)}")
        if not present:
            if default is ...:
                raise ConfigError(f"missing required key '{self._name(key + '_deg')}' "
                                  f"(or '{key}_rad')", self.line, self.source)
            return default
        k = present[0]
        arr = self.vector(k, size=size)
        return np.deg2rad(arr) if k.endswith("_deg") else arr

    def choice(self, key, options, default=...):
        value = self.raw(key, default)
        if value not in options:
            self.error(key, f"expected one of {list(options)}, got {value!r}")
        return value

    def check_known(self, known):
        for key in self.data:
            base = key[:-4] if key.endswith(("_deg", "_rad")) else key
            if key not in known and base not in known:
                self.error(key, "unknown key")


def _load(text, source):
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed config: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from None
    if node is None:
        return _Block({}, 1, "", source)
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError("top level must be a block of key: value pairs", node.start_mark.line + 1, source)
    return _Block(_convert(node), node.start_mark.line + 1, "", source)


# -- validated config ----------------------------------------------------------

@dataclass(frozen=True)
class ModelConfig:
    type: str
    k: int
    params: np.ndarray
    geometry: TwoLinkGeometry | None = None
    gravity: bool = True

    @property
    def n(self):
        return MODEL_TYPES[self.type].n

    @property
    def p(self):
        return self.params.size


@dataclass(frozen=True)
class ControllerConfig:
    law: str
    gains: Gains
    pihat0: np.ndarray
    pihat0_published: np.ndarray
    xi0: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True)
class IntegrationConfig:
    duration: float
    step: float = 1e-3
    seed: int = 0


@dataclass(frozen=True)
class OutputConfig:
    trace: str | None = None
    decimate: int = DEFAULT_DECIMATE


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    description: str
    model: ModelConfig
    controller: ControllerConfig
    reference: PiecewiseReference
    reference_type: str
    q0: np.ndarray
    qdot0: np.ndarray
    integration: IntegrationConfig
    output: OutputConfig
    sha256: str = ""
    source: str | None = None
    extra: dict = field(default_factory=dict)

    # builders for the simulation objects
    def build_model(self):
        return MODEL_TYPES[self.model.type]()

    def build_controller(self, model=None):
        model = model or self.build_model()
        return Controller(model, self.controller.law, self.controller.gains, self.reference, self.model.k)

    def initial_state(self):
        c = self.controller
        plant = JointState(self.q0.copy(), self.qdot0.copy(), self.model.k)
        # y := int e - beta, so y(0) = -beta
        ctrl = ControllerState(c.xi0.copy(), c.pihat0.copy(), -c.beta.copy())
        return SimState(0.0, plant, ctrl)


def _parse_model(blk):
    blk.check_known({"type", "k", "params", "geometry", "friction", "gravity"})
    mtype = blk.choice("type", tuple(MODEL_TYPES))
    cls = MODEL_TYPES[mtype]
    k = blk.integer("k", minimum=0)
    if k >= cls.n:
        blk.error("k", f"must be < n = {cls.n}")
    gravity = blk.raw("gravity", True)
    if not isinstance(gravity, bool):
        blk.error("gravity", "expected true or false")
    geometry = None
    if blk.has("geometry"):
        g = blk.block("geometry")
        g.check_known({"m1", "m2", "l1", "lc1", "lc2", "I1", "I2"})
        fv = blk.vector("friction", default=np.zeros(2), size=2)
        if np.any(fv < 0):
            blk.error("friction", "friction coefficients must be non-negative")
        geometry = TwoLinkGeometry(
            **{name: g.number(name, positive=name.startswith(("m", "l"))) for name in
               ("m1", "m2", "l1", "lc1", "lc2")},
            I1=g.number("I1", nonneg=True), I2=g.number("I2", nonneg=True),
            fv1=float(fv[0]), fv2=float(fv[1]), g0=GRAVITY if gravity else 0.0,
        )
    if blk.has("params"):
        params = blk.vector("params", size=cls.p)
        if geometry is not None and not np.allclose(params, geometry.base_params(), rtol=1e-9, atol=1e-12):
            blk.error("params", "disagrees with the parameters implied by geometry")
    elif geometry is not None:
        params = geometry.base_params()
    else:
        raise ConfigError(f"missing required key '{blk._name('params')}' (or a geometry block)", blk.line, blk.source)
    return ModelConfig(mtype, k, params, geometry, gravity)


def _parse_gains(blk, k, m, p):
    blk.check_known({"K", "Kn", "Lambda1", "Lambda2", "Gamma", "epsilon"})
    K = blk.vector("K", size=m, positive=True)
    L1 = blk.vector("Lambda1", size=m, positive=True)
    L2 = blk.vector("Lambda2", size=m, positive=True)
    Kn = blk.vector("Kn", size=k, positive=True) if k else np.zeros(0)
    if not k and blk.has("Kn"):
        blk.error("Kn", "given for a fully actuated model (k = 0)")
    gamma_raw = blk.raw("Gamma")
    if isinstance(gamma_raw, list) and gamma_raw and isinstance(gamma_raw[0], list):
        try:
            G = np.array(gamma_raw, dtype=float)
        except (TypeError, ValueError):
            blk.error("Gamma", "expected a p x p matrix of numbers")
        if G.shape != (p, p):
            blk.error("Gamma", f"expected a {p} x {p} matrix, got shape {G.shape}")
    else:
        # a scalar or a diagonal
        g = blk.vector("Gamma", positive=True)
        if g.size == 1:
            G = float(g[0]) * np.eye(p)
        elif g.size == p:
            G = np.diag(g)
        else:
            blk.error("Gamma", f"expected a scalar, {p} diagonal entries or a {p} x {p} matrix")
    if not np.allclose(G, G.T) or np.linalg.eigvalsh(G)[0] <= 0:
        blk.error("Gamma", "must be symmetric positive definite")
    eps = blk.number("epsilon", default=1.0, positive=True)
    return Gains(K=K, Kn=Kn, Lambda1=L1, Lambda2=L2, Gamma=G, epsilon=eps)


def _parse_controller(blk, model):
    blk.check_known({"law", "gains", "pihat0", "pihat0_select", "xi0", "beta"})
    n, k, p = model.n, model.k, model.p
    m = n - k
    law = blk.choice("law", Controller.LAWS)
    if law == "lemma1" and k != 0:
        blk.error("law", "lemma1 needs a fully actuated model (k = 0)")
    if law.startswith("theorem1") and k < 1:
        blk.error("law", f"{law} needs k >= 1")
    gains = _parse_gains(blk.block("gains"), k, m, p)
    published = blk.vector("pihat0")
    if blk.has("pihat0_select"):
        sel = blk.raw("pihat0_select")
        if (not isinstance(sel, list) or len(sel) != p
                or not all(isinstance(i, int) and 0 <= i < published.size for i in sel)):
            blk.error("pihat0_select", f"expected {p} indices into pihat0 (0..{published.size - 1})")
        pihat0 = published[sel]
    elif published.size != p:
        blk.error("pihat0", f"expected {p} entries (model p), got {published.size}; "
                            "add pihat0_select to map a longer vector")
    else:
        pihat0 = published.copy()
    xi0 = blk.vector("xi0", default=np.zeros(n), size=n)
    beta = blk.angle("beta", default=np.zeros(m), size=m)
    return ControllerConfig(law, gains, pihat0, published, xi0, beta)


def _parse_reference(blk, m):
    blk.check_known({"type", "segments"})
    rtype = blk.choice("type", REFERENCE_TYPES)
    segments = []
    for seg in blk.blocks("segments"):
        start = seg.number("start", nonneg=True)
        if segments and start <= segments[-1].start:
            seg.error("start", f"segment start times must be strictly increasing "
                               f"({start} after {segments[-1].start})")
        if rtype == "constant-piecewise":
            seg.check_known({"start", "value"})
            segments.append(ConstantSegment(start, _fill(seg, "value", seg.angle("value"), m)))
        else:
            seg.check_known({"start", "offset", "amplitude", "frequency", "phase"})
            segments.append(SinusoidSegment(
                start,
                _fill(seg, "offset", seg.angle("offset"), m),
                _fill(seg, "amplitude", seg.angle("amplitude"), m),
                _fill(seg, "frequency", seg.vector("frequency"), m),
                _fill(seg, "phase", seg.angle("phase", default=np.zeros(m)), m),
            ))
    if segments[0].start != 0.0:
        blk.error("segments", "the first segment must start at t = 0")
    return rtype, PiecewiseReference(segments, m)


def _fill(blk, key, v, m):
    if v.size == 1:
        return np.full(m, float(v[0]))
    if v.size != m:
        blk.error(key, f"expected 1 or {m} entries, got {v.size}")
    return v


def parse_config_text(text, source=None):
    """Parse and validate a config given as a string."""
    root = _load(text, source)
    root.check_known({"name", "description", "model", "controller", "reference",
                      "initial", "integration", "output"})
    # required blocks are checked in this order so an empty file names "model"
    model = _parse_model(root.block("model"))
    controller = _parse_controller(root.block("controller"), model)
    m = model.n - model.k
    rtype, reference = _parse_reference(root.block("reference"), m)
    init = root.block("initial", required=False)
    init.check_known({"q0", "qdot0"})
    q0 = init.angle("q0", default=np.zeros(model.n), size=model.n)
    qdot0 = init.vector("qdot0", default=np.zeros(model.n), size=model.n)
    integ = root.block("integration")
    integ.check_known({"duration", "step", "seed"})
    duration = integ.number("duration", nonneg=True)
    step = integ.number("step", default=1e-3, positive=True)
    seed = integ.integer("seed", default=0, minimum=0)
    out = root.block("output")
    out.check_known({"trace", "decimate"})
    trace = out.raw("trace", None)
    if trace is not None and not isinstance(trace, str):
        out.error("trace", "expected a file path")
    decimate = out.integer("decimate", default=DEFAULT_DECIMATE, minimum=1)
    name = root.raw("name", None) or (Path(source).stem if source else "scenario")
    return ScenarioConfig(
        name=str(name),
        description=str(root.raw("description", "")).strip(),
        model=model,
        controller=controller,
        reference=reference,
        reference_type=rtype,
        q0=q0,
        qdot0=qdot0,
        integration=IntegrationConfig(duration, step, seed),
        output=OutputConfig(trace, decimate),
        sha256=hashlib.sha256(text.encode()).hexdigest(),
        source=str(source) if source is not None else None,
    )


def parse_config(path):
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return parse_config_text(text, source=str(path))
