"""Environment states, components, scenarios, and trace generation.

A trace is produced by alternating a scenario's simulator step with a
deterministic component step::

    v0 = M(e0, None)
    e_i, s_i = sim(e_{i-1}, v_{i-1}, s_{i-1})   until terminal or max length
    v_i = M(e_i, v_{i-1})

All randomness comes from counter-based substreams keyed by (seed, stream,
scene index), so a scene and its trace do not depend on which worker
generated them or in what order.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .lang.render import format_number
from .lang.semantics import to_rational


# -- randomness --------------------------------------------------------------

SCENE_PURPOSE = 0
DYNAMICS_PURPOSE = 1


def stream_code(stream: str) -> int:
    return int.from_bytes(hashlib.sha256(stream.encode()).digest()[:4], "big")


def substream(seed: int, stream: str, index: int, purpose: int) -> np.random.Generator:
    """Independent generator for one (seed, stream, scene index, purpose) cell."""
    ss = np.random.SeedSequence([int(seed), stream_code(stream), int(index), int(purpose)])
    return np.random.Generator(np.random.Philox(ss))


# -- states and values -------------------------------------------------------

@dataclass(frozen=True)
class EnvState:
    values: Mapping[str, Fraction]
    terminal: bool = False

    def __getitem__(self, path):
        return self.values[path]


TERMINAL = EnvState({}, terminal=True)


class _Rejected:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "REJECTED"

    def __reduce__(self):
        return (_Rejected, ())


REJECTED = _Rejected()


@dataclass(frozen=True)
class ComponentInterface:
    inputs: frozenset = frozenset()
    outputs: frozenset = frozenset()
    sensors: frozenset = frozenset()
    actions: frozenset = frozenset()
    internal: frozenset = frozenset()
    produced: frozenset = field(init=False, compare=False, repr=False)
    ports: frozenset = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        groups = {}
        for name in ("inputs", "outputs", "sensors", "actions", "internal"):
            ports = frozenset(getattr(self, name))
            object.__setattr__(self, name, ports)
            groups[name] = ports
        seen = set()
        for name, ports in groups.items():
            clash = seen & ports
            if clash:
                raise ValueError(f"port(s) {sorted(clash)} declared in more than one group")
            seen |= ports
        # derived sets, cached because steps consult them constantly
        object.__setattr__(self, "produced", self.outputs | self.sensors | self.actions | self.internal)
        object.__setattr__(self, "ports", self.inputs | self.produced)


class ComponentError(RuntimeError):
    pass


class Component:
    """A leaf component with a deterministic step function.

    ``step_fn(env, prev, inputs)`` receives the current environment state,
    the component's previous value (None on the first step) and a mapping of
    its input ports, and returns values for every produced port.
    """

    def __init__(self, name: str, interface: ComponentInterface, step_fn: Callable):
        self.name = name
        self.interface = interface
        self.step_fn = step_fn

    @property
    def ports(self):
        return self.interface.ports

    def step(self, env: EnvState, prev: Optional[Mapping], inputs: Mapping | None = None) -> dict:
        inputs = dict(inputs or {})
        missing = self.interface.inputs - inputs.keys()
        if missing:
            raise ComponentError(f"{self.name}: unconnected input(s) {sorted(missing)}")
        out = self.step_fn(env, prev, inputs)
        produced = self.interface.produced
        if out.keys() != produced:
            raise ComponentError(
                f"{self.name}: step produced {sorted(out)} but interface declares {sorted(produced)}")
        value = {p: inputs[p] for p in self.interface.inputs}
        value.update(out)
        return value

    def identity(self) -> str:
        return self.name

    def __repr__(self):
        return f"Component({self.name!r})"


class CompositeComponent(Component):
    """Children evaluated in wiring order; the value is the union of child values.

    An input port named like a sibling's produced port is connected to it
    implicitly. ``wiring`` adds explicit ``(source, target)`` connections
    between differently named ports.
    """

    def __init__(self, name: str, children: Sequence[Component],
                 wiring: Iterable[tuple] = (), interface: ComponentInterface | None = None):
        self.name = name
        self.children = tuple(children)
        self.wiring = tuple(tuple(w) for w in wiring)
        names = [c.name for c in self.children]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate child names in {name}: {names}")
        owner = {}
        for child in self.children:
            for p in child.interface.produced:
                if p in owner:
                    raise ValueError(f"port {p!r} produced by both {owner[p].name} and {child.name}")
                owner[p] = child
        consumers = {}
        for child in self.children:
            for p in child.interface.inputs:
                consumers.setdefault(p, []).append(child)
        sources = {}
        for src, dst in self.wiring:
            if src not in owner:
                raise ValueError(f"wiring source {src!r} is not an output of any child")
            if dst not in consumers:
                raise ValueError(f"wiring target {dst!r} is not an input of any child")
            if dst in sources:
                raise ValueError(f"input {dst!r} is wired twice")
            if dst in owner:
                raise ValueError(f"wiring target {dst!r} clashes with a produced port")
            sources[dst] = src
        for p in consumers:
            if p in owner and p not in sources:
                sources[p] = p
        self.sources = sources
        self.order = self._topological(owner, consumers)
        wired = frozenset(p for p in sources if p != sources[p])
        default = ComponentInterface(
            inputs=frozenset(consumers) - frozenset(sources),
            outputs=frozenset().union(*(c.interface.outputs for c in self.children)),
            sensors=frozenset().union(*(c.interface.sensors for c in self.children)),
            actions=frozenset().union(*(c.interface.actions for c in self.children)),
            internal=frozenset().union(*(c.interface.internal for c in self.children)) | wired,
        )
        if interface is not None and interface.ports != default.ports:
            raise ValueError("declared interface does not cover exactly the children's ports")
        self.interface = interface or default

    def _topological(self, owner, consumers):
        deps = {c.name: set() for c in self.children}
        for dst, src in self.sources.items():
            for child in consumers[dst]:
                if owner[src] is child:
                    raise ValueError(f"wiring {src!r} -> {dst!r} loops within {child.name}")
                deps[child.name].add(owner[src].name)
        by_name = {c.name: c for c in self.children}
        order, done, active = [], set(), set()

        def visit(n):
            if n in done:
                return
            if n in active:
                raise ValueError(f"cyclic wiring through {n}")
            active.add(n)
            for d in sorted(deps[n]):
                visit(d)
            active.discard(n)
            done.add(n)
            order.append(by_name[n])

        for c in self.children:
            visit(c.name)
        return tuple(order)

    def step(self, env, prev, inputs=None):
        inputs = dict(inputs or {})
        value = {}
        for child in self.order:
            child_in = {}
            for p in child.interface.inputs:
                src = self.sources.get(p)
                if src is not None:
                    child_in[p] = value[src]
                elif p in inputs:
                    child_in[p] = inputs[p]
            # children see the whole previous value; each reads only its own ports
            value.update(child.step(env, prev, child_in))
        return value

    def identity(self) -> str:
        inner = ",".join(c.identity() for c in self.children)
        wires = ",".join(f"{s}->{d}" for s, d in self.wiring)
        return f"{self.name}[{inner}|{wires}]"


def compose(name: str, children: Sequence[Component], wiring=(), interface=None) -> CompositeComponent:
    return CompositeComponent(name, children, wiring, interface)


# -- scenarios ---------------------------------------------------------------

class Scenario:
    """Base class for scene distributions with a simulator step.

    Subclasses implement ``sample_scene``, ``initial_state`` and ``step`` and
    set ``name``, ``max_length`` and ``scene_vars``.
    """
    name = "scenario"
    max_length = 100
    scene_vars: frozenset = frozenset()

    def sample_scene(self, rng: np.random.Generator):
        raise NotImplementedError

    def initial_state(self, scene: EnvState):
        return None

    def step(self, env: EnvState, value: Mapping, sim_state, rng: np.random.Generator):
        raise NotImplementedError

    def config(self) -> dict:
        """Parameters that identify this scenario; feeds the scenario hash."""
        return {"name": self.name, "max_length": self.max_length}

    @property
    def hash(self) -> str:
        blob = json.dumps(self.config(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:10]


# -- traces ------------------------------------------------------------------

@dataclass
class Trace:
    steps: list
    provenance: dict = field(default_factory=dict)
    _cols: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a trace has at least one step")
        for env, _ in self.steps[:-1]:
            if env.terminal:
                raise ValueError("only the final state of a trace may be terminal")
        self._ports = frozenset(self.steps[0][1])

    def __len__(self):
        return len(self.steps)

    def has(self, path: str) -> bool:
        if path in self._ports:
            return True
        return all(path in env.values for env, _ in self.steps)

    def column(self, path: str) -> list:
        col = self._cols.get(path)
        if col is None:
            if path in self._ports:
                col = [v.get(path) for _, v in self.steps]
            else:
                col = [env.values.get(path) for env, _ in self.steps]
            col = [None if x is None else to_rational(x) for x in col]
            self._cols[path] = col
        return col

    def lookup(self, path: str, t: int):
        return self.column(path)[t]

    def to_records(self) -> list:
        rows = []
        for i, (env, val) in enumerate(self.steps):
            rows.append({
                "step": i,
                "env": {k: format_number(to_rational(x)) for k, x in sorted(env.values.items())},
                "value": {k: format_number(to_rational(x)) for k, x in sorted(val.items())},
            })
        return rows

    @classmethod
    def from_records(cls, rows: Sequence[Mapping], provenance=None) -> "Trace":
        steps = []
        for r in sorted(rows, key=lambda r: r["step"]):
            env = EnvState({k: Fraction(v) for k, v in r["env"].items()})
            steps.append((env, {k: Fraction(v) for k, v in r["value"].items()}))
        return cls(steps, dict(provenance or {}))


class TraceAborted(RuntimeError):
    pass


def sample_scene(scenario: Scenario, rng: np.random.Generator):
    return scenario.sample_scene(rng)


def run_trace(scene: EnvState, scenario: Scenario, component: Component,
              rng: np.random.Generator, provenance=None) -> Trace:
    """Simulate one trace from ``scene``.

    Terminal environment states end the trace and are not recorded (they
    carry no variable values). Any exception from a component step is wrapped
    in TraceAborted.
    """
    if scene is REJECTED:
        raise ValueError("cannot simulate a rejected scene")
    env = scene
    value = _component_step(component, env, None)
    steps = [(env, value)]
    sim = scenario.initial_state(scene)
    while len(steps) < scenario.max_length:
        env, sim = scenario.step(env, value, sim, rng)
        if env.terminal:
            break
        value = _component_step(component, env, value)
        steps.append((env, value))
    return Trace(steps, dict(provenance or {}))


def _component_step(component, env, prev):
    try:
        return component.step(env, prev)
    except Exception as exc:
        raise TraceAborted(f"{component.name}: {exc}") from exc
