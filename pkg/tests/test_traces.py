import random
from fractions import Fraction

import pytest

from probcontracts.aeb.catalog import build_contract_catalog
from probcontracts.aeb.model import (
    AebScenario, car_component, median_component, perception_component, simulate_gaps,
)
from probcontracts.lang import evaluate, parse_formula
from probcontracts.traces import (
    DYNAMICS_PURPOSE, REJECTED, SCENE_PURPOSE, TERMINAL, Component, ComponentError,
    ComponentInterface, EnvState, Scenario, Trace, TraceAborted, compose, run_trace,
    sample_scene, substream,
)

from toys import CoinScenario, broken_component, echo_component


def iface(**kw):
    return ComponentInterface(**{k: frozenset(v) for k, v in kw.items()})


def aeb_trace(seed, index, params=None):
    scen = AebScenario(params)
    while True:
        scene = sample_scene(scen, substream(seed, "t", index, SCENE_PURPOSE))
        if scene is not REJECTED:
            return run_trace(scene, scen, car_component(), substream(seed, "t", index, DYNAMICS_PURPOSE))
        index += 1000


# -- interfaces and composition ----------------------------------------------

def test_interface_groups_must_be_disjoint():
    with pytest.raises(ValueError):
        iface(inputs={"a"}, outputs={"a"})


def test_component_must_produce_declared_ports():
    c = Component("C", iface(outputs={"y"}), lambda env, prev, inputs: {"z": 1})
    with pytest.raises(ComponentError):
        c.step(EnvState({}), None)


def test_unconnected_input_is_an_error():
    c = Component("C", iface(inputs={"x"}, outputs={"y"}), lambda env, prev, inputs: {"y": inputs["x"]})
    with pytest.raises(ComponentError):
        c.step(EnvState({}), None)


def test_perception_composition_wires_sensors_into_filter():
    p = perception_component()
    assert p.interface.inputs == frozenset()
    assert {"radar_dist", "laser_dist", "camera_dist", "dist"} <= p.interface.ports
    assert p.order[-1].name == "MedianDistanceFilter"


def test_single_child_composition_behaves_like_the_child():
    child = echo_component()
    parent = compose("Parent", [child])
    env = EnvState({"flip": Fraction(1)})
    assert parent.step(env, None) == child.step(env, None)
    assert parent.interface.ports == child.interface.ports


def test_mismatched_wiring_is_a_construction_error():
    with pytest.raises(ValueError):
        compose("P", [echo_component(), median_component()], wiring=[("nope", "radar_dist")])


def test_cyclic_wiring_is_rejected():
    a = Component("A", iface(inputs={"b"}, outputs={"a"}), lambda e, p, i: {"a": i["b"]})
    b = Component("B", iface(inputs={"a"}, outputs={"b"}), lambda e, p, i: {"b": i["a"]})
    with pytest.raises(ValueError, match="cyclic"):
        compose("P", [a, b])


def test_explicit_wiring_between_different_names():
    src = Component("S", iface(outputs={"u"}), lambda e, p, i: {"u": 3})
    dst = Component("D", iface(inputs={"v"}, outputs={"w"}), lambda e, p, i: {"w": i["v"] * 2})
    c = compose("P", [dst, src], wiring=[("u", "v")])
    assert c.step(EnvState({}), None) == {"u": 3, "v": 3, "w": 6}


def _chain(rng, names):
    parts = []
    for i, n in enumerate(names):
        k = rng.randint(1, 4)
        if i == 0:
            parts.append(Component(n, iface(outputs={f"{n}_o"}),
                                   lambda e, p, inp, k=k, n=n: {f"{n}_o": e["x"] * k}))
        else:
            prev = f"{names[i - 1]}_o"
            parts.append(Component(n, iface(inputs={prev}, outputs={f"{n}_o"}),
                                   lambda e, p, inp, k=k, prev=prev, n=n: {f"{n}_o": inp[prev] + k}))
    return parts


def test_composition_is_associative_on_random_chains():
    rng = random.Random(3)
    for _ in range(50):
        a, b, c = _chain(rng, ["A", "B", "C"])
        left = compose("L", [compose("AB", [a, b]), c])
        right = compose("R", [a, compose("BC", [b, c])])
        for x in range(5):
            env = EnvState({"x": Fraction(x)})
            assert left.step(env, None) == right.step(env, None)


# -- scenes and traces -------------------------------------------------------

def test_aeb_rejects_scenes_at_or_below_buffer():
    scen = AebScenario()
    rejected = accepted = 0
    for i in range(400):
        raw = scen.draw(substream(1, "r", i, SCENE_PURPOSE))
        scene = scen.sample_scene(substream(1, "r", i, SCENE_PURPOSE))
        if raw is REJECTED:
            rejected += 1
            assert scene is REJECTED
        else:
            accepted += 1
            assert scene["lead_dist"] > scene["buffer_dist"] and scene["self.speed"] == 0
    assert rejected and accepted


def test_unconstrained_scenario_never_rejects():
    scen = CoinScenario()
    assert all(scen.sample_scene(substream(0, "s", i, SCENE_PURPOSE)) is not REJECTED for i in range(200))


def test_scene_draw_is_deterministic():
    scen = AebScenario()
    a = scen.sample_scene(substream(5, "s", 17, SCENE_PURPOSE))
    b = scen.sample_scene(substream(5, "s", 17, SCENE_PURPOSE))
    assert a == b


def test_immediately_terminal_simulator_gives_length_one():
    class Stop(Scenario):
        def sample_scene(self, rng):
            return EnvState({"flip": Fraction(1)})

        def step(self, env, value, sim, rng):
            return TERMINAL, sim

    tr = run_trace(Stop().sample_scene(None), Stop(), echo_component(), None)
    assert len(tr) == 1


def test_rejected_scene_cannot_be_simulated():
    with pytest.raises(ValueError):
        run_trace(REJECTED, CoinScenario(), echo_component(), None)


def test_component_failure_aborts_trace():
    scen = CoinScenario()
    with pytest.raises(TraceAborted, match="boom"):
        run_trace(scen.sample_scene(substream(0, "s", 0, 0)), scen, broken_component(), None)


def test_only_last_state_may_be_terminal():
    with pytest.raises(ValueError):
        Trace([(TERMINAL, {}), (EnvState({}), {})])


def test_aeb_trace_repeats_bitwise():
    a, b = aeb_trace(9, 3), aeb_trace(9, 3)
    assert a.to_records() == b.to_records()


def test_trace_records_round_trip():
    tr = aeb_trace(2, 0)
    back = Trace.from_records(tr.to_records())
    assert back.to_records() == tr.to_records()
    assert back.column("lead_dist") == tr.column("lead_dist")


def test_port_lookup_prefers_component_value():
    tr = Trace([(EnvState({"a": 1, "out": 9}), {"out": 2})])
    assert tr.lookup("out", 0) == 2 and tr.lookup("a", 0) == 1


def test_aeb_distance_recurrence_holds_at_non_final_steps():
    f = parse_formula("(next (lead_dist)) == ((lead_dist) - (true_relative_speed))")
    for i in range(20):
        tr = aeb_trace(4, i)
        vals = evaluate(f, tr)
        assert all(v is True for v in vals[:-1]) and vals[-1] is None


def test_aeb_scene_variables_constant_and_dynamics_assumptions_hold():
    scen = AebScenario()
    cat = build_contract_catalog()
    for i in range(40):
        tr = aeb_trace(6, i)
        for var in scen.scene_vars:
            assert len(set(tr.column(var))) == 1
        assert evaluate(cat["keeps_distance"].assumptions, tr)[0] is True


def test_substreams_are_independent_of_call_order():
    a = substream(1, "x", 5, 0).random(3)
    substream(1, "x", 4, 0).random(10)
    assert (substream(1, "x", 5, 0).random(3) == a).all()
    assert not (substream(1, "y", 5, 0).random(3) == a).all()


def test_fast_gap_replay_matches_trace_path():
    scen = AebScenario()
    checked = 0
    for i in range(60):
        gaps = simulate_gaps(scen, substream(3, "g", i, SCENE_PURPOSE), substream(3, "g", i, DYNAMICS_PURPOSE))
        scene = scen.sample_scene(substream(3, "g", i, SCENE_PURPOSE))
        if gaps is None:
            assert scene is REJECTED
            continue
        tr = run_trace(scene, scen, car_component(), substream(3, "g", i, DYNAMICS_PURPOSE))
        assert [int(g * 1000) for g in tr.column("lead_dist")] == gaps
        checked += 1
    assert checked > 30
