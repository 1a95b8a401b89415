"""The braking scenario and the car's component tree.

The scenario owns the physics and all randomness; components are pure
functions of the environment state (including its noise variables) and their
previous value.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from ..traces import (
    REJECTED, TERMINAL, Component, ComponentInterface, EnvState, Scenario, compose,
)
from . import dynamics as D

# environment variables
LEAD_DIST = "lead_dist"
EGO_SPEED = "self.speed"
LEAD_SPEED = "lead_car.speed"
REL_SPEED = "true_relative_speed"
BUFFER = "buffer_dist"
BEHIND = "behind_car"
WEATHER = "params['weather']"
WIDTH = "params['lead_car_width']"
NOISE = {
    "radar_fault": "noise.radar_fault",
    "laser_fault": "noise.laser_fault",
    "radar_err": "noise.radar_err",
    "laser_err": "noise.laser_err",
    "radar_offset": "noise.radar_offset",
    "laser_pick": "noise.laser_pick",
    "camera_err": "noise.camera_err",
}
SCENE_VARS = frozenset({WEATHER, WIDTH, BUFFER, BEHIND, NOISE["radar_fault"], NOISE["laser_fault"]})


@lru_cache(maxsize=None)
def mm(n: int) -> Fraction:
    return Fraction(n, D.MM)


def to_mm(q) -> int:
    if type(q) is int:
        return q * D.MM
    d = q.denominator
    if D.MM % d:
        raise ValueError(f"{q} is not on the millimetre grid")
    return q.numerator * (D.MM // d)


@lru_cache(maxsize=None)
def centi(n: int) -> Fraction:
    return Fraction(n, 100)


def _env(ego: int, lead: int, dist: int, scene: dict, noise: dict) -> EnvState:
    return EnvState({
        LEAD_DIST: mm(dist),
        EGO_SPEED: mm(ego),
        LEAD_SPEED: mm(lead),
        REL_SPEED: mm(ego - lead),
        BUFFER: mm(D.BUFFER_DIST),
        BEHIND: Fraction(1),
        WEATHER: Fraction(scene["weather"]),
        WIDTH: mm(scene["width"]),
        NOISE["radar_fault"]: Fraction(scene["radar_fault"]),
        NOISE["laser_fault"]: Fraction(scene["laser_fault"]),
        NOISE["radar_err"]: mm(noise["radar_err"]),
        NOISE["laser_err"]: mm(noise["laser_err"]),
        NOISE["radar_offset"]: mm(noise["radar_offset"]),
        NOISE["laser_pick"]: Fraction(noise["laser_pick"]),
        NOISE["camera_err"]: mm(noise["camera_err"]),
    })


class SimState:
    __slots__ = ("scene", "brake_left", "camera_state")

    def __init__(self, scene, brake_left, camera_state):
        self.scene = scene
        self.brake_left = brake_left
        self.camera_state = camera_state


class AebScenario(Scenario):
    """Single-lane approach to a lead car with four weather types.

    Scenes whose initial gap is not above the buffer distance are rejected.
    The trace ends after ``max_length`` steps, or right after a collision.
    """
    name = "aeb-highway"

    def __init__(self, params: D.AebParams | None = None):
        self.params = params or D.AebParams()
        self.max_length = self.params.max_length
        self.scene_vars = SCENE_VARS

    def config(self) -> dict:
        return {"name": self.name, **self.params.to_dict()}

    def draw(self, rng):
        """Raw integer scene, or REJECTED."""
        s = D.draw_scene(rng, self.params)
        if s["dist"] <= D.BUFFER_DIST:
            return REJECTED
        return s

    def sample_scene(self, rng):
        s = self.draw(rng)
        if s is REJECTED:
            return REJECTED
        return _env(0, s["lead_speed"], s["dist"], s, s)

    def initial_state(self, scene: EnvState) -> SimState:
        v = scene.values
        raw = {
            "weather": int(v[WEATHER]), "width": to_mm(v[WIDTH]),
            "radar_fault": int(v[NOISE["radar_fault"]]), "laser_fault": int(v[NOISE["laser_fault"]]),
        }
        return SimState(raw, 0, float(to_mm(v[NOISE["camera_err"]])))

    def step(self, env, value, sim: SimState, rng):
        v = env.values
        dist = to_mm(v[LEAD_DIST])
        if dist <= 0:
            return TERMINAL, sim
        ego = to_mm(v[EGO_SPEED])
        lead = to_mm(v[LEAD_SPEED])
        throttle = to_mm(value["throttle"]) // 10
        new_ego = D.actuator(throttle, ego)
        delta, brake_left = D.lead_step(rng, self.params, sim.brake_left)
        new_lead = max(0, min(D.V_MAX, lead + delta))
        new_dist = dist - (ego - lead)
        cam = D.next_camera_state(rng, self.params, sim.camera_state)
        noise = D.draw_sensor_noise(rng, self.params, cam)
        sim = SimState(sim.scene, brake_left, cam)
        return _env(new_ego, new_lead, new_dist, sim.scene, noise), sim


# -- components --------------------------------------------------------------

def _radar(env, prev, inputs):
    v = env.values
    reading = D.sensor_radar(to_mm(v[LEAD_DIST]), to_mm(v[WIDTH]), int(v[NOISE["radar_fault"]]),
                             to_mm(v[NOISE["radar_offset"]]), to_mm(v[NOISE["radar_err"]]))
    return {"radar_dist": mm(reading)}


def _laser(env, prev, inputs):
    v = env.values
    reading = D.sensor_laser(to_mm(v[LEAD_DIST]), int(v[WEATHER]), int(v[NOISE["laser_fault"]]),
                             int(v[NOISE["laser_pick"]]), to_mm(v[NOISE["laser_err"]]))
    return {"laser_dist": mm(reading)}


def _camera(env, prev, inputs):
    v = env.values
    return {"camera_dist": mm(D.sensor_camera(to_mm(v[LEAD_DIST]), to_mm(v[NOISE["camera_err"]])))}


def _median(env, prev, inputs):
    return {"dist": D.median3(inputs["radar_dist"], inputs["laser_dist"], inputs["camera_dist"])}


def _speedometer(env, prev, inputs):
    return {"speed": env.values[EGO_SPEED]}


def _cruise(env, prev, inputs):
    return {"desired_throttle": centi(D.cruise_throttle(to_mm(inputs["dist"]), to_mm(inputs["speed"])))}


def _filter(env, prev, inputs):
    carried = None if prev is None else to_mm(prev["p_buffer_dist"])
    desired = to_mm(inputs["desired_throttle"]) // 10
    out, pbuf = D.safety_filter(to_mm(inputs["dist"]), to_mm(inputs["speed"]), desired, carried)
    return {"modulated_throttle": centi(out), "p_buffer_dist": mm(pbuf)}


def _throttle_wire(env, prev, inputs):
    return {"throttle": inputs["modulated_throttle"]}


def _iface(**kw):
    return ComponentInterface(**{k: frozenset(v) for k, v in kw.items()})


def radar_component():
    return Component("RadarDistanceSystem", _iface(sensors={"radar_dist"}), _radar)


def laser_component():
    return Component("LaserDistanceSystem", _iface(sensors={"laser_dist"}), _laser)


def camera_component():
    return Component("CameraDistanceSystem", _iface(sensors={"camera_dist"}), _camera)


def median_component():
    return Component("MedianDistanceFilter",
                     _iface(inputs={"radar_dist", "laser_dist", "camera_dist"}, outputs={"dist"}),
                     _median)


def perception_component():
    return compose("PerceptionSystem",
                   [radar_component(), laser_component(), camera_component(), median_component()])


def speedometer_component():
    return Component("Speedometer", _iface(sensors={"speed"}), _speedometer)


def cruise_component():
    return Component("CruiseController", _iface(inputs={"dist", "speed"}, outputs={"desired_throttle"}),
                     _cruise)


def filter_component():
    return Component("ThrottleSafetyFilter",
                     _iface(inputs={"dist", "speed", "desired_throttle"},
                            outputs={"modulated_throttle", "p_buffer_dist"}),
                     _filter)


def throttle_wire_component():
    return Component("ThrottleOutput", _iface(inputs={"modulated_throttle"}, actions={"throttle"}),
                     _throttle_wire)


def control_component():
    return compose("ControlSystem", [cruise_component(), filter_component(), throttle_wire_component()])


def car_component():
    return compose("Car", [perception_component(), speedometer_component(), control_component()])


# -- fast episodes -----------------------------------------------------------

def simulate_gaps(scenario: AebScenario, scene_rng, dynamics_rng):
    """Gap (mm) at every recorded step of one episode, or None if rejected.

    Integer-only replay of ``run_trace`` with the Car component: same draws
    in the same order, no Fractions and no trace. Used for large safety
    sweeps; a test checks it against the trace path.
    """
    p = scenario.params
    s = scenario.draw(scene_rng)
    if s is REJECTED:
        return None
    width, weather = s["width"], s["weather"]
    radar_fault, laser_fault = s["radar_fault"], s["laser_fault"]
    dist, ego, lead = s["dist"], 0, s["lead_speed"]
    noise = s
    cam_state = float(s["camera_err"])
    brake_left = 0
    carried = None
    gaps = []
    while True:
        gaps.append(dist)
        d = D.median3(
            D.sensor_radar(dist, width, radar_fault, noise["radar_offset"], noise["radar_err"]),
            D.sensor_laser(dist, weather, laser_fault, noise["laser_pick"], noise["laser_err"]),
            D.sensor_camera(dist, noise["camera_err"]))
        desired = D.cruise_throttle(d, ego)
        throttle, carried = D.safety_filter(d, ego, desired, carried)
        if len(gaps) >= scenario.max_length or dist <= 0:
            return gaps
        new_ego = D.actuator(throttle, ego)
        delta, brake_left = D.lead_step(dynamics_rng, p, brake_left)
        new_lead = max(0, min(D.V_MAX, lead + delta))
        dist = dist - (ego - lead)
        ego, lead = new_ego, new_lead
        cam_state = D.next_camera_state(dynamics_rng, p, cam_state)
        noise = D.draw_sensor_noise(dynamics_rng, p, cam_state)
