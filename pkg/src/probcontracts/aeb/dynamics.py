"""Closed-loop braking dynamics in exact integer units.

Lengths are millimetres, speeds millimetres per step, throttle hundredths.
Every quantity in the loop stays on an integer grid, so the rational values
written into traces are exact and the distance recurrence holds with
equality.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

MM = 1000
V_MAX = 5400          # speed cap for both cars
DECEL = 900           # full-brake speed loss per step
ACCEL = 500           # largest speed gain per step
SAFE_GAP = 5000       # Keeps Distance threshold
BAND = 100            # sensor accuracy band
BUFFER_DIST = 5600    # scene constraint: initial gap must exceed this
WIDTH_OK = 1800       # radar is reliable at or above this lead-car width
LASER_MISS = 1000     # a failed laser reads at least this much short


@dataclass(frozen=True)
class AebParams:
    """Scene distribution and sensor-noise constants."""
    width_min: int = 1200
    width_max: int = 3200
    dist_min: int = 2000
    dist_max: int = 30000
    radar_slope: float = 0.6
    radar_offset_min: int = 1000
    radar_offset_max: int = 10000
    laser_fail_rain: float = 0.25
    laser_fail_snow: float = 0.40
    camera_sigma: float = 40.0
    camera_rho: float = 0.97
    hard_brake_chance: float = 0.03
    hard_brake_min: int = 3
    hard_brake_max: int = 6
    max_length: int = 100
    sensors_in_band: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


# -- sensors -----------------------------------------------------------------

def radar_failure_probability(width_mm: int, slope: float = 0.6) -> float:
    """f(w) = min(1, slope * (1.8 - w)) below 1.8 m, zero at or above it."""
    if width_mm >= WIDTH_OK:
        return 0.0
    return min(1.0, slope * (WIDTH_OK - width_mm) / MM)


def laser_failure_probability(weather: int, params: AebParams = AebParams()) -> float:
    return {2: params.laser_fail_rain, 3: params.laser_fail_snow}.get(weather, 0.0)


def sensor_radar(true_dist: int, width_mm: int, fault: int, offset: int, err: int) -> int:
    """Radar reading: in-band unless the lead car is narrow and the radar has failed.

    A failure reads too far by ``offset``.
    """
    if width_mm >= WIDTH_OK or not fault:
        return max(0, true_dist + err)
    return true_dist + offset


def sensor_laser(true_dist: int, weather: int, fault: int, pick: int, err: int) -> int:
    """Laser reading; a failure (rain or snow only) reads in [0, true - 1 m].

    ``pick`` in [0, 10**6] selects the point in that range.
    """
    if weather in (0, 1) or not fault:
        return max(0, true_dist + err)
    return max(0, true_dist - LASER_MISS) * pick // 10 ** 6


def sensor_camera(true_dist: int, err: int) -> int:
    return max(0, true_dist + err)


def median3(a, b, c):
    return max(min(a, b), min(max(a, b), c))


# -- control -----------------------------------------------------------------

def p_buffer_dist(speed: int) -> int:
    """Distance at which the filter must start braking, for ego speed ``speed``.

    Safety gap + sensor band + the step travelled before the brake takes
    effect + one worst-case acceleration step + the stopping distance at
    DECEL per step, all against a lead car that may stop dead.
    """
    v = speed + ACCEL
    stop = sum(max(0, v - DECEL * i) for i in range(1, v // DECEL + 2))
    return SAFE_GAP + BAND + speed + v + stop


def cruise_throttle(dist: int, speed: int) -> int:
    """Nominal proportional cruise law, in hundredths of full throttle."""
    target = min(V_MAX, max(0, (dist - 8000) * 3 // 10))
    return max(-100, min(100, (target - speed) // 5))


def safety_filter(dist: int, speed: int, desired: int, carried: int | None) -> tuple:
    """Return (modulated throttle in hundredths, this step's buffer distance).

    The threshold is the larger of this step's buffer and the one published
    on the previous step, so a brake demanded by the previous buffer is
    always honoured.
    """
    pbuf = p_buffer_dist(speed)
    threshold = pbuf if carried is None else max(carried, pbuf)
    if dist <= threshold + BAND:
        return -100, pbuf
    return desired, pbuf


def actuator(throttle: int, speed: int) -> int:
    if throttle == -100:
        return max(0, speed - DECEL)
    return max(0, min(V_MAX, speed + throttle * ACCEL // 100))


# -- randomness --------------------------------------------------------------

LEAD_DELTAS = (-DECEL, 0, ACCEL)


def draw_scene(rng, params: AebParams):
    """Draw the initial scene; returns a dict of integer quantities."""
    weather = int(rng.integers(0, 4))
    width = int(rng.integers(params.width_min, params.width_max + 1))
    dist = int(rng.integers(params.dist_min, params.dist_max + 1))
    lead_speed = int(rng.integers(0, V_MAX // 100 + 1)) * 100
    u_radar, u_laser = rng.random(2)
    radar_fault = int(u_radar < radar_failure_probability(width, params.radar_slope))
    laser_fault = int(u_laser < laser_failure_probability(weather, params))
    if params.sensors_in_band:
        radar_fault = laser_fault = 0
    # the process starts from the rounded value, which the scene itself records
    camera = float(round(rng.normal(0.0, params.camera_sigma)))
    scene = {
        "weather": weather, "width": width, "dist": dist, "lead_speed": lead_speed,
        "radar_fault": radar_fault, "laser_fault": laser_fault,
    }
    scene.update(draw_sensor_noise(rng, params, camera))
    return scene


def draw_sensor_noise(rng, params: AebParams, camera_state: float) -> dict:
    u = rng.random(4)
    span = params.radar_offset_max - params.radar_offset_min + 1
    cam = int(round(camera_state))
    if params.sensors_in_band:
        cam = max(-BAND, min(BAND, cam))
    return {
        "radar_err": int(u[0] * (2 * BAND + 1)) - BAND,
        "laser_err": int(u[1] * (2 * BAND + 1)) - BAND,
        "radar_offset": params.radar_offset_min + int(u[2] * span),
        "laser_pick": int(u[3] * (10 ** 6 + 1)),
        "camera_err": cam, "camera_state": camera_state,
    }


def next_camera_state(rng, params: AebParams, state: float) -> float:
    rho = params.camera_rho
    return rho * state + math.sqrt(1.0 - rho * rho) * float(rng.normal(0.0, params.camera_sigma))


def lead_step(rng, params: AebParams, brake_left: int) -> tuple:
    """Return (speed change, remaining hard-brake steps)."""
    if brake_left > 0:
        return -DECEL, brake_left - 1
    if rng.random() < params.hard_brake_chance:
        length = int(rng.integers(params.hard_brake_min, params.hard_brake_max + 1))
        return -DECEL, length - 1
    return LEAD_DELTAS[int(rng.integers(0, 3))], 0
