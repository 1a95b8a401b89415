"""Component models and finite proof domains for the exhaustive checker."""
from __future__ import annotations

from fractions import Fraction

from ..evidence import DomainSpec, ExhaustiveChecker
from . import dynamics as D
from .model import BEHIND, LEAD_DIST, NOISE, WEATHER, WIDTH, mm, to_mm

KNOWN_FRACTION = 0.35     # P(weather in {0,1}) * P(width >= 1.8) = 0.5 * 0.7


# -- component models used by the exhaustive checker -------------------------

def derive_perception(row, prev=None) -> dict:
    true = to_mm(row[LEAD_DIST])
    radar = D.sensor_radar(true, to_mm(row[WIDTH]), int(row[NOISE["radar_fault"]]),
                           to_mm(row[NOISE["radar_offset"]]), to_mm(row[NOISE["radar_err"]]))
    laser = D.sensor_laser(true, int(row[WEATHER]), int(row[NOISE["laser_fault"]]),
                           int(row[NOISE["laser_pick"]]), to_mm(row[NOISE["laser_err"]]))
    camera = D.sensor_camera(true, to_mm(row[NOISE["camera_err"]]))
    return {"radar_dist": mm(radar), "laser_dist": mm(laser), "camera_dist": mm(camera),
            "dist": mm(D.median3(radar, laser, camera))}


def derive_filter(row, prev=None) -> dict:
    carried = None if prev is None else to_mm(prev["p_buffer_dist"])
    out, pbuf = D.safety_filter(to_mm(row["dist"]), to_mm(row["speed"]),
                                to_mm(row["desired_throttle"]) // 10, carried)
    return {"modulated_throttle": Fraction(out, 100), "p_buffer_dist": mm(pbuf)}


def derive_wiring(row, prev=None) -> dict:
    return {"throttle": row["modulated_throttle"]}


def derive_median(row, prev=None) -> dict:
    return {"dist": D.median3(row["radar_dist"], row["laser_dist"], row["camera_dist"])}


COMPONENT_MODELS = {
    "PerceptionSystem": derive_perception,
    "ThrottleSafetyFilter": derive_filter,
    "ThrottleOutput": derive_wiring,
    "MedianDistanceFilter": derive_median,
}


def _grid(lo, hi, step):
    lo, hi, step = Fraction(lo), Fraction(hi), Fraction(step)
    n = int((hi - lo) / step)
    return tuple(lo + i * step for i in range(n + 1))


KNOWN_DOMAIN = DomainSpec({
    WEATHER: (0, 1, 2, 3),
    WIDTH: ("1.2", "1.79", "1.8", "3.2"),
    BEHIND: (0, 1),
    NOISE["radar_fault"]: (0, 1),
    NOISE["laser_fault"]: (0, 1),
    LEAD_DIST: (0, "0.05", 30),
    NOISE["radar_err"]: ("-0.1", 0, "0.1"),
    NOISE["laser_err"]: ("-0.1", 0, "0.1"),
    NOISE["camera_err"]: (-1, 0, 1),
    NOISE["radar_offset"]: (1, 10),
    NOISE["laser_pick"]: (0, 500000, 1000000),
}, length=1, component="PerceptionSystem")

MEDIAN_DOMAIN = DomainSpec({
    "radar_dist": _grid(0, 1, "0.05"),
    "laser_dist": _grid(0, 1, "0.05"),
    "camera_dist": _grid(0, 1, "0.05"),
}, length=1, component="MedianDistanceFilter")

FILTER_DOMAIN = DomainSpec({
    "dist": ("5.5", "5.6", "5.7", "5.8", "7.8", "7.9", "8", "8.1", 30),
    "speed": (0, "0.9"),
    "desired_throttle": (-1, 0, 1),
}, length=2, component="ThrottleSafetyFilter")

WIRING_DOMAIN = DomainSpec({"modulated_throttle": (-1, "-0.5", 0, 1)}, length=2,
                           component="ThrottleOutput")

CONTROL_REFINEMENT_DOMAIN = DomainSpec({
    "dist": (5, 6), "p_buffer_dist": ("5.6",), "modulated_throttle": (-1, 0), "throttle": (-1, 0),
}, length=2)

PERCEPTION_REFINEMENT_DOMAIN = DomainSpec({
    WEATHER: (0, 1, 2, 3), WIDTH: ("1.7", "1.8", "1.9"), BEHIND: (0, 1),
    LEAD_DIST: (10,), "dist": ("9.8", "9.9", 10, "10.1", "10.2"),
}, length=2, constant=frozenset({WEATHER, WIDTH}))


DOMAINS = {
    "known-region": KNOWN_DOMAIN,
    "median": MEDIAN_DOMAIN,
    "filter": FILTER_DOMAIN,
    "wiring": WIRING_DOMAIN,
    "control-refinement": CONTROL_REFINEMENT_DOMAIN,
    "perception-refinement": PERCEPTION_REFINEMENT_DOMAIN,
}


def exhaustive_checker() -> ExhaustiveChecker:
    return ExhaustiveChecker(COMPONENT_MODELS)


