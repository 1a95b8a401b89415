"""Named contracts of the braking case study.

``LISTINGS`` holds the formulas as printed in the published assurance case,
where every distance sensor writes a port called ``dist`` and the median
filter reads ``dist1..3``. ``build_contract_catalog`` parses them and renames
ports to this model's names (radar_dist, laser_dist, camera_dist, dist).
"""
from __future__ import annotations

from ..lang import ast as A
from ..lang.contract import Contract
from ..lang.parser import parse_formula

ACCURATE = ("(((lead_dist) - (0.1)) <= (dist)) and ((dist) <= ((lead_dist) + (0.1)))")
ACCURATE_DISTANCE_G = f"always ((behind_car) implies ({ACCURATE}))"
WEATHER_CLEAR = "((params['weather']) == (0)) or ((params['weather']) == (1))"
WIDE_LEAD = "(params['lead_car_width']) >= (1.8)"
KNOWN = f"({WEATHER_CLEAR}) and ({WIDE_LEAD})"

DYNAMICS_ASSUMPTIONS = (
    "always (((0) <= (self.speed)) and ((self.speed) <= (5.4)))",
    "always (((0) <= (lead_car.speed)) and ((lead_car.speed) <= (5.4)))",
    "always (((-(0.9)) <= ((next (self.speed)) - (self.speed)))"
    " and (((next (self.speed)) - (self.speed)) <= (0.5)))",
    "always (((-(0.9)) <= ((next (lead_car.speed)) - (lead_car.speed)))"
    " and (((next (lead_car.speed)) - (lead_car.speed)) <= (0.5)))",
    "((lead_dist) > (buffer_dist)) and ((self.speed) == (0))",
    "always ((next (lead_dist)) == ((lead_dist) - (true_relative_speed)))",
)

LISTINGS = {
    "accurate_distance_g": ACCURATE_DISTANCE_G,
    "known": KNOWN,
    "weather_clear": WEATHER_CLEAR,
    "wide_lead": WIDE_LEAD,
    "median_printed": ("always ((out_dist) == (min((min((max((dist1), (dist2))),"
                       " (max((dist1), (dist2))))), (max((dist2), (dist3))))))"),
    "accurate_speed_g": "always ((speed) == (self.speed))",
    "filter_g": ("always (((next (dist)) <= ((p_buffer_dist) + (0.1)))"
                 " implies ((next (modulated_throttle)) == (-(1))))"),
    "control_g": ("always (((next (dist)) <= ((p_buffer_dist) + (0.1)))"
                  " implies ((next (throttle)) == (-(1))))"),
    "brakes_g": ("always (((throttle) == (-(1))) implies (((next (self.speed)) == (0))"
                 " or ((next (self.speed)) == ((self.speed) - (0.9)))))"),
    "keeps_distance_g": "always ((lead_dist) > (5))",
    **{f"dynamics_{i}": f for i, f in enumerate(DYNAMICS_ASSUMPTIONS)},
}

# the printed median is not a median of three (1, 9, 5 gives 9); we use the real one
MEDIAN_G = ("always ((dist) == (max((min((radar_dist), (laser_dist))),"
            " (min((max((radar_dist), (laser_dist))), (camera_dist))))))")
WIRING_G = "always ((throttle) == (modulated_throttle))"

RADAR_RENAME = {"dist": "radar_dist"}
LASER_RENAME = {"dist": "laser_dist"}

BRAKES_BOUND = (0.99, 0.999)


def _f(key: str, rename: dict | None = None) -> A.Formula:
    f = parse_formula(LISTINGS[key])
    return A.rename(f, rename) if rename else f


def build_contract_catalog() -> dict:
    """Contracts keyed by short name; each Contract carries its display name."""
    acc = _f("accurate_distance_g")
    known = _f("known")
    cat = {
        "radar": Contract("Radar Accurate Distance", _f("wide_lead"),
                          _f("accurate_distance_g", RADAR_RENAME)),
        "laser": Contract("Laser Accurate Distance", _f("weather_clear"),
                          _f("accurate_distance_g", LASER_RENAME)),
        "median": Contract("Median Distance Filter", A.TRUE, parse_formula(MEDIAN_G)),
        "perception": Contract("Accurate Distance", A.TRUE, acc),
        "known": Contract("Accurate Distance (Known)", known, acc),
        "unknown": Contract("Accurate Distance (Unknown)", A.Not(known), acc),
        "speed": Contract("Accurate Speed", A.TRUE, _f("accurate_speed_g")),
        "filter": Contract("Safe Throttle Filter", A.TRUE, _f("filter_g")),
        "wiring": Contract("Control Wiring", A.TRUE, parse_formula(WIRING_G)),
        "control": Contract("Control System Safety", A.TRUE, _f("control_g")),
        "brakes": Contract("Brakes Decelerate", A.TRUE, _f("brakes_g")),
        "keeps_distance": Contract(
            "Keeps Distance",
            A.conjoin_all([_f(f"dynamics_{i}") for i in range(len(DYNAMICS_ASSUMPTIONS))]),
            _f("keeps_distance_g")),
    }
    return cat
