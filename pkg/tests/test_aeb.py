import itertools
from fractions import Fraction

import numpy as np
import pytest

from probcontracts.aeb import dynamics as D
from probcontracts.aeb.catalog import LISTINGS, build_contract_catalog
from probcontracts.aeb.model import AebScenario, car_component
from probcontracts.aeb.reachability import reachable_check
from probcontracts.lang import TableTrace, evaluate_single_steps, parse_formula, render
from probcontracts.traces import DYNAMICS_PURPOSE, REJECTED, SCENE_PURPOSE, run_trace, substream


# -- sensors -------------------------------------------------------------------

def scenes(n, seed, **params):
    rng = np.random.Generator(np.random.Philox(seed))
    p = D.AebParams(**params)
    return [D.draw_scene(rng, p) for _ in range(n)]


def test_radar_is_in_band_for_wide_cars():
    for width in (1800, 2000, 3200):
        for err in (-100, 0, 100):
            assert D.sensor_radar(20000, width, 1, 5000, err) == 20000 + err


def test_radar_failure_reads_too_far():
    assert D.sensor_radar(20000, 1300, 1, 5000, 30) == 25000
    assert D.radar_failure_probability(1300) == pytest.approx(0.3)
    assert D.radar_failure_probability(0) == 1.0


def test_radar_failure_rate_at_narrow_width():
    draws = scenes(40_000, 11, width_min=1300, width_max=1300)
    rate = np.mean([s["radar_fault"] for s in draws])
    assert abs(rate - 0.30) <= 0.01


def test_laser_in_clear_weather_and_clamp():
    assert D.sensor_laser(20000, 0, 1, 999_999, -50) == 19950
    assert D.sensor_laser(20000, 1, 1, 0, 0) == 20000
    assert D.sensor_laser(0, 3, 1, 10 ** 6, 0) == 0
    assert D.sensor_laser(20000, 2, 1, 10 ** 6, 0) == 19000


def test_laser_snow_failure_rate():
    draws = [s for s in scenes(100_000, 12) if s["weather"] == 3]
    rate = np.mean([s["laser_fault"] for s in draws])
    assert abs(rate - 0.40) <= 0.01


def test_camera_noise_moments():
    errs = np.array([s["camera_err"] for s in scenes(100_000, 13)])
    assert abs(errs.mean()) <= 1.0           # millimetres
    assert abs(errs.std() - 40.0) <= 1.0
    assert D.sensor_camera(0, -500) == 0


# -- median --------------------------------------------------------------------

@pytest.mark.parametrize("args,want", [((1, 2, 9), 2), ((5, 5, 5), 5), ((1, 9, 5), 5), ((9, 1, 5), 5)])
def test_median_examples(args, want):
    assert D.median3(*args) == want


def test_median_is_the_sorted_middle():
    for a, b, c in itertools.product(range(4), repeat=3):
        assert D.median3(a, b, c) == sorted((a, b, c))[1]


def test_two_in_band_readings_keep_the_median_in_band():
    t = 10_000
    band = range(t - 100, t + 101, 50)
    wild = range(t - 2000, t + 2001, 50)
    for d1, d2, d3 in itertools.product(band, band, wild):
        for order in itertools.permutations((d1, d2, d3)):
            assert t - 100 <= D.median3(*order) <= t + 100


# -- control -------------------------------------------------------------------

def test_filter_examples():
    assert D.p_buffer_dist(0) == 5600
    assert D.safety_filter(5050, 0, 40, None)[0] == -100
    assert D.safety_filter(20000, 0, 40, None)[0] == 40
    assert D.safety_filter(5700, 0, 40, None)[0] == -100
    assert D.safety_filter(5701, 0, 40, None)[0] == 40


def test_filter_honours_the_carried_buffer():
    high = D.p_buffer_dist(3000)
    assert D.safety_filter(high, 0, 40, high)[0] == -100


def test_buffer_grows_with_speed():
    vals = [D.p_buffer_dist(v) for v in range(0, 5401, 100)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("throttle,speed,want", [(-100, 500, 0), (-100, 3000, 2100), (100, 5400, 5400),
                                                 (0, 2000, 2000), (50, 1000, 1250)])
def test_actuator_examples(throttle, speed, want):
    assert D.actuator(throttle, speed) == want


def test_reachability_finds_no_unsafe_state():
    res = reachable_check()
    assert res.safe and res.states > 10 ** 6
    assert "no unsafe state" in res.describe()


def test_reachability_catches_a_too_small_buffer():
    res = reachable_check(buffer=lambda s: 50)
    assert not res.safe and res.violation is not None


# -- catalog ---------------------------------------------------------------------

def test_catalog_listings_round_trip():
    for key, text in LISTINGS.items():
        assert render(parse_formula(text)) == text, key


def test_catalog_contracts():
    cat = build_contract_catalog()
    assert render(cat["speed"].guarantees) == "always ((speed) == (self.speed))"
    assert cat["keeps_distance"].name == "Keeps Distance"
    assert cat["radar"].assumptions == parse_formula("(params['lead_car_width']) >= (1.8)")


def test_known_and_unknown_cover_the_scene_envelope():
    cat = build_contract_catalog()
    widths = [Fraction(w, 1000) for w in range(1200, 3201, 10)] + [Fraction(1799, 1000)]
    rows = [{"params['weather']": w, "params['lead_car_width']": x} for w in range(4) for x in widths]
    tr = TableTrace(rows)
    known = evaluate_single_steps(cat["known"].assumptions, tr)
    unknown = evaluate_single_steps(cat["unknown"].assumptions, tr)
    assert all((k is True) != (u is True) for k, u in zip(known, unknown))
    assert all(v is not None for v in known + unknown)


# -- closed loop -----------------------------------------------------------------

def test_median_rescues_single_sensor_failures_on_traces():
    scen = AebScenario()
    car = car_component()
    checked = 0
    for i in range(150):
        scene = scen.sample_scene(substream(8, "m", i, SCENE_PURPOSE))
        if scene is REJECTED:
            continue
        tr = run_trace(scene, scen, car, substream(8, "m", i, DYNAMICS_PURPOSE))
        for t in range(len(tr)):
            true = tr.lookup("lead_dist", t)
            ok = [abs(tr.lookup(p, t) - true) <= Fraction(1, 10)
                  for p in ("radar_dist", "laser_dist", "camera_dist")]
            if sum(ok) >= 2:
                assert abs(tr.lookup("dist", t) - true) <= Fraction(1, 10)
                checked += 1
    assert checked > 1000
