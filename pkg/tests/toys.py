"""Small scenarios and components with known satisfaction probabilities."""
from __future__ import annotations

from fractions import Fraction

from probcontracts.lang import Contract
from probcontracts.traces import (
    REJECTED, TERMINAL, Component, ComponentInterface, EnvState, Scenario,
)


class CoinScenario(Scenario):
    """Each scene flips a coin with heads probability ``q``; traces last 3 steps.

    ``reject`` is the chance a draw is rejected; ``side`` is a fair scene
    variable independent of the coin.
    """
    name = "coin"
    max_length = 10
    scene_vars = frozenset({"flip", "side"})

    def __init__(self, q: float = 0.5, reject: float = 0.0, length: int = 3):
        self.q = q
        self.reject = reject
        self.length = length

    def config(self):
        return {"name": self.name, "q": self.q, "reject": self.reject, "length": self.length}

    def sample_scene(self, rng):
        u = rng.random(3)
        if u[0] < self.reject:
            return REJECTED
        return EnvState({"flip": Fraction(int(u[1] < self.q)), "side": Fraction(int(u[2] < 0.5)),
                         "n": Fraction(0)})

    def step(self, env, value, sim, rng):
        if env["n"] >= self.length - 1:
            return TERMINAL, sim
        return EnvState({**env.values, "n": env["n"] + 1}), sim


def echo_component(name="Echo"):
    return Component(name, ComponentInterface(sensors=frozenset({"out"})),
                     lambda env, prev, inputs: {"out": env["flip"]})


def broken_component():
    def step(env, prev, inputs):
        if env["n"] == 1:
            raise ZeroDivisionError("boom")
        return {"out": env["flip"]}
    return Component("Broken", ComponentInterface(sensors=frozenset({"out"})), step)


HEADS = Contract("Heads", "true", "always (out == 1)")
TAUTOLOGY = Contract("Anything", "true", "true")
