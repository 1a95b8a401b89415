"""Exhaustive reachability check of the throttle safety filter.

The closed loop is abstracted onto a 0.1 m grid: ego speed s and lead speed l
in tenths of a metre per step (0..54), gap d in tenths (clipped at 60 m).
From each state the lead car may change speed by -0.9, 0 or +0.5. The ego car
may pick any speed change in [-0.9, +0.5] except when the filter is forced to
brake: the sensed distance is within 0.1 m of the truth, so a true gap
d <= p_buffer_dist(s) always trips the threshold p_buffer_dist(s) + 0.1 and
the next ego speed is max(0, s - 0.9). Braking is allowed at any other time
too, which covers spurious brakes from sensor error and the carried
threshold. A state is unsafe when the gap drops to 5 m or below.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..evidence import CheckResult, ProofCertificate, ProofChecker
from ..lang import ast as A
from ..lang.render import render
from . import dynamics as D

TENTH = 100          # millimetres per grid unit
SPEED_STEPS = D.V_MAX // TENTH                 # 54
LEAD_DELTAS = tuple(d // TENTH for d in D.LEAD_DELTAS)
EGO_DELTAS = tuple(range(-D.DECEL // TENTH, D.ACCEL // TENTH + 1))
BRAKE = -D.DECEL // TENTH


def buffer_tenths(speed: int) -> int:
    """p_buffer_dist at ``speed`` tenths/step, in tenths (exact on the grid)."""
    return D.p_buffer_dist(speed * TENTH) // TENTH


@dataclass(frozen=True)
class ReachResult:
    safe: bool
    states: int
    iterations: int
    violation: Optional[tuple] = None    # (ego speed, lead speed, gap) in metres

    def describe(self) -> str:
        if self.safe:
            return f"no unsafe state among {self.states} reachable states ({self.iterations} rounds)"
        s, l, d = self.violation
        return f"unsafe state reachable: ego speed {s}, lead speed {l}, gap {d}"


def reachable_check(buffer: Callable[[int], int] = buffer_tenths, max_gap: int = 600,
                    min_initial_gap: int = D.BUFFER_DIST // TENTH + 1,
                    safe_gap: int = D.SAFE_GAP // TENTH) -> ReachResult:
    """Forward fixed point from every initial state (ego at rest, gap above buffer)."""
    n_s = SPEED_STEPS + 1
    n_d = max_gap + 1
    pb = np.array([buffer(s) for s in range(n_s)], dtype=np.int64)
    seen = np.zeros(n_s * n_s * n_d, dtype=bool)

    def index(s, l, d):
        return (s * n_s + l) * n_d + d

    l0, d0 = np.meshgrid(np.arange(n_s), np.arange(min_initial_gap, n_d), indexing="ij")
    front = np.unique(index(0, l0.ravel(), d0.ravel()))
    seen[front] = True
    rounds = 0
    while front.size:
        rounds += 1
        s, rest = np.divmod(front, n_s * n_d)
        l, d = np.divmod(rest, n_d)
        bad = d <= safe_gap
        if bad.any():
            i = int(np.argmax(bad))
            return ReachResult(False, int(seen.sum()), rounds,
                               (int(s[i]) / 10, int(l[i]) / 10, int(d[i]) / 10))
        forced = d <= pb[s]
        nd = np.minimum(d - s + l, max_gap)
        below = nd <= safe_gap
        if below.any():
            # the gap update happens regardless of throttle choice
            i = int(np.argmax(below))
            return ReachResult(False, int(seen.sum()), rounds,
                               (int(s[i]) / 10, int(l[i]) / 10, int(nd[i]) / 10))
        succ = []
        for dl in LEAD_DELTAS:
            nl = np.clip(l + dl, 0, SPEED_STEPS)
            for ds in EGO_DELTAS:
                mask = ~forced if ds != BRAKE else slice(None)
                ns = np.clip(s + ds, 0, SPEED_STEPS)
                succ.append(index(ns[mask], nl[mask], nd[mask]))
        nxt = np.concatenate(succ)
        fresh = np.zeros_like(seen)
        fresh[nxt] = True
        fresh &= ~seen
        seen |= fresh
        front = np.flatnonzero(fresh)
    return ReachResult(True, int(seen.sum()), rounds)


class ReachabilityChecker(ProofChecker):
    """Certifies ``C1 <= target`` when C1 guarantees every premise.

    The contract handed to ``check`` is a refinement condition built by
    ``algebra.refinement_contract``. The checker accepts when the target is
    the registered one, C1 has no assumptions, every premise formula is a
    top-level conjunct of C1's guarantees, and the reachability fixed point
    finds no unsafe state. The premises are what the abstraction relies on:
    accurate distance, accurate speed, the control law, and braking.
    """

    id = "aeb-reachability"

    def __init__(self, premises, target):
        self.premises = tuple(premises)
        self.target = target
        self._result: Optional[ReachResult] = None

    def result(self) -> ReachResult:
        if self._result is None:
            self._result = reachable_check()
        return self._result

    def certificate(self, contract, cert_id: str = "aeb-filter-reachability") -> ProofCertificate:
        payload = {"grid": "0.1 m", "max_gap": 60, "lead_deltas": list(D.LEAD_DELTAS),
                   "buffer": "p_buffer_dist"}
        return ProofCertificate(cert_id, contract.hash, self.id, payload)

    def check(self, certificate, contract):
        parts = _refinement_parts(contract.guarantees)
        if parts is None or contract.assumptions != A.TRUE:
            return CheckResult(False, "", "not a refinement condition")
        a1, g1, a2, g2 = parts
        if (a2, g2) != (self.target.assumptions, self.target.guarantees):
            return CheckResult(False, "", f"target is not {self.target.name!r}")
        if a1 != A.TRUE:
            return CheckResult(False, "", "refining contract must not carry assumptions")
        have = set(A.conjuncts(g1))
        missing = [p for p in self.premises if p not in have]
        if missing:
            return CheckResult(False, "", f"{len(missing)} premise(s) not guaranteed, first: "
                                          f"{render(missing[0])}")
        res = self.result()
        scope = (f"{len(self.premises)} premises; 0.1 m grid abstraction of the closed loop: "
                 f"{res.describe()}")
        return CheckResult(res.safe, scope, "" if res.safe else res.describe())


def _refinement_parts(f):
    """(A1, G1, A2, G2) from (A2 implies A1) and ((A1 implies G1) implies (A2 implies G2))."""
    if not (isinstance(f, A.And) and isinstance(f.left, A.Implies) and isinstance(f.right, A.Implies)):
        return None
    a2, a1 = f.left.left, f.left.right
    body1, body2 = f.right.left, f.right.right
    if not (isinstance(body1, A.Implies) and isinstance(body2, A.Implies)):
        return None
    if body1.left != a1 or body2.left != a2:
        return None
    return a1, body1.right, a2, body2.right
