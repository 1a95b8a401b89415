"""Binomial confidence machinery and test-outcome bookkeeping."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from decimal import Decimal, localcontext
from fractions import Fraction

from scipy.special import betainc, betaincinv


@dataclass(frozen=True)
class ProbBound:
    """A probability lower bound ``p`` holding with confidence ``c``."""
    p: float
    c: float

    def __post_init__(self):
        for name in ("p", "c"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0) or isinstance(v, bool):
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
            object.__setattr__(self, name, float(v))

    def as_tuple(self):
        return (self.p, self.c)


def round_down(x: Fraction) -> float:
    """Largest float that does not exceed ``x``."""
    f = float(x)
    if Fraction(f) > x:
        f = math.nextafter(f, -math.inf)
    return f


def _check_args(k, n, c):
    if not (isinstance(n, int) and n >= 1):
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not (isinstance(k, int) and 0 <= k <= n):
        raise ValueError(f"k must be an integer in [0, n], got {k!r}")
    if not 0.0 < c < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {c!r}")


def binomial_upper_tail(k: int, n: int, p: float) -> float:
    """P[Bin(n, p) >= k] via the regularized incomplete beta function."""
    if k <= 0:
        return 1.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    return float(betainc(k, n - k + 1, p))


def clopper_pearson_lower(k: int, n: int, c: float, tol: float = 1e-12) -> float:
    """One-sided Clopper-Pearson lower bound at confidence ``c``.

    Bisection on P[Bin(n, p) >= k] = 1 - c. The returned value is the low end
    of the final bracket, so floating error can only push the bound down.
    """
    _check_args(k, n, c)
    if k == 0:
        return 0.0
    alpha = 1.0 - c
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if binomial_upper_tail(k, n, mid) > alpha:
            hi = mid
        else:
            lo = mid
    return lo


def clopper_pearson_two_sided(k: int, n: int, c: float) -> tuple:
    """Equal-tailed two-sided interval with total coverage ``c``."""
    _check_args(k, n, c)
    a = (1.0 - c) / 2
    lo = 0.0 if k == 0 else float(betaincinv(k, n - k + 1, a))
    hi = 1.0 if k == n else float(betaincinv(k + 1, n - k, 1.0 - a))
    return lo, hi


# -- extended-precision oracle ----------------------------------------------

_ORACLE_PREC = 50


def exact_tail_oracle(k: int, n: int, p) -> Decimal:
    """P[Bin(n, p) >= k] by direct term summation at 50 significant digits.

    Independent of scipy; used to validate the production routine.
    """
    if not (isinstance(n, int) and n >= 0 and isinstance(k, int) and 0 <= k):
        raise ValueError("need integers 0 <= k, 0 <= n")
    if k > n:
        raise ValueError("k must not exceed n")
    with localcontext() as ctx:
        ctx.prec = _ORACLE_PREC
        p = Decimal(Fraction(p).numerator) / Decimal(Fraction(p).denominator)
        if not Decimal(0) <= p <= Decimal(1):
            raise ValueError("p must lie in [0, 1]")
        if k == 0:
            return Decimal(1)
        if p == 0:
            return Decimal(0)
        if p == 1:
            return Decimal(1)
        q = 1 - p
        term = Decimal(math.comb(n, k)) * p ** k * q ** (n - k)
        total = term
        ratio = p / q
        for i in range(k, n):
            term = term * (n - i) / (i + 1) * ratio
            total += term
        return +total


def oracle_lower_bound(k: int, n: int, c: float, tol: float = 1e-10) -> float:
    """Clopper-Pearson lower bound by bisection on the extended-precision tail."""
    _check_args(k, n, c)
    if k == 0:
        return 0.0
    with localcontext() as ctx:
        ctx.prec = _ORACLE_PREC
        alpha = 1 - Decimal(c)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if exact_tail_oracle(k, n, mid) > alpha:
            hi = mid
        else:
            lo = mid
    return lo


# -- outcome bookkeeping -----------------------------------------------------

@dataclass(frozen=True)
class TestingOutcome:
    """Counters from one testing run.

    ``n_sampled`` counts every classified scene draw; rejected draws are
    excluded from the effective sample size. For the partitioned weak-merge
    check, ``n_static_pass`` records how many of ``n_verified`` were settled
    from the initial scene alone. Aborted and excluded traces are reported but
    do not enter any count used for the bound.
    """
    __test__ = False

    n_sampled: int = 0
    n_rejected: int = 0
    n_verified: int = 0
    n_a_violated: int = 0
    n_g_violated: int = 0
    n_static_pass: int = 0
    n_aborted: int = 0
    n_excluded: int = 0
    simulated_steps: int = 0
    wall_seconds: float = field(default=0.0, compare=False)

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name != "wall_seconds" and (not isinstance(v, int) or v < 0):
                raise ValueError(f"{f.name} must be a non-negative integer")
        total = self.n_rejected + self.n_verified + self.n_a_violated + self.n_g_violated
        if total != self.n_sampled:
            raise ValueError(
                f"n_sampled={self.n_sampled} but categories sum to {total}")
        if self.n_static_pass > self.n_verified:
            raise ValueError("static passes are a subset of verified traces")

    @classmethod
    def from_partition(cls, sampled: int, rejected: int, static_pass: int,
                       tested_verified: int, g_violated: int, a_violated: int = 0,
                       **extra) -> "TestingOutcome":
        return cls(n_sampled=sampled, n_rejected=rejected,
                   n_verified=static_pass + tested_verified,
                   n_a_violated=a_violated, n_g_violated=g_violated,
                   n_static_pass=static_pass, **extra)

    @property
    def k(self) -> int:
        return self.n_verified + self.n_a_violated

    @property
    def n_effective(self) -> int:
        return self.n_sampled - self.n_rejected

    @property
    def mean_correctness(self) -> Fraction:
        if self.n_effective == 0:
            raise ZeroDivisionError("no effective samples")
        return Fraction(self.k, self.n_effective)

    @property
    def tested(self) -> "TestingOutcome":
        """Counters restricted to traces that were actually simulated and checked."""
        return TestingOutcome(
            n_sampled=self.n_sampled - self.n_static_pass, n_rejected=self.n_rejected,
            n_verified=self.n_verified - self.n_static_pass,
            n_a_violated=self.n_a_violated, n_g_violated=self.n_g_violated,
            simulated_steps=self.simulated_steps)

    def merge(self, other: "TestingOutcome") -> "TestingOutcome":
        vals = {f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)}
        return TestingOutcome(**vals)

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("wall_seconds")
        return d

    @classmethod
    def from_json(cls, d: dict) -> "TestingOutcome":
        return cls(**{k: v for k, v in d.items() if k != "wall_seconds"})
