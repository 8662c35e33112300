"""Counting upper bounds on decision-tree numbers and their certification.

The bound counts labelled decision trees level by level: a level with
vertex budget V and leaf budget L contributes a factor ell^(V-L) * 2^L,
where ell is the number of yet-unqueried positions at that level.  The
full product is astronomically large, so it is carried exactly in a
factored form (LogMass) and compared against 2^binom(n,k) in log space
with directed rounding: no claim is ever made unless the safe end of the
enclosing interval proves it.

All logarithms are base 2.  C(m) denotes the central binomial coefficient
binom(m, floor(m/2)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import gmpy2
from gmpy2 import mpfr

from .errors import DomainError, InternalCheckError, ResourceLimitError
from .slice_core import binom_ext

DEFAULT_PRECISION = 128
MAX_PRECISION = 4096
MAX_EXPANSION_BITS = 1 << 24


def _ctx_up(precision: int):
    return gmpy2.context(precision=precision, round=gmpy2.RoundUp)


def _ctx_down(precision: int):
    return gmpy2.context(precision=precision, round=gmpy2.RoundDown)


def central_binom(m: int) -> int:
    """C(m) = binom(m, floor(m/2))."""
    if m < 0:
        raise DomainError(f"central binomial undefined for m={m}")
    return math.comb(m, m // 2)


@dataclass
class RatioInterval:
    """A certified enclosure lo <= value <= hi at a given working precision."""

    lo: mpfr
    hi: mpfr
    precision_bits: int

    def width(self) -> mpfr:
        with _ctx_up(self.precision_bits):
            return self.hi - self.lo

    def certifies_below(self, bound) -> bool:
        return self.hi < bound

    def certifies_above(self, bound) -> bool:
        return self.lo > bound

    def __repr__(self) -> str:
        return f"RatioInterval[{self.lo} .. {self.hi}]@{self.precision_bits}b"


@dataclass
class LogMass:
    """Exact factored magnitude 2^pow2 * prod(base^exponent).

    Bases 1 and 2 are folded into pow2 on construction; remaining bases
    are at least 3 and exponents nonnegative, so log2 of the mass is a
    sum of nonnegative terms and directed rounding gives safe bounds.
    """

    pow2: int = 0
    factors: dict[int, int] = field(default_factory=dict)

    def multiply_power(self, base: int, exponent: int) -> None:
        if exponent < 0:
            raise InternalCheckError(
                f"negative exponent {exponent} for base {base}"
            )
        if exponent == 0 or base == 1:
            return
        if base == 2:
            self.pow2 += exponent
        else:
            self.factors[base] = self.factors.get(base, 0) + exponent

    def log2_interval(self, precision_bits: int = DEFAULT_PRECISION) -> RatioInterval:
        with _ctx_down(precision_bits):
            lo = mpfr(self.pow2)
            for base, exp in sorted(self.factors.items()):
                lo += mpfr(exp) * gmpy2.log2(mpfr(base))
        with _ctx_up(precision_bits):
            hi = mpfr(self.pow2)
            for base, exp in sorted(self.factors.items()):
                hi += mpfr(exp) * gmpy2.log2(mpfr(base))
        return RatioInterval(lo, hi, precision_bits)

    def to_int(self, max_bits: int = MAX_EXPANSION_BITS) -> int:
        """Exact integer value; guarded against astronomically large masses."""
        est = self.log2_interval(64).hi
        if est > max_bits:
            raise ResourceLimitError(
                f"mass has ~2^{est} magnitude, expansion budget {max_bits} bits",
                attempted=int(est),
            )
        value = 1 << self.pow2
        for base, exp in self.factors.items():
            value *= base**exp
        return value


@dataclass
class BoundCertificate:
    n: int
    k: int
    t: Optional[int]
    verdict: str  # "certified" | "not_certified"
    margin: Optional[RatioInterval] = None
    indeterminate_t: tuple[int, ...] = ()

    def to_json_dict(self) -> dict:
        d = {
            "n": self.n,
            "k": self.k,
            "t": self.t,
            "verdict": self.verdict,
            "binom": str(math.comb(self.n, self.k)),
        }
        if self.margin is not None:
            with _ctx_up(self.margin.precision_bits):
                d["log2_g_hi"] = str(self.margin.hi + mpfr(math.comb(self.n, self.k)))
            d["margin_hi"] = str(self.margin.hi)
        return d


@lru_cache(maxsize=None)
def _level_vertex_bound(n: int, k: int, ell: int) -> int:
    """Upper bound on vertices at the level with ell unqueried positions:
    sum of binom(n-ell, i) for i from max(0, k-ell) to k."""
    return sum(binom_ext(n - ell, i) for i in range(max(0, k - ell), k + 1))


@lru_cache(maxsize=None)
def _level_leaf_count(n: int, k: int, ell: int) -> int:
    """Forced-leaf count at that level: binom(n-ell-1, k-1) + binom(n-ell-1, n-k+1)."""
    return binom_ext(n - ell - 1, k - 1) + binom_ext(n - ell - 1, n - k + 1)


def level_counts(n: int, k: int, ell: int) -> tuple[int, int]:
    """(vertex bound, leaf count) for the level with ell unqueried positions."""
    return _level_vertex_bound(n, k, ell), _level_leaf_count(n, k, ell)


def g_logmass(n: int, k: int, t: int) -> LogMass:
    """Exact factored value of the decision-tree count bound g(n,k,t).

    g(n,k,t) = 2^(sum of binom(n-t,i), i=max(0,k-t)..k)
               * prod over ell=t+1..n of ell^(V_ell - L_ell) * 2^(L_ell)
    with V, L the per-level vertex bound and leaf count.
    """
    if not (0 <= k <= n):
        raise DomainError(f"k={k} outside [0, {n}]")
    if not (0 <= t <= n):
        raise DomainError(f"t={t} outside [0, {n}]")
    mass = LogMass()
    mass.pow2 += _level_vertex_bound(n, k, t)
    for ell in range(t + 1, n + 1):
        vertices = _level_vertex_bound(n, k, ell)
        leaves = _level_leaf_count(n, k, ell)
        inner = vertices - leaves
        if inner < 0:
            raise InternalCheckError(
                f"negative inner-vertex exponent at n={n} k={k} ell={ell}: "
                f"{vertices} vertices < {leaves} leaves"
            )
        mass.multiply_power(ell, inner)
        mass.multiply_power(2, leaves)
    return mass


def _kozep_numerator(n: int, t: int) -> mpfr:
    """(t+1)*C(n-t) + sum over ell=t+1..n of (ell*log2(ell) + 2)*C(n-ell),
    evaluated under the ambient rounding context (all terms nonnegative)."""
    acc = mpfr(t + 1) * mpfr(central_binom(n - t))
    for ell in range(t + 1, n + 1):
        weight = mpfr(ell) * gmpy2.log2(mpfr(ell)) + mpfr(2)
        acc += weight * mpfr(central_binom(n - ell))
    return acc


def kozep_ratio(n: int, t: int, precision_bits: int = DEFAULT_PRECISION) -> RatioInterval:
    """Enclosure of the central-binomial ratio whose being below 1 drives
    the tree-count certification at k = n/2.

    ratio(n,t) = [ (t+1)*C(n-t) + sum_{ell=t+1}^{n} (ell*log2(ell)+2)*C(n-ell) ] / C(n)
    """
    if n < 1:
        raise DomainError(f"n={n} must be positive")
    if not 0 <= t <= n:
        raise DomainError(f"t={t} outside [0, {n}]")
    if precision_bits < 64:
        raise DomainError("precision_bits must be at least 64")
    den = central_binom(n)
    # Denominator conversion must round opposite to the quotient direction.
    with _ctx_down(precision_bits):
        den_lo = mpfr(den)
        num_lo = _kozep_numerator(n, t)
    with _ctx_up(precision_bits):
        den_hi = mpfr(den)
        num_hi = _kozep_numerator(n, t)
    with _ctx_up(precision_bits):
        hi = num_hi / den_lo
    with _ctx_down(precision_bits):
        lo = num_lo / den_hi
    return RatioInterval(lo, hi, precision_bits)


def kozep_chain_constants(precision_bits: int = 256) -> dict[str, RatioInterval]:
    """The three-stage majorization chain behind the all-n tree-count bound.

    stage1:  6 * C(94) / C(99)                         (claimed < 0.2)
    stage2:  sum_{ell=6}^{15} (ell*log2(ell)+2) * C(99-ell) / C(99)
                                                       (claimed < 0.71)
    stage3:  0.2 + 0.71 + 66 * (C(83)/C(99)) * 3       (claimed < 0.92)

    Each value is returned as a directed-rounding enclosure; callers
    assert the claims on the interval's safe end.
    """
    den = central_binom(99)

    def stage1_num() -> mpfr:
        return mpfr(6) * mpfr(central_binom(94))

    def stage2_num() -> mpfr:
        acc = mpfr(0)
        for ell in range(6, 16):
            weight = mpfr(ell) * gmpy2.log2(mpfr(ell)) + mpfr(2)
            acc += weight * mpfr(central_binom(99 - ell))
        return acc

    def tail_num() -> mpfr:
        return mpfr(66) * mpfr(central_binom(83)) * mpfr(3)

    out: dict[str, RatioInterval] = {}
    with _ctx_down(precision_bits):
        den_lo = mpfr(den)
    with _ctx_up(precision_bits):
        den_hi = mpfr(den)
    for name, num_fn in (("stage1", stage1_num), ("stage2", stage2_num), ("tail", tail_num)):
        with _ctx_up(precision_bits):
            hi = num_fn() / den_lo
        with _ctx_down(precision_bits):
            lo = num_fn() / den_hi
        out[name] = RatioInterval(lo, hi, precision_bits)
    with _ctx_up(precision_bits):
        total_hi = mpfr("0.2") + mpfr("0.71") + out["tail"].hi
    with _ctx_down(precision_bits):
        total_lo = mpfr("0.2") + mpfr("0.71") + out["tail"].lo
    out["stage3"] = RatioInterval(total_lo, total_hi, precision_bits)
    return out


@dataclass
class RangeEntry:
    n: int
    verdict: str  # "certified" | "refuted" | "indeterminate"
    hi: mpfr
    precision_bits: int


@dataclass
class RangeReport:
    t: int
    entries: list[RangeEntry]

    @property
    def all_certified(self) -> bool:
        return all(e.verdict == "certified" for e in self.entries)

    @property
    def indeterminate(self) -> list[RangeEntry]:
        return [e for e in self.entries if e.verdict == "indeterminate"]

    @property
    def max_hi(self) -> mpfr:
        return max(e.hi for e in self.entries)


def verify_kozep_range(
    t: int,
    n_lo: int,
    n_hi: int,
    threshold=1,
    start_precision: int = DEFAULT_PRECISION,
    max_precision: int = MAX_PRECISION,
) -> RangeReport:
    """Certify ratio(n,t) < threshold for each n in [n_lo, n_hi].

    Precision escalates by doubling until the enclosure separates from the
    threshold; an entry that never separates is reported indeterminate,
    never claimed.
    """
    if n_lo < t:
        raise DomainError(f"n_lo={n_lo} below t={t}")
    entries = []
    for n in range(n_lo, n_hi + 1):
        precision = start_precision
        while True:
            r = kozep_ratio(n, t, precision)
            if r.hi < threshold:
                entries.append(RangeEntry(n, "certified", r.hi, precision))
                break
            if r.lo >= threshold:
                entries.append(RangeEntry(n, "refuted", r.hi, precision))
                break
            if precision >= max_precision:
                entries.append(RangeEntry(n, "indeterminate", r.hi, precision))
                break
            precision *= 2
    return RangeReport(t, entries)


def alfa_inequality(
    alpha: Fraction,
    c_start: int,
    n: int,
    precision_bits: int = DEFAULT_PRECISION,
) -> str:
    """Check sum_{ell=c_start}^{n} log2(ell) * sum_i binom(n-ell, i) < binom(n, k)
    at k = floor(alpha*n), the inner sum running i = max(0, k-ell) .. k.

    Returns "holds", "fails", or "indeterminate".  An empty outer sum
    (c_start > n) holds vacuously.
    """
    if not Fraction(0) < alpha < Fraction(1, 2):
        raise DomainError(f"alpha={alpha} outside (0, 1/2)")
    if c_start < 2:
        raise DomainError(f"c_start={c_start} must be at least 2")
    k = (alpha.numerator * n) // alpha.denominator
    rhs = math.comb(n, k)

    def lhs_under_context() -> mpfr:
        acc = mpfr(0)
        for ell in range(c_start, n + 1):
            inner = sum(binom_ext(n - ell, i) for i in range(max(0, k - ell), k + 1))
            acc += gmpy2.log2(mpfr(ell)) * mpfr(inner)
        return acc

    with _ctx_up(precision_bits):
        hi = lhs_under_context()
    if hi < rhs:
        return "holds"
    with _ctx_down(precision_bits):
        lo = lhs_under_context()
    if lo >= rhs:
        return "fails"
    return "indeterminate"


def _margin_interval(mass: LogMass, rhs: int, precision: int) -> RatioInterval:
    """Enclosure of log2(mass) - rhs."""
    li = mass.log2_interval(precision)
    with _ctx_down(precision):
        rhs_lo = mpfr(rhs)
    with _ctx_up(precision):
        rhs_hi = mpfr(rhs)
        hi = li.hi - rhs_lo
    with _ctx_down(precision):
        lo = li.lo - rhs_hi
    return RatioInterval(lo, hi, precision)


def certify_t(
    n: int,
    k: int,
    t: int,
    start_precision: int = DEFAULT_PRECISION,
    max_precision: int = MAX_PRECISION,
) -> tuple[str, RatioInterval]:
    """Verdict for a single t: does g(n,k,t) < 2^binom(n,k) hold?

    Returns ("certified" | "refuted" | "indeterminate", margin interval of
    log2(g) - binom(n,k) at the deciding precision).
    """
    mass = g_logmass(n, k, t)
    rhs = math.comb(n, k)
    precision = start_precision
    while True:
        margin = _margin_interval(mass, rhs, precision)
        if margin.hi < 0:
            return "certified", margin
        if margin.lo >= 0:
            return "refuted", margin
        if precision >= max_precision:
            return "indeterminate", margin
        precision *= 2


def certify_E_upper(
    n: int,
    k: int,
    t_max: Optional[int] = None,
    start_precision: int = DEFAULT_PRECISION,
    max_precision: int = MAX_PRECISION,
) -> BoundCertificate:
    """Smallest t with g(n,k,t) < 2^binom(n,k): a proof that some function
    on the slice needs more than n-t-1 queries, i.e. the saving is at most t.

    Scans t upward from 0; the first certified t is minimal because every
    smaller t was checked and not certified.  Indeterminate comparisons
    (precision ceiling) are recorded and never counted as certified.
    """
    if not 1 <= k <= n - 1:
        raise DomainError(f"k={k} outside [1, {n - 1}]")
    limit = n if t_max is None else min(t_max, n)
    indeterminate = []
    for t in range(limit + 1):
        verdict, margin = certify_t(n, k, t, start_precision, max_precision)
        if verdict == "certified":
            return BoundCertificate(
                n, k, t, "certified", margin, tuple(indeterminate)
            )
        if verdict == "indeterminate":
            indeterminate.append(t)
    return BoundCertificate(n, k, None, "not_certified", None, tuple(indeterminate))


def scan_certified_t(
    n: int,
    k: int,
    t_max: Optional[int] = None,
    start_precision: int = DEFAULT_PRECISION,
    max_precision: int = MAX_PRECISION,
) -> list[tuple[int, str, RatioInterval]]:
    """Per-t verdicts over the whole scanned range (for sweeps and the
    upward-closure report)."""
    if not 1 <= k <= n - 1:
        raise DomainError(f"k={k} outside [1, {n - 1}]")
    limit = n if t_max is None else min(t_max, n)
    out = []
    for t in range(limit + 1):
        verdict, margin = certify_t(n, k, t, start_precision, max_precision)
        out.append((t, verdict, margin))
    return out
