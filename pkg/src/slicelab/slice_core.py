"""Domain foundation: k-subsets of [n], colex numbering, slice functions.

Positions are 1-indexed throughout; a subset of [n] is stored as a bitmask
whose bit ``i-1`` encodes membership of position ``i``.  A slice function
maps the k-element subsets of [n] to {0,1}; it is either table-backed
(a bit per subset, indexed by colex rank) or oracle-backed (an evaluation
callable, optionally with a feasibility hook that answers consistency
queries without enumeration).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .errors import DomainError

MAX_TABLE_ENTRIES = 2**32


def binom_ext(a: int, b: int) -> int:
    """Binomial coefficient with the out-of-range convention.

    Returns C(a,b) for 0 <= b <= a and 0 for every other argument pair
    (b < 0, b > a, or a < 0).  Exact arbitrary precision.
    """
    if a < 0 or b < 0 or b > a:
        return 0
    return math.comb(a, b)


@dataclass(frozen=True)
class SliceDomain:
    """The slice binom([n], k): all k-element subsets of {1,...,n}."""

    n: int
    k: int

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise DomainError(f"ground-set size must be positive, got n={self.n}")
        if not 0 <= self.k <= self.n:
            raise DomainError(f"subset size k={self.k} outside [0, {self.n}]")
        if self.n > 63:
            raise DomainError(f"n={self.n} exceeds bitmask-representable limit 63")

    @property
    def size(self) -> int:
        """Number of slice elements, binom(n, k)."""
        return math.comb(self.n, self.k)

    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def elements(self) -> Iterator[int]:
        """All slice elements as bitmasks, in colex order."""
        for r in range(self.size):
            yield colex_unrank(r, self)

    def positions(self, mask: int) -> list[int]:
        """1-indexed positions present in a bitmask, ascending."""
        out = []
        i = 1
        while mask:
            if mask & 1:
                out.append(i)
            mask >>= 1
            i += 1
        return out

    def mask_of(self, positions) -> int:
        """Bitmask of an iterable of 1-indexed positions."""
        m = 0
        for p in positions:
            if not 1 <= p <= self.n:
                raise DomainError(f"position {p} outside [1, {self.n}]")
            m |= 1 << (p - 1)
        return m


def colex_rank(mask: int, domain: SliceDomain) -> int:
    """Colexicographic rank of a slice element.

    With elements c_1 < c_2 < ... < c_k, the rank is sum_i C(c_i - 1, i).
    """
    if mask.bit_count() != domain.k:
        raise DomainError(
            f"mask has {mask.bit_count()} elements, expected k={domain.k}"
        )
    if mask >> domain.n:
        raise DomainError("mask has positions beyond n")
    rank = 0
    idx = 1
    for p in domain.positions(mask):
        rank += binom_ext(p - 1, idx)
        idx += 1
    return rank


def colex_unrank(rank: int, domain: SliceDomain) -> int:
    """Inverse of colex_rank: greedily peel off the largest element."""
    if not 0 <= rank < domain.size:
        raise DomainError(f"rank {rank} outside [0, {domain.size})")
    mask = 0
    r = rank
    for i in range(domain.k, 0, -1):
        # Largest c with C(c-1, i) <= r; elements are at most n.
        c = i  # smallest possible value of the i-th smallest element
        for cand in range(domain.n, i - 1, -1):
            if binom_ext(cand - 1, i) <= r:
                c = cand
                break
        r -= binom_ext(c - 1, i)
        mask |= 1 << (c - 1)
    return mask


@dataclass(frozen=True)
class QueryState:
    """Positions queried so far and the subset of them answered 'in A'."""

    queried: int = 0
    ones: int = 0

    def validate(self, domain: SliceDomain) -> None:
        if self.ones & ~self.queried:
            raise DomainError("ones must be a subset of queried positions")
        if self.queried >> domain.n:
            raise DomainError("queried positions beyond n")
        ones = self.ones.bit_count()
        zeros = self.queried.bit_count() - ones
        if ones > domain.k:
            raise DomainError(f"{ones} one-answers exceed k={domain.k}")
        if zeros > domain.n - domain.k:
            raise DomainError(
                f"{zeros} zero-answers exceed n-k={domain.n - domain.k}"
            )

    def child(self, position: int, answer: int) -> "QueryState":
        bit = 1 << (position - 1)
        if self.queried & bit:
            raise DomainError(f"position {position} already queried")
        return QueryState(self.queried | bit, self.ones | (bit if answer else 0))

    def completion_count(self, domain: SliceDomain) -> int:
        """Number of slice elements consistent with this state."""
        free = domain.n - self.queried.bit_count()
        need = domain.k - self.ones.bit_count()
        return binom_ext(free, need)


def _free_position_bits(domain: SliceDomain, queried: int) -> list[int]:
    full = domain.full_mask()
    free = full & ~queried
    return [1 << (p - 1) for p in domain.positions(free)]


def _completions(domain: SliceDomain, state: QueryState) -> Iterator[int]:
    """All slice elements consistent with a query state."""
    free_bits = _free_position_bits(domain, state.queried)
    need = domain.k - state.ones.bit_count()
    base = state.ones
    from itertools import combinations

    for chosen in combinations(free_bits, need):
        m = base
        for b in chosen:
            m |= b
        yield m


@dataclass
class SliceFunction:
    """A Boolean function on a slice, table- or oracle-backed.

    ``table`` is a bit vector over colex ranks packed into an int (bit r =
    value on the element of rank r).  ``oracle`` is a callable mask -> {0,1}.
    ``feasibility_hook``, when given, answers consistency queries for
    oracle-backed functions: hook(state) -> set of achievable values.
    """

    domain: SliceDomain
    table: Optional[int] = None
    oracle: Optional[Callable[[int], int]] = None
    feasibility_hook: Optional[Callable[[QueryState], frozenset[int]]] = field(
        default=None, repr=False
    )
    name: str = ""

    def __post_init__(self) -> None:
        if (self.table is None) == (self.oracle is None):
            raise DomainError("exactly one of table/oracle backing required")
        if self.table is not None:
            if self.domain.size > MAX_TABLE_ENTRIES:
                raise DomainError(
                    f"table backing limited to {MAX_TABLE_ENTRIES} entries, "
                    f"slice has {self.domain.size}"
                )
            if self.table >> self.domain.size:
                raise DomainError("table has bits beyond binom(n,k) entries")

    @classmethod
    def from_table_bits(cls, domain: SliceDomain, bits: str, name: str = "") -> "SliceFunction":
        if len(bits) != domain.size or set(bits) - {"0", "1"}:
            raise DomainError(
                f"table must be {domain.size} characters of 0/1, got {len(bits)}"
            )
        table = 0
        for r, ch in enumerate(bits):
            if ch == "1":
                table |= 1 << r
        return cls(domain, table=table, name=name)

    @classmethod
    def from_callable(
        cls, domain: SliceDomain, fn: Callable[[int], int], name: str = ""
    ) -> "SliceFunction":
        """Materialize a callable into a table (for small slices)."""
        table = 0
        for r in range(domain.size):
            if fn(colex_unrank(r, domain)):
                table |= 1 << r
        return cls(domain, table=table, name=name)

    def __call__(self, mask: int) -> int:
        if mask.bit_count() != self.domain.k or mask >> self.domain.n:
            raise DomainError("argument is not a slice element")
        if self.table is not None:
            return (self.table >> colex_rank(mask, self.domain)) & 1
        v = int(self.oracle(mask))
        if v not in (0, 1):
            raise DomainError(f"oracle returned {v}, expected 0 or 1")
        return v

    def table_bits(self) -> str:
        """The truth table as a 0/1 string in colex order."""
        if self.table is not None:
            t = self.table
            return "".join("1" if (t >> r) & 1 else "0" for r in range(self.domain.size))
        return "".join(
            str(self(colex_unrank(r, self.domain))) for r in range(self.domain.size)
        )

    def to_text(self) -> str:
        return f"slice {self.domain.n} {self.domain.k}\n{self.table_bits()}\n"

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.domain.n, "k": self.domain.k, "table": self.table_bits()}
        )

    @classmethod
    def from_text(cls, text: str) -> "SliceFunction":
        lines = text.strip().splitlines()
        if not lines or not lines[0].startswith("slice "):
            raise DomainError("expected header line 'slice n k'")
        parts = lines[0].split()
        if len(parts) != 3:
            raise DomainError("expected header line 'slice n k'")
        domain = SliceDomain(int(parts[1]), int(parts[2]))
        bits = "".join(lines[1:])
        return cls.from_table_bits(domain, bits)

    @classmethod
    def from_json(cls, text: str) -> "SliceFunction":
        obj = json.loads(text)
        domain = SliceDomain(int(obj["n"]), int(obj["k"]))
        return cls.from_table_bits(domain, str(obj["table"]))


def consistent_values(f: SliceFunction, state: QueryState) -> frozenset[int]:
    """Image of f over the slice elements consistent with a query state.

    For table backing the consistent elements are enumerated; an
    oracle-backed function delegates to its feasibility hook when present.
    Raises DomainError on states with no consistent element.
    """
    state.validate(f.domain)
    if f.table is None and f.feasibility_hook is not None:
        vals = frozenset(f.feasibility_hook(state))
        if not vals or vals - {0, 1}:
            raise DomainError(f"feasibility hook returned invalid set {vals}")
        return vals
    seen: set[int] = set()
    for mask in _completions(f.domain, state):
        seen.add(f(mask))
        if len(seen) == 2:
            break
    if not seen:
        raise DomainError("no slice element is consistent with the state")
    return frozenset(seen)


def constant_function(domain: SliceDomain, value: int) -> SliceFunction:
    table = ((1 << domain.size) - 1) if value else 0
    return SliceFunction(domain, table=table, name=f"const-{value}")


def dictator_function(domain: SliceDomain, position: int) -> SliceFunction:
    """f(A) = [position in A]."""
    bit = 1 << (position - 1)
    return SliceFunction.from_callable(
        domain, lambda m: 1 if m & bit else 0, name=f"dictator-{position}"
    )
