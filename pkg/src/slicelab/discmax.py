"""The bounded-prefix-discrepancy function family and its feasibility oracles.

A board is a partial +/-1 assignment of n cells (0 = unqueried).  The
function disc_max(d) on the balanced slice is true iff every prefix has
signed sum of absolute value at most d.  The exact oracle decides, for a
partial board, whether a balanced completion can make the function true
(all prefixes stay within d) or false (some prefix escapes d); these
answers power consistency queries for the query-game solver without any
enumeration.

The oracle walks the board once, carrying the set of reachable prefix
sums as a bitmask (bit index = sum + n), so a feasibility call is O(n)
word operations.  Balance needs no extra bookkeeping: after p assigned
cells with prefix sum s the number of +1s is (p+s)/2, so requiring final
sum 0 enforces exactly n/2 ones.

Half-integer thresholds (d/2, unq/2) are compared in doubled integers;
no floating point appears anywhere in this module.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .errors import DomainError, InternalCheckError, PreconditionError
from .query_solver import DepthResult, solve_depth
from .slice_core import QueryState, SliceDomain, SliceFunction

TRUE_VALUE = "true_value"
FALSE_VALUE = "false_value"

_CELL_CHARS = {1: "+", -1: "-", 0: "."}
_CHAR_CELLS = {"+": 1, "-": -1, ".": 0}


@dataclass(frozen=True)
class Board:
    """Cells over {-1, 0, +1}; index 0 of ``cells`` is position 1."""

    cells: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(c not in (-1, 0, 1) for c in self.cells):
            raise DomainError("cells must be -1, 0, or +1")

    @property
    def n(self) -> int:
        return len(self.cells)

    @classmethod
    def empty(cls, n: int) -> "Board":
        return cls((0,) * n)

    @classmethod
    def from_string(cls, text: str) -> "Board":
        try:
            return cls(tuple(_CHAR_CELLS[ch] for ch in text.strip()))
        except KeyError as e:
            raise DomainError(f"bad board character {e.args[0]!r}") from None

    def __str__(self) -> str:
        return "".join(_CELL_CHARS[c] for c in self.cells)

    def set(self, position: int, value: int) -> "Board":
        if not 1 <= position <= self.n:
            raise DomainError(f"position {position} outside [1, {self.n}]")
        if self.cells[position - 1] != 0:
            raise DomainError(f"position {position} already set")
        if value not in (-1, 1):
            raise DomainError(f"value must be +1 or -1, got {value}")
        cells = list(self.cells)
        cells[position - 1] = value
        return Board(tuple(cells))

    def count(self, value: int) -> int:
        return sum(1 for c in self.cells if c == value)

    def is_complete(self) -> bool:
        return all(c != 0 for c in self.cells)

    def is_slice_consistent(self) -> bool:
        half = self.n // 2
        return (
            self.n % 2 == 0
            and self.count(1) <= half
            and self.count(-1) <= half
        )

    def unqueried_positions(self) -> list[int]:
        return [i + 1 for i, c in enumerate(self.cells) if c == 0]

    @classmethod
    def from_query_state(cls, n: int, state: QueryState) -> "Board":
        cells = []
        for i in range(n):
            bit = 1 << i
            if state.queried & bit:
                cells.append(1 if state.ones & bit else -1)
            else:
                cells.append(0)
        return cls(tuple(cells))

    def to_slice_mask(self) -> int:
        """Bitmask of +1 positions (the slice element), for complete boards."""
        if not self.is_complete():
            raise DomainError("board is not complete")
        m = 0
        for i, c in enumerate(self.cells):
            if c == 1:
                m |= 1 << i
        return m


@dataclass(frozen=True)
class IntervalStats:
    disc: int
    unq: int


@dataclass
class FeasibilityVerdict:
    feasible: bool
    witness: Optional[Board] = None


def interval_stats(board: Board, i: int, j: int) -> IntervalStats:
    """Signed sum and unqueried count over positions i..j (1-indexed)."""
    if not 1 <= i <= j <= board.n:
        raise DomainError(f"bad interval [{i}, {j}] on n={board.n}")
    window = board.cells[i - 1 : j]
    return IntervalStats(sum(window), sum(1 for c in window if c == 0))


def eval_discmax(board: Board, d: int) -> int:
    """1 iff every prefix sum of a complete board stays within |.| <= d."""
    if not board.is_complete():
        raise DomainError("eval requires a complete board")
    disc = 0
    for c in board.cells:
        disc += c
        if abs(disc) > d:
            return 0
    return 1


def _reach_masks(board: Board, d: int, target: str) -> tuple[list[int], list[int]]:
    """Forward reachability of prefix sums, one bitmask per position.

    Bit (s + n) of mask[p] is set iff prefix sum s is reachable after the
    first p cells.  For the true target, sums are clamped to |s| <= d; for
    the false target two mask families are tracked, "still within d" and
    "escaped d at some prefix" (returned as the second list).
    """
    n = board.n
    offset = n
    if target == TRUE_VALUE:
        window = 0
        for s in range(-min(d, n), min(d, n) + 1):
            window |= 1 << (s + offset)
    else:
        window = (1 << (2 * n + 1)) - 1
    inside = [0] * (n + 1)
    escaped = [0] * (n + 1)
    inside[0] = 1 << offset
    full = (1 << (2 * n + 1)) - 1
    d_window = 0
    for s in range(-min(d, n), min(d, n) + 1):
        d_window |= 1 << (s + offset)
    for p, cell in enumerate(board.cells):
        if cell == 1:
            step_in = (inside[p] << 1) & full
            step_esc = (escaped[p] << 1) & full
        elif cell == -1:
            step_in = inside[p] >> 1
            step_esc = escaped[p] >> 1
        else:
            step_in = ((inside[p] << 1) | (inside[p] >> 1)) & full
            step_esc = ((escaped[p] << 1) | (escaped[p] >> 1)) & full
        if target == TRUE_VALUE:
            inside[p + 1] = step_in & d_window
            escaped[p + 1] = 0
        else:
            inside[p + 1] = step_in & d_window
            escaped[p + 1] = step_esc | (step_in & ~d_window)
    return inside, escaped


def feasible_exact(board: Board, d: int, target: str) -> FeasibilityVerdict:
    """Does some balanced completion realize the target function value?

    target true_value: all prefixes within d; target false_value: some
    prefix escapes d.  Returns a witness completion when feasible.
    """
    if target not in (TRUE_VALUE, FALSE_VALUE):
        raise DomainError(f"unknown target {target!r}")
    if not board.is_slice_consistent():
        raise DomainError("board is not slice-consistent (n even, counts <= n/2)")
    if d < 0:
        raise DomainError("d must be nonnegative")
    n = board.n
    offset = n
    inside, escaped = _reach_masks(board, d, target)
    goal_bit = 1 << offset  # final sum 0 = balanced
    if target == TRUE_VALUE:
        if not inside[n] & goal_bit:
            return FeasibilityVerdict(False)
    else:
        if not escaped[n] & goal_bit:
            return FeasibilityVerdict(False)

    # Walk backwards to extract one witness path.
    cells = list(board.cells)
    want_sum = 0
    want_escaped = target == FALSE_VALUE
    for p in range(n, 0, -1):
        cell = board.cells[p - 1]
        choices = (cell,) if cell != 0 else (-1, 1)
        for value in choices:
            prev = want_sum - value
            if abs(prev) > n:
                continue
            bit = 1 << (prev + offset)
            if want_escaped:
                # Previous state may be escaped already, or escape happens now.
                if escaped[p - 1] & bit:
                    cells[p - 1] = value
                    want_sum = prev
                    break
                if inside[p - 1] & bit and abs(want_sum) > d:
                    cells[p - 1] = value
                    want_sum = prev
                    want_escaped = False
                    break
            else:
                if inside[p - 1] & bit:
                    cells[p - 1] = value
                    want_sum = prev
                    break
        else:
            raise InternalCheckError("witness reconstruction lost the path")
    witness = Board(tuple(cells))
    return FeasibilityVerdict(True, witness)


VARIANTS = ("i", "ii", "i_prime", "ii_prime")


def claim_condition(board: Board, d: int, variant: str) -> bool:
    """Exact evaluation of the four sufficient-condition hypotheses.

    i:        |disc(1,j)| <= d/2 for every prefix j
    ii:       |disc(1,j)| <= d for every j, and >= 3d+1 unqueried cells
    i_prime:  |disc(i,j)| <= d + unq(i,j) - 3 for every interval
    ii_prime: |disc(1,j)| <= d + unq(1,j)/2 for every j, and >= 6d+1
              unqueried cells
    """
    if variant not in VARIANTS:
        raise DomainError(f"unknown variant {variant!r}")
    if not board.is_slice_consistent():
        raise DomainError("board is not slice-consistent")
    n = board.n
    disc = 0
    unq = 0
    if variant == "i":
        for c in board.cells:
            disc += c
            if 2 * abs(disc) > d:
                return False
        return True
    if variant == "ii":
        if n - board.count(1) - board.count(-1) < 3 * d + 1:
            return False
        for c in board.cells:
            disc += c
            if abs(disc) > d:
                return False
        return True
    if variant == "ii_prime":
        if n - board.count(1) - board.count(-1) < 6 * d + 1:
            return False
        for c in board.cells:
            disc += c
            unq += 1 if c == 0 else 0
            if 2 * abs(disc) > 2 * d + unq:
                return False
        return True
    # i_prime: all intervals
    for i in range(1, n + 1):
        disc = 0
        unq = 0
        for j in range(i, n + 1):
            c = board.cells[j - 1]
            disc += c
            unq += 1 if c == 0 else 0
            if abs(disc) > d + unq - 3:
                return False
    return True


def _complete_alternating(board: Board, d: int) -> Board:
    """Balanced completion from the half-bound hypothesis: alternate the
    missing signs, majority sign first, surplus at the end."""
    n = board.n
    need_plus = n // 2 - board.count(1)
    need_minus = n // 2 - board.count(-1)
    # Majority of missing signs goes first in the alternation and also
    # fills the tail; ties default to +1 first.
    first = 1 if need_plus >= need_minus else -1
    second = -first
    pairs = min(need_plus, need_minus)
    sequence = []
    for _ in range(pairs):
        sequence.extend((first, second))
    sequence.extend([first] * abs(need_plus - need_minus))
    cells = list(board.cells)
    it = iter(sequence)
    for idx in range(n):
        if cells[idx] == 0:
            cells[idx] = next(it)
    return Board(tuple(cells))


def _even_intervals(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, n + 1, 2) for j in range(i + 1, n + 1, 2)]


def _complete_even_interval(board: Board, d: int, order: Sequence[int]) -> Board:
    """Fill cells in the given order, keeping every even interval within
    bound + unq, where bound = d-2 (d even) or d-3 (d odd).

    A sign choice that keeps all even intervals good always exists under
    the i_prime hypothesis: an unqueried cell cannot lie simultaneously
    in a tight positive and a tight negative even interval (splitting
    their union into three even intervals forces the overlap to have no
    unqueried cells).  Failure of both signs therefore signals a bug.
    """
    n = board.n
    bound = d - 2 if d % 2 == 0 else d - 3
    evens = _even_intervals(n)
    cells = list(board.cells)

    def interval_ok(i: int, j: int) -> bool:
        disc = 0
        unq = 0
        for p in range(i - 1, j):
            c = cells[p]
            disc += c
            unq += 1 if c == 0 else 0
        return abs(disc) <= bound + unq

    for pos in order:
        if cells[pos - 1] != 0:
            raise DomainError(f"order visits non-unqueried position {pos}")
        chosen = None
        for value in (-1, 1):
            cells[pos - 1] = value
            if all(interval_ok(i, j) for (i, j) in evens if i <= pos <= j):
                chosen = value
                break
            cells[pos - 1] = 0
        if chosen is None:
            raise InternalCheckError(
                f"no sign keeps even intervals good at position {pos} "
                f"(board {''.join(_CELL_CHARS[c] for c in cells)}, d={d})"
            )
    return Board(tuple(cells))


def complete_constructive(
    board: Board,
    d: int,
    method: str,
    order: Optional[Sequence[int]] = None,
) -> FeasibilityVerdict:
    """Run one of the two constructive completion procedures.

    alternating requires the half-bound (variant i) hypothesis and yields
    a balanced completion with all prefixes within d.  even_interval
    requires the variant i_prime hypothesis and yields a completion with
    every interval within d; the order of filling is free and defaults to
    left-to-right.  Balance of the even_interval completion is not
    guaranteed by the construction (see feasible_exact for the balanced
    oracle).
    """
    if method == "alternating":
        if not claim_condition(board, d, "i"):
            raise PreconditionError(
                "alternating completion requires |disc(prefix)| <= d/2 everywhere"
            )
        witness = _complete_alternating(board, d)
        if eval_discmax(witness, d) != 1:
            raise InternalCheckError("alternating completion escaped the bound")
        return FeasibilityVerdict(True, witness)
    if method == "even_interval":
        if not claim_condition(board, d, "i_prime"):
            raise PreconditionError(
                "even_interval completion requires |disc(i,j)| <= d + unq(i,j) - 3"
            )
        fill_order = list(order) if order is not None else board.unqueried_positions()
        unq = set(board.unqueried_positions())
        if sorted(fill_order) != sorted(unq):
            raise DomainError("order must enumerate exactly the unqueried positions")
        witness = _complete_even_interval(board, d, fill_order)
        for i in range(1, board.n + 1):
            for j in range(i, board.n + 1):
                if abs(interval_stats(witness, i, j).disc) > d:
                    raise InternalCheckError(
                        f"even_interval completion has |disc({i},{j})| > {d}"
                    )
        return FeasibilityVerdict(True, witness)
    raise DomainError(f"unknown method {method!r}")


def remark_board(d: int, n: int) -> Board:
    """The tightness configuration: a run of -1s, a gap, a run of +1s,
    then strict alternation; its prefixes stay within floor(d/2)+1 yet no
    balanced completion keeps every prefix within d."""
    if n % 2 or n < 2 * d + 2:
        raise DomainError(f"need even n >= {2*d+2}, got {n}")
    cells = []
    for i in range(1, n + 1):
        if i <= d // 2 + 1:
            cells.append(-1)
        elif i <= d + 1:
            cells.append(0)
        elif i <= 2 * d + 2:
            cells.append(1)
        else:
            cells.append(1 if i % 2 == 0 else -1)
    return Board(tuple(cells))


def discmax_function(n: int, d: int) -> SliceFunction:
    """Oracle-backed slice function with the exact feasibility hook."""
    if n % 2:
        raise DomainError("n must be even")
    domain = SliceDomain(n, n // 2)

    def oracle(mask: int) -> int:
        cells = tuple(1 if mask & (1 << i) else -1 for i in range(n))
        return eval_discmax(Board(cells), d)

    def hook(state: QueryState) -> frozenset[int]:
        board = Board.from_query_state(n, state)
        vals = set()
        if feasible_exact(board, d, TRUE_VALUE).feasible:
            vals.add(1)
        if feasible_exact(board, d, FALSE_VALUE).feasible:
            vals.add(0)
        return frozenset(vals)

    return SliceFunction(
        domain, oracle=oracle, feasibility_hook=hook, name=f"disc-max-{d}(n={n})"
    )


def e_discmax(n: int, d: int, budget: int = 5_000_000) -> DepthResult:
    """Exact query depth of disc_max(d) on the balanced slice of size n."""
    f = discmax_function(n, d)
    return solve_depth(f, budget=budget)


def all_boards(n: int) -> Iterator[Board]:
    """All 3^n boards of length n (not filtered for slice consistency)."""
    def rec(prefix: list[int]) -> Iterator[Board]:
        if len(prefix) == n:
            yield Board(tuple(prefix))
            return
        for v in (-1, 0, 1):
            prefix.append(v)
            yield from rec(prefix)
            prefix.pop()

    yield from rec([])
