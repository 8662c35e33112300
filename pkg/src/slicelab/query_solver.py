"""Exact deterministic query complexity on slices via the Questioner/Adversary game.

The depth of a query state is defined recursively: a state on which the
function is constant over all consistent slice elements costs 0; otherwise
the Questioner picks the position minimizing the worst feasible answer,
paying one query.  An answer is feasible iff the extended state still has
a consistent slice element, which for a slice depends only on the answer
counts (at most k ones, at most n-k zeros).  Results are memoized on the
(queried, ones) bitmask pair.

Tie-breaking is deterministic: the lowest position index among optimal
queries, answer 0 before answer 1 when enumerating adversary replies.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Union

from .errors import DomainError, ResourceLimitError, StructureError
from .slice_core import (
    QueryState,
    SliceDomain,
    SliceFunction,
    binom_ext,
    colex_rank,
    colex_unrank,
    consistent_values,
)

DEFAULT_STATE_BUDGET = 5_000_000
DEFAULT_TABLE_BUDGET = 1 << 22


@dataclass(frozen=True)
class Leaf:
    value: int


@dataclass(frozen=True)
class Node:
    query: int
    no: "TreeNode"
    yes: "TreeNode"


TreeNode = Union[Leaf, Node]


@dataclass
class DepthResult:
    depth: int
    co_depth: int
    optimal_tree: Optional[TreeNode] = None
    nodes_expanded: int = 0


# Per-domain cache: for each position, the bitmask over colex ranks of the
# slice elements containing that position.
_RANKMASK_CACHE: dict[tuple[int, int], list[int]] = {}


def _position_rankmasks(domain: SliceDomain) -> list[int]:
    key = (domain.n, domain.k)
    masks = _RANKMASK_CACHE.get(key)
    if masks is None:
        masks = [0] * (domain.n + 1)
        for r in range(domain.size):
            elem = colex_unrank(r, domain)
            bit = 1 << r
            p = 1
            while elem:
                if elem & 1:
                    masks[p] |= bit
                elem >>= 1
                p += 1
        _RANKMASK_CACHE[key] = masks
    return masks


class _TableSolver:
    """Minimax over query states for a table-backed function.

    Carries the consistent-set bitmask over colex ranks down the recursion,
    so the constant-on-consistent-set test is two int comparisons.
    """

    def __init__(self, f: SliceFunction, budget: int):
        self.domain = f.domain
        self.table = f.table
        self.budget = budget
        self.rankmasks = _position_rankmasks(f.domain)
        self.full_setmask = (1 << f.domain.size) - 1
        self.memo: dict[tuple[int, int], int] = {}
        self.expanded = 0

    def depth(self, queried: int, ones: int, setmask: int) -> int:
        fm = self.table & setmask
        if fm == 0 or fm == setmask:
            return 0
        key = (queried, ones)
        cached = self.memo.get(key)
        if cached is not None:
            return cached
        self.expanded += 1
        if self.expanded > self.budget:
            raise ResourceLimitError(
                f"state budget {self.budget} exceeded", attempted=self.expanded
            )
        n, k = self.domain.n, self.domain.k
        ones_count = ones.bit_count()
        zeros_count = queried.bit_count() - ones_count
        can_one = ones_count + 1 <= k
        can_zero = zeros_count + 1 <= n - k
        best = n + 1
        for p in range(1, n + 1):
            bit = 1 << (p - 1)
            if queried & bit:
                continue
            rm = self.rankmasks[p]
            worst = 0
            if can_zero:
                worst = self.depth(queried | bit, ones, setmask & ~rm)
            if can_one and worst < best:
                worst = max(worst, self.depth(queried | bit, ones | bit, setmask & rm))
            if worst + 1 < best:
                best = worst + 1
        self.memo[key] = best
        return best

    def extract(self, queried: int, ones: int, setmask: int) -> TreeNode:
        fm = self.table & setmask
        if fm == 0:
            return Leaf(0)
        if fm == setmask:
            return Leaf(1)
        n, k = self.domain.n, self.domain.k
        ones_count = ones.bit_count()
        zeros_count = queried.bit_count() - ones_count
        can_one = ones_count + 1 <= k
        can_zero = zeros_count + 1 <= n - k
        best, best_p = n + 1, 0
        for p in range(1, n + 1):
            bit = 1 << (p - 1)
            if queried & bit:
                continue
            rm = self.rankmasks[p]
            worst = 0
            if can_zero:
                worst = self.depth(queried | bit, ones, setmask & ~rm)
            if can_one:
                worst = max(worst, self.depth(queried | bit, ones | bit, setmask & rm))
            if worst + 1 < best:
                best, best_p = worst + 1, p
        bit = 1 << (best_p - 1)
        rm = self.rankmasks[best_p]
        # An infeasible answer is never taken by a consistent input; its
        # child is an arbitrary leaf.
        no_child: TreeNode = (
            self.extract(queried | bit, ones, setmask & ~rm) if can_zero else Leaf(0)
        )
        yes_child: TreeNode = (
            self.extract(queried | bit, ones | bit, setmask & rm) if can_one else Leaf(0)
        )
        return Node(best_p, no_child, yes_child)


class _OracleSolver:
    """Minimax for oracle-backed functions via consistent_values."""

    def __init__(self, f: SliceFunction, budget: int):
        self.f = f
        self.domain = f.domain
        self.budget = budget
        self.memo: dict[tuple[int, int], int] = {}
        self.expanded = 0

    def _values(self, queried: int, ones: int) -> frozenset[int]:
        return consistent_values(self.f, QueryState(queried, ones))

    def depth(self, queried: int, ones: int) -> int:
        if len(self._values(queried, ones)) == 1:
            return 0
        key = (queried, ones)
        cached = self.memo.get(key)
        if cached is not None:
            return cached
        self.expanded += 1
        if self.expanded > self.budget:
            raise ResourceLimitError(
                f"state budget {self.budget} exceeded", attempted=self.expanded
            )
        n, k = self.domain.n, self.domain.k
        ones_count = ones.bit_count()
        zeros_count = queried.bit_count() - ones_count
        can_one = ones_count + 1 <= k
        can_zero = zeros_count + 1 <= n - k
        best = n + 1
        for p in range(1, n + 1):
            bit = 1 << (p - 1)
            if queried & bit:
                continue
            worst = 0
            if can_zero:
                worst = self.depth(queried | bit, ones)
            if can_one and worst < best:
                worst = max(worst, self.depth(queried | bit, ones | bit))
            if worst + 1 < best:
                best = worst + 1
        self.memo[key] = best
        return best

    def extract(self, queried: int, ones: int) -> TreeNode:
        vals = self._values(queried, ones)
        if len(vals) == 1:
            return Leaf(next(iter(vals)))
        n, k = self.domain.n, self.domain.k
        ones_count = ones.bit_count()
        zeros_count = queried.bit_count() - ones_count
        can_one = ones_count + 1 <= k
        can_zero = zeros_count + 1 <= n - k
        best, best_p = n + 1, 0
        for p in range(1, n + 1):
            bit = 1 << (p - 1)
            if queried & bit:
                continue
            worst = 0
            if can_zero:
                worst = self.depth(queried | bit, ones)
            if can_one:
                worst = max(worst, self.depth(queried | bit, ones | bit))
            if worst + 1 < best:
                best, best_p = worst + 1, p
        bit = 1 << (best_p - 1)
        no_child: TreeNode = (
            self.extract(queried | bit, ones) if can_zero else Leaf(0)
        )
        yes_child: TreeNode = (
            self.extract(queried | bit, ones | bit) if can_one else Leaf(0)
        )
        return Node(best_p, no_child, yes_child)


def solve_depth(
    f: SliceFunction,
    extract_tree: bool = False,
    budget: int = DEFAULT_STATE_BUDGET,
) -> DepthResult:
    """Exact worst-case query count for f under optimal play by both sides."""
    n = f.domain.n
    if f.table is not None:
        ts = _TableSolver(f, budget)
        d = ts.depth(0, 0, ts.full_setmask)
        tree = ts.extract(0, 0, ts.full_setmask) if extract_tree else None
        return DepthResult(d, n - d, tree, ts.expanded)
    os_ = _OracleSolver(f, budget)
    d = os_.depth(0, 0)
    tree = os_.extract(0, 0) if extract_tree else None
    return DepthResult(d, n - d, tree, os_.expanded)


def verify_tree(tree: TreeNode, f: SliceFunction) -> tuple[bool, int]:
    """Check a decision tree against f on every slice element.

    Returns (valid, height): valid iff every slice element reaches a leaf
    labelled with its function value; height is the maximum number of
    queries along any such path.  Malformed trees (a repeated query on a
    path, an unknown node type) raise StructureError.
    """
    domain = f.domain

    def check_structure(node: TreeNode, used: int) -> None:
        if isinstance(node, Leaf):
            if node.value not in (0, 1):
                raise StructureError(f"leaf value {node.value} not in {{0,1}}")
            return
        if isinstance(node, Node):
            if not 1 <= node.query <= domain.n:
                raise StructureError(f"query {node.query} outside [1, {domain.n}]")
            bit = 1 << (node.query - 1)
            if used & bit:
                raise StructureError(f"position {node.query} repeated on a path")
            check_structure(node.no, used | bit)
            check_structure(node.yes, used | bit)
            return
        raise StructureError(f"unknown node type {type(node).__name__}")

    check_structure(tree, 0)

    valid = True
    height = 0
    for elem in domain.elements():
        node = tree
        steps = 0
        while isinstance(node, Node):
            bit = 1 << (node.query - 1)
            node = node.yes if elem & bit else node.no
            steps += 1
        if node.value != f(elem):
            valid = False
        height = max(height, steps)
    return valid, height


def census_trees(domain: SliceDomain, hmax: int, max_slice: int = 64) -> int:
    """Exact number of labelled strategy trees of height at most hmax.

    Counting conventions: an inner node is labelled with one of the
    yet-unqueried positions; a node is a leaf exactly when the input is
    already determined (k one-answers or n-k zero-answers fixed) or the
    node sits at depth hmax; leaves carry a 0/1 label.  Early stops above
    the bound are not counted: any function computable within the bound
    is computable by a tree of this class (expand an early leaf into a
    query with equal-labelled children), which is what makes the class a
    valid proxy for counting strategies.  Two trees are distinct iff
    their labelled structures differ.  By symmetry the count below a node
    depends only on the answer counts so far, which keeps the recursion
    polynomial even though the result is astronomically large.
    """
    if hmax < 0:
        raise DomainError("hmax must be nonnegative")
    if domain.size > max_slice:
        raise ResourceLimitError(
            f"slice size {domain.size} exceeds census budget {max_slice}",
            attempted=domain.size,
        )
    n, k = domain.n, domain.k
    memo: dict[tuple[int, int, int], int] = {}

    def count(a: int, b: int, h: int) -> int:
        if a == k or b == n - k:
            return 2
        if h == 0:
            return 2
        key = (a, b, h)
        cached = memo.get(key)
        if cached is not None:
            return cached
        u = n - a - b
        total = u * count(a + 1, b, h - 1) * count(a, b + 1, h - 1)
        memo[key] = total
        return total

    return count(0, 0, hmax)


def max_depth_all(
    domain: SliceDomain, enum_budget: int = 20
) -> tuple[int, SliceFunction]:
    """Maximum of solve_depth over all 2^binom(n,k) table functions.

    The memo is shared across functions, keyed on the state plus the
    function's restriction to the consistent set: the depth of a state
    depends on the function only through that restriction.
    """
    size = domain.size
    if size > enum_budget:
        raise ResourceLimitError(
            f"slice size {size} exceeds enumeration budget {enum_budget}",
            attempted=size,
        )
    rankmasks = _position_rankmasks(domain)
    n, k = domain.n, domain.k
    full = (1 << size) - 1
    memo: dict[tuple[int, int, int], int] = {}

    def depth(table: int, queried: int, ones: int, setmask: int) -> int:
        fm = table & setmask
        if fm == 0 or fm == setmask:
            return 0
        key = (queried, ones, fm)
        cached = memo.get(key)
        if cached is not None:
            return cached
        ones_count = ones.bit_count()
        zeros_count = queried.bit_count() - ones_count
        can_one = ones_count + 1 <= k
        can_zero = zeros_count + 1 <= n - k
        best = n + 1
        for p in range(1, n + 1):
            bit = 1 << (p - 1)
            if queried & bit:
                continue
            rm = rankmasks[p]
            worst = 0
            if can_zero:
                worst = depth(table, queried | bit, ones, setmask & ~rm)
            if can_one and worst < best:
                worst = max(worst, depth(table, queried | bit, ones | bit, setmask & rm))
            if worst + 1 < best:
                best = worst + 1
        memo[key] = best
        return best

    best_d = -1
    best_table = 0
    for table in range(1 << size):
        d = depth(table, 0, 0, full)
        if d > best_d:
            best_d, best_table = d, table
    return best_d, SliceFunction(domain, table=best_table, name="maxdepth-witness")


def compose(
    f1: SliceFunction, f2: SliceFunction, table_budget: int = DEFAULT_TABLE_BUDGET
) -> SliceFunction:
    """Combine two slice functions on disjoint ground sets.

    The result lives on (n1+n2, k1+k2) and is 1 exactly when the first
    n1 positions carry k1 elements and f1 on them agrees with f2 on the
    rest (relabelled down by n1).
    """
    d1, d2 = f1.domain, f2.domain
    domain = SliceDomain(d1.n + d2.n, d1.k + d2.k)
    if domain.size > table_budget:
        raise ResourceLimitError(
            f"composed table needs {domain.size} entries, budget {table_budget}",
            attempted=domain.size,
        )
    low_mask = (1 << d1.n) - 1

    def fn(mask: int) -> int:
        low = mask & low_mask
        if low.bit_count() != d1.k:
            return 0
        high = mask >> d1.n
        return 1 if f1(low) == f2(high) else 0

    return SliceFunction.from_callable(
        domain, fn, name=f"compose({f1.name or 'f1'},{f2.name or 'f2'})"
    )


def tree_to_json(tree: TreeNode) -> str:
    def conv(node: TreeNode):
        if isinstance(node, Leaf):
            return {"leaf": node.value}
        return {"query": node.query, "no": conv(node.no), "yes": conv(node.yes)}

    return json.dumps(conv(tree))


def tree_from_json(text: str) -> TreeNode:
    def conv(obj) -> TreeNode:
        if "leaf" in obj:
            return Leaf(int(obj["leaf"]))
        return Node(int(obj["query"]), conv(obj["no"]), conv(obj["yes"]))

    return conv(json.loads(text))


def tree_to_dot(tree: TreeNode) -> str:
    """Graphviz text form; leaves are boxes, edges labelled by the answer."""
    lines = ["digraph decision_tree {"]
    counter = [0]

    def emit(node: TreeNode) -> str:
        name = f"n{counter[0]}"
        counter[0] += 1
        if isinstance(node, Leaf):
            lines.append(f'  {name} [shape=box, label="{node.value}"];')
        else:
            lines.append(f'  {name} [shape=circle, label="{node.query}"];')
            no_name = emit(node.no)
            yes_name = emit(node.yes)
            lines.append(f'  {name} -> {no_name} [label="0"];')
            lines.append(f'  {name} -> {yes_name} [label="1"];')
        return name

    emit(tree)
    lines.append("}")
    return "\n".join(lines)
