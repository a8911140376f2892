"""Independent reference computations used as test oracles.

Nothing here calls into the code paths being checked, apart from the data
types needed to describe inputs.
"""

from __future__ import annotations

import itertools
import math
import random

from securezone.policy import Gate, Leaf


def random_tree(rng: random.Random, universe, max_depth: int = 3, max_children: int = 4):
    if max_depth <= 1 or rng.random() < 0.3:
        return Leaf(rng.choice(universe))
    n = rng.randint(1, max_children)
    children = tuple(random_tree(rng, universe, max_depth - 1, max_children) for _ in range(n))
    return Gate(rng.randint(1, n), children)


def minimal_sets(node) -> set[frozenset]:
    """DNF expansion: the family of attribute sets that satisfy ``node``."""
    if isinstance(node, Leaf):
        return {frozenset([node.attr])}
    child_sets = [minimal_sets(c) for c in node.children]
    out = set()
    for combo in itertools.combinations(child_sets, node.k):
        for pick in itertools.product(*combo):
            out.add(frozenset().union(*pick))
    return out


def dnf_satisfies(node, attrs) -> bool:
    attrs = frozenset(attrs)
    return any(clause <= attrs for clause in minimal_sets(node))


def all_subsets(items):
    items = sorted(items)
    for r in range(len(items) + 1):
        yield from (frozenset(c) for c in itertools.combinations(items, r))


def structural_eq(a, b) -> bool:
    if isinstance(a, Leaf) or isinstance(b, Leaf):
        return isinstance(a, Leaf) and isinstance(b, Leaf) and a.attr == b.attr
    return (a.k == b.k and len(a.children) == len(b.children)
            and all(structural_eq(x, y) for x, y in zip(a.children, b.children)))


def poly_eval(coeffs, x, p):
    return sum(c * pow(x, i, p) for i, c in enumerate(coeffs)) % p


def solve_mod(matrix, rhs, p):
    """Gauss-Jordan over GF(p); returns the unique solution or None."""
    n = len(matrix)
    a = [list(row) + [r] for row, r in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] % p), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        inv = pow(a[col][col], p - 2, p)
        a[col] = [v * inv % p for v in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [(v - f * w) % p for v, w in zip(a[r], a[col])]
    return [row[-1] for row in a]


def segment_in_disc_intervals(p0, p1, t0, t1, centre, radius):
    """Closed-form time interval(s) where the linear segment lies within the disc."""
    (x0, y0), (x1, y1), (cx, cy) = p0, p1, centre
    dx, dy = x1 - x0, y1 - y0
    fx, fy = x0 - cx, y0 - cy
    a = dx * dx + dy * dy
    b = 2 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - radius * radius
    if a == 0:
        return [(t0, t1)] if c <= 0 else []
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    r = math.sqrt(disc)
    u0, u1 = (-b - r) / (2 * a), (-b + r) / (2 * a)
    lo, hi = max(u0, 0.0), min(u1, 1.0)
    if lo > hi:
        return []
    return [(t0 + lo * (t1 - t0), t0 + hi * (t1 - t0))]


def in_range_by_crossings(waypoints, centre, radius, t, eps=1e-9) -> bool:
    """Reception test from crossing intervals, independent of position interpolation."""
    first, last = waypoints[0], waypoints[-1]
    if t <= first[0] or len(waypoints) == 1:
        return math.hypot(first[1] - centre[0], first[2] - centre[1]) <= radius
    if t >= last[0]:
        return math.hypot(last[1] - centre[0], last[2] - centre[1]) <= radius
    for (ta, xa, ya), (tb, xb, yb) in zip(waypoints, waypoints[1:]):
        if ta <= t <= tb:
            for lo, hi in segment_in_disc_intervals((xa, ya), (xb, yb), ta, tb, centre, radius):
                if lo - eps <= t <= hi + eps:
                    return True
    return False


def expected_outcome(scenario, zone, firearm, t) -> str:
    """Predicate evaluator for one in-range (beacon, firearm) pair."""
    ts = math.floor(scenario.epoch + t + zone.clock_offset)
    now = math.floor(scenario.epoch + t + firearm.clock_offset)
    from securezone.policy import parse_policy
    if not dnf_satisfies(parse_policy(zone.policy), firearm.attributes):
        return "POLICY_NOT_SATISFIED"
    if abs(now // scenario.window - ts // scenario.window) > scenario.skew:
        return "TOKEN_MISMATCH"
    if firearm.et < ts:
        return "KEY_EXPIRED"
    return "AUTHORIZED"
