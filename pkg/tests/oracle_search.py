"""Independent shortest-path oracle for canonical equation states.

This is a deliberately plain breadth-first search over 4-tuples of
Fractions, written separately from the package so the two can check
each other. No memoisation, no pruning, no shared code with
ccst.planner beyond the rule definitions themselves:

 - cancel a nonzero constant on either side by adding or subtracting
   its magnitude from both sides
 - cancel a nonzero x-coefficient on either side the same way
 - divide both sides by the x-coefficient once the equation looks
   like ax = d (or b = cx) with an integer coefficient other than 0, 1
 - multiply both sides by the least common multiple of any fractional
   denominators

A state is solved when it reads x = d or b = x exactly.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from math import lcm

State = tuple[Fraction, Fraction, Fraction, Fraction]


def oracle_solved(state: State) -> bool:
    a, b, c, d = state
    return (a == 1 and b == 0 and c == 0) or (c == 1 and d == 0 and a == 0)


def oracle_moves(state: State) -> list[State]:
    a, b, c, d = state
    out: list[State] = []
    for value in (b, d):
        if value != 0:
            out.append((a, b - value, c, d - value))
    for value in (a, c):
        if value != 0:
            out.append((a - value, b, c - value, d))
    if b == 0 and c == 0 and a not in (0, 1) and a.denominator == 1:
        out.append((Fraction(1), Fraction(0), Fraction(0), d / a))
    if a == 0 and d == 0 and c not in (0, 1) and c.denominator == 1:
        out.append((Fraction(0), b / c, Fraction(1), Fraction(0)))
    denominators = [v.denominator for v in (a, b, c, d) if v.denominator != 1]
    if denominators:
        m = Fraction(lcm(*denominators))
        out.append((a * m, b * m, c * m, d * m))
    deduped: list[State] = []
    for candidate in out:
        if candidate not in deduped:
            deduped.append(candidate)
    return deduped


def oracle_distance(state: State, cap: int = 10) -> int | None:
    """Moves needed to reach a solved state, or None if more than cap."""
    if oracle_solved(state):
        return 0
    seen = {state}
    queue: deque[tuple[State, int]] = deque([(state, 0)])
    while queue:
        node, depth = queue.popleft()
        if depth >= cap:
            continue
        for successor in oracle_moves(node):
            if successor in seen:
                continue
            if oracle_solved(successor):
                return depth + 1
            seen.add(successor)
            queue.append((successor, depth + 1))
    return None


def oracle_distance_eq(text: str, cap: int = 10) -> int | None:
    """Convenience wrapper: parse an equation with the package, then search."""
    from ccst.equations import canonicalize, parse_equation

    s = canonicalize(parse_equation(text))
    return oracle_distance((s.a, s.b, s.c, s.d), cap)
