"""Step planning and grading for one-variable linear equations.

The domain model is a small set of balance-preserving transformations over
canonical states. Planning is breadth-first search over those states;
grading checks a submitted step for equivalence plus strict progress and,
when the step is wrong, tries to name the misconception behind it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import lcm

from .equations import (
    Atom,
    CanonEq,
    Const,
    Equation,
    EquationError,
    Expr,
    Prod,
    Quot,
    SolutionClass,
    Term,
    canonical_equation,
    canonical_expr,
    canonicalize,
    equivalent,
    fold,
    parse_equation,
    render,
    solve,
)

MAX_DEPTH = 10


class PlannerError(Exception):
    pass


class DepthExceeded(PlannerError):
    """No solved state within MAX_DEPTH moves."""


class NoUniqueSolution(PlannerError):
    """The state is an identity or a contradiction; there is nothing to plan."""


class AlreadySolved(PlannerError):
    pass


class RuleKind(Enum):
    ADD_BOTH_CONST = "add_both_const"
    SUB_BOTH_CONST = "sub_both_const"
    ADD_BOTH_VAR = "add_both_var"
    SUB_BOTH_VAR = "sub_both_var"
    DIV_BOTH = "div_both"
    MUL_BOTH = "mul_both"
    DISTRIBUTE = "distribute"
    COMBINE_LIKE_TERMS = "combine_like_terms"


_RULE_ORDER = {kind: index for index, kind in enumerate(RuleKind)}


@dataclass(frozen=True)
class TransformRule:
    kind: RuleKind
    operand: Fraction | None = None


@dataclass(frozen=True)
class Step:
    rule: TransformRule
    before: CanonEq
    after_display: Equation
    after: CanonEq


@dataclass(frozen=True)
class NextStepSuggestion:
    text: str
    step: Step
    distance_after: int


class Accuracy(Enum):
    CORRECT = "correct"
    ERROR = "error"


class BuggyKind(Enum):
    SIGN_FLIP_OMITTED = "sign_flip_omitted"
    ONE_SIDED_OPERATION = "one_sided_operation"
    DIVIDED_ONE_TERM_ONLY = "divided_one_term_only"
    ARITHMETIC_SLIP = "arithmetic_slip"


@dataclass(frozen=True)
class BuggyRule:
    """A misconception that, applied to the current state, reproduces the attempt."""

    kind: BuggyKind
    variant: str
    operand: Fraction | None = None
    base_rule: TransformRule | None = None
    field: str | None = None


@dataclass(frozen=True)
class GradeResult:
    accuracy: Accuracy
    feedback: str
    matched_rule: TransformRule | None = None
    buggy_rule: BuggyRule | None = None


@dataclass(frozen=True)
class Hint:
    level: int
    text: str


FEEDBACK_CORRECT = "Correct!"
FEEDBACK_SYNTAX = (
    "Couldn't read that as an equation. Use digits, x, +, -, /, and "
    "parentheses, with one = sign."
)
FEEDBACK_NO_PROGRESS = (
    "That's equivalent to what you already have, but it doesn't get closer "
    "to x. Try an operation that isolates x."
)
FEEDBACK_NOT_EQUIVALENT = (
    "That step doesn't keep the equation balanced. Try one operation, "
    "applied to both sides."
)
_BUGGY_FEEDBACK = {
    BuggyKind.SIGN_FLIP_OMITTED: (
        "When a term moves to the other side of the equals sign, its sign "
        "flips. It looks like the sign stayed the same."
    ),
    BuggyKind.ONE_SIDED_OPERATION: (
        "Whatever you do to one side, you have to do to the other side too. "
        "This step only changed one side."
    ),
    BuggyKind.DIVIDED_ONE_TERM_ONLY: (
        "When you divide both sides, every term has to be divided. It looks "
        "like one term was left out."
    ),
    BuggyKind.ARITHMETIC_SLIP: (
        "The right idea, but double-check the arithmetic in this step."
    ),
}


def is_solved_canon(state: CanonEq) -> bool:
    return (state.a == 1 and state.b == 0 and state.c == 0) or (
        state.c == 1 and state.d == 0 and state.a == 0
    )


def _require_unique(state: CanonEq) -> None:
    if solve(state).kind != SolutionClass.UNIQUE:
        raise NoUniqueSolution(f"no unique solution: {render(canonical_equation(state))}")


# --- canonical move generation -------------------------------------------------

_canon_moves_cache: dict[CanonEq, tuple[tuple[TransformRule, CanonEq], ...]] = {}


def _apply_canon(rule: TransformRule, s: CanonEq) -> CanonEq:
    q = rule.operand
    if rule.kind is RuleKind.ADD_BOTH_CONST:
        return CanonEq(s.a, s.b + q, s.c, s.d + q)
    if rule.kind is RuleKind.SUB_BOTH_CONST:
        return CanonEq(s.a, s.b - q, s.c, s.d - q)
    if rule.kind is RuleKind.ADD_BOTH_VAR:
        return CanonEq(s.a + q, s.b, s.c + q, s.d)
    if rule.kind is RuleKind.SUB_BOTH_VAR:
        return CanonEq(s.a - q, s.b, s.c - q, s.d)
    if rule.kind is RuleKind.DIV_BOTH:
        return CanonEq(s.a / q, s.b / q, s.c / q, s.d / q)
    if rule.kind is RuleKind.MUL_BOTH:
        return CanonEq(s.a * q, s.b * q, s.c * q, s.d * q)
    return s  # display-only rules leave the canonical state alone


def _canon_moves(state: CanonEq) -> tuple[tuple[TransformRule, CanonEq], ...]:
    """Balance-preserving moves available from a canonical state.

    Cached; CPython's GIL makes the shared dict safe for concurrent readers.
    """
    cached = _canon_moves_cache.get(state)
    if cached is not None:
        return cached

    rules: list[TransformRule] = []
    for value in (state.b, state.d):
        if value != 0:
            kind = RuleKind.SUB_BOTH_CONST if value > 0 else RuleKind.ADD_BOTH_CONST
            rules.append(TransformRule(kind, abs(value)))
    for value in (state.a, state.c):
        if value != 0:
            kind = RuleKind.SUB_BOTH_VAR if value > 0 else RuleKind.ADD_BOTH_VAR
            rules.append(TransformRule(kind, abs(value)))
    if (
        state.b == 0
        and state.c == 0
        and state.a not in (0, 1)
        and state.a.denominator == 1
    ):
        rules.append(TransformRule(RuleKind.DIV_BOTH, state.a))
    if (
        state.a == 0
        and state.d == 0
        and state.c not in (0, 1)
        and state.c.denominator == 1
    ):
        rules.append(TransformRule(RuleKind.DIV_BOTH, state.c))
    denominators = {
        value.denominator
        for value in (state.a, state.b, state.c, state.d)
        if value.denominator != 1
    }
    if denominators:
        rules.append(TransformRule(RuleKind.MUL_BOTH, Fraction(lcm(*denominators))))

    moves: list[tuple[TransformRule, CanonEq]] = []
    seen: set[TransformRule] = set()
    for rule in rules:
        if rule not in seen:
            seen.add(rule)
            moves.append((rule, _apply_canon(rule, state)))
    result = tuple(moves)
    _canon_moves_cache[state] = result
    return result


# --- distance ------------------------------------------------------------------

_distance_cache: dict[CanonEq, int] = {}


def distance(state: CanonEq) -> int:
    """Length of a shortest move sequence to a solved state (BFS, cap 10)."""
    _require_unique(state)
    if is_solved_canon(state):
        return 0
    cached = _distance_cache.get(state)
    if cached is not None:
        return cached

    best: int | None = None
    seen = {state}
    frontier = [state]
    depth = 0
    while frontier and depth < MAX_DEPTH:
        depth += 1
        if best is not None and depth >= best:
            break
        next_frontier: list[CanonEq] = []
        for node in frontier:
            for _, after in _canon_moves(node):
                if after in seen:
                    continue
                seen.add(after)
                if is_solved_canon(after):
                    candidate: int | None = depth
                elif after in _distance_cache:
                    candidate = depth + _distance_cache[after]
                else:
                    candidate = None
                    next_frontier.append(after)
                if candidate is not None and (best is None or candidate < best):
                    best = candidate
        frontier = next_frontier
    if best is None or best > MAX_DEPTH:
        raise DepthExceeded(f"no solution within {MAX_DEPTH} moves")
    _distance_cache[state] = best
    return best


# --- display application ---------------------------------------------------------


def _append(expr: Expr, sign: int, atom) -> Expr:
    return Expr(expr.atoms + ((sign, atom),))


def _operand_int(q: Fraction) -> int:
    if q.denominator != 1:
        raise ValueError(f"expected integer operand, got {q}")
    return q.numerator


def _const_atom(q: Fraction) -> Atom:
    if q.denominator == 1:
        return Const(q.numerator)
    return Quot(Expr(((1, Const(q.numerator)),)), q.denominator)


def _term_atom(q: Fraction) -> Atom:
    if q.denominator == 1:
        return Term(q.numerator)
    return Quot(Expr(((1, Term(q.numerator)),)), q.denominator)


def _distributable(atom) -> bool:
    return isinstance(atom, Prod) and all(
        isinstance(inner, (Const, Term)) for _, inner in atom.inner.atoms
    )


def _distribute_expr(expr: Expr) -> Expr:
    """Expand products of simple sums; anything else passes through unchanged."""
    atoms: list[tuple[int, Atom]] = []
    for sign, atom in expr.atoms:
        if _distributable(atom):
            for inner_sign, inner_atom in atom.inner.atoms:
                if isinstance(inner_atom, Const):
                    scaled: Atom = Const(inner_atom.value * atom.mult)
                else:
                    scaled = Term(inner_atom.coeff * atom.mult)
                atoms.append((sign * inner_sign, scaled))
        else:
            atoms.append((sign, atom))
    return Expr(tuple(atoms))


def _apply_display(rule: TransformRule, display: Equation) -> Equation:
    kind = rule.kind
    if kind in (RuleKind.ADD_BOTH_CONST, RuleKind.SUB_BOTH_CONST):
        sign = 1 if kind is RuleKind.ADD_BOTH_CONST else -1
        atom = _const_atom(rule.operand)
        lhs = _append(display.lhs, sign, atom)
        rhs = _append(display.rhs, sign, atom)
    elif kind in (RuleKind.ADD_BOTH_VAR, RuleKind.SUB_BOTH_VAR):
        sign = 1 if kind is RuleKind.ADD_BOTH_VAR else -1
        atom = _term_atom(rule.operand)
        lhs = _append(display.lhs, sign, atom)
        rhs = _append(display.rhs, sign, atom)
    elif kind is RuleKind.DIV_BOTH:
        den = _operand_int(rule.operand)
        lhs = Expr(((1, Quot(display.lhs, den)),))
        rhs = Expr(((1, Quot(display.rhs, den)),))
    elif kind is RuleKind.MUL_BOTH:
        mult = _operand_int(rule.operand)
        lhs = Expr(((1, Prod(mult, display.lhs)),))
        rhs = Expr(((1, Prod(mult, display.rhs)),))
    elif kind is RuleKind.DISTRIBUTE:
        lhs = _distribute_expr(display.lhs)
        rhs = _distribute_expr(display.rhs)
    else:  # COMBINE_LIKE_TERMS
        lhs = canonical_expr(*fold(display.lhs))
        rhs = canonical_expr(*fold(display.rhs))
    eq = Equation(lhs, rhs, "")
    return Equation(lhs, rhs, render(eq))


def _has_prod(display: Equation) -> bool:
    return any(
        isinstance(atom, Prod)
        for _, atom in display.lhs.atoms + display.rhs.atoms
    )


def simplification_debt(display: Equation) -> int:
    """0..2: one point per side whose written form is not fully collapsed."""
    debt = 0
    for expr in (display.lhs, display.rhs):
        if expr != canonical_expr(*fold(expr)):
            debt += 1
    return debt


# --- phrasing --------------------------------------------------------------------


def _coeff_text(q: Fraction) -> str:
    if q == 1:
        return "x"
    if q.denominator == 1:
        return f"{q}x"
    if q.numerator == 1:
        return f"x/{q.denominator}"
    return f"{q.numerator}x/{q.denominator}"


def op_phrase(rule: TransformRule) -> str:
    kind = rule.kind
    if kind is RuleKind.ADD_BOTH_CONST:
        return f"Add {rule.operand} to both sides"
    if kind is RuleKind.SUB_BOTH_CONST:
        return f"Subtract {rule.operand} from both sides"
    if kind is RuleKind.ADD_BOTH_VAR:
        return f"Add {_coeff_text(rule.operand)} to both sides"
    if kind is RuleKind.SUB_BOTH_VAR:
        return f"Subtract {_coeff_text(rule.operand)} from both sides"
    if kind is RuleKind.DIV_BOTH:
        return f"Divide both sides by the coefficient of x, which is {rule.operand}"
    if kind is RuleKind.MUL_BOTH:
        return f"Multiply both sides by {rule.operand}"
    if kind is RuleKind.DISTRIBUTE:
        return "Multiply out the parentheses"
    return "Combine like terms on each side"


def render_next_step(step: Step) -> str:
    return f"{op_phrase(step.rule)}: {render(step.after_display)}"


# --- planning --------------------------------------------------------------------


def enumerate_moves(state: CanonEq, display: Equation | None = None) -> list[Step]:
    """All one-move steps from a state, rendered against its written form.

    Includes the display-only simplification steps (distribute, combine)
    when the written form is not fully collapsed; those leave the canonical
    state unchanged and exist so grading can put a name to them.
    """
    _require_unique(state)
    base_display = display if display is not None else canonical_equation(state)
    steps: list[Step] = []
    for rule, _ in _canon_moves(state):
        after_display = _apply_display(rule, base_display)
        steps.append(Step(rule, state, after_display, canonicalize(after_display)))
    if _has_prod(base_display):
        after_display = _apply_display(TransformRule(RuleKind.DISTRIBUTE), base_display)
        steps.append(
            Step(TransformRule(RuleKind.DISTRIBUTE), state, after_display, state)
        )
    if simplification_debt(base_display) > 0:
        after_display = _apply_display(
            TransformRule(RuleKind.COMBINE_LIKE_TERMS), base_display
        )
        steps.append(
            Step(TransformRule(RuleKind.COMBINE_LIKE_TERMS), state, after_display, state)
        )
    return steps


def next_steps(
    state: CanonEq, k: int = 3, display: Equation | None = None
) -> list[NextStepSuggestion]:
    """Up to k strictly-closer moves, best first.

    Ordered by resulting distance, then rule declaration order, then
    operand magnitude.
    """
    _require_unique(state)
    if is_solved_canon(state):
        return []
    base = distance(state)
    candidates: list[NextStepSuggestion] = []
    for step in enumerate_moves(state, display):
        if step.after == state:
            continue
        after_distance = distance(step.after)
        if after_distance < base:
            candidates.append(
                NextStepSuggestion(render_next_step(step), step, after_distance)
            )
    candidates.sort(
        key=lambda s: (
            s.distance_after,
            _RULE_ORDER[s.step.rule.kind],
            abs(s.step.rule.operand or 0),
        )
    )
    return candidates[:k]


# --- grading ---------------------------------------------------------------------


def apply_buggy(buggy: BuggyRule, s: CanonEq) -> CanonEq:
    """Reproduce the wrong state a misconception leads to from s."""
    v = buggy.variant
    if buggy.kind is BuggyKind.SIGN_FLIP_OMITTED:
        if v == "b_to_rhs":
            return CanonEq(s.a, Fraction(0), s.c, s.d + s.b)
        if v == "d_to_lhs":
            return CanonEq(s.a, s.b + s.d, s.c, Fraction(0))
        if v == "a_to_rhs":
            return CanonEq(Fraction(0), s.b, s.c + s.a, s.d)
        return CanonEq(s.a + s.c, s.b, Fraction(0), s.d)  # c_to_lhs
    if buggy.kind is BuggyKind.ONE_SIDED_OPERATION:
        if v == "cancel_b_lhs_only":
            return CanonEq(s.a, Fraction(0), s.c, s.d)
        if v == "cancel_d_rhs_only":
            return CanonEq(s.a, s.b, s.c, Fraction(0))
        if v == "cancel_a_lhs_only":
            return CanonEq(Fraction(0), s.b, s.c, s.d)
        if v == "cancel_c_rhs_only":
            return CanonEq(s.a, s.b, Fraction(0), s.d)
        if v == "div_lhs_only":
            return CanonEq(Fraction(1), Fraction(0), s.c, s.d)
        if v == "div_rhs_only":
            return CanonEq(s.a, s.b, Fraction(0), s.d / buggy.operand)
        if v == "div_rhs_side_only":
            return CanonEq(s.a, s.b, Fraction(1), Fraction(0))
        return CanonEq(s.a, s.b / buggy.operand, s.c, s.d)  # div_lhs_side_only
    if buggy.kind is BuggyKind.DIVIDED_ONE_TERM_ONLY:
        k = buggy.operand
        divided = CanonEq(s.a / k, s.b / k, s.c / k, s.d / k)
        kept = {buggy.field: getattr(s, buggy.field)}
        return CanonEq(
            kept.get("a", divided.a),
            kept.get("b", divided.b),
            kept.get("c", divided.c),
            kept.get("d", divided.d),
        )
    # arithmetic slip: a correct move, then one coefficient nudged
    after = _apply_canon(buggy.base_rule, s)
    nudged = {buggy.field: getattr(after, buggy.field) + buggy.operand}
    return CanonEq(
        nudged.get("a", after.a),
        nudged.get("b", after.b),
        nudged.get("c", after.c),
        nudged.get("d", after.d),
    )


def _buggy_candidates(s: CanonEq) -> list[BuggyRule]:
    out: list[BuggyRule] = []
    if s.b != 0:
        out.append(BuggyRule(BuggyKind.SIGN_FLIP_OMITTED, "b_to_rhs"))
    if s.d != 0:
        out.append(BuggyRule(BuggyKind.SIGN_FLIP_OMITTED, "d_to_lhs"))
    if s.a != 0:
        out.append(BuggyRule(BuggyKind.SIGN_FLIP_OMITTED, "a_to_rhs"))
    if s.c != 0:
        out.append(BuggyRule(BuggyKind.SIGN_FLIP_OMITTED, "c_to_lhs"))

    if s.b != 0:
        out.append(BuggyRule(BuggyKind.ONE_SIDED_OPERATION, "cancel_b_lhs_only"))
    if s.d != 0:
        out.append(BuggyRule(BuggyKind.ONE_SIDED_OPERATION, "cancel_d_rhs_only"))
    if s.a != 0:
        out.append(BuggyRule(BuggyKind.ONE_SIDED_OPERATION, "cancel_a_lhs_only"))
    if s.c != 0:
        out.append(BuggyRule(BuggyKind.ONE_SIDED_OPERATION, "cancel_c_rhs_only"))
    if s.b == 0 and s.c == 0 and s.a not in (0, 1) and s.a.denominator == 1:
        out.append(BuggyRule(BuggyKind.ONE_SIDED_OPERATION, "div_lhs_only", s.a))
        out.append(BuggyRule(BuggyKind.ONE_SIDED_OPERATION, "div_rhs_only", s.a))
    if s.a == 0 and s.d == 0 and s.c not in (0, 1) and s.c.denominator == 1:
        out.append(BuggyRule(BuggyKind.ONE_SIDED_OPERATION, "div_rhs_side_only", s.c))
        out.append(BuggyRule(BuggyKind.ONE_SIDED_OPERATION, "div_lhs_side_only", s.c))

    divisors = [s.a] if s.a == s.c else [s.a, s.c]
    for divisor in divisors:
        if divisor == 0 or abs(divisor) == 1 or divisor.denominator != 1:
            continue
        for field in ("a", "b", "c", "d"):
            if getattr(s, field) != 0:
                out.append(
                    BuggyRule(BuggyKind.DIVIDED_ONE_TERM_ONLY, field, divisor, field=field)
                )

    for rule, _ in _canon_moves(s):
        for field in ("a", "b", "c", "d"):
            for delta in (-2, -1, 1, 2):
                out.append(
                    BuggyRule(
                        BuggyKind.ARITHMETIC_SLIP,
                        "slip",
                        Fraction(delta),
                        base_rule=rule,
                        field=field,
                    )
                )
    return out


def _match_buggy(current: CanonEq, attempt: CanonEq) -> BuggyRule | None:
    for buggy in _buggy_candidates(current):
        if apply_buggy(buggy, current) == attempt:
            return buggy
    return None


def _match_rule(
    current: CanonEq, current_display: Equation, attempt: CanonEq, attempt_eq: Equation
) -> TransformRule | None:
    if attempt == current:
        if _has_prod(current_display) and not _has_prod(attempt_eq):
            return TransformRule(RuleKind.DISTRIBUTE)
        return TransformRule(RuleKind.COMBINE_LIKE_TERMS)
    for rule, after in _canon_moves(current):
        if after == attempt:
            return rule
    return None


def grade_attempt(
    current: CanonEq, attempt_text: str, display: Equation | None = None
) -> GradeResult:
    """Model-trace one submitted step against the current state.

    Correct means: it parses, it has the same solution set, and it is
    strictly closer to solved, where closeness is shortest-move distance
    first and written-form debt as the tiebreaker.
    """
    try:
        attempt_eq = parse_equation(attempt_text)
    except EquationError:
        return GradeResult(Accuracy.ERROR, FEEDBACK_SYNTAX)
    attempt = canonicalize(attempt_eq)
    if not equivalent(current, attempt):
        buggy = _match_buggy(current, attempt)
        feedback = _BUGGY_FEEDBACK[buggy.kind] if buggy else FEEDBACK_NOT_EQUIVALENT
        return GradeResult(Accuracy.ERROR, feedback, buggy_rule=buggy)

    current_display = display if display is not None else canonical_equation(current)
    before_rank = (distance(current), simplification_debt(current_display))
    after_rank = (distance(attempt), simplification_debt(attempt_eq))
    if after_rank < before_rank:
        matched = _match_rule(current, current_display, attempt, attempt_eq)
        return GradeResult(Accuracy.CORRECT, FEEDBACK_CORRECT, matched_rule=matched)
    return GradeResult(Accuracy.ERROR, FEEDBACK_NO_PROGRESS)


# --- hints -----------------------------------------------------------------------


def hint(state: CanonEq, level: int, display: Equation | None = None) -> Hint:
    """Three-level ladder: goal, operation, operation with its result."""
    _require_unique(state)
    if is_solved_canon(state):
        raise AlreadySolved("the equation is already solved")
    if level not in (1, 2, 3):
        raise ValueError(f"hint level must be 1..3, got {level}")
    if level == 1:
        return Hint(
            1,
            "The goal is to get x alone on one side of the equation. What "
            "could you do to both sides to move closer to that?",
        )
    best = next_steps(state, k=1, display=display)[0]
    phrase = op_phrase(best.step.rule)
    if level == 2:
        return Hint(2, f"Try to {phrase[0].lower()}{phrase[1:]}.")
    result = render(canonical_equation(best.step.after))
    return Hint(3, f"{phrase}. That gives you: {result}")
