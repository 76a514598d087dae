"""Grading attempts: correct steps, slips, and known misconceptions."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from ccst.equations import (
    CanonEq,
    SolutionClass,
    canonical_equation,
    canonicalize,
    equivalent,
    parse_equation,
    render,
    solve,
)
from ccst.planner import (
    FEEDBACK_CORRECT,
    FEEDBACK_NO_PROGRESS,
    FEEDBACK_NOT_EQUIVALENT,
    FEEDBACK_SYNTAX,
    Accuracy,
    BuggyKind,
    RuleKind,
    _buggy_candidates,
    apply_buggy,
    grade_attempt,
)


def canon(text: str) -> CanonEq:
    return canonicalize(parse_equation(text))


def grade(current: str, attempt: str):
    return grade_attempt(canon(current), attempt, display=parse_equation(current))


# --- correct steps -----------------------------------------------------------------


@pytest.mark.parametrize(
    "current, attempt, rule",
    [
        ("6x = 12", "6x/6 = 12/6", RuleKind.DIV_BOTH),
        ("6x/6 = 12/6", "x = 2", RuleKind.COMBINE_LIKE_TERMS),
        ("1+x = 3", "1+x-1 = 3-1", RuleKind.SUB_BOTH_CONST),
        ("15 = -2x-5", "15+5 = -2x-5+5", RuleKind.ADD_BOTH_CONST),
        ("15 = -2x-5", "20 = -2x", RuleKind.ADD_BOTH_CONST),
        ("4(x+2) = 20", "4x+8 = 20", RuleKind.DISTRIBUTE),
        ("2x+3 = x+9", "x+3 = 9", RuleKind.SUB_BOTH_VAR),
        ("2x = 4", "x = 2", RuleKind.DIV_BOTH),
    ],
)
def test_correct_attempts(current: str, attempt: str, rule: RuleKind) -> None:
    result = grade(current, attempt)
    assert result.accuracy is Accuracy.CORRECT
    assert result.feedback == FEEDBACK_CORRECT
    assert result.matched_rule is not None
    assert result.matched_rule.kind is rule
    assert result.buggy_rule is None


def test_correct_requires_strict_progress() -> None:
    result = grade("2x+3 = 7", "2x+3-1 = 7-1")
    assert result.accuracy is Accuracy.ERROR
    assert result.feedback == FEEDBACK_NO_PROGRESS

    reshuffled = grade("2x+3 = 7", "3+2x = 7")
    assert reshuffled.accuracy is Accuracy.ERROR
    assert reshuffled.feedback == FEEDBACK_NO_PROGRESS


def test_unreadable_attempt() -> None:
    result = grade("2x+3 = 7", "2x+")
    assert result.accuracy is Accuracy.ERROR
    assert result.feedback == FEEDBACK_SYNTAX
    assert result.matched_rule is None and result.buggy_rule is None


def test_unbalanced_attempt_without_known_pattern() -> None:
    result = grade("2x+3 = 7", "x = 90")
    assert result.accuracy is Accuracy.ERROR
    assert result.feedback == FEEDBACK_NOT_EQUIVALENT


# --- misconception matching --------------------------------------------------------


@pytest.mark.parametrize(
    "current, attempt, kind",
    [
        ("2x+3 = 7", "2x = 10", BuggyKind.SIGN_FLIP_OMITTED),
        ("15 = -2x-5", "10 = -2x", BuggyKind.SIGN_FLIP_OMITTED),
        ("6x = 12", "x = 12", BuggyKind.ONE_SIDED_OPERATION),
        ("2x+3 = 7", "2x+3-3 = 7", BuggyKind.ONE_SIDED_OPERATION),
        ("2x+4 = 10", "x+4 = 5", BuggyKind.DIVIDED_ONE_TERM_ONLY),
        ("2x+3 = 7", "2x = 5", BuggyKind.ARITHMETIC_SLIP),
        ("6x = 12", "x = 3", BuggyKind.ARITHMETIC_SLIP),
    ],
)
def test_buggy_attribution(current: str, attempt: str, kind: BuggyKind) -> None:
    result = grade(current, attempt)
    assert result.accuracy is Accuracy.ERROR
    assert result.buggy_rule is not None
    assert result.buggy_rule.kind is kind
    assert result.matched_rule is None
    reproduced = apply_buggy(result.buggy_rule, canon(current))
    assert reproduced == canon(attempt)


def test_buggy_feedback_is_specific() -> None:
    sign_flip = grade("2x+3 = 7", "2x = 10")
    assert "sign" in sign_flip.feedback
    one_sided = grade("6x = 12", "x = 12")
    assert "other side" in one_sided.feedback
    one_term = grade("2x+4 = 10", "x+4 = 5")
    assert "every term" in one_term.feedback
    slip = grade("2x+3 = 7", "2x = 5")
    assert "arithmetic" in slip.feedback


# --- reproduction invariant --------------------------------------------------------


def _random_states(count: int, seed: int) -> list[CanonEq]:
    rng = random.Random(seed)
    states = []
    while len(states) < count:
        a, b, c, d = (rng.randint(-9, 9) for _ in range(4))
        state = CanonEq(Fraction(a), Fraction(b), Fraction(c), Fraction(d))
        if solve(state).kind is SolutionClass.UNIQUE:
            states.append(state)
    return states


def test_every_buggy_candidate_is_reproducible() -> None:
    """Grading an error must name a rule that regenerates the exact attempt."""
    for state in _random_states(60, seed=20240816):
        for candidate in _buggy_candidates(state):
            buggy_state = apply_buggy(candidate, state)
            if equivalent(buggy_state, state):
                continue
            attempt_text = render(canonical_equation(buggy_state))
            result = grade_attempt(state, attempt_text)
            assert result.accuracy is Accuracy.ERROR, (state, candidate)
            assert result.buggy_rule is not None, (state, candidate, attempt_text)
            assert apply_buggy(result.buggy_rule, state) == canonicalize(
                parse_equation(attempt_text)
            )


def test_grading_never_rewards_unbalanced_steps() -> None:
    for state in _random_states(40, seed=7):
        for candidate in _buggy_candidates(state):
            buggy_state = apply_buggy(candidate, state)
            if equivalent(buggy_state, state):
                continue
            attempt_text = render(canonical_equation(buggy_state))
            assert grade_attempt(state, attempt_text).accuracy is Accuracy.ERROR
