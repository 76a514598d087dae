"""Linear equations in one variable: parsing, canonical form, exact solving.

The display layer keeps equations exactly as written (term order, quotients,
parenthesized products) so step text can echo what the student sees. The
canonical layer reduces both sides to a*x + b with exact rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import gcd

INT_BOUND = 2**63 - 1


class EquationError(ValueError):
    """Base for all parse and analysis failures."""


class EquationSyntaxError(EquationError):
    """Input does not match the equation grammar."""


class NonLinearError(EquationError):
    """Input is syntactically valid algebra but not linear in x."""


class UnknownVariableError(EquationError):
    """Input uses a variable other than x."""


# --- display AST -------------------------------------------------------------
#
# A side is an ordered sequence of signed atoms; the sign lives on the
# sequence item, so atom fields are magnitudes. This keeps rendering
# deterministic and sign-aware ("-2x-5", "15-5").


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Term:
    """An x term; coeff is the magnitude (1 renders as bare "x")."""

    coeff: int


@dataclass(frozen=True)
class Quot:
    """numerator / den, with an integer, nonzero denominator."""

    num: "Expr"
    den: int


@dataclass(frozen=True)
class Prod:
    """mult * (inner), the parenthesized-product form."""

    mult: int
    inner: "Expr"


Atom = Const | Term | Quot | Prod


@dataclass(frozen=True)
class Expr:
    """One side of an equation: ((sign, atom), ...) with sign in {1, -1}."""

    atoms: tuple[tuple[int, Atom], ...]


@dataclass(frozen=True)
class Equation:
    lhs: Expr
    rhs: Expr
    source_text: str


@dataclass(frozen=True)
class CanonEq:
    """a*x + b = c*x + d with exact rationals (Fraction keeps lowest terms)."""

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction


class SolutionClass(Enum):
    UNIQUE = "unique"
    NO_SOLUTION = "no_solution"
    IDENTITY = "identity"


@dataclass(frozen=True)
class Solution:
    kind: SolutionClass
    value: Fraction | None = None


# --- lexer -------------------------------------------------------------------

_OPS = {"+", "-", "*", "/", "(", ")", "="}


def _lex(text: str) -> list[tuple[str, int | str]]:
    tokens: list[tuple[str, int | str]] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            value = int(text[i:j])
            if value > INT_BOUND:
                raise EquationSyntaxError(f"number too large: {text[i:j]}")
            tokens.append(("INT", value))
            i = j
        elif ch == "x":
            tokens.append(("X", "x"))
            i += 1
        elif ch in _OPS:
            tokens.append((ch, ch))
            i += 1
        elif ch.isalpha():
            raise UnknownVariableError(f"unknown variable {ch!r} (only x is allowed)")
        else:
            raise EquationSyntaxError(f"unexpected character {ch!r}")
    return tokens


# --- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[tuple[str, int | str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else "EOF"

    def take(self, kind: str) -> int | str:
        if self.peek() != kind:
            raise EquationSyntaxError(
                f"expected {kind}, found {self.peek()} at token {self.pos}"
            )
        value = self.tokens[self.pos][1]
        self.pos += 1
        return value

    def parse_side(self) -> Expr:
        atoms: list[tuple[int, Atom]] = []
        sign = 1
        if self.peek() in ("+", "-"):
            sign = -1 if self.take(self.peek()) == "-" else 1
        atoms.append((sign, self.parse_item()))
        while self.peek() in ("+", "-"):
            sign = -1 if self.take(self.peek()) == "-" else 1
            atoms.append((sign, self.parse_item()))
        return Expr(tuple(atoms))

    def parse_item(self) -> Atom:
        atom = self.parse_factor()
        if self.peek() == "/":
            self.take("/")
            atom = Quot(Expr(((1, atom),)), self.parse_denominator())
            if self.peek() == "/":
                raise EquationSyntaxError("chained division is not supported")
        return atom

    def parse_denominator(self) -> int:
        neg = False
        if self.peek() == "-":
            self.take("-")
            neg = True
        if self.peek() == "X":
            raise NonLinearError("division by x is not linear")
        den = int(self.take("INT"))
        if den == 0:
            raise EquationSyntaxError("zero denominator")
        return -den if neg else den

    def parse_factor(self) -> Atom:
        kind = self.peek()
        if kind == "INT":
            value = int(self.take("INT"))
            if self.peek() == "X":
                self.take("X")
                return Term(value)
            if self.peek() == "*":
                self.take("*")
                if self.peek() == "X":
                    self.take("X")
                    return Term(value)
                if self.peek() == "(":
                    return Prod(value, self.parse_group())
                raise EquationSyntaxError("'*' must be followed by x or '('")
            if self.peek() == "(":
                return Prod(value, self.parse_group())
            return Const(value)
        if kind == "X":
            self.take("X")
            if self.peek() == "*":
                self.take("*")
                if self.peek() == "X":
                    raise NonLinearError("x*x is not linear")
                return Term(int(self.take("INT")))
            if self.peek() == "(":
                raise NonLinearError("x times a parenthesized expression is not linear")
            return Term(1)
        if kind == "(":
            return Prod(1, self.parse_group())
        raise EquationSyntaxError(f"expected a term, found {kind}")

    def parse_group(self) -> Expr:
        self.take("(")
        inner = self.parse_side()
        self.take(")")
        return inner


def parse_equation(text: str) -> Equation:
    """Parse one linear equation in x. Whitespace is insignificant.

    Raises EquationSyntaxError, NonLinearError, or UnknownVariableError.
    """
    tokens = _lex(text)
    parser = _Parser(tokens)
    lhs = parser.parse_side()
    parser.take("=")
    rhs = parser.parse_side()
    if parser.peek() != "EOF":
        raise EquationSyntaxError(f"trailing input after equation: {parser.peek()}")
    return Equation(lhs, rhs, text)


# --- folding and canonical form ---------------------------------------------


def _fold_atom(atom: Atom) -> tuple[Fraction, Fraction]:
    if isinstance(atom, Const):
        return Fraction(0), Fraction(atom.value)
    if isinstance(atom, Term):
        return Fraction(atom.coeff), Fraction(0)
    if isinstance(atom, Quot):
        p, q = fold(atom.num)
        return p / atom.den, q / atom.den
    p, q = fold(atom.inner)
    return p * atom.mult, q * atom.mult


def fold(expr: Expr) -> tuple[Fraction, Fraction]:
    """Collapse a side to (x coefficient, constant)."""
    p, q = Fraction(0), Fraction(0)
    for sign, atom in expr.atoms:
        ap, aq = _fold_atom(atom)
        p += sign * ap
        q += sign * aq
    return p, q


def canonicalize(eq: Equation) -> CanonEq:
    a, b = fold(eq.lhs)
    c, d = fold(eq.rhs)
    return CanonEq(a, b, c, d)


def solve(canon: CanonEq) -> Solution:
    if canon.a != canon.c:
        return Solution(SolutionClass.UNIQUE, (canon.d - canon.b) / (canon.a - canon.c))
    if canon.b == canon.d:
        return Solution(SolutionClass.IDENTITY)
    return Solution(SolutionClass.NO_SOLUTION)


def equivalent(e1: CanonEq, e2: CanonEq) -> bool:
    """Same solution set: same class, and same root when unique."""
    s1, s2 = solve(e1), solve(e2)
    if s1.kind != s2.kind:
        return False
    return s1.value == s2.value


# --- rendering ---------------------------------------------------------------


def _render_atom(atom: Atom) -> str:
    if isinstance(atom, Const):
        return str(atom.value)
    if isinstance(atom, Term):
        return "x" if atom.coeff == 1 else f"{atom.coeff}x"
    if isinstance(atom, Quot):
        num = render_expr(atom.num)
        sign, first = atom.num.atoms[0]
        # A sole positive non-quotient item reads fine bare (6x/6); anything
        # else needs parentheses to survive a round trip through the parser.
        if len(atom.num.atoms) > 1 or sign < 0 or isinstance(first, Quot):
            num = f"({num})"
        return f"{num}/{atom.den}"
    inner = render_expr(atom.inner)
    prefix = "" if atom.mult == 1 else str(atom.mult)
    return f"{prefix}({inner})"


def render_expr(expr: Expr) -> str:
    parts: list[str] = []
    for index, (sign, atom) in enumerate(expr.atoms):
        if index == 0:
            parts.append(("-" if sign < 0 else "") + _render_atom(atom))
        else:
            parts.append(("+" if sign > 0 else "-") + _render_atom(atom))
    return "".join(parts)


def render(eq: Equation) -> str:
    """Deterministic text form: single spaces around '=', none elsewhere."""
    return f"{render_expr(eq.lhs)} = {render_expr(eq.rhs)}"


def canonical_expr(p: Fraction, q: Fraction) -> Expr:
    """The fully simplified display of p*x + q (x term first, then constant)."""
    atoms: list[tuple[int, Atom]] = []
    if p != 0:
        mag = abs(p)
        if mag.denominator == 1:
            atom: Atom = Term(int(mag))
        else:
            atom = Quot(Expr(((1, Term(mag.numerator)),)), mag.denominator)
        atoms.append((1 if p > 0 else -1, atom))
    if q != 0:
        mag = abs(q)
        if mag.denominator == 1:
            atom = Const(int(mag))
        else:
            atom = Quot(Expr(((1, Const(mag.numerator)),)), mag.denominator)
        atoms.append((1 if q > 0 else -1, atom))
    if not atoms:
        atoms.append((1, Const(0)))
    return Expr(tuple(atoms))


def canonical_equation(canon: CanonEq) -> Equation:
    lhs = canonical_expr(canon.a, canon.b)
    rhs = canonical_expr(canon.c, canon.d)
    eq = Equation(lhs, rhs, "")
    return Equation(lhs, rhs, render(eq))


# --- solved-form check -------------------------------------------------------


def _is_bare_x(expr: Expr) -> bool:
    return expr.atoms == ((1, Term(1)),)


def _is_simple_constant(expr: Expr) -> bool:
    if len(expr.atoms) != 1:
        return False
    _, atom = expr.atoms[0]
    if isinstance(atom, Const):
        return True
    if isinstance(atom, Quot):
        if atom.den <= 1:
            return False
        inner = atom.num.atoms
        if len(inner) != 1 or inner[0][0] != 1:
            return False
        numerator = inner[0][1]
        return isinstance(numerator, Const) and gcd(numerator.value, atom.den) == 1
    return False


def is_solved(eq: Equation) -> bool:
    """True only for a literal "x = q" or "q = x" with q fully simplified."""
    return (_is_bare_x(eq.lhs) and _is_simple_constant(eq.rhs)) or (
        _is_bare_x(eq.rhs) and _is_simple_constant(eq.lhs)
    )
