"""Abstract syntax for C-RASP formulas and count terms.

Formulas are boolean-valued per position, terms are integer-valued per
position. Both are immutable trees; structural equality is dataclass
equality.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class CraspError(Exception):
    """Base class for every error raised by this package."""


class UnknownToken(CraspError):
    def __init__(self, token, where: str = ""):
        self.token = token
        msg = f"unknown token {token!r}"
        super().__init__(f"{msg} ({where})" if where else msg)


class UnknownRelation(CraspError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown relation {name!r}")


class EmptyState(CraspError):
    pass


class IntegerOverflow(CraspError, OverflowError):
    pass


def check_token_name(name: str) -> str:
    if not isinstance(name, str) or not IDENT.match(name):
        raise ValueError(f"token names must be ASCII identifiers, got {name!r}")
    return name


# -- formulas ---------------------------------------------------------------


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class Atom:
    token: str


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


COMPARISONS = ("<", "=", ">")


@dataclass(frozen=True)
class Compare:
    left: "Term"
    op: str
    right: "Term"

    def __post_init__(self):
        if self.op not in COMPARISONS:
            raise ValueError(f"comparison must be one of {COMPARISONS}, got {self.op!r}")


# -- terms ------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or self.value < 0:
            raise ValueError(f"constants are nonnegative integers, got {self.value!r}")


@dataclass(frozen=True)
class Count:
    arg: "Formula"


@dataclass(frozen=True)
class CountRel:
    rel: str
    arg: "Formula"


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Sub:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Scale:
    factor: int
    arg: "Term"

    def __post_init__(self):
        if not isinstance(self.factor, int) or self.factor < 0:
            raise ValueError(f"scale factors are nonnegative integers, got {self.factor!r}")


Formula = Union[TrueF, Atom, Not, And, Or, Compare]
Term = Union[Const, Count, CountRel, Add, Sub, Scale]
Expr = Union[Formula, Term]

FORMULA_TYPES = (TrueF, Atom, Not, And, Or, Compare)
TERM_TYPES = (Const, Count, CountRel, Add, Sub, Scale)


def is_formula(e) -> bool:
    return isinstance(e, FORMULA_TYPES)


def is_term(e) -> bool:
    return isinstance(e, TERM_TYPES)


def children(e: Expr) -> tuple:
    if isinstance(e, (TrueF, Atom, Const)):
        return ()
    if isinstance(e, (Not, Count, CountRel, Scale)):
        return (e.arg,)
    return (e.left, e.right)


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal, iterative so long Add chains don't hit the recursion limit."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def atoms(e: Expr) -> set[str]:
    return {n.token for n in walk(e) if isinstance(n, Atom)}


def relations_used(e: Expr) -> set[str]:
    return {n.rel for n in walk(e) if isinstance(n, CountRel)}


# -- builders ---------------------------------------------------------------


def conj(*fs: Formula) -> Formula:
    """Left-nested conjunction; the empty conjunction is ``true``."""
    if not fs:
        return TrueF()
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(*fs: Formula) -> Formula:
    if not fs:
        return Not(TrueF())
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


def linear(base: Term | None, coeffs) -> Term:
    """``base + sum(c * t)`` using Add/Sub/Scale, skipping zero coefficients.

    ``coeffs`` is an iterable of ``(coefficient, term)``; negative
    coefficients become subtractions.
    """
    out = base
    for c, t in coeffs:
        if c == 0:
            continue
        piece = t if abs(c) == 1 else Scale(abs(c), t)
        if out is None:
            out = piece if c > 0 else Sub(Const(0), piece)
        else:
            out = Add(out, piece) if c > 0 else Sub(out, piece)
    return Const(0) if out is None else out
