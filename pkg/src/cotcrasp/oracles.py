"""Direct predicates for the canned languages, independent of any machine."""

from __future__ import annotations

from math import gcd
from typing import Callable, Sequence

from sympy import isprime

from .syntax import CraspError


class UnknownOracle(CraspError):
    pass


def divides(j: int, i: int) -> bool:
    """j | i, with 0 dividing only 0."""
    return i == 0 if j == 0 else i % j == 0


ARITHMETIC: dict[str, Callable[..., bool]] = {
    "prime": lambda n: bool(isprime(n)),
    "exponential": lambda i, j: j == 2 ** i,
    "division": lambda i, j: divides(j, i),
    "gcd": lambda i, j, k: gcd(i, j) == k,
    "multiplication": lambda i, j, k: i * j == k,
}

UNARY_LETTERS = {"prime": "a", "exponential": "ab", "division": "ab", "gcd": "abc",
                 "multiplication": "abc"}


def letter_bounded_counts(word: Sequence[str], letters: Sequence[str]) -> tuple | None:
    """Exponents (i, j, ...) if ``word`` is a1^i a2^j ..., else None."""
    counts = [0] * len(letters)
    index = {a: n for n, a in enumerate(letters)}
    last = 0
    for c in word:
        if c not in index:
            return None
        n = index[c]
        if n < last:
            return None
        last = n
        counts[n] += 1
    return tuple(counts)


def unary_member(task: str, word: Sequence[str]) -> bool:
    counts = letter_bounded_counts(word, UNARY_LETTERS[task])
    return counts is not None and ARITHMETIC[task](*counts)


BINARY_DIGITS = {"zero": "0", "one": "1", "slash": "/"}
BINARY_TOKENS = {v: k for k, v in BINARY_DIGITS.items()}


def render_binary(word: Sequence[str]) -> str:
    return "".join(BINARY_DIGITS[c] for c in word)


def tokens_of_binary(text: str) -> tuple:
    return tuple(BINARY_TOKENS[c] for c in text)


def parse_numerals(word: Sequence[str]) -> tuple | None:
    """Values of slash-separated canonical binary numerals, or None."""
    if any(c not in BINARY_DIGITS for c in word):
        return None
    parts = render_binary(word).split("/")
    out = []
    for p in parts:
        if not p or (len(p) > 1 and p[0] == "0"):
            return None
        out.append(int(p, 2))
    return tuple(out)


def binary_member(task: str, word: Sequence[str]) -> bool:
    vals = parse_numerals(word)
    arity = ARITHMETIC[task].__code__.co_argcount
    return vals is not None and len(vals) == arity and ARITHMETIC[task](*vals)


def parity(word: Sequence[str]) -> bool:
    return sum(1 for c in word if c == "a") % 2 == 0


def ends_in_b(word: Sequence[str]) -> bool:
    return len(word) > 0 and word[-1] == "b"


def binary_even(word: Sequence[str]) -> bool:
    return len(word) > 0 and word[-1] == "zero"


def oracle(name: str, encoding: str | None = None) -> Callable[[Sequence[str]], bool]:
    """Membership predicate by name; arithmetic tasks need an encoding."""
    simple = {"parity": parity, "ends_in_b": ends_in_b, "binary_even": binary_even}
    if name in simple:
        return simple[name]
    if name in ARITHMETIC:
        if encoding == "unary":
            return lambda w: unary_member(name, w)
        if encoding in ("binary", "general"):
            return lambda w: binary_member(name, w)
        raise UnknownOracle(f"task {name!r} needs encoding unary or binary")
    raise UnknownOracle(f"no oracle named {name!r}")
