"""Incremental (autoregressive) evaluation of a fixed set of expressions."""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from .lowering import Lowerer, build_evaluator
from .syntax import EmptyState, Expr, UnknownToken, check_token_name, is_formula


class IncrementalTable:
    """Per-position values of registered expressions, extended one token at a time.

    Only the last position is ever evaluated; running counts and the
    histories needed by relational counts are kept so a push costs time
    independent of the current length.

    >>> from cotcrasp.syntax import Atom, Count
    >>> t = IncrementalTable(["a", "b"], [Count(Atom("a"))])
    >>> for c in "aab":
    ...     _ = t.push(c)
    >>> t.value_at_last(Count(Atom("a")))
    2
    """

    def __init__(self, alphabet: Sequence[str], exprs: Iterable[Expr] = (),
                 relations: Mapping | None = None, backend: str | None = None):
        self.alphabet = tuple(check_token_name(a) for a in dict.fromkeys(alphabet))
        self.token_ids = {a: i for i, a in enumerate(self.alphabet)}
        self._lowerer = Lowerer(self.token_ids, relations or {})
        self._roots: dict[Expr, int] = {}
        for e in exprs:
            self._roots[e] = self._lowerer.lower(e)
        self._kernel = build_evaluator(self._lowerer.code, len(self.alphabet), backend=backend)

    def __len__(self) -> int:
        return self._kernel.length

    def push(self, token: str) -> "IncrementalTable":
        try:
            tid = self.token_ids[token]
        except KeyError:
            raise UnknownToken(token, "pushed onto table") from None
        self._kernel.push(tid)
        return self

    def value_at_last(self, expr: Expr):
        if self._kernel.length == 0:
            raise EmptyState("value_at_last on an empty table")
        try:
            node = self._roots[expr]
        except KeyError:
            raise KeyError(f"expression was not registered with this table: {expr!r}") from None
        v = self._kernel.value(node)
        return bool(v) if is_formula(expr) else v


def incremental_push(table: IncrementalTable, token: str) -> IncrementalTable:
    return table.push(token)


def value_at_last(table: IncrementalTable, expr: Expr):
    return table.value_at_last(expr)
