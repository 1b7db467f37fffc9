"""Reference (batch) semantics of C-RASP and C-RASP[RPEs].

Every subexpression is evaluated over the whole word by structural
induction, with unbounded Python integers. This is deliberately the slow,
obvious reading of the definitions; the incremental evaluator is tested
against it.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .rpe import RelKind, rel_contains
from .syntax import (
    Add,
    And,
    Atom,
    Compare,
    Const,
    Count,
    CountRel,
    CraspError,
    Expr,
    Formula,
    Not,
    Or,
    Scale,
    Sub,
    Term,
    TrueF,
    UnknownRelation,
    UnknownToken,
    children,
    is_formula,
    is_term,
)

_CMP = {
    "<": lambda x, y: x < y,
    "=": lambda x, y: x == y,
    ">": lambda x, y: x > y,
}


def _check(word, e, relations, alphabet):
    if len(word) == 0:
        raise CraspError("C-RASP words are nonempty")
    if alphabet is not None:
        alpha = set(alphabet)
        for t in word:
            if t not in alpha:
                raise UnknownToken(t, "in word")
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Atom) and alphabet is not None and n.token not in alpha:
            raise UnknownToken(n.token, "in expression")
        if isinstance(n, CountRel) and n.rel not in relations:
            raise UnknownRelation(n.rel)
        stack.extend(children(n))


def _evaluate(word: Sequence[str], e: Expr, relations: Mapping) -> list[int]:
    n = len(word)
    memo: dict[int, list[int]] = {}
    # post-order without recursion
    stack = [(e, False)]
    while stack:
        node, ready = stack.pop()
        if id(node) in memo:
            continue
        if not ready:
            stack.append((node, True))
            stack.extend((c, False) for c in children(node) if id(c) not in memo)
            continue
        if isinstance(node, TrueF):
            out = [1] * n
        elif isinstance(node, Atom):
            out = [int(t == node.token) for t in word]
        elif isinstance(node, Not):
            out = [1 - h for h in memo[id(node.arg)]]
        elif isinstance(node, And):
            out = [min(x, y) for x, y in zip(memo[id(node.left)], memo[id(node.right)])]
        elif isinstance(node, Or):
            out = [max(x, y) for x, y in zip(memo[id(node.left)], memo[id(node.right)])]
        elif isinstance(node, Compare):
            f = _CMP[node.op]
            out = [int(f(x, y)) for x, y in zip(memo[id(node.left)], memo[id(node.right)])]
        elif isinstance(node, Const):
            out = [node.value] * n
        elif isinstance(node, Count):
            out, m = [], 0
            for h in memo[id(node.arg)]:
                m += h
                out.append(m)
        elif isinstance(node, CountRel):
            kind = RelKind(relations[node.rel])
            inner = memo[id(node.arg)]
            out = [
                sum(inner[i - 1] for i in range(1, j + 1) if rel_contains(kind, i, j))
                for j in range(1, n + 1)
            ]
        elif isinstance(node, Add):
            out = [x + y for x, y in zip(memo[id(node.left)], memo[id(node.right)])]
        elif isinstance(node, Sub):
            out = [x - y for x, y in zip(memo[id(node.left)], memo[id(node.right)])]
        elif isinstance(node, Scale):
            out = [node.factor * x for x in memo[id(node.arg)]]
        else:
            raise TypeError(f"not a C-RASP expression: {node!r}")
        memo[id(node)] = out
    return memo[id(e)]


def eval_formula(word: Sequence[str], f: Formula, relations: Mapping | None = None,
                 alphabet: Sequence[str] | None = None) -> list[int]:
    """Bit sequence of ``f`` at positions 1..|word| (returned 0-indexed)."""
    if not is_formula(f):
        raise TypeError(f"expected a formula, got {f!r}")
    relations = relations or {}
    _check(word, f, relations, alphabet)
    return _evaluate(word, f, relations)


def eval_term(word: Sequence[str], t: Term, relations: Mapping | None = None,
              alphabet: Sequence[str] | None = None) -> list[int]:
    """Integer sequence of ``t`` at positions 1..|word| (returned 0-indexed)."""
    if not is_term(t):
        raise TypeError(f"expected a term, got {t!r}")
    relations = relations or {}
    _check(word, t, relations, alphabet)
    return _evaluate(word, t, relations)


def eval_expr(word, e, relations=None, alphabet=None) -> list[int]:
    return eval_formula(word, e, relations, alphabet) if is_formula(e) else eval_term(word, e, relations, alphabet)
