"""Lowering of C-RASP expression trees to the flat code the kernels run.

Subexpressions are hash-consed into a DAG numbered children-first. Only the
counting nodes are updated on every push ("eager"); everything else is
evaluated on demand at the last position and memoised for that position.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import _fallback
from ._fallback import (
    ADD, AND, ATOM, CONST, COUNT, COUNT_ATOM, COUNTREL, EQ, GT, LT, NOT, OR, SCALE, SUB, TRUE,
)
from .rpe import RelKind
from .syntax import (
    Add as AddN,
    And as AndN,
    Atom as AtomN,
    Compare,
    Const,
    Count,
    CountRel,
    Expr,
    Not as NotN,
    Or as OrN,
    Scale as ScaleN,
    Sub as SubN,
    TrueF,
    UnknownRelation,
    UnknownToken,
    children,
)

log = logging.getLogger(__name__)

try:
    from . import _native
except ImportError:  # pragma: no cover - depends on the build
    _native = None

BACKENDS = {"python": _fallback}
if _native is not None:
    BACKENDS["native"] = _native

DEFAULT_BACKEND = "native" if _native is not None else "python"

_CMP_OP = {"<": LT, "=": EQ, ">": GT}
INT64_MAX = (1 << 63) - 1


def backend_module(name: str | None = None):
    name = name or DEFAULT_BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


@dataclass
class Code:
    ops: list = field(default_factory=list)
    a: list = field(default_factory=list)
    b: list = field(default_factory=list)
    k: list = field(default_factory=list)
    cost: list = field(default_factory=list)
    keys: dict = field(default_factory=dict)

    def emit(self, op, a=0, b=0, k=0, cost=1) -> int:
        key = (op, a, b, k)
        idx = self.keys.get(key)
        if idx is None:
            idx = len(self.ops)
            self.keys[key] = idx
            self.ops.append(op)
            self.a.append(a)
            self.b.append(b)
            self.k.append(k)
            self.cost.append(cost)
        return idx

    @property
    def eager(self) -> list[int]:
        return [i for i, op in enumerate(self.ops) if op in (COUNT, COUNTREL)]


class Lowerer:
    def __init__(self, token_ids: Mapping[str, int], relations: Mapping[str, RelKind | str]):
        self.token_ids = token_ids
        self.relations = {name: RelKind(kind) for name, kind in relations.items()}
        self.code = Code()
        self._memo: dict[int, int] = {}
        self._keep: list = []  # pins nodes so id() stays unique while memoised

    def lower(self, e: Expr) -> int:
        stack = [(e, False)]
        memo = self._memo
        while stack:
            node, ready = stack.pop()
            if id(node) in memo:
                continue
            if not ready:
                stack.append((node, True))
                stack.extend((c, False) for c in children(node) if id(c) not in memo)
                continue
            memo[id(node)] = self._one(node)
            self._keep.append(node)
        return memo[id(e)]

    def _one(self, n) -> int:
        c = self.code
        m = self._memo
        if isinstance(n, TrueF):
            return c.emit(TRUE)
        if isinstance(n, AtomN):
            if n.token not in self.token_ids:
                raise UnknownToken(n.token, "in expression")
            return c.emit(ATOM, self.token_ids[n.token])
        if isinstance(n, NotN):
            x = m[id(n.arg)]
            return c.emit(NOT, x, cost=c.cost[x] + 1)
        if isinstance(n, (AndN, OrN)):
            x, y = m[id(n.left)], m[id(n.right)]
            # cheap operand first: short-circuiting makes this matter
            if c.cost[y] < c.cost[x]:
                x, y = y, x
            return c.emit(AND if isinstance(n, AndN) else OR, x, y, cost=c.cost[x] + c.cost[y] + 1)
        if isinstance(n, Compare):
            x, y = m[id(n.left)], m[id(n.right)]
            return c.emit(_CMP_OP[n.op], x, y, cost=c.cost[x] + c.cost[y] + 1)
        if isinstance(n, Const):
            if n.value > INT64_MAX:
                from .syntax import IntegerOverflow
                raise IntegerOverflow(f"constant {n.value} exceeds 64 bits")
            return c.emit(CONST, k=n.value)
        if isinstance(n, Count):
            if isinstance(n.arg, AtomN):
                if n.arg.token not in self.token_ids:
                    raise UnknownToken(n.arg.token, "in expression")
                return c.emit(COUNT_ATOM, self.token_ids[n.arg.token])
            return c.emit(COUNT, m[id(n.arg)])
        if isinstance(n, CountRel):
            if n.rel not in self.relations:
                raise UnknownRelation(n.rel)
            kind = 1 if self.relations[n.rel] is RelKind.LEN else 0
            return c.emit(COUNTREL, m[id(n.arg)], kind, cost=8)
        if isinstance(n, (AddN, SubN)):
            x, y = m[id(n.left)], m[id(n.right)]
            return c.emit(ADD if isinstance(n, AddN) else SUB, x, y, cost=c.cost[x] + c.cost[y] + 1)
        if isinstance(n, ScaleN):
            if n.factor > INT64_MAX:
                from .syntax import IntegerOverflow
                raise IntegerOverflow(f"factor {n.factor} exceeds 64 bits")
            x = m[id(n.arg)]
            return c.emit(SCALE, x, k=n.factor, cost=c.cost[x] + 1)
        raise TypeError(f"not a C-RASP expression: {n!r}")


def required_token(code: Code, node: int) -> int | None:
    """Token id a formula needs as last token to hold, if any.

    Returns -1 when two different tokens are required (never holds).
    """
    op = code.ops[node]
    if op == ATOM:
        return code.a[node]
    if op == AND:
        x = required_token(code, code.a[node])
        y = required_token(code, code.b[node])
        if x is None:
            return y
        if y is None or x == y:
            return x
        return -1
    return None


def build_evaluator(code: Code, n_tokens: int, rules: Sequence[tuple[int, int]] = (),
                    finals: Sequence[int] = (), backend: str | None = None):
    """Instantiate a kernel evaluator.

    ``rules`` are ``(body node, head token)`` pairs in priority order; per
    last token only rules that could possibly fire are scanned, which keeps
    first-match order intact.
    """
    mod = backend_module(backend)
    per_token: list[list[int]] = [[] for _ in range(n_tokens)]
    for r, (body, _) in enumerate(rules):
        req = required_token(code, body)
        if req is None:
            for lst in per_token:
                lst.append(r)
        elif req >= 0:
            per_token[req].append(r)
    cand_ptr, cand_idx = [0], []
    for lst in per_token:
        cand_idx.extend(lst)
        cand_ptr.append(len(cand_idx))
    final_mask = [0] * n_tokens
    for t in finals:
        final_mask[t] = 1
    return mod.Evaluator(
        code.ops, code.a, code.b, code.k, n_tokens, code.eager,
        [b for b, _ in rules], [h for _, h in rules], cand_ptr, cand_idx, final_mask,
    )
