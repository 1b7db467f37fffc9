"""Text formats: CoT C-RASP programs, counter machines and assembler source.

CoT programs::

    // comments run to the end of the line
    alphabet a b
    cot t0 t1
    final t1
    relation one = one
    rule t0 <- #[Q(a)] > 0 & Q(a)

Formula and term syntax share one precedence ladder, loosest first:
``|``, ``&``, prefix ``!``, a single non-associative comparison
(``<``, ``=``, ``>``), left-associative ``+``/``-``, ``INT*`` scaling, and
atoms (``INT``, ``true``, ``Q(id)``, ``#[e]``, ``#rel[e]``, ``(e)``).

Counter machines::

    counters 2
    state q0 initial
    state q1 final
    trans q0 -> q0 when x1>0 effect (-2,0)
    trans q0 -> q1 when x1=0 effect (0,0)

Assembler source is line oriented with ``#`` comments and ``;`` as an
optional statement separator; see :mod:`cotcrasp.asm`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from .asm import OPCODES, AsmProgram, Call, Instr, Label, MacroDef
from .cot import CotProgram, CotRule
from .machine import POS, ZERO, CounterMachine, Guard, MachineError, Transition
from .rpe import RelKind
from .syntax import (
    Add, And, Atom, Compare, Const, Count, CountRel, CraspError, Not, Or, Scale, Sub, TrueF,
    is_formula, is_term,
)


@dataclass(frozen=True)
class Span:
    offset: int
    line: int
    col: int
    length: int


class DslError(CraspError):
    def __init__(self, message: str, span: Span | None):
        self.message = message
        self.span = span
        loc = f"{span.line}:{span.col}: " if span is not None else ""
        super().__init__(loc + message)


class ParseError(DslError):
    def __init__(self, span: Span | None, expected=(), found: str = "", message: str | None = None):
        self.expected = tuple(sorted(set(expected)))
        self.found = found
        if message is None:
            want = " or ".join(self.expected) or "something else"
            message = f"expected {want}, found {found}"
        super().__init__(message, span)


class SemanticError(DslError):
    pass


class _Src:
    def __init__(self, text: str):
        self.text = text
        self.line_starts = [0] + [m.end() for m in re.finditer(r"\n", text)]

    def span(self, offset: int, length: int) -> Span:
        lo, hi = 0, len(self.line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.line_starts[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return Span(offset, lo + 1, offset - self.line_starts[lo] + 1, length)


# CoT programs

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>//[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow><-)
  | (?P<punct>[()\[\]\#!&|<=>+\-*])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    span: Span

    def show(self) -> str:
        if self.kind == "eof":
            return "end of input"
        if self.kind == "nl":
            return "end of line"
        return repr(self.text)


def _tokenize(src: _Src) -> list[_Tok]:
    out = []
    pos, text = 0, src.text
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(src.span(pos, 1), (), repr(text[pos]),
                             f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            t = m.group()
            out.append(_Tok("punct" if kind in ("punct", "arrow") else kind, t, src.span(pos, len(t))))
        pos = m.end()
    out.append(_Tok("eof", "", src.span(len(text), 0)))
    return out


class _CotParser:
    HEADERS = ("alphabet", "cot", "final", "relation", "rule")

    def __init__(self, text: str):
        self.src = _Src(text)
        self.toks = _tokenize(self.src)
        self.i = 0
        self.refs: list[tuple[str, str, Span]] = []

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == text

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            raise ParseError(self.tok.span, (repr(text),), self.tok.show())
        return self.advance()

    def ident(self, what: str = "identifier") -> _Tok:
        if self.tok.kind != "id":
            raise ParseError(self.tok.span, (what,), self.tok.show())
        return self.advance()

    def end_of_statement(self) -> None:
        if self.tok.kind not in ("nl", "eof"):
            raise ParseError(self.tok.span, ("end of line",), self.tok.show())
        if self.tok.kind == "nl":
            self.advance()

    def ids_to_eol(self) -> list[_Tok]:
        out = []
        while self.tok.kind == "id":
            out.append(self.advance())
        self.end_of_statement()
        return out

    # expressions

    def expr(self):
        return self.or_()

    def _need(self, node, span, kind):
        ok = is_formula(node) if kind == "formula" else is_term(node)
        if not ok:
            raise ParseError(span, (kind,), "a " + ("term" if kind == "formula" else "formula"),
                             f"expected a {kind} here")
        return node

    def or_(self):
        start = self.tok.span
        left = self.and_()
        while self.at("|"):
            op = self.advance()
            self._need(left, start, "formula")
            rs = self.tok.span
            right = self._need(self.and_(), rs, "formula")
            left = Or(left, right)
        return left

    def and_(self):
        start = self.tok.span
        left = self.not_()
        while self.at("&"):
            self.advance()
            self._need(left, start, "formula")
            rs = self.tok.span
            right = self._need(self.not_(), rs, "formula")
            left = And(left, right)
        return left

    def not_(self):
        if self.at("!"):
            self.advance()
            s = self.tok.span
            return Not(self._need(self.not_(), s, "formula"))
        return self.cmp()

    def cmp(self):
        start = self.tok.span
        left = self.sum_()
        for op in ("<", "=", ">"):
            if self.at(op):
                self.advance()
                self._need(left, start, "term")
                rs = self.tok.span
                right = self._need(self.sum_(), rs, "term")
                if any(self.at(o) for o in ("<", "=", ">")):
                    raise ParseError(self.tok.span, (), self.tok.show(),
                                     "comparisons do not chain; add parentheses")
                return Compare(left, op, right)
        return left

    def sum_(self):
        start = self.tok.span
        left = self.prod()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            self._need(left, start, "term")
            rs = self.tok.span
            right = self._need(self.prod(), rs, "term")
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def prod(self):
        if self.tok.kind == "int" and self.toks[self.i + 1].text == "*" \
                and self.toks[self.i + 1].kind == "punct":
            k = int(self.advance().text)
            self.advance()
            s = self.tok.span
            return Scale(k, self._need(self.prod(), s, "term"))
        return self.atom()

    def atom(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Const(int(t.text))
        if t.kind == "id" and t.text == "true":
            self.advance()
            return TrueF()
        if t.kind == "id" and t.text == "Q":
            self.advance()
            self.expect("(")
            name = self.ident("token name")
            self.expect(")")
            self.refs.append(("token", name.text, name.span))
            return Atom(name.text)
        if self.at("#"):
            self.advance()
            rel = None
            if self.tok.kind == "id":
                r = self.advance()
                rel = r.text
                self.refs.append(("relation", rel, r.span))
            self.expect("[")
            s = self.tok.span
            inner = self._need(self.expr(), s, "formula")
            self.expect("]")
            return Count(inner) if rel is None else CountRel(rel, inner)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(t.span, ("'#'", "'('", "'Q'", "'true'", "integer"), t.show())

    # program

    def program(self) -> CotProgram:
        seen: dict[str, Span] = {}
        sigma = gamma = None
        final: list[_Tok] = []
        relations: list[tuple[_Tok, str]] = []
        rules: list[tuple[_Tok, object, list]] = []
        while self.tok.kind != "eof":
            if self.tok.kind == "nl":
                self.advance()
                continue
            kw = self.ident("a header keyword")
            if kw.text not in self.HEADERS:
                raise ParseError(kw.span, tuple(repr(h) for h in self.HEADERS), kw.show())
            if kw.text in ("alphabet", "cot", "final"):
                if kw.text in seen:
                    raise SemanticError(f"duplicate {kw.text!r} header", kw.span)
                seen[kw.text] = kw.span
                names = self.ids_to_eol()
                if kw.text == "alphabet":
                    sigma = names
                elif kw.text == "cot":
                    gamma = names
                else:
                    final = names
            elif kw.text == "relation":
                name = self.ident("relation name")
                self.expect("=")
                kind = self.ident("'one' or 'len'")
                if kind.text not in ("one", "len"):
                    raise ParseError(kind.span, ("'len'", "'one'"), kind.show())
                self.end_of_statement()
                relations.append((name, kind.text))
            else:
                head = self.ident("rule head")
                self.expect("<-")
                self.refs = []
                s = self.tok.span
                body = self._need(self.expr(), s, "formula")
                self.end_of_statement()
                rules.append((head, body, self.refs))
        if sigma is None:
            raise ParseError(self.tok.span, ("'alphabet'",), "end of input",
                             "missing 'alphabet' header")
        if gamma is None:
            raise ParseError(self.tok.span, ("'cot'",), "end of input", "missing 'cot' header")
        return self._check(sigma, gamma, final, relations, rules)

    def _check(self, sigma, gamma, final, relations, rules) -> CotProgram:
        for group in (sigma, gamma, final):
            dup = set()
            for t in group:
                if t.text in dup:
                    raise SemanticError(f"duplicate token {t.text!r}", t.span)
                dup.add(t.text)
        gset = {t.text for t in gamma}
        known = {t.text for t in sigma} | gset
        for t in final:
            if t.text not in gset:
                raise SemanticError(f"final token {t.text!r} is not in the cot alphabet", t.span)
        rel_names = set()
        for name, _ in relations:
            if name.text in rel_names:
                raise SemanticError(f"duplicate relation {name.text!r}", name.span)
            rel_names.add(name.text)
        if not rules:
            raise SemanticError("a program needs at least one rule", None)
        for head, _, refs in rules:
            if head.text not in gset:
                raise SemanticError(f"rule head {head.text!r} is not in the cot alphabet", head.span)
            for kind, name, span in refs:
                if kind == "token" and name not in known:
                    raise SemanticError(f"undeclared token {name!r}", span)
                if kind == "relation" and name not in rel_names:
                    raise SemanticError(f"undeclared relation {name!r}", span)
        return CotProgram(
            sigma=tuple(t.text for t in sigma),
            gamma=tuple(t.text for t in gamma),
            gamma_final=tuple(t.text for t in final),
            rules=tuple(CotRule(h.text, b) for h, b, _ in rules),
            relations=tuple((n.text, k) for n, k in relations),
        )


def parse_expr(text: str):
    """Parse a single formula or term."""
    p = _CotParser(text)
    while p.tok.kind == "nl":
        p.advance()
    e = p.expr()
    while p.tok.kind == "nl":
        p.advance()
    if p.tok.kind != "eof":
        raise ParseError(p.tok.span, ("end of input",), p.tok.show())
    return e


def parse_cot_program(text: str) -> CotProgram:
    return _CotParser(text).program()


_LEVEL = {Or: 1, And: 2, Not: 3, Compare: 4, Add: 5, Sub: 5, Scale: 6}


def print_expr(e, need: int = 1) -> str:
    level = _LEVEL.get(type(e), 7)
    if isinstance(e, Or):
        s = f"{print_expr(e.left, 1)} | {print_expr(e.right, 2)}"
    elif isinstance(e, And):
        s = f"{print_expr(e.left, 2)} & {print_expr(e.right, 3)}"
    elif isinstance(e, Not):
        s = "!" + print_expr(e.arg, 3)
    elif isinstance(e, Compare):
        s = f"{print_expr(e.left, 5)} {e.op} {print_expr(e.right, 5)}"
    elif isinstance(e, Add):
        s = f"{print_expr(e.left, 5)} + {print_expr(e.right, 6)}"
    elif isinstance(e, Sub):
        s = f"{print_expr(e.left, 5)} - {print_expr(e.right, 6)}"
    elif isinstance(e, Scale):
        s = f"{e.factor}*{print_expr(e.arg, 6)}"
    elif isinstance(e, Const):
        s = str(e.value)
    elif isinstance(e, TrueF):
        s = "true"
    elif isinstance(e, Atom):
        s = f"Q({e.token})"
    elif isinstance(e, Count):
        s = f"#[{print_expr(e.arg)}]"
    elif isinstance(e, CountRel):
        s = f"#{e.rel}[{print_expr(e.arg)}]"
    else:
        raise TypeError(f"not a C-RASP expression: {e!r}")
    return f"({s})" if level < need else s


def print_cot_program(p: CotProgram) -> str:
    lines = ["alphabet " + " ".join(p.sigma), "cot " + " ".join(p.gamma)]
    lines.append(("final " + " ".join(p.gamma_final)).rstrip())
    for name, kind in p.relations:
        lines.append(f"relation {name} = {RelKind(kind).value}")
    for r in p.rules:
        lines.append(f"rule {r.head} <- {print_expr(r.body)}")
    return "\n".join(l.rstrip() for l in lines) + "\n"


# line-oriented formats

def _lines(src: _Src) -> Iterator[tuple[int, str]]:
    """(offset, text) per line with ``#`` comments blanked out."""
    for start in src.line_starts:
        end = src.text.find("\n", start)
        end = len(src.text) if end < 0 else end
        raw = src.text[start:end]
        cut = raw.find("#")
        yield start, (raw if cut < 0 else raw[:cut])


_WORD_RE = re.compile(r"\S+")


def _words(offset: int, text: str) -> list[tuple[str, int]]:
    return [(m.group(), offset + m.start()) for m in _WORD_RE.finditer(text)]


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_ATOM = re.compile(r"x(\d+)(=0|>0)\Z")
_TRANS = re.compile(
    r"\s*trans\s+(?P<src>\S+)\s*->\s*(?P<tgt>\S+)\s+when\s+(?P<guard>\S+)\s+effect\s*"
    r"\((?P<eff>[^)]*)\)\s*\Z")


def parse_cm(text: str) -> CounterMachine:
    src = _Src(text)
    k = None
    states: list[str] = []
    initial: list[tuple[str, Span]] = []
    finals: list[str] = []
    trans: list[Transition] = []
    first_span = None
    for off, line in _lines(src):
        words = _words(off, line)
        if not words:
            continue
        head, hoff = words[0]
        hspan = src.span(hoff, len(head))
        if k is None and head != "counters":
            raise ParseError(hspan, ("'counters'",), repr(head), "missing 'counters' header")
        if head == "counters":
            if k is not None:
                raise SemanticError("duplicate 'counters' header", hspan)
            if len(words) != 2 or not words[1][0].isdigit():
                found = words[1] if len(words) > 1 else ("end of line", hoff + len(head))
                raise ParseError(src.span(found[1], len(found[0])), ("counter count",), repr(found[0]))
            k = int(words[1][0])
            first_span = hspan
        elif head == "state":
            if len(words) < 2 or not _IDENT.match(words[1][0]):
                w = words[1] if len(words) > 1 else ("end of line", hoff + len(head))
                raise ParseError(src.span(w[1], len(w[0])), ("state name",), repr(w[0]))
            name = words[1][0]
            if name in states:
                raise SemanticError(f"duplicate state {name!r}", src.span(words[1][1], len(name)))
            states.append(name)
            for flag, foff in words[2:]:
                if flag == "initial":
                    initial.append((name, src.span(foff, len(flag))))
                elif flag == "final":
                    finals.append(name)
                else:
                    raise ParseError(src.span(foff, len(flag)), ("'final'", "'initial'"), repr(flag))
        elif head == "trans":
            m = _TRANS.match(line)
            if m is None:
                raise ParseError(src.span(off, len(line.rstrip())), (
                    "'trans SRC -> TGT when GUARD effect (E1,...,Ek)'",), "malformed transition")
            gtext = m.group("guard")
            gspan = src.span(off + m.start("guard"), len(gtext))
            atoms = []
            if gtext != "-":
                for a in gtext.split(","):
                    am = _ATOM.match(a)
                    if am is None:
                        raise ParseError(gspan, ("'x<i>=0'", "'x<i>>0'", "'-'"), repr(a))
                    atoms.append((int(am.group(1)), am.group(2)))
            try:
                guard = Guard(tuple(atoms))
                eff_text = m.group("eff").strip()
                effect = tuple(int(x) for x in eff_text.split(",")) if eff_text else ()
            except ValueError:
                raise ParseError(src.span(off + m.start("eff"), len(m.group("eff"))),
                                 ("integer effects",), repr(m.group("eff"))) from None
            except MachineError as e:
                raise SemanticError(str(e), gspan) from e
            for endpoint in ("src", "tgt"):
                name = m.group(endpoint)
                if name not in states:
                    raise SemanticError(f"undeclared state {name!r}",
                                        src.span(off + m.start(endpoint), len(name)))
            if len(effect) != k:
                raise SemanticError(f"effect needs {k} entries, got {len(effect)}",
                                    src.span(off + m.start("eff"), len(m.group("eff"))))
            if any(i > k or i < 1 for i, _ in atoms):
                raise SemanticError(f"guard tests a counter outside x1..x{k}", gspan)
            trans.append(Transition(m.group("src"), guard, m.group("tgt"), effect))
        else:
            raise ParseError(hspan, ("'state'", "'trans'"), repr(head))
    if k is None:
        raise ParseError(src.span(len(text), 0), ("'counters'",), "end of input",
                         "missing 'counters' header")
    if len(initial) != 1:
        span = initial[1][1] if len(initial) > 1 else first_span
        raise SemanticError("exactly one state must be marked initial", span)
    return CounterMachine(k, tuple(states), tuple(trans), initial[0][0], frozenset(finals))


def print_cm(m: CounterMachine) -> str:
    lines = [f"counters {m.k}"]
    for s in m.states:
        flags = (" initial" if s == m.initial else "") + (" final" if s in m.finals else "")
        lines.append(f"state {s}{flags}")
    for t in m.transitions:
        guard = ",".join(f"x{i}{test}" for i, test in t.guard.atoms) or "-"
        lines.append(f"trans {t.src} -> {t.tgt} when {guard} effect ({','.join(map(str, t.effect))})")
    return "\n".join(lines) + "\n"


# assembler

_CALL = re.compile(r"call\s+(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*\((?P<args>[^)]*)\)\s*\Z")
_MACRO = re.compile(r"macro\s+(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*\((?P<args>[^)]*)\)\s*\Z")
_LABEL = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*:")


def _split_args(text: str, span: Span) -> tuple:
    text = text.strip()
    if not text:
        return ()
    args = tuple(a.strip() for a in text.split(","))
    for a in args:
        if not _IDENT.match(a):
            raise ParseError(span, ("identifier",), repr(a))
    return args


def parse_asm(text: str, require_header: bool = True) -> AsmProgram:
    src = _Src(text)
    inputs: tuple = ()
    aux: tuple = ()
    header = False
    body: list = []
    macros: list[MacroDef] = []
    current: dict | None = None
    for off, line in _lines(src):
        pos = 0
        for seg in line.split(";"):
            seg_off = off + pos
            pos += len(seg) + 1
            stripped = seg.strip()
            if not stripped:
                continue
            lead = seg_off + len(seg) - len(seg.lstrip())
            sp = src.span(lead, len(stripped))
            if stripped.startswith("counters") and (len(stripped) == 8 or stripped[8].isspace()):
                if header:
                    raise SemanticError("duplicate 'counters' header", sp)
                if current is not None:
                    raise ParseError(sp, ("'end'",), "'counters'", "'counters' inside a macro")
                inputs, aux = _parse_counters(stripped, sp)
                header = True
                continue
            target = body if current is None else current["body"]
            m = _MACRO.match(stripped)
            if m:
                if current is not None:
                    raise ParseError(sp, ("'end'",), "'macro'", "macros do not nest")
                current = {"name": m.group("name"), "params": _split_args(m.group("args"), sp),
                           "temps": [], "body": [], "span": sp}
                continue
            if stripped == "end":
                if current is None:
                    raise ParseError(sp, (), "'end'", "'end' without 'macro'")
                macros.append(MacroDef(current["name"], current["params"], tuple(current["temps"]),
                                       tuple(current["body"]), current["span"]))
                current = None
                continue
            words = stripped.split()
            if words[0] == "temp":
                if current is None:
                    raise ParseError(sp, (), "'temp'", "'temp' outside a macro")
                for w in words[1:]:
                    if not _IDENT.match(w):
                        raise ParseError(sp, ("identifier",), repr(w))
                    current["temps"].append(w)
                continue
            rest, rest_off = seg, seg_off
            while True:
                lm = _LABEL.match(rest)
                if lm is None:
                    break
                name = lm.group(1)
                if name in OPCODES or name in ("call", "temp", "end", "macro"):
                    break
                target.append(Label(name, src.span(rest_off + lm.start(1), len(name))))
                rest_off += lm.end()
                rest = rest[lm.end():]
            ins = rest.strip()
            if not ins:
                continue
            isp = src.span(rest_off + len(rest) - len(rest.lstrip()), len(ins))
            target.append(_parse_instr(ins, isp))
    if current is not None:
        raise ParseError(src.span(len(text), 0), ("'end'",), "end of input",
                         f"macro {current['name']!r} is not closed")
    if require_header and not header:
        raise ParseError(src.span(0, 0), ("'counters'",), "no header", "missing 'counters' header")
    names = set(inputs) | set(aux)
    if len(names) != len(inputs) + len(aux):
        raise SemanticError("duplicate counter name", None)
    return AsmProgram(tuple(inputs), tuple(aux), tuple(body), tuple(macros))


def _parse_counters(text: str, sp: Span) -> tuple[tuple, tuple]:
    words = text.split()[1:]
    inputs, aux, section = [], [], None
    for w in words:
        if w == "in:":
            section = inputs
        elif w == "aux:":
            section = aux
        elif section is None:
            raise ParseError(sp, ("'aux:'", "'in:'"), repr(w))
        elif not _IDENT.match(w):
            raise ParseError(sp, ("counter name",), repr(w))
        else:
            section.append(w)
    return tuple(inputs), tuple(aux)


def _parse_instr(text: str, sp: Span):
    if text.startswith("call"):
        m = _CALL.match(text)
        if m is None:
            raise ParseError(sp, ("'call NAME(ARGS)'",), repr(text))
        return Call(m.group("name"), _split_args(m.group("args"), sp), sp)
    words = text.split()
    op = words[0]
    if op not in OPCODES:
        raise ParseError(sp, tuple(repr(o) for o in OPCODES) + ("'call'",), repr(op))
    args = tuple(words[1:])
    if len(args) != OPCODES[op]:
        raise ParseError(sp, (f"{OPCODES[op]} operand(s) for {op}",), f"{len(args)}")
    for a in args:
        if not _IDENT.match(a):
            raise ParseError(sp, ("identifier",), repr(a))
    return Instr(op, args, sp)


def _print_items(items, indent: str) -> list[str]:
    out = []
    for it in items:
        if isinstance(it, Label):
            out.append(f"{indent}{it.name}:")
        elif isinstance(it, Call):
            out.append(f"{indent}call {it.macro}({', '.join(it.args)})")
        else:
            out.append(f"{indent}{' '.join((it.op,) + it.args)}")
    return out


def print_asm(p: AsmProgram) -> str:
    lines = []
    if p.inputs or p.aux:
        lines.append(" ".join(["counters", "in:", *p.inputs] + (["aux:", *p.aux] if p.aux else [])))
    else:
        lines.append("counters")
    for m in p.macros:
        lines.append(f"macro {m.name}({', '.join(m.params)})")
        if m.temps:
            lines.append("  temp " + " ".join(m.temps))
        lines += _print_items(m.body, "  ")
        lines.append("end")
    lines += _print_items(p.body, "")
    return "\n".join(lines) + "\n"
