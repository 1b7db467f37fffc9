"""Structured macro assembler producing deterministic counter machines.

Programs use six instructions (INC, DEC, GOTO, BZ, ACCEPT, REJECT) plus
macro calls. Every instruction site becomes one machine state; ACCEPT moves
into a single final state. DEC carries an implicit ``r > 0`` guard, so a
decrement of an empty register leaves the machine stuck, which rejects.

Macro temporaries are drawn from the aux counters the program does not name
itself. They are handed out with a stack discipline and every stdlib macro
returns its temporaries at zero, so nested calls can reuse them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from .machine import POS, ZERO, CounterMachine, Guard, MachineError, Transition
from .syntax import CraspError


class AsmError(CraspError):
    def __init__(self, message: str, span=None):
        self.span = span
        where = f" at line {span.line}, column {span.col}" if span is not None else ""
        super().__init__(message + where)


class UnresolvedLabel(AsmError):
    pass


class UnknownCounter(AsmError):
    pass


class UnknownMacro(AsmError):
    pass


class TempPoolExhausted(AsmError):
    pass


class UnknownTask(CraspError):
    pass


OPCODES = {"INC": 1, "DEC": 1, "GOTO": 1, "BZ": 2, "ACCEPT": 0, "REJECT": 0}


@dataclass(frozen=True)
class Label:
    name: str
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Instr:
    op: str
    args: tuple = ()
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    macro: str
    args: tuple = ()
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MacroDef:
    name: str
    params: tuple
    temps: tuple
    body: tuple
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AsmProgram:
    inputs: tuple
    aux: tuple
    body: tuple
    macros: tuple = ()

    @property
    def counters(self) -> tuple:
        return self.inputs + self.aux


def _defined_labels(body) -> list[str]:
    return [item.name for item in body if isinstance(item, Label)]


def _named_operands(body) -> set[str]:
    out: set[str] = set()
    for item in body:
        if isinstance(item, Instr):
            out.update(item.args)
        elif isinstance(item, Call):
            out.update(item.args)
    return out


class _Expander:
    def __init__(self, program: AsmProgram, library: dict[str, MacroDef]):
        self.counters = set(program.counters)
        self.macros = dict(library)
        for m in program.macros:
            self.macros[m.name] = m
        named = set(_named_operands(program.body))
        for m in program.macros:
            named |= _named_operands(m.body) - set(m.params) - set(m.temps)
        self.pool = [c for c in program.aux if c not in named]
        self.in_use: list[str] = []
        self.out: list = []
        self.fresh = itertools.count()
        self.stack: list[str] = []

    def run(self, body) -> list:
        labels = _defined_labels(body)
        seen = set()
        for item in body:
            if isinstance(item, Label):
                if item.name in seen:
                    raise AsmError(f"duplicate label {item.name!r}", item.span)
                seen.add(item.name)
        env = {name: name for name in self.counters}
        env.update({name: name for name in labels})
        self._emit(body, env)
        return self.out

    def _emit(self, body, env: dict[str, str]) -> None:
        for item in body:
            if isinstance(item, Label):
                self.out.append(Label(env[item.name], item.span))
            elif isinstance(item, Instr):
                args = tuple(env.get(a, a) for a in item.args)
                self.out.append(Instr(item.op, args, item.span))
            else:
                self._call(item, env)

    def _call(self, call: Call, env: dict[str, str]) -> None:
        m = self.macros.get(call.macro)
        if m is None:
            raise UnknownMacro(f"unknown macro {call.macro!r}", call.span)
        if len(call.args) != len(m.params):
            raise AsmError(f"macro {m.name} takes {len(m.params)} argument(s), got {len(call.args)}",
                           call.span)
        if m.name in self.stack:
            raise AsmError(f"recursive expansion of macro {m.name!r}", call.span)
        args = [env.get(a, a) for a in call.args]
        busy = set(self.in_use) | set(args)
        temps = []
        for t in m.temps:
            free = next((c for c in self.pool if c not in busy), None)
            if free is None:
                raise TempPoolExhausted(
                    f"macro {m.name} needs a temporary for {t!r} but the aux pool is exhausted",
                    call.span)
            busy.add(free)
            temps.append(free)
        tag = f"{m.name}.{next(self.fresh)}"
        inner = {name: name for name in self.counters}
        for lab in _defined_labels(m.body):
            inner[lab] = f"{tag}.{lab}"
        inner.update(zip(m.temps, temps))
        inner.update(zip(m.params, args))
        self.in_use.extend(temps)
        self.stack.append(m.name)
        try:
            self._emit(m.body, inner)
        finally:
            self.stack.pop()
            del self.in_use[len(self.in_use) - len(temps):]


def expand(program: AsmProgram, library: dict[str, MacroDef] | None = None) -> list:
    """Flatten macro calls into labels and primitive instructions."""
    lib = stdlib_macros() if library is None else library
    return _Expander(program, lib).run(program.body)


def lower(program: AsmProgram, flat: Sequence) -> CounterMachine:
    counters = program.counters
    index = {c: i + 1 for i, c in enumerate(counters)}
    k = len(counters)
    instrs: list[Instr] = []
    labels: dict[str, int] = {}
    for item in flat:
        if isinstance(item, Label):
            labels[item.name] = len(instrs)
        else:
            instrs.append(item)
    n = len(instrs)
    states = [f"s{i}" for i in range(n + 1)] + ["acc"]
    zero = (0,) * k

    def ctr(name, span):
        if name not in index:
            raise UnknownCounter(f"undeclared counter {name!r}", span)
        return index[name]

    def target(name, span):
        if name not in labels:
            raise UnresolvedLabel(f"unresolved label {name!r}", span)
        return f"s{labels[name]}"

    def bump(i, d):
        e = [0] * k
        e[i - 1] = d
        return tuple(e)

    trans = []
    for i, ins in enumerate(instrs):
        src, nxt = f"s{i}", f"s{i + 1}"
        op, args = ins.op, ins.args
        if op == "INC":
            trans.append(Transition(src, Guard(), nxt, bump(ctr(args[0], ins.span), 1)))
        elif op == "DEC":
            c = ctr(args[0], ins.span)
            trans.append(Transition(src, Guard(((c, POS),)), nxt, bump(c, -1)))
        elif op == "GOTO":
            trans.append(Transition(src, Guard(), target(args[0], ins.span), zero))
        elif op == "BZ":
            c = ctr(args[0], ins.span)
            trans.append(Transition(src, Guard(((c, ZERO),)), target(args[1], ins.span), zero))
            trans.append(Transition(src, Guard(((c, POS),)), nxt, zero))
        elif op == "ACCEPT":
            trans.append(Transition(src, Guard(), "acc", zero))
        elif op == "REJECT":
            pass
        else:  # pragma: no cover - the parser rejects these
            raise AsmError(f"unknown instruction {op!r}", ins.span)
    return CounterMachine(k, tuple(states), tuple(trans), "s0", frozenset({"acc"}))


def assemble(source: "str | AsmProgram") -> CounterMachine:
    """Assemble source text (or a parsed program) into a validated machine."""
    if isinstance(source, str):
        from .dsl import parse_asm

        program = parse_asm(source)
    else:
        program = source
    return lower(program, expand(program))


# Every macro leaves its temporaries at zero on all exits.
STDLIB_SOURCE = """\
# r := 0
macro zero(r)
  loop: BZ r done
  DEC r
  GOTO loop
  done:
end

# s += r; r := 0
macro move(r, s)
  loop: BZ r done
  DEC r
  INC s
  GOTO loop
  done:
end

# s += r; u += r; r := 0
macro move2(r, s, u)
  loop: BZ r done
  DEC r
  INC s
  INC u
  GOTO loop
  done:
end

# s += r
macro copy(r, s)
  temp t
  call move2(r, s, t)
  call move(t, r)
end

# r += s
macro add(r, s)
  call copy(s, r)
end

macro swap(r, s)
  temp t
  call move(r, t)
  call move(s, r)
  call move(t, s)
end

# r -= s when r >= s; otherwise jump to under with r and s unchanged
macro sub_checked(r, s, under)
  temp t
  loop: BZ s ok
  BZ r fail
  DEC r
  DEC s
  INC t
  GOTO loop
  fail: call move2(t, r, s)
  GOTO under
  ok: call move(t, s)
end

# three-way branch on r vs s; both are preserved
macro cmp(r, s, lt, eq, gt)
  temp t
  loop: BZ r rzero
  BZ s greater
  DEC r
  DEC s
  INC t
  GOTO loop
  rzero: BZ s equal
  call move2(t, r, s)
  GOTO lt
  equal: call move2(t, r, s)
  GOTO eq
  greater: call move2(t, r, s)
  GOTO gt
end

macro double(r)
  temp t
  call move(r, t)
  loop: BZ t done
  DEC t
  INC r
  INC r
  GOTO loop
  done:
end

# r := r div 2, then jump to odd if the dropped bit was 1
macro halve(r, odd)
  temp t
  loop: BZ r even
  DEC r
  BZ r wasodd
  DEC r
  INC t
  GOTO loop
  wasodd: call move(t, r)
  GOTO odd
  even: call move(t, r)
end

# q := a div b, rem := a mod b; b = 0 gives q = 0, rem = a
macro divmod(a, b, q, rem)
  call zero(q)
  call zero(rem)
  call copy(a, rem)
  BZ b done
  loop: call sub_checked(rem, b, done)
  INC q
  GOTO loop
  done:
end

# p := position of the last 1-letter in beta(x), 0 if there is none
macro last_one_position(x, p)
  temp y
  temp e
  call zero(p)
  call copy(x, y)
  BZ y done
  skip: call halve(y, scan)
  GOTO skip
  scan: BZ y done
  INC e
  call halve(y, scan)
  call zero(p)
  call copy(e, p)
  GOTO scan
  done: call zero(e)
end

# out := 1 if beta(x) carries a 1-letter at position p, else 0
macro bit_extract(x, p, out)
  temp y
  temp i
  temp j
  temp f
  call zero(out)
  call copy(x, y)
  measure: BZ y measured
  call halve(y, one)
  call zero(j)
  call copy(i, j)
  call zero(f)
  INC f
  one: INC i
  GOTO measure
  measured: call zero(i)
  BZ f clean
  BZ p clean
  call sub_checked(j, p, clean)
  call copy(x, y)
  shift: BZ j test
  DEC j
  call halve(y, shift)
  GOTO shift
  test: call halve(y, set)
  GOTO clean
  set: INC out
  clean: call zero(y)
  call zero(j)
  call zero(f)
end

# The check_* macros consume their operands.

# n is prime; trial division stops once the quotient drops below the divisor
macro check_prime(n, yes, no)
  temp d
  temp q
  temp r
  BZ n no
  DEC n
  BZ n no
  INC n
  INC d
  INC d
  loop: call divmod(n, d, q, r)
  call cmp(q, d, prime, go, go)
  go: BZ r composite
  INC d
  GOTO loop
  prime: call zero(d)
  call zero(q)
  call zero(r)
  GOTO yes
  composite: call zero(d)
  call zero(q)
  GOTO no
end

# j = 2^i
macro check_exponential(i, j, yes, no)
  loop: BZ i last
  DEC i
  BZ j no
  call halve(j, no)
  GOTO loop
  last: BZ j no
  DEC j
  BZ j yes
  GOTO no
end

# j divides i (0 divides only 0)
macro check_division(i, j, yes, no)
  BZ j jzero
  loop: BZ i yes
  call sub_checked(i, j, no)
  GOTO loop
  jzero: BZ i yes
  GOTO no
end

# k = gcd(i, j), by Euclid with remainders
macro check_gcd(i, j, k, yes, no)
  loop: BZ j done
  reduce: call sub_checked(i, j, next)
  GOTO reduce
  next: call swap(i, j)
  GOTO loop
  done: call cmp(i, k, no, yes, no)
end

# k = i * j
macro check_multiplication(i, j, k, yes, no)
  loop: BZ i fin
  DEC i
  call sub_checked(k, j, no)
  GOTO loop
  fin: BZ k yes
  GOTO no
end
"""


@lru_cache(maxsize=None)
def _stdlib_program() -> AsmProgram:
    from .dsl import parse_asm

    return parse_asm(STDLIB_SOURCE, require_header=False)


def stdlib_macros() -> dict[str, MacroDef]:
    return {m.name: m for m in _stdlib_program().macros}


STDLIB_MACROS = (
    "zero", "move", "move2", "copy", "add", "swap", "sub_checked", "cmp", "double", "halve",
    "divmod", "last_one_position", "bit_extract",
)

# task -> (unary alphabet, arity of the check)
TASKS = {
    "prime": ("a",),
    "exponential": ("a", "b"),
    "division": ("a", "b"),
    "gcd": ("a", "b", "c"),
    "multiplication": ("a", "b", "c"),
}
GENERAL_TASKS = ("ends_in_b", "binary_even")
ENCODINGS = ("unary", "general", "binary")

BINARY_LETTERS = ("zero", "one", "slash")


def task_alphabet(task: str, encoding: str) -> tuple:
    if encoding == "unary" and task in TASKS:
        return TASKS[task]
    if encoding == "general" and task == "ends_in_b":
        return ("a", "b")
    if encoding == "general" and task == "binary_even":
        return ("zero", "one")
    if encoding in ("general", "binary") and task in TASKS:
        return BINARY_LETTERS[:2] if task == "prime" else BINARY_LETTERS
    raise UnknownTask(f"no machine for task {task!r} with encoding {encoding!r}")


def _aux(n: int) -> str:
    return " ".join(f"t{i}" for i in range(1, n + 1))


def task_source(task: str, encoding: str) -> str:
    """Assembler source of a canned task machine."""
    letters = task_alphabet(task, encoding)
    if encoding == "unary":
        ops = ", ".join(letters)
        return (f"# unary {task}: inputs are letter counts\n"
                f"counters in: {' '.join(letters)} aux: {_aux(6)}\n"
                f"call check_{task}({ops}, yes, no)\n"
                "yes: ACCEPT\n"
                "no: REJECT\n")
    if task == "ends_in_b":
        # under strict sigma the word ends in b iff x1 is even
        return ("# ends_in_b over (a, b)\n"
                "counters in: a b\n"
                "loop: BZ a yes\n"
                "DEC a\n"
                "BZ a no\n"
                "DEC a\n"
                "GOTO loop\n"
                "yes: ACCEPT\n"
                "no: REJECT\n")
    if task == "binary_even":
        return ("# binary_even over (zero, one): the last letter is zero\n"
                f"counters in: zero one aux: p q {_aux(6)}\n"
                "call last_one_position(zero, p)\n"
                "call last_one_position(one, q)\n"
                "call cmp(p, q, no, no, yes)\n"
                "yes: ACCEPT\n"
                "no: REJECT\n")
    return _binary_decoder(task, letters)


def _binary_decoder(task: str, letters: tuple) -> str:
    """Decode sigma-encoded binary numerals, then run the unary check.

    The word is read right to left by halving all letter counters in
    lockstep: bit b of each counter tells which letter sits b places from
    the end. The first bit index where every counter has a zero bit ends
    the word, and the bits above it must be all ones (strict sigma).
    Components are separated by slash and must be canonical numerals.
    """
    arity = 1 if task == "prime" else len(TASKS[task])
    has_slash = "slash" in letters
    regs = [f"n{i}" for i in range(1, arity + 1)]
    aux = ["cur", "pw", "len", "msb", "cnt", "lim"] + regs + [f"t{i}" for i in range(1, 7)]
    out = [
        f"# binary {task}: sigma decoder followed by the arithmetic check",
        f"counters in: {' '.join(letters)} aux: {' '.join(aux)}",
    ]
    out += ["INC lim"] * arity
    out += ["INC pw"]
    halves = ["call halve(zero, gotzero)", "call halve(one, gotone)"]
    if has_slash:
        halves.append("call halve(slash, gotslash)")
    out += ["next: " + halves[0]] + halves[1:] + ["GOTO ended"]
    # a zero digit: the other letters must not share the position
    out += ["gotzero: call halve(one, no)"]
    if has_slash:
        out += ["call halve(slash, no)"]
    out += ["call zero(msb)", "GOTO digit"]
    out += ["gotone: " + ("call halve(slash, no)" if has_slash else "call zero(msb)")]
    out += ["call zero(msb)", "INC msb", "call add(cur, pw)",
            "digit: call double(pw)", "INC len", "GOTO next"]
    if has_slash:
        out += ["gotslash: call finish_component(len, msb, no)",
                "call push_component(cur, cnt, lim, no)",
                "call zero(pw)", "INC pw", "GOTO next"]
    out += ["ended: call all_ones(zero, no)", "call all_ones(one, no)"]
    if has_slash:
        out += ["call all_ones(slash, no)"]
    out += ["call finish_component(len, msb, no)",
            "call push_component(cur, cnt, lim, no)",
            "call cmp(cnt, lim, no, check, no)",
            "check: call zero(cnt)",
            "call zero(lim)",
            "call zero(pw)"]
    # components arrive last-first; push_component stores them in stack order
    out += [f"call move(s{i}, n{arity + 1 - i})" for i in range(1, arity + 1)]
    out += [f"call check_{task}({', '.join(regs)}, yes, no)",
            "yes: ACCEPT",
            "no: REJECT"]
    macros = [
        # the counter value has the form 2^k - 1 with k >= 1
        "macro all_ones(r, bad)",
        "  BZ r bad",
        "  loop: call halve(r, odd)",
        "  GOTO bad",
        "  odd: BZ r done",
        "  GOTO loop",
        "  done:",
        "end",
        # a component is a canonical numeral: nonempty, no leading zero unless it is 0
        "macro finish_component(len, msb, bad)",
        "  BZ len bad",
        "  BZ msb single",
        "  GOTO ok",
        "  single: DEC len",
        "  BZ len ok",
        "  GOTO bad",
        "  ok: call zero(len)",
        "  call zero(msb)",
        "end",
    ]
    # push_component moves cur into the next free slot s1, s2, ...
    push = ["macro push_component(cur, cnt, lim, bad)",
            "  call cmp(cnt, lim, free, bad, bad)"]
    push += ["  free: BZ cnt slot1"]
    push += ["  DEC cnt"]
    for i in range(2, arity + 1):
        push += [f"  BZ cnt slot{i}", "  DEC cnt"]
    push += ["  GOTO bad"]
    for i in range(1, arity + 1):
        push += [f"  slot{i}: call move(cur, s{i})"] + ["  INC cnt"] * i + ["  GOTO done"]
    push += ["  done:", "end"]
    header_aux = f"{' '.join(aux)} {' '.join(f's{i}' for i in range(1, arity + 1))}"
    out[1] = f"counters in: {' '.join(letters)} aux: {header_aux}"
    return "\n".join(out[:1] + macros + push + out[1:]) + "\n"


@lru_cache(maxsize=None)
def stdlib_machine(task: str, encoding: str) -> CounterMachine:
    """Assembled task machine; its input counters come first, in alphabet order."""
    if encoding not in ENCODINGS:
        raise UnknownTask(f"unknown encoding {encoding!r}")
    return assemble(task_source(task, encoding))
