"""Seeded random generators shared by the property tests and the acceptance suite."""

from __future__ import annotations

import random

from cotcrasp.asm import AsmProgram, Call, Instr, Label, MacroDef
from cotcrasp.cot import CotProgram, CotRule
from cotcrasp.machine import POS, ZERO, CounterMachine, Guard, Transition
from cotcrasp.syntax import (
    Add, And, Atom, Compare, Const, Count, CountRel, Not, Or, Scale, Sub, TrueF,
)


def formula(rng: random.Random, tokens, rels=(), depth: int = 3):
    if depth <= 0:
        return Atom(rng.choice(tokens)) if rng.random() < 0.85 else TrueF()
    k = rng.randrange(6)
    if k == 0:
        return Atom(rng.choice(tokens))
    if k == 1:
        return Not(formula(rng, tokens, rels, depth - 1))
    if k == 2:
        return And(formula(rng, tokens, rels, depth - 1), formula(rng, tokens, rels, depth - 1))
    if k == 3:
        return Or(formula(rng, tokens, rels, depth - 1), formula(rng, tokens, rels, depth - 1))
    if k == 4:
        return TrueF()
    return Compare(term(rng, tokens, rels, depth - 1), rng.choice("<=>"),
                   term(rng, tokens, rels, depth - 1))


def term(rng: random.Random, tokens, rels=(), depth: int = 3):
    if depth <= 0:
        return Count(Atom(rng.choice(tokens))) if rng.random() < 0.8 else Const(rng.randrange(5))
    k = rng.randrange(7 if rels else 6)
    if k == 0:
        return Const(rng.randrange(12))
    if k in (1, 2):
        return Count(formula(rng, tokens, rels, depth - 1))
    if k == 3:
        return Add(term(rng, tokens, rels, depth - 1), term(rng, tokens, rels, depth - 1))
    if k == 4:
        return Sub(term(rng, tokens, rels, depth - 1), term(rng, tokens, rels, depth - 1))
    if k == 5:
        return Scale(rng.randrange(9), term(rng, tokens, rels, depth - 1))
    return CountRel(rng.choice(rels), formula(rng, tokens, rels, depth - 1))


RELATIONS = (("r1", "one"), ("rl", "len"))


def cot_program(rng: random.Random) -> CotProgram:
    sigma = tuple(f"a{i}" for i in range(rng.randint(1, 3)))
    gamma = tuple(f"g{i}" for i in range(rng.randint(1, 4)))
    rels = RELATIONS[: rng.randint(0, 2)]
    names = tuple(n for n, _ in rels)
    toks = sigma + gamma
    final = tuple(g for g in gamma if rng.random() < 0.4)
    rules = tuple(CotRule(rng.choice(gamma), formula(rng, toks, names, rng.randint(0, 4)))
                  for _ in range(rng.randint(1, 5)))
    return CotProgram(sigma, gamma, final, rules, rels)


def counter_machine(rng: random.Random) -> CounterMachine:
    """A deterministic machine: each state branches on at most one counter."""
    k = rng.randint(1, 4)
    states = tuple(f"q{i}" for i in range(rng.randint(1, 5)))
    trans = []
    for s in states:
        shape = rng.randrange(3)
        effect = lambda: tuple(rng.randint(-3, 3) for _ in range(k))  # noqa: E731
        if shape == 0:
            continue
        if shape == 1:
            atoms = tuple((rng.randint(1, k), rng.choice((ZERO, POS)))
                          for _ in range(rng.randint(0, 2)))
            atoms = tuple({i: t for i, t in atoms}.items())
            trans.append(Transition(s, Guard(atoms), rng.choice(states), effect()))
            continue
        i = rng.randint(1, k)
        extra = [(j, rng.choice((ZERO, POS))) for j in range(1, k + 1) if j != i and rng.random() < 0.3]
        for test in (ZERO, POS):
            trans.append(Transition(s, Guard(tuple([(i, test)] + extra)), rng.choice(states), effect()))
    finals = frozenset(s for s in states if rng.random() < 0.4)
    return CounterMachine(k, states, tuple(trans), states[0], finals)


def asm_program(rng: random.Random) -> AsmProgram:
    inputs = tuple(f"x{i}" for i in range(1, rng.randint(1, 3) + 1))
    aux = tuple(f"t{i}" for i in range(1, rng.randint(0, 3) + 1))
    regs = inputs + aux
    labels = [f"l{i}" for i in range(rng.randint(1, 4))]

    def body(n, params=regs, labs=labels):
        out = []
        for _ in range(n):
            op = rng.choice(("INC", "DEC", "GOTO", "BZ", "ACCEPT", "REJECT", "call"))
            if op in ("INC", "DEC"):
                out.append(Instr(op, (rng.choice(params),)))
            elif op == "GOTO":
                out.append(Instr(op, (rng.choice(labs),)))
            elif op == "BZ":
                out.append(Instr(op, (rng.choice(params), rng.choice(labs))))
            elif op == "call":
                out.append(Call("m", (rng.choice(params),)))
            else:
                out.append(Instr(op, ()))
        return out

    items = []
    for lab in labels:
        items.append(Label(lab))
        items.extend(body(rng.randint(0, 3)))
    macro = MacroDef("m", ("r",), ("u",) if rng.random() < 0.5 else (),
                     tuple([Label("top")] + body(2, ("r",), ["top"])[:1] + [Instr("INC", ("r",))]))
    macros = (macro,) if rng.random() < 0.7 else ()
    if not macros:
        items = [i for i in items if not isinstance(i, Call)]
    return AsmProgram(inputs, aux, tuple(items), macros)


def words(rng: random.Random, alphabet, max_len: int) -> tuple:
    return tuple(rng.choice(alphabet) for _ in range(rng.randint(1, max_len)))
