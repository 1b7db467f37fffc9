import itertools

import pytest
from hypothesis import given, settings, strategies as st

from cotcrasp.asm import (
    ENCODINGS, GENERAL_TASKS, STDLIB_MACROS, TASKS, AsmError, AsmProgram, Call, Instr, Label,
    MacroDef, TempPoolExhausted, UnknownCounter, UnknownMacro, UnknownTask, UnresolvedLabel,
    assemble, expand, stdlib_machine, stdlib_macros, task_alphabet, task_source,
)
from cotcrasp.dsl import parse_asm
from cotcrasp.machine import Outcome, run, validate_deterministic
from cotcrasp.oracles import ARITHMETIC, binary_even, binary_member, ends_in_b
from cotcrasp.rpe import indicator_words, one_positions, preimages

from harness import MACRO_ORACLES, check_macro, macro_cases, run_macro


def _run(m, init, fuel=10 ** 7):
    return run(m, list(init) + [0] * (m.k - len(init)), fuel, record=False)


def test_halving_program_matches_parity_machine():
    m = assemble("counters in: x\nloop: BZ x done\nDEC x\nDEC x\nGOTO loop\ndone: ACCEPT\n")
    assert _run(m, (6,)).verdict is Outcome.ACCEPT
    assert _run(m, (5,)).verdict is Outcome.STUCK
    assert validate_deterministic(m).ok


def test_lowering_shape():
    m = assemble("counters in: x\nBZ x fin\nDEC x\nINC x\nfin: ACCEPT\n")
    assert m.states == ("s0", "s1", "s2", "s3", "s4", "acc")
    assert m.initial == "s0" and m.finals == frozenset({"acc"})
    bz = [t for t in m.transitions if t.src == "s0"]
    assert sorted(str(t.guard) for t in bz) == ["x1=0", "x1>0"]
    (dec,) = [t for t in m.transitions if t.src == "s1"]
    assert str(dec.guard) == "x1>0" and dec.effect == (-1,)


def test_accept_only_program_accepts_everything():
    m = assemble("counters in: x y\nACCEPT\n")
    for init in [(0, 0), (3, 9)]:
        assert _run(m, init).verdict is Outcome.ACCEPT


def test_reject_and_fall_off_are_stuck():
    assert _run(assemble("counters in: x\nREJECT\n"), (1,)).verdict is Outcome.STUCK
    assert _run(assemble("counters in: x\nINC x\n"), (1,)).verdict is Outcome.STUCK


def test_errors():
    with pytest.raises(UnresolvedLabel):
        assemble("counters in: x\nGOTO nowhere\n")
    with pytest.raises(UnknownCounter):
        assemble("counters in: x\nINC y\n")
    with pytest.raises(UnknownMacro):
        assemble("counters in: x\ncall nope(x)\n")
    with pytest.raises(TempPoolExhausted):
        assemble("counters in: x y\ncall copy(x, y)\nACCEPT\n")
    with pytest.raises(AsmError):
        assemble("counters in: x\nl: INC x\nl: ACCEPT\n")
    with pytest.raises(AsmError):
        assemble("counters in: x aux: t\ncall copy(x)\n")
    with pytest.raises(UnknownTask):
        task_alphabet("sorting", "unary")
    with pytest.raises(UnknownTask):
        stdlib_machine("prime", "ternary")


def test_recursive_macro_is_rejected():
    prog = AsmProgram(("x",), (), (Call("m", ("x",)),),
                      (MacroDef("m", ("r",), (), (Call("m", ("r",)),)),))
    with pytest.raises(AsmError, match="recursive"):
        expand(prog)


def test_local_labels_are_renamed_per_expansion():
    prog = AsmProgram(("x", "y"), ("t",), (Call("zero", ("x",)), Call("zero", ("y",))))
    flat = expand(prog)
    labels = [i.name for i in flat if isinstance(i, Label)]
    assert len(labels) == len(set(labels)) == 4
    assert all(l.startswith("zero.") for l in labels)


def test_temps_avoid_named_counters():
    src = "counters in: x aux: t u\ncall copy(x, u)\nACCEPT\n"
    flat = expand(parse_asm(src))
    used = {a for i in flat if isinstance(i, Instr) for a in i.args}
    assert "t" in used
    m = assemble(src)
    out = _run(m, (5,))
    assert out.config.counters == (5, 0, 5)


def test_stdlib_parses_and_lists_macros():
    lib = stdlib_macros()
    assert set(STDLIB_MACROS) <= set(lib)
    assert set(MACRO_ORACLES) == set(STDLIB_MACROS)


@pytest.mark.parametrize("task, encoding", [(t, "unary") for t in TASKS]
                         + [(t, "binary") for t in TASKS]
                         + [(t, "general") for t in GENERAL_TASKS])
def test_stdlib_machines_are_deterministic(task, encoding):
    m = stdlib_machine(task, encoding)
    assert validate_deterministic(m).ok
    assert m.k >= len(task_alphabet(task, encoding))
    assert task_source(task, encoding).startswith("#")


def test_task_machine_examples():
    prime = stdlib_machine("prime", "unary")
    assert _run(prime, (7,)).verdict is Outcome.ACCEPT
    assert _run(prime, (8,)).verdict is Outcome.STUCK
    gcd = stdlib_machine("gcd", "unary")
    assert _run(gcd, (6, 4, 2)).verdict is Outcome.ACCEPT
    assert _run(gcd, (6, 4, 3)).verdict is Outcome.STUCK
    assert _run(stdlib_machine("ends_in_b", "general"), (10, 25)).verdict is Outcome.ACCEPT


def test_prime_machine_up_to_512():
    m = stdlib_machine("prime", "unary")
    for n in range(0, 513):
        out = _run(m, (n,), 10 ** 8)
        assert out.verdict is not Outcome.FUEL_EXHAUSTED
        assert (out.verdict is Outcome.ACCEPT) == ARITHMETIC["prime"](n), n


def _in_support(arity, total):
    for parts in itertools.product(range(total + 1), repeat=arity):
        if sum(parts) <= total:
            yield parts


@pytest.mark.parametrize("task", sorted(TASKS))
def test_task_machines_match_oracles(task):
    m = stdlib_machine(task, "unary")
    arity = len(TASKS[task])
    for xs in _in_support(arity, 48):
        out = _run(m, xs, 10 ** 8)
        assert out.verdict is not Outcome.FUEL_EXHAUSTED, xs
        assert (out.verdict is Outcome.ACCEPT) == ARITHMETIC[task](*xs), xs


def _sigma_inputs(word, alphabet):
    return [next(preimages(w)) for w in indicator_words(word, alphabet)]


def test_general_machines_match_string_predicates():
    eb = stdlib_machine("ends_in_b", "general")
    be = stdlib_machine("binary_even", "general")
    for n in range(1, 11):
        for w in itertools.product("ab", repeat=n):
            assert (_run(eb, _sigma_inputs(w, "ab")).verdict is Outcome.ACCEPT) == ends_in_b(w)
        for w in itertools.product(("zero", "one"), repeat=n):
            xs = _sigma_inputs(w, ("zero", "one"))
            assert (_run(be, xs).verdict is Outcome.ACCEPT) == binary_even(w)


@pytest.mark.parametrize("task", sorted(TASKS))
def test_binary_machines_match_oracles(task):
    m = stdlib_machine(task, "binary")
    letters = task_alphabet(task, "binary")
    for n in range(1, 8):
        for w in itertools.product(letters, repeat=n):
            out = _run(m, _sigma_inputs(w, letters), 10 ** 8)
            assert out.verdict is not Outcome.FUEL_EXHAUSTED, w
            assert (out.verdict is Outcome.ACCEPT) == binary_member(task, w), w


@pytest.mark.parametrize("name", sorted(MACRO_ORACLES))
def test_macro_matches_oracle(name):
    for values in macro_cases(name, 40, seed=1):
        check_macro(name, values)


@pytest.mark.parametrize("name", sorted(MACRO_ORACLES))
def test_macro_edge_values(name):
    nregs = MACRO_ORACLES[name][0]
    for values in itertools.product((0, 1, 2, 3, 7, 8), repeat=nregs):
        check_macro(name, values)


@pytest.mark.slow
def test_last_one_position_against_rpe():
    for x in range(1, (1 << 14) + 1):
        (_, p), _, _ = run_macro("last_one_position", (x, 0))
        ps = one_positions(x)
        assert p == (max(ps) if ps else 0), x


@settings(max_examples=30)
@given(st.integers(0, 1 << 20), st.integers(0, 1 << 20))
def test_cmp_and_sub_checked_properties(r, s):
    check_macro("cmp", (r, s))
    check_macro("sub_checked", (r, s))


def test_encodings_listed():
    assert set(ENCODINGS) == {"unary", "general", "binary"}
