import random

import pytest
from hypothesis import given, settings, strategies as st

from cotcrasp.compiler import compile_machine
from cotcrasp.cot import (
    Answer, CotProgram, CotRule, ProgramError, Verdict, accepts, generate, step,
)
from cotcrasp.dataset import task_program
from cotcrasp.lowering import BACKENDS
from cotcrasp.machine import parity_machine
from cotcrasp.syntax import Atom, CraspError, TrueF, UnknownRelation, UnknownToken, CountRel


@pytest.fixture(scope="module")
def parity():
    return compile_machine(parity_machine(), ("a", "b"), "perm")


def test_step_examples(parity, backend):
    assert step(parity, list("aa"), backend) == "t0"
    assert step(parity, ["a", "a", "t0"], backend) == "t1"
    assert step(parity, ["a", "t0"], backend) is None
    with pytest.raises(CraspError):
        step(parity, [], backend)


@pytest.mark.parametrize("word, trace, verdict", [
    ("aa", ("t0", "t1"), Verdict.ACCEPT),
    ("bb", ("t1",), Verdict.ACCEPT),
    ("a", ("t0",), Verdict.REJECT_STUCK),
])
def test_generate_examples(parity, backend, word, trace, verdict):
    res = generate(parity, list(word), 100, backend)
    assert res.trace == trace
    assert res.verdict is verdict
    assert res.steps == len(trace)


def test_fuel_boundary(parity, backend):
    res = generate(parity, list("aa"), 1, backend)
    assert res.trace == ("t0",) and res.verdict is Verdict.FUEL_EXHAUSTED
    assert generate(parity, list("aa"), 0, backend).trace == ()
    with pytest.raises(ValueError):
        generate(parity, list("aa"), -1, backend)


def test_accepts(parity, backend):
    assert accepts(parity, list("abab"), 100, backend) is Answer.YES
    assert accepts(parity, list("aaab"), 100, backend) is Answer.NO
    assert accepts(parity, list("aab"), 100, backend) is Answer.YES
    loop = CotProgram(("a",), ("x",), (), (CotRule("x", TrueF()),))
    assert accepts(loop, ["a"], 50, backend) is Answer.UNKNOWN


def test_input_validation(parity):
    with pytest.raises(UnknownToken):
        generate(parity, ["t0"], 10)
    with pytest.raises(CraspError):
        generate(parity, [], 10)


def test_program_validation():
    with pytest.raises(UnknownToken):
        CotProgram(("a",), ("x",), (), (CotRule("y", TrueF()),))
    with pytest.raises(UnknownToken):
        CotProgram(("a",), ("x",), (), (CotRule("x", Atom("z")),))
    with pytest.raises(UnknownRelation):
        CotProgram(("a",), ("x",), (), (CotRule("x", _rel_formula("N")),))
    with pytest.raises(ProgramError):
        CotProgram(("a",), ("x",), ("y",), (CotRule("x", TrueF()),))
    with pytest.raises(ProgramError):
        CotProgram(("a", "a"), ("x",), (), (CotRule("x", TrueF()),))
    with pytest.raises(ProgramError):
        CotProgram(("a",), ("x",), (), ())


def _rel_formula(name):
    from cotcrasp.syntax import Compare, Const
    return Compare(CountRel(name, TrueF()), ">", Const(0))


def test_overlapping_alphabets_are_merged():
    p = CotProgram(("a", "b"), ("b", "x"), ("x",), (CotRule("x", Atom("b")),))
    assert p.tokens == ("a", "b", "x")
    assert generate(p, ["a", "b"], 5).trace == ("x",)


def test_final_heads_halt_immediately():
    p = CotProgram(("a",), ("x", "y"), ("x",), (CotRule("x", TrueF()), CotRule("y", TrueF())))
    res = generate(p, ["a"], 10)
    assert res.trace == ("x",) and res.verdict is Verdict.ACCEPT


def test_session_snapshot_restore(parity, backend):
    s = parity.session(backend).extend(list("aaaa"))
    snap = s.snapshot()
    first = s.generate(10)
    s.restore(snap)
    assert s.generate(10) == first
    assert len(s) == 4 + len(first.trace)


def _well_formed(program, res):
    finals = set(program.gamma_final)
    if res.verdict is Verdict.ACCEPT:
        assert res.trace and res.trace[-1] in finals
        assert not finals & set(res.trace[:-1])
    else:
        assert not finals & set(res.trace)


@settings(max_examples=40)
@given(st.lists(st.sampled_from("abc"), min_size=1, max_size=14), st.integers(1, 300),
       st.integers(1, 300))
def test_prefix_determinism(word, fuel, extra):
    program = task_program("gcd", "unary")
    short = generate(program, word, fuel)
    long = generate(program, word, fuel + extra)
    _well_formed(program, short)
    _well_formed(program, long)
    if short.verdict is Verdict.FUEL_EXHAUSTED:
        assert long.trace[: len(short.trace)] == short.trace
    else:
        assert long == short


@settings(max_examples=30)
@given(st.sampled_from(["parity", "division", "gcd", "multiplication", "exponential"]),
       st.lists(st.sampled_from("abc"), min_size=1, max_size=12), st.integers(0, 2 ** 32))
def test_rule_order_is_irrelevant_for_compiled_programs(task, word, seed):
    program = task_program(task, "unary")
    word = [c for c in word if c in program.sigma] or [program.sigma[0]]
    rules = list(program.rules)
    random.Random(seed).shuffle(rules)
    shuffled = CotProgram(program.sigma, program.gamma, program.gamma_final, tuple(rules),
                          program.relations)
    assert generate(shuffled, word, 5000) == generate(program, word, 5000)


@settings(max_examples=25)
@given(st.sampled_from(["parity", "division", "gcd", "exponential"]),
       st.lists(st.sampled_from("abc"), min_size=1, max_size=10))
def test_compiled_rules_are_mutually_exclusive(task, word):
    program = task_program(task, "unary")
    word = [c for c in word if c in program.sigma] or [program.sigma[0]]
    s = program.session()
    s.extend(word)
    for _ in range(3000):
        assert len(s.holding_rules()) <= 1
        tok = s.step()
        if tok is None or tok in program.gamma_final:
            break
        s.push(tok)


@pytest.mark.skipif("native" not in BACKENDS, reason="native kernel not built")
def test_backends_agree_on_general_program():
    program = task_program("prime", "binary")
    for word in (["one", "zero", "one"], ["one", "one"], ["one", "zero", "zero"]):
        assert generate(program, word, 10 ** 6, "python") == generate(program, word, 10 ** 6, "native")
