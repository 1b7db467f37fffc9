import random

import pytest
from hypothesis import given, settings, strategies as st

from cotcrasp.asm import stdlib_machine, task_source
from cotcrasp.compiler import compile_machine
from cotcrasp.dsl import (
    ParseError, SemanticError, parse_asm, parse_cm, parse_cot_program, parse_expr, print_asm,
    print_cm, print_cot_program, print_expr,
)
from cotcrasp.machine import DeterminismViolation, parity_machine
from cotcrasp.syntax import Const

import gen


def test_parity_golden(golden):
    text = (golden / "parity.cot").read_text()
    p = parse_cot_program(text)
    assert p == compile_machine(parity_machine(), ("a", "b"), "perm")
    assert print_cot_program(p) == text
    assert [r.head for r in p.rules] == ["t0", "t1"] * 3


def test_parity_machine_golden(golden):
    text = (golden / "parity.cm").read_text()
    assert parse_cm(text) == parity_machine()
    assert print_cm(parity_machine()) == text
    assert "trans q0 -> q1 when x1=0 effect (0,0)" in text


def test_undeclared_token_names_it():
    with pytest.raises(SemanticError) as e:
        parse_cot_program("alphabet a\ncot t\nrule t <- Q(x)\n")
    assert "'x'" in e.value.message
    assert (e.value.span.line, e.value.span.col, e.value.span.length) == (3, 13, 1)


def test_unclosed_count_expects_bracket():
    with pytest.raises(ParseError) as e:
        parse_cot_program("alphabet a\ncot t\nrule t <- #[Q(a)\n")
    assert e.value.expected == ("']'",)


def test_comparisons_do_not_chain():
    with pytest.raises(ParseError):
        parse_expr("1 < 2 < 3")
    assert parse_expr("(1 < 2) & #[Q(a)] = 0") is not None


def test_precedence():
    assert print_expr(parse_expr("!Q(a) & Q(b) | Q(c)")) == "!Q(a) & Q(b) | Q(c)"
    assert print_expr(parse_expr("Q(a) & (Q(b) | Q(c))")) == "Q(a) & (Q(b) | Q(c))"
    assert print_expr(parse_expr("2*(#[Q(a)] - 1) > 0")) == "2*(#[Q(a)] - 1) > 0"
    assert print_expr(parse_expr("1 - (2 - 3) = 0")) == "1 - (2 - 3) = 0"


def test_const_zero_prints_as_zero():
    assert print_expr(Const(0)) == "0"


def test_contradictory_guard_is_rejected():
    src = "counters 1\nstate q0 initial\nstate q1\ntrans q0 -> q1 when x1=0,x1>0 effect (0)\n"
    with pytest.raises(SemanticError, match="x1"):
        parse_cm(src)


def test_missing_counters_header():
    with pytest.raises(ParseError, match="counters"):
        parse_cm("state q0 initial\n")
    with pytest.raises(ParseError, match="counters"):
        parse_asm("INC x\n")


def test_parse_cm_rejects_nondeterminism():
    src = ("counters 2\nstate q0 initial\nstate q1\n"
           "trans q0 -> q1 when x1>0 effect (0,0)\ntrans q0 -> q0 when x2>0 effect (0,0)\n")
    with pytest.raises(DeterminismViolation):
        parse_cm(src)


def test_diagnostics_are_deterministic():
    bad = ["alphabet a\ncot t\nrule t <- Q(a) &\n", "counters x\n", "counters in: x\nFOO x\n"]
    for text in bad:
        msgs = set()
        for _ in range(3):
            for parse in (parse_cot_program, parse_cm, parse_asm):
                try:
                    parse(text)
                except ParseError as e:
                    msgs.add((parse.__name__, str(e), e.span))
                except SemanticError as e:
                    msgs.add((parse.__name__, str(e), e.span))
        assert len(msgs) == 3


def test_stdlib_sources_round_trip():
    for task, enc in [("prime", "unary"), ("gcd", "binary"), ("ends_in_b", "general")]:
        prog = parse_asm(task_source(task, enc))
        assert parse_asm(print_asm(prog)) == prog
        m = stdlib_machine(task, enc)
        assert parse_cm(print_cm(m)) == m


@settings(max_examples=100)
@given(st.integers(0, 2 ** 32))
def test_cot_round_trip(seed):
    p = gen.cot_program(random.Random(seed))
    text = print_cot_program(p)
    assert parse_cot_program(text) == p
    assert print_cot_program(parse_cot_program(text)) == text


@settings(max_examples=100)
@given(st.integers(0, 2 ** 32))
def test_cm_round_trip(seed):
    m = gen.counter_machine(random.Random(seed))
    text = print_cm(m)
    assert parse_cm(text) == m
    assert print_cm(parse_cm(text)) == text


@settings(max_examples=100)
@given(st.integers(0, 2 ** 32))
def test_asm_round_trip(seed):
    p = gen.asm_program(random.Random(seed))
    text = print_asm(p)
    assert parse_asm(text) == p
    assert print_asm(parse_asm(text)) == text
