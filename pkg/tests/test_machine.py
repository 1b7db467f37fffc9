import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from cotcrasp.machine import (
    POS, ZERO, Config, CounterMachine, DeterminismViolation, Guard, GuardConflict, MachineError,
    NondeterminismAtRuntime, Outcome, Transition, parity_machine, parikh, run, step,
    validate_deterministic,
)
from cotcrasp.syntax import UnknownToken

import gen


def test_guard_normalisation():
    g = Guard(((2, POS), (1, ZERO), (2, POS)))
    assert g.atoms == ((1, ZERO), (2, POS))
    assert str(g) == "x1=0,x2>0"
    assert str(Guard()) == "-"
    with pytest.raises(GuardConflict):
        Guard(((1, ZERO), (1, POS)))
    with pytest.raises(MachineError):
        Guard(((0, ZERO),))
    with pytest.raises(MachineError):
        Guard(((1, "<0"),))


def test_guard_holds_on_negative_values():
    assert not Guard(((1, POS),)).holds((-1,))
    assert not Guard(((1, ZERO),)).holds((-1,))
    assert Guard().holds((-5,))


def test_validate_examples():
    assert validate_deterministic(parity_machine()).ok
    bad = CounterMachine.unchecked(2, ("q0", "q1", "q2"), (
        Transition("q0", Guard(((1, POS),)), "q1", (1, 0)),
        Transition("q0", Guard(((2, POS),)), "q2", (0, 0)),
    ), "q0")
    report = validate_deterministic(bad)
    assert not report.ok and report.conflicts == ((0, 1),)
    assert "jointly satisfiable" in str(report)
    with pytest.raises(DeterminismViolation):
        CounterMachine(2, bad.states, bad.transitions, "q0")
    t = Transition("q0", Guard(), "q0", (1,))
    twice = CounterMachine(1, ("q0",), (t, t), "q0")
    assert validate_deterministic(twice).ok and len(twice.transitions) == 1


def test_structural_errors():
    t = Transition("q0", Guard(), "q1", (1,))
    with pytest.raises(MachineError):
        CounterMachine(1, ("q0",), (t,), "q0")
    with pytest.raises(MachineError):
        CounterMachine(2, ("q0", "q1"), (t,), "q0")
    with pytest.raises(MachineError):
        CounterMachine(1, ("q0",), (), "qx")
    with pytest.raises(MachineError):
        CounterMachine(1, ("q0",), (), "q0", frozenset({"qf"}))
    with pytest.raises(MachineError):
        CounterMachine(1, ("q0",), (Transition("q0", Guard(((2, POS),)), "q0", (0,)),), "q0")


def test_step_examples():
    m = parity_machine()
    assert step(m, Config("q0", (4, 0))) == (0, Config("q0", (2, 0)))
    assert step(m, Config("q0", (0, 0))) == (1, Config("q1", (0, 0)))
    idx, c = step(m, Config("q0", (1, 0)))
    assert idx == 0 and c == Config("q0", (-1, 0))
    assert step(m, c) is None
    with pytest.raises(MachineError):
        step(m, Config("q0", (1,)))


def test_runtime_nondeterminism_is_detected():
    m = CounterMachine.unchecked(1, ("q0", "q1"), (
        Transition("q0", Guard(), "q0", (1,)),
        Transition("q0", Guard(), "q1", (0,)),
    ), "q0", ("q1",))
    with pytest.raises(NondeterminismAtRuntime):
        step(m, Config("q0", (0,)))


@pytest.mark.parametrize("x, verdict, trace, final", [
    (6, Outcome.ACCEPT, (0, 0, 0, 1), (0, 0)),
    (5, Outcome.STUCK, (0, 0, 0), (-1, 0)),
    (0, Outcome.ACCEPT, (1,), (0, 0)),
])
def test_run_examples(backend, x, verdict, trace, final):
    out = run(parity_machine(), (x, 0), 100, backend=backend)
    assert out.verdict is verdict
    assert out.trace == trace
    assert out.config.counters == final
    assert out.steps == len(trace)


def test_run_fuel(backend):
    out = run(parity_machine(), (10, 0), 2, backend=backend)
    assert out.verdict is Outcome.FUEL_EXHAUSTED and out.trace == (0, 0)
    assert out.config == Config("q0", (6, 0))
    assert run(parity_machine(), (10, 0), 100, record=False, backend=backend).trace is None
    with pytest.raises(MachineError):
        run(parity_machine(), (1,), 10, backend=backend)


def test_initial_final_state_needs_a_move(backend):
    m = CounterMachine(1, ("q0",), (), "q0", frozenset({"q0"}))
    assert run(m, (0,), 10, backend=backend).verdict is Outcome.STUCK


def test_parikh():
    assert parikh("abba", "ab") == (2, 2)
    assert parikh("", "ab") == (0, 0)
    assert parikh(["a2", "a2", "a1"], ("a1", "a2")) == (1, 2)
    with pytest.raises(UnknownToken):
        parikh("abc", "ab")


def test_parity_oracle_agreement():
    m = parity_machine()
    for n in range(1, 13):
        for w in itertools.product("ab", repeat=n):
            out = run(m, parikh(w, "ab"), 100, record=False)
            assert (out.verdict is Outcome.ACCEPT) == (w.count("a") % 2 == 0)


def _replay(m, init, fuel):
    c, trace = Config(m.initial, tuple(init)), []
    for _ in range(fuel):
        s = step(m, c)
        if s is None:
            return Outcome.STUCK, tuple(trace), c
        trace.append(s[0])
        c = s[1]
        if c.state in m.finals:
            return Outcome.ACCEPT, tuple(trace), c
    return Outcome.FUEL_EXHAUSTED, tuple(trace), c


@settings(max_examples=150)
@given(st.integers(0, 2 ** 32), st.lists(st.integers(-3, 6), min_size=4, max_size=4),
       st.integers(0, 40))
def test_kernels_match_small_step_semantics(seed, init, fuel):
    m = gen.counter_machine(random.Random(seed))
    init = init[: m.k]
    want = _replay(m, init, fuel)
    for backend in ("python", "native"):
        try:
            out = run(m, init, fuel, backend=backend)
        except KeyError:
            continue
        assert (out.verdict, out.trace, out.config) == want
        if out.verdict is Outcome.ACCEPT:
            targets = [m.transitions[t].tgt for t in out.trace]
            assert targets[-1] in m.finals
            assert not set(targets[:-1]) & m.finals


@settings(max_examples=150)
@given(st.integers(0, 2 ** 32), st.lists(st.integers(0, 3), min_size=4, max_size=4))
def test_at_most_one_transition_enabled(seed, xs):
    m = gen.counter_machine(random.Random(seed))
    for s in m.states:
        hits = m.enabled(Config(s, tuple(xs[: m.k])))
        assert len({(m.transitions[h].tgt, m.transitions[h].effect) for h in hits}) <= 1
