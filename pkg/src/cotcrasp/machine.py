"""Deterministic k-counter machines with zero/positive guards."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

from .lowering import BACKENDS, DEFAULT_BACKEND
from .syntax import CraspError, UnknownToken


class MachineError(CraspError):
    pass


class GuardConflict(MachineError):
    pass


class DeterminismViolation(MachineError):
    def __init__(self, report: "DeterminismReport"):
        self.report = report
        super().__init__(str(report))


class NondeterminismAtRuntime(MachineError):
    pass


ZERO = "=0"
POS = ">0"


@dataclass(frozen=True)
class Guard:
    """Conjunction of counter tests; counters are 1-based.

    Duplicate atoms are merged; ``x_i = 0`` together with ``x_i > 0`` is
    rejected at construction.
    """

    atoms: tuple = ()

    def __post_init__(self):
        tests: dict[int, str] = {}
        for i, test in self.atoms:
            if not isinstance(i, int) or i < 1:
                raise MachineError(f"counter indices are 1-based, got {i!r}")
            if test not in (ZERO, POS):
                raise MachineError(f"counter test must be '=0' or '>0', got {test!r}")
            if tests.setdefault(i, test) != test:
                raise GuardConflict(f"guard tests x{i} both =0 and >0")
        object.__setattr__(self, "atoms", tuple(sorted(tests.items())))

    def holds(self, x: Sequence[int]) -> bool:
        for i, test in self.atoms:
            v = x[i - 1]
            if (v != 0) if test == ZERO else (v <= 0):
                return False
        return True

    def conflicts_with(self, other: "Guard") -> bool:
        mine = dict(self.atoms)
        return any(mine.get(i, test) != test for i, test in other.atoms)

    def __str__(self):
        return ",".join(f"x{i}{t}" for i, t in self.atoms) or "-"


@dataclass(frozen=True)
class Transition:
    src: str
    guard: Guard
    tgt: str
    effect: tuple

    def __post_init__(self):
        object.__setattr__(self, "effect", tuple(int(e) for e in self.effect))


@dataclass(frozen=True)
class DeterminismReport:
    conflicts: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.conflicts

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "deterministic"
        lines = [f"{len(self.conflicts)} jointly satisfiable transition pair(s):"]
        for i, j in self.conflicts:
            lines.append(f"  #{i} and #{j}")
        return "\n".join(lines)


def validate_deterministic(machine: "CounterMachine") -> DeterminismReport:
    """Report every same-source pair with distinct (target, effect) whose guards can co-hold."""
    conflicts = []
    ts = machine.transitions
    for i in range(len(ts)):
        for j in range(i + 1, len(ts)):
            s, t = ts[i], ts[j]
            if s.src != t.src or (s.tgt, s.effect) == (t.tgt, t.effect):
                continue
            if not s.guard.conflicts_with(t.guard):
                conflicts.append((i, j))
    return DeterminismReport(tuple(conflicts))


class Outcome(str, Enum):
    ACCEPT = "Accept"
    STUCK = "Stuck"
    FUEL_EXHAUSTED = "FuelExhausted"


_OUTCOMES = {0: Outcome.ACCEPT, 1: Outcome.STUCK, 2: Outcome.FUEL_EXHAUSTED}


@dataclass(frozen=True)
class Config:
    state: str
    counters: tuple


@dataclass(frozen=True)
class RunOutcome:
    verdict: Outcome
    trace: tuple | None
    config: Config
    steps: int


@dataclass(frozen=True)
class CounterMachine:
    k: int
    states: tuple
    transitions: tuple
    initial: str
    finals: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        self._normalise()
        report = validate_deterministic(self)
        if not report.ok:
            raise DeterminismViolation(report)

    @classmethod
    def unchecked(cls, k, states, transitions, initial, finals=()) -> "CounterMachine":
        """Build without the determinism check (for inspecting bad machines)."""
        m = object.__new__(cls)
        for name, v in dict(k=k, states=states, transitions=transitions,
                            initial=initial, finals=finals).items():
            object.__setattr__(m, name, v)
        m._normalise()
        return m

    def _normalise(self):
        if self.k < 0:
            raise MachineError("counter count must be nonnegative")
        states = tuple(dict.fromkeys(self.states))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "finals", frozenset(self.finals))
        known = set(states)
        if self.initial not in known:
            raise MachineError(f"initial state {self.initial!r} is not declared")
        for f in self.finals:
            if f not in known:
                raise MachineError(f"final state {f!r} is not declared")
        # Delta is a set: byte-identical transitions collapse
        trans = tuple(dict.fromkeys(self.transitions))
        for t in trans:
            if t.src not in known or t.tgt not in known:
                raise MachineError(f"transition {t} uses an undeclared state")
            if len(t.effect) != self.k:
                raise MachineError(f"effect {t.effect} does not have {self.k} entries")
            if any(i > self.k for i, _ in t.guard.atoms):
                raise MachineError(f"guard {t.guard} tests a counter beyond x{self.k}")
        object.__setattr__(self, "transitions", trans)

    def name_of(self, index: int) -> str:
        return f"t{index}"

    @cached_property
    def _tables(self):
        sid = {s: i for i, s in enumerate(self.states)}
        order = sorted(range(len(self.transitions)), key=lambda t: sid[self.transitions[t].src])
        trans_ptr = [0] * (len(self.states) + 1)
        for t in order:
            trans_ptr[sid[self.transitions[t].src] + 1] += 1
        for i in range(len(self.states)):
            trans_ptr[i + 1] += trans_ptr[i]
        tgt, gptr, gctr, gpos, eff = [], [0], [], [], []
        for t in order:
            tr = self.transitions[t]
            tgt.append(sid[tr.tgt])
            for i, test in tr.guard.atoms:
                gctr.append(i - 1)
                gpos.append(1 if test == POS else 0)
            gptr.append(len(gctr))
            eff.extend(tr.effect)
        final = [1 if s in self.finals else 0 for s in self.states]
        return sid, order, (self.k, len(self.states), trans_ptr, tgt, gptr, gctr, gpos, eff,
                            final, sid[self.initial])

    def runner(self, backend: str | None = None):
        mod = BACKENDS[backend or DEFAULT_BACKEND]
        return mod.MachineRunner(*self._tables[2])

    def enabled(self, config: Config) -> list[int]:
        return [i for i, t in enumerate(self.transitions)
                if t.src == config.state and t.guard.holds(config.counters)]


def step(machine: CounterMachine, config: Config) -> tuple[int, Config] | None:
    """Fire the enabled transition; ``None`` when nothing is enabled."""
    if len(config.counters) != machine.k:
        raise MachineError(f"configuration needs {machine.k} counters")
    hits = machine.enabled(config)
    if not hits:
        return None
    first = machine.transitions[hits[0]]
    for h in hits[1:]:
        t = machine.transitions[h]
        if (t.tgt, t.effect) != (first.tgt, first.effect):
            raise NondeterminismAtRuntime(f"transitions #{hits[0]} and #{h} both enabled at {config}")
    new = tuple(x + u for x, u in zip(config.counters, first.effect))
    return hits[0], Config(first.tgt, new)


def run(machine: CounterMachine, init: Sequence[int], fuel: int, record: bool = True,
        backend: str | None = None) -> RunOutcome:
    """Iterate from ``(initial, init)``; accept when a fired transition enters a final state."""
    if len(init) != machine.k:
        raise MachineError(f"initial vector needs {machine.k} counters, got {len(init)}")
    try:
        code, steps, trace, state, x = machine.runner(backend).run(list(init), fuel, record)
    except RuntimeError as e:
        raise NondeterminismAtRuntime(str(e)) from None
    order = machine._tables[1]
    if trace is not None:
        trace = tuple(order[t] for t in trace)
    return RunOutcome(_OUTCOMES[code], trace, Config(machine.states[state], tuple(x)), steps)


def parikh(word: Iterable, alphabet: Sequence) -> tuple:
    """Letter counts of ``word`` in the order of ``alphabet``."""
    index = {a: i for i, a in enumerate(alphabet)}
    out = [0] * len(alphabet)
    for c in word:
        try:
            out[index[c]] += 1
        except KeyError:
            raise UnknownToken(c, "not in the Parikh alphabet") from None
    return tuple(out)


def parity_machine() -> CounterMachine:
    """The two-counter parity machine: halve x by twos, accept at zero."""
    return CounterMachine(
        k=2,
        states=("q0", "q1"),
        transitions=(
            Transition("q0", Guard(((1, POS),)), "q0", (-2, 0)),
            Transition("q0", Guard(((1, ZERO),)), "q1", (0, 0)),
        ),
        initial="q0",
        finals=frozenset({"q1"}),
    )
