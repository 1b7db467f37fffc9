"""Compilation of counter machines into CoT C-RASP programs.

Three schemes are provided:

* ``permutation_invariant``: the machine starts from the Parikh vector of the
  input. The CoT is the machine's transition sequence, and each counter value
  is recovered as a signed sum of prefix counts.
* ``letter_bounded``: as above, with every rule also checking that the input
  lies in ``a1* a2* ... an*``.
* ``general``: a padding phase first appends boxes ``d_i`` until the
  current length ``l`` beta-encodes the indicator word of letter ``a_i``, then
  drops a marker ``m_i``. The marker positions become the machine's initial
  counters, and the machine is simulated as before.

Token naming: transitions are ``t0, t1, ...`` in machine order, and boxes and
markers are ``d1..dn`` and ``m1..mn``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .cot import CotProgram, CotRule, ProgramError
from .machine import POS, CounterMachine, Guard, validate_deterministic, DeterminismViolation
from .rpe import beta_len, one_positions
from .syntax import (
    And, Atom, Compare, Const, Count, CountRel, CraspError, Not, TrueF, conj, linear,
)

MODES = ("permutation_invariant", "letter_bounded", "general")
MODE_ALIASES = {"perm": "permutation_invariant", "bounded": "letter_bounded",
                "general_rpe": "general", **{m: m for m in MODES}}

REL_ONE = "one"
REL_LEN = "len"


class ArityMismatch(CraspError):
    pass


class MissingSubstitution(CraspError):
    pass


@dataclass(frozen=True)
class CompilationSpec:
    machine: CounterMachine
    sigma: tuple
    mode: str = "permutation_invariant"
    strict_length: bool = True

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(self.sigma))
        mode = MODE_ALIASES.get(self.mode)
        if mode is None:
            raise ValueError(f"unknown compilation mode {self.mode!r}; choose from {MODES}")
        object.__setattr__(self, "mode", mode)
        if not self.sigma:
            raise ArityMismatch("the input alphabet is empty")
        if len(set(self.sigma)) != len(self.sigma):
            raise ProgramError("duplicate letter in the input alphabet")
        if len(self.sigma) > self.machine.k:
            raise ArityMismatch(
                f"{len(self.sigma)} letters need at least {len(self.sigma)} counters; "
                f"the machine has {self.machine.k}")
        report = validate_deterministic(self.machine)
        if not report.ok:
            raise DeterminismViolation(report)


def transition_token(i: int) -> str:
    return f"t{i}"


def box_token(i: int) -> str:
    return f"d{i}"


def marker_token(i: int) -> str:
    return f"m{i}"


def fold_guard(guard: Guard, subst: Mapping[int, object]):
    """Lower a guard to a C-RASP formula under ``counter index -> term or int``.

    Constant operands are folded: a true atom disappears from the
    conjunction and a false one makes the whole result ``None`` (the rule
    can never fire). An empty conjunction is ``TrueF()``.
    """
    parts = []
    for i, test in guard.atoms:
        if i not in subst:
            raise MissingSubstitution(f"no term for counter x{i}")
        t = subst[i]
        if isinstance(t, int):
            t = Const(t)
        if isinstance(t, Const):
            if (t.value > 0) if test == POS else (t.value == 0):
                continue
            return None
        parts.append(Compare(t, ">" if test == POS else "=", Const(0)))
    return conj(*parts)


def _body(*parts):
    """Conjunction that drops ``TrueF`` parts; ``None`` means unsatisfiable."""
    if any(p is None for p in parts):
        return None
    kept = [p for p in parts if not isinstance(p, TrueF)]
    return conj(*kept)


def _count(tok: str):
    return Count(Atom(tok))


def _counter_terms(machine: CounterMachine, base: Sequence) -> dict[int, object]:
    """t_i = base_i + sum over transitions rho of u_rho(i) * #[Q_rho]."""
    out = {}
    for i in range(1, machine.k + 1):
        summands = [(t.effect[i - 1], _count(transition_token(r)))
                    for r, t in enumerate(machine.transitions) if t.effect[i - 1] != 0]
        b = base[i - 1] if i - 1 < len(base) else None
        out[i] = linear(b, summands)
    return out


def _simulation_rules(machine: CounterMachine, terms: Mapping[int, object], extra=TrueF()) -> list:
    rules = []
    for r, tau in enumerate(machine.transitions):
        for r2, tau2 in enumerate(machine.transitions):
            if tau.tgt != tau2.src:
                continue
            body = _body(fold_guard(tau2.guard, terms), Atom(transition_token(r)), extra)
            if body is not None:
                rules.append(CotRule(transition_token(r2), body))
    return rules


def _check_names(spec: CompilationSpec, reserved: set[str]) -> None:
    for a in spec.sigma:
        if a in reserved:
            raise ProgramError(f"input letter {a!r} clashes with a generated token name")


def _finals(machine: CounterMachine) -> tuple:
    return tuple(transition_token(r) for r, t in enumerate(machine.transitions)
                 if t.tgt in machine.finals)


def _transitions(machine: CounterMachine) -> tuple:
    return tuple(transition_token(r) for r in range(len(machine.transitions)))


def letter_bound_formula(sigma: Sequence[str]):
    """No position carries a_i while some a_j with j > i occurs at or before it."""
    parts = []
    for i in range(len(sigma)):
        for j in range(i + 1, len(sigma)):
            inner = And(Atom(sigma[i]), Compare(_count(sigma[j]), ">", Const(0)))
            parts.append(Compare(Count(inner), "=", Const(0)))
    return conj(*parts)


def _require(spec: CompilationSpec, mode: str) -> None:
    if spec.mode != mode:
        raise ValueError(f"compilation spec is for mode {spec.mode!r}, not {mode!r}")


def _compile_unary(spec: CompilationSpec, extra) -> CotProgram:
    m, sigma = spec.machine, spec.sigma
    trans = _transitions(m)
    _check_names(spec, set(trans))
    n = len(sigma)
    rules = []
    init = {i: (_count(sigma[i - 1]) if i <= n else 0) for i in range(1, m.k + 1)}
    for a in sigma:
        for r, tau in enumerate(m.transitions):
            if tau.src != m.initial:
                continue
            body = _body(fold_guard(tau.guard, init), Atom(a), extra)
            if body is not None:
                rules.append(CotRule(transition_token(r), body))
    terms = _counter_terms(m, [_count(a) for a in sigma])
    rules += _simulation_rules(m, terms, extra)
    return CotProgram(sigma, tuple(sigma) + trans, _finals(m), tuple(rules))


def compile_permutation_invariant(spec: CompilationSpec) -> CotProgram:
    _require(spec, "permutation_invariant")
    return _compile_unary(spec, TrueF())


def compile_letter_bounded(spec: CompilationSpec) -> CotProgram:
    _require(spec, "letter_bounded")
    lb = letter_bound_formula(spec.sigma)
    return _compile_unary(spec, lb)


def phase_one_check(sigma: Sequence[str], i: int, strict: bool):
    """Formula holding at length l iff beta(l) is the indicator word of letter i (1-based)."""
    a = sigma[i - 1]
    parts = [
        Compare(CountRel(REL_ONE, Atom(a)), "=", _count(a)),
        Compare(CountRel(REL_ONE, TrueF()), "=", _count(a)),
    ]
    if strict:
        total = linear(None, [(1, _count(b)) for b in sigma])
        parts.append(Compare(CountRel(REL_LEN, TrueF()), "=", total))
    return conj(*parts)


def marker_count(i: int):
    """X_i: the number of positions before marker m_i."""
    return Count(Compare(_count(marker_token(i)), "=", Const(0)))


def compile_general(spec: CompilationSpec) -> CotProgram:
    _require(spec, "general")
    m, sigma = spec.machine, spec.sigma
    n = len(sigma)
    trans = _transitions(m)
    boxes = tuple(box_token(i) for i in range(1, n + 1))
    markers = tuple(marker_token(i) for i in range(1, n + 1))
    _check_names(spec, set(trans) | set(boxes) | set(markers))
    rules = [CotRule(box_token(1), Atom(a)) for a in sigma]
    checks = [phase_one_check(sigma, i, spec.strict_length) for i in range(1, n + 1)]
    for i in range(1, n + 1):
        rules.append(CotRule(marker_token(i), And(Atom(box_token(i)), checks[i - 1])))
    for i in range(1, n + 1):
        rules.append(CotRule(box_token(i), And(Atom(box_token(i)), Not(checks[i - 1]))))
    for i in range(1, n):
        rules.append(CotRule(box_token(i + 1), Atom(marker_token(i))))
    xs = [marker_count(i) for i in range(1, n + 1)]
    init = {i: (xs[i - 1] if i <= n else 0) for i in range(1, m.k + 1)}
    for r, tau in enumerate(m.transitions):
        if tau.src != m.initial:
            continue
        body = _body(Atom(marker_token(n)), fold_guard(tau.guard, init))
        if body is not None:
            rules.append(CotRule(transition_token(r), body))
    rules += _simulation_rules(m, _counter_terms(m, xs))
    relations = ((REL_ONE, "one"), (REL_LEN, "len")) if spec.strict_length else ((REL_ONE, "one"),)
    gamma = tuple(sigma) + trans + boxes + markers
    return CotProgram(sigma, gamma, _finals(m), tuple(rules), relations)


def compile_program(spec: CompilationSpec) -> CotProgram:
    return {
        "permutation_invariant": compile_permutation_invariant,
        "letter_bounded": compile_letter_bounded,
        "general": compile_general,
    }[spec.mode](spec)


def compile_machine(machine: CounterMachine, sigma: Sequence[str], mode: str = "permutation_invariant",
                    strict_length: bool = True) -> CotProgram:
    return compile_program(CompilationSpec(machine, tuple(sigma), mode, strict_length))


def marker_positions(word: Sequence[str], trace: Sequence[str], n: int) -> tuple | None:
    """Recover (X_1..X_n) from a general-mode trace; ``None`` if Phase I did not finish."""
    out = []
    for i in range(1, n + 1):
        try:
            idx = list(trace).index(marker_token(i))
        except ValueError:
            return None
        out.append(len(word) + idx)
    return tuple(out)


def phase_one_holds(word: Sequence[str], sigma: Sequence[str], i: int, length: int,
                    strict: bool) -> bool:
    """Direct evaluation of the Phase I check for letter i at string length ``length``."""
    mine = {p for p, c in enumerate(word, 1) if c == sigma[i - 1]}
    if set(one_positions(length)) != mine:
        return False
    return not strict or beta_len(length) == len(word)


def expected_markers(word: Sequence[str], sigma: Sequence[str], strict: bool = True) -> tuple:
    """Marker positions Phase I should produce, by direct search."""
    out, lo = [], len(word) + 1
    for i in range(1, len(sigma) + 1):
        ell = lo
        while not phase_one_holds(word, sigma, i, ell, strict):
            ell += 1
        out.append(ell)
        lo = ell + 2
    return tuple(out)
