"""Chain-of-thought C-RASP programs: switch rules, generation and acceptance."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Mapping, Sequence

from .lowering import Lowerer, build_evaluator
from .rpe import RelKind
from .syntax import (
    CraspError,
    Formula,
    UnknownRelation,
    UnknownToken,
    atoms,
    check_token_name,
    is_formula,
    relations_used,
)


class Verdict(str, Enum):
    ACCEPT = "Accept"
    REJECT_STUCK = "RejectStuck"
    FUEL_EXHAUSTED = "FuelExhausted"


class Answer(str, Enum):
    YES = "Yes"
    NO = "No"
    UNKNOWN = "Unknown"


_VERDICTS = {0: Verdict.ACCEPT, 1: Verdict.REJECT_STUCK, 2: Verdict.FUEL_EXHAUSTED}
_ANSWERS = {
    Verdict.ACCEPT: Answer.YES,
    Verdict.REJECT_STUCK: Answer.NO,
    Verdict.FUEL_EXHAUSTED: Answer.UNKNOWN,
}


class ProgramError(CraspError):
    pass


@dataclass(frozen=True)
class CotRule:
    head: str
    body: Formula


@dataclass(frozen=True)
class CotProgram:
    """Ordered switch rules over input alphabet ``sigma`` and CoT alphabet ``gamma``.

    ``relations`` is a tuple of ``(name, kind)`` pairs; kinds are ``"one"``
    or ``"len"``.
    """

    sigma: tuple
    gamma: tuple
    gamma_final: tuple
    rules: tuple
    relations: tuple = ()

    def __post_init__(self):
        for group in ("sigma", "gamma", "gamma_final"):
            names = tuple(getattr(self, group))
            for n in names:
                check_token_name(n)
            if len(set(names)) != len(names):
                raise ProgramError(f"duplicate token in {group}")
            object.__setattr__(self, group, names)
        rels = tuple((name, RelKind(kind).value) for name, kind in self.relations)
        if len({n for n, _ in rels}) != len(rels):
            raise ProgramError("duplicate relation name")
        for name, _ in rels:
            check_token_name(name)
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.rules:
            raise ProgramError("a CoT program needs at least one rule")
        gamma = set(self.gamma)
        for f in self.gamma_final:
            if f not in gamma:
                raise ProgramError(f"final token {f!r} is not in the CoT alphabet")
        known = set(self.sigma) | gamma
        rel_names = {n for n, _ in rels}
        for r in self.rules:
            if r.head not in gamma:
                raise UnknownToken(r.head, "rule head outside the CoT alphabet")
            if not is_formula(r.body):
                raise ProgramError(f"rule body for {r.head!r} is not a formula")
            for a in sorted(atoms(r.body)):
                if a not in known:
                    raise UnknownToken(a, f"in rule for {r.head!r}")
            for rel in sorted(relations_used(r.body)):
                if rel not in rel_names:
                    raise UnknownRelation(rel)

    @property
    def tokens(self) -> tuple:
        """Combined alphabet: sigma first, then the remaining CoT tokens."""
        return tuple(dict.fromkeys(self.sigma + self.gamma))

    @property
    def relation_table(self) -> dict:
        return dict(self.relations)

    @cached_property
    def _lowered(self):
        token_ids = {t: i for i, t in enumerate(self.tokens)}
        low = Lowerer(token_ids, self.relation_table)
        rules = [(low.lower(r.body), token_ids[r.head]) for r in self.rules]
        finals = [token_ids[t] for t in self.gamma_final]
        return token_ids, low, rules, finals

    def session(self, backend: str | None = None) -> "CotSession":
        return CotSession(self, backend)


@dataclass(frozen=True)
class RunResult:
    trace: tuple
    verdict: Verdict
    steps: int

    @property
    def answer(self) -> Answer:
        return _ANSWERS[self.verdict]


class CotSession:
    """One evaluator state for one program; owns the growing string."""

    def __init__(self, program: CotProgram, backend: str | None = None):
        self.program = program
        token_ids, low, rules, finals = program._lowered
        self.token_ids = token_ids
        self.tokens = program.tokens
        self._rules = rules
        self._kernel = build_evaluator(low.code, len(token_ids), rules, finals, backend)

    def __len__(self):
        return self._kernel.length

    def _id(self, token: str) -> int:
        try:
            return self.token_ids[token]
        except KeyError:
            raise UnknownToken(token) from None

    def push(self, token: str) -> "CotSession":
        self._kernel.push(self._id(token))
        return self

    def extend(self, tokens: Sequence[str]) -> "CotSession":
        for t in tokens:
            self.push(t)
        return self

    def step(self) -> str | None:
        tok = self._kernel.step()
        return None if tok < 0 else self.tokens[tok]

    def holding_rules(self) -> list[int]:
        """Indices of every rule whose body holds at the last position."""
        return [i for i, (body, _) in enumerate(self._rules) if self._kernel.value(body)]

    def snapshot(self):
        """Opaque copy of the evaluator state; see ``restore``."""
        return self._kernel.save()

    def restore(self, snap) -> None:
        self._kernel.restore(snap)

    def generate(self, fuel: int) -> RunResult:
        trace: list[int] = []
        code, steps = self._kernel.generate(fuel, trace)
        return RunResult(tuple(self.tokens[t] for t in trace), _VERDICTS[code], steps)

    def explore(self, max_len: int, fuel_base: int, fuel_per_len: int = 0,
                letters: Sequence[str] | None = None):
        """Decide every word of length 1..max_len over ``letters`` (default sigma).

        Returns ``(n_words, n_rejected, accepted, unknown)`` where ``accepted``
        holds ``(word, trace_length)`` pairs and words are tuples of tokens.
        """
        letters = self.program.sigma if letters is None else tuple(letters)
        ids = [self._id(t) for t in letters]
        n, stuck, acc, unk = self._kernel.explore(ids, max_len, fuel_base, fuel_per_len)
        name = self.tokens
        return (
            n,
            stuck,
            [(tuple(name[t] for t in w), s) for w, s in acc],
            [tuple(name[t] for t in w) for w in unk],
        )


def _check_input(program: CotProgram, word: Sequence[str]) -> None:
    if len(word) == 0:
        raise CraspError("inputs are nonempty words")
    sigma = set(program.sigma)
    for t in word:
        if t not in sigma:
            raise UnknownToken(t, "input letters must come from sigma")


def step(program: CotProgram, w: Sequence[str], backend: str | None = None) -> str | None:
    """Token chosen by the first rule whose body holds at the last position of ``w``."""
    if len(w) == 0:
        raise CraspError("step needs a nonempty string")
    return program.session(backend).extend(w).step()


def generate(program: CotProgram, w: Sequence[str], fuel: int,
             backend: str | None = None) -> RunResult:
    _check_input(program, w)
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    return program.session(backend).extend(w).generate(fuel)


def accepts(program: CotProgram, w: Sequence[str], fuel: int,
            backend: str | None = None) -> Answer:
    return generate(program, w, fuel, backend).answer


def relation_kinds(program: CotProgram) -> Mapping[str, RelKind]:
    return {n: RelKind(k) for n, k in program.relations}
