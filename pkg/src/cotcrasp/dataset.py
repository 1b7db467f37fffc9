"""Trace-supervised corpora for the arithmetic tasks.

Each sample pairs an input word with the CoT trace the compiled program
produces on it. Unary tasks run through the letter-bounded compilation of
the stdlib machine, so the trace is the machine's transition sequence.
Binary tasks run through the general construction with strict length.
Inputs are drawn with one RNG per sample, seeded from ``(seed, index)``, so
any prefix of a corpus is reproducible on its own.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from sympy import nextprime, prevprime

from .asm import TASKS, stdlib_machine, task_alphabet
from .compiler import compile_machine
from .cot import Answer, CotProgram, Verdict, generate
from .machine import parity_machine
from .oracles import ARITHMETIC, parse_numerals, tokens_of_binary
from .syntax import CraspError

log = logging.getLogger(__name__)

SOS, SEP, EOS = "<sos>", "<sep>", "<eos>"
RESERVED = (SOS, SEP, EOS)

SPLITS = (("test0", 1, 100), ("test1", 101, 200), ("test2", 201, 300))
MAX_LENGTH = SPLITS[-1][2]
DEFAULT_FUEL = 10 ** 6
PERTURBATION = (1, 4)


class DatasetError(CraspError):
    pass


class EmptyRange(DatasetError):
    pass


def split_for(length: int, in_distribution: str = "test0") -> str:
    for name, lo, hi in SPLITS:
        if lo <= length <= hi:
            return in_distribution if name == "test0" else name
    raise DatasetError(f"input length {length} is outside the split ranges 1..{MAX_LENGTH}")


def dataset_tasks() -> tuple:
    return ("parity",) + tuple(TASKS)


@lru_cache(maxsize=None)
def task_program(task: str, encoding: str) -> CotProgram:
    """The designated program whose traces are the supervision targets."""
    if task == "parity" and encoding == "unary":
        return compile_machine(parity_machine(), ("a", "b"), "permutation_invariant")
    if encoding == "unary":
        return compile_machine(stdlib_machine(task, "unary"), task_alphabet(task, "unary"),
                               "letter_bounded")
    if encoding == "binary":
        return compile_machine(stdlib_machine(task, "binary"), task_alphabet(task, "binary"), "general")
    raise DatasetError(f"no dataset program for task {task!r} with encoding {encoding!r}")


def _letters(task: str) -> tuple:
    return ("a", "b") if task == "parity" else task_alphabet(task, "unary")


def _random_bits(rng: random.Random, nbits: int) -> int:
    if nbits <= 1:
        return rng.randint(0, 1)
    return rng.randint(1 << (nbits - 1), (1 << nbits) - 1)


def _positive(task: str, rng: random.Random, budget: int) -> tuple:
    """A tuple satisfying the task relation, sized by a rough bit budget."""
    if task == "prime":
        bits = max(2, budget)
        start = rng.randint(1 << (bits - 1), (1 << bits) - 1)
        p = nextprime(start)
        return (p if p < 1 << bits else prevprime(start + 1),)
    if task == "exponential":
        i = rng.randint(0, max(0, budget - 3))
        return (i, 2 ** i)
    if task == "division":
        jb = rng.randint(1, max(1, budget // 2))
        j = max(1, _random_bits(rng, jb))
        m = _random_bits(rng, max(1, budget // 2 - jb + 1))
        return (j * m, j)
    if task == "gcd":
        g = max(1, _random_bits(rng, rng.randint(1, max(1, budget // 4))))
        while True:
            a = _random_bits(rng, rng.randint(1, max(1, budget // 4)))
            b = _random_bits(rng, rng.randint(1, max(1, budget // 4)))
            if ARITHMETIC["gcd"](a, b, 1):
                return (g * a, g * b, g)
    if task == "multiplication":
        i = _random_bits(rng, rng.randint(1, max(1, budget // 4)))
        j = _random_bits(rng, rng.randint(1, max(1, budget // 4)))
        return (i, j, i * j)
    raise DatasetError(f"unknown task {task!r}")


def _negative(task: str, values: tuple, rng: random.Random) -> tuple:
    """Perturb one component by a nonzero offset until the relation fails."""
    lo, hi = PERTURBATION
    offsets = [d for d in range(-hi, hi + 1) if abs(d) >= lo]
    fallback = None
    for _ in range(200):
        pos = rng.randrange(len(values))
        v = values[pos] + rng.choice(offsets)
        if v < 0:
            continue
        cand = values[:pos] + (v,) + values[pos + 1:]
        if ARITHMETIC[task](*cand):
            continue
        if v.bit_length() == values[pos].bit_length():
            return cand
        fallback = fallback or cand
    if fallback is None:
        raise DatasetError(f"could not perturb {values} into a negative for {task}")
    return fallback


def _encode(values: tuple) -> tuple:
    return tokens_of_binary("/".join(format(v, "b") for v in values))


def sample_inputs(task: str, encoding: str, lengths: tuple[int, int], count: int,
                  seed: int) -> list[tuple]:
    """Draw ``count`` input words with lengths in ``lengths`` (inclusive)."""
    lo, hi = lengths
    if count < 1:
        raise DatasetError("count must be at least 1")
    if lo < 1 or hi < lo:
        raise EmptyRange(f"empty length range {lo}..{hi}")
    if hi > MAX_LENGTH:
        raise DatasetError(f"lengths above {MAX_LENGTH} have no split")
    if task not in dataset_tasks():
        raise DatasetError(f"unknown task {task!r}")
    out = []
    for index in range(count):
        rng = random.Random(f"{seed}-{index}")
        if encoding == "unary":
            letters = _letters(task)
            n = rng.randint(lo, hi)
            out.append(tuple(rng.choice(letters) for _ in range(n)))
        elif encoding == "binary":
            if task == "parity":
                raise DatasetError("parity has no binary encoding")
            out.append(_binary_input(task, index, lo, hi, rng))
        else:
            raise DatasetError(f"unknown encoding {encoding!r}")
    return out


def _binary_input(task: str, index: int, lo: int, hi: int, rng: random.Random) -> tuple:
    want_positive = index % 2 == 0
    for _ in range(10_000):
        budget = rng.randint(lo, hi)
        values = _positive(task, rng, budget)
        if not want_positive:
            values = _negative(task, values, rng)
        word = _encode(values)
        if lo <= len(word) <= hi:
            return word
    raise EmptyRange(f"no {task} instance with length in {lo}..{hi}")


@dataclass(frozen=True)
class DatasetSample:
    task: str
    encoding: str
    split: str
    input: tuple
    target: tuple
    label: int
    input_length: int
    trace_length: int

    def to_record(self) -> dict:
        d = asdict(self)
        d["input"] = list(self.input)
        d["target"] = list(self.target)
        return d

    @classmethod
    def from_record(cls, d: dict) -> "DatasetSample":
        return cls(d["task"], d["encoding"], d["split"], tuple(d["input"]), tuple(d["target"]),
                   int(d["label"]), int(d["input_length"]), int(d["trace_length"]))


@dataclass
class BuildReport:
    kept: int = 0
    dropped: int = 0
    dropped_indices: list = field(default_factory=list)


def build_samples(inputs: Iterable[Sequence[str]], program: CotProgram, fuel: int = DEFAULT_FUEL,
                  task: str = "", encoding: str = "", in_distribution: str = "test0",
                  backend: str | None = None) -> tuple[list[DatasetSample], BuildReport]:
    samples, report = [], BuildReport()
    for idx, word in enumerate(inputs):
        word = tuple(word)
        res = generate(program, word, fuel, backend)
        if res.verdict is Verdict.FUEL_EXHAUSTED:
            report.dropped += 1
            report.dropped_indices.append(idx)
            log.info("sample %d dropped: fuel %d exhausted", idx, fuel)
            continue
        samples.append(DatasetSample(
            task=task, encoding=encoding, split=split_for(len(word), in_distribution),
            input=word, target=res.trace, label=int(res.answer is Answer.YES),
            input_length=len(word), trace_length=len(res.trace)))
        report.kept += 1
    return samples, report


class Vocab:
    """Reserved markers, then input letters, then the other CoT tokens (each sorted)."""

    def __init__(self, program: CotProgram):
        sigma = sorted(program.sigma)
        rest = sorted(set(program.gamma) - set(program.sigma))
        self.tokens = list(RESERVED) + sigma + rest
        self.ids = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def encode(self, sample: DatasetSample) -> list[int]:
        ids = self.ids
        return ([ids[SOS]] + [ids[t] for t in sample.input] + [ids[SEP]]
                + [ids[t] for t in sample.target] + [ids[EOS]])

    def to_tsv(self) -> str:
        return "".join(f"{t}\t{i}\n" for i, t in enumerate(self.tokens))


def _record_line(s: DatasetSample) -> str:
    return json.dumps(s.to_record(), separators=(",", ":"), ensure_ascii=True)


def emit(samples: Sequence[DatasetSample], vocab: Vocab, out_dir: "str | Path") -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"samples": out / "samples.jsonl", "vocab": out / "vocab.tsv", "ids": out / "ids.txt"}
    paths["samples"].write_text("".join(_record_line(s) + "\n" for s in samples), encoding="utf-8")
    paths["vocab"].write_text(vocab.to_tsv(), encoding="utf-8")
    paths["ids"].write_text("".join(" ".join(map(str, vocab.encode(s))) + "\n" for s in samples),
                            encoding="utf-8")
    return paths


def load_samples(path: "str | Path") -> list[DatasetSample]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [DatasetSample.from_record(json.loads(l)) for l in lines if l.strip()]


def replay_mismatches(samples: Iterable[DatasetSample], program: CotProgram,
                      fuel: int = DEFAULT_FUEL, backend: str | None = None) -> list[int]:
    """Indices whose stored target or label differs from a fresh run."""
    bad = []
    for i, s in enumerate(samples):
        res = generate(program, s.input, fuel, backend)
        label = int(res.answer is Answer.YES)
        if res.trace != s.target or label != s.label or len(res.trace) != s.trace_length:
            bad.append(i)
    return bad


def generate_corpus(task: str, encoding: str, lengths: tuple[int, int], count: int, seed: int,
                    out_dir: "str | Path", fuel: int = DEFAULT_FUEL,
                    in_distribution: str = "test0") -> BuildReport:
    program = task_program(task, encoding)
    inputs = sample_inputs(task, encoding, lengths, count, seed)
    samples, report = build_samples(inputs, program, fuel, task, encoding, in_distribution)
    emit(samples, Vocab(program), out_dir)
    return report


def numerals(sample: DatasetSample) -> tuple | None:
    """Decoded values of a binary sample's input."""
    return parse_numerals(sample.input)
