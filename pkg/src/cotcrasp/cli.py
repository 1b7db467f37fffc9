"""Command-line front end.

Exit codes: 0 ok / Yes, 1 No / reject, 2 Unknown (fuel ran out), 3 usage
error, 4 input error. Results go to stdout and diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .asm import ENCODINGS, assemble, task_source
from .compiler import MODE_ALIASES, compile_machine
from .cot import Answer, CotProgram, generate
from .dataset import DEFAULT_FUEL, DatasetSample, generate_corpus
from .dsl import parse_asm, parse_cm, parse_cot_program, parse_expr, print_cm, print_cot_program
from .incremental import IncrementalTable
from .machine import Outcome, run as run_machine
from .oracles import oracle
from .rpe import beta, one_positions
from .semantics import eval_expr
from .syntax import CraspError, is_formula

log = logging.getLogger("cotcrasp")

EXIT_OK, EXIT_NO, EXIT_UNKNOWN, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3, 4
_ANSWER_CODE = {Answer.YES: EXIT_OK, Answer.NO: EXIT_NO, Answer.UNKNOWN: EXIT_UNKNOWN}
_OUTCOME_CODE = {Outcome.ACCEPT: EXIT_OK, Outcome.STUCK: EXIT_NO, Outcome.FUEL_EXHAUSTED: EXIT_UNKNOWN}

GENERAL_FUEL_CAP = 1 << 24


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot write {path}: {e.strerror or e}") from None


def split_word(text: str, alphabet: Sequence[str]) -> list[str]:
    """Tokens of a command-line word.

    Whitespace or commas separate tokens when present; otherwise a known
    token is taken whole, and anything else is split into characters.
    """
    if any(c in text for c in " ,\t"):
        return [t for t in text.replace(",", " ").split() if t]
    if text in alphabet:
        return [text]
    return list(text)


def _program(path: str) -> CotProgram:
    return parse_cot_program(_read(path))


def default_fuel(program: CotProgram, length: int, cap: int = GENERAL_FUEL_CAP) -> int:
    if program.relations:
        return min(2 ** (length + 3), cap)
    return 10 * length + 100


def _fmt(v) -> str:
    return str(int(v)) if isinstance(v, bool) else str(v)


def cmd_eval(args) -> int:
    prog = _program(args.program)
    word = split_word(args.word, prog.tokens)
    if not word:
        raise InputError("the word is empty")
    exprs = [(args.expr, parse_expr(args.expr))] if args.expr else [
        (f"rule {i} ({r.head})", r.body) for i, r in enumerate(prog.rules)]
    for label, e in exprs:
        if args.all_positions:
            vals = eval_expr(word, e, prog.relation_table, prog.tokens)
            print(f"{label}\t{' '.join(_fmt(v) for v in vals)}")
        else:
            table = IncrementalTable(prog.tokens, [e], prog.relation_table)
            for t in word:
                table.push(t)
            print(f"{label}\t{_fmt(table.value_at_last(e))}")
    return EXIT_OK


def _run(prog: CotProgram, args):
    word = split_word(args.word, prog.sigma)
    fuel = args.fuel if args.fuel is not None else default_fuel(prog, len(word), args.fuel_cap)
    return word, generate(prog, word, fuel)


def cmd_run(args) -> int:
    prog = _program(args.program)
    word, res = _run(prog, args)
    print(f"verdict\t{res.verdict.value}")
    print(f"steps\t{res.steps}")
    print(f"trace\t{' '.join(res.trace)}")
    if args.trace:
        sample = DatasetSample("", "", "", tuple(word), res.trace, int(res.answer is Answer.YES),
                               len(word), len(res.trace))
        _write(args.trace, json.dumps(sample.to_record(), separators=(",", ":")) + "\n")
    return _ANSWER_CODE[res.answer]


def cmd_check(args) -> int:
    prog = _program(args.program)
    _, res = _run(prog, args)
    print(res.answer.value)
    return _ANSWER_CODE[res.answer]


def cmd_simulate(args) -> int:
    m = parse_cm(_read(args.cm))
    try:
        init = [int(x) for x in args.init.replace(",", " ").split()] if args.init else []
    except ValueError:
        raise InputError(f"--init must be integers, got {args.init!r}") from None
    init += [0] * (m.k - len(init))
    if len(init) != m.k:
        raise InputError(f"--init has {len(init)} values but the machine has {m.k} counters")
    out = run_machine(m, init, args.fuel)
    print(f"verdict\t{out.verdict.value}")
    print(f"steps\t{out.steps}")
    print(f"trace\t{' '.join(m.name_of(t) for t in out.trace)}")
    print(f"config\t{out.config.state}\t{','.join(map(str, out.config.counters))}")
    return _OUTCOME_CODE[out.verdict]


def cmd_assemble(args) -> int:
    if args.task:
        if args.source:
            raise UsageError("give either a source file or --task, not both")
        src = task_source(args.task, args.encoding)
    elif args.source:
        src = _read(args.source)
    else:
        raise UsageError("assemble needs a source file or --task")
    if args.print_source:
        _write(args.output, src)
        return EXIT_OK
    _write(args.output, print_cm(assemble(parse_asm(src))))
    return EXIT_OK


def cmd_compile(args) -> int:
    m = parse_cm(_read(args.cm))
    sigma = tuple(a for a in args.alphabet.split(",") if a)
    prog = compile_machine(m, sigma, MODE_ALIASES[args.mode], not args.no_strict_length)
    _write(args.output, print_cot_program(prog))
    return EXIT_OK


def cmd_verify(args) -> int:
    prog = _program(args.program)
    pred = oracle(args.oracle, args.encoding)
    n, _, accepted, unknown = prog.session().explore(args.max_len, args.fuel)
    acc = {w for w, _ in accepted}
    unk = set(unknown)
    for length in range(1, args.max_len + 1):
        for w in itertools.product(prog.sigma, repeat=length):
            got = Answer.UNKNOWN if w in unk else (Answer.YES if w in acc else Answer.NO)
            want = Answer.YES if pred(w) else Answer.NO
            if got is not want:
                print(f"MISMATCH {' '.join(w)}: program {got.value}, oracle {want.value}")
                return EXIT_UNKNOWN if got is Answer.UNKNOWN else EXIT_NO
    print(f"OK {n} words")
    return EXIT_OK


def cmd_rpe(args) -> int:
    if args.to < args.from_:
        raise UsageError("--to must not be below --from")
    out = []
    for j in range(args.from_, args.to + 1):
        b = beta(j)
        word = "undefined" if b is None else b
        pos = ",".join(map(str, one_positions(j))) or "-"
        out.append(f"{j}\t{word}\t{pos}\n")
    sys.stdout.write("".join(out))
    return EXIT_OK


def _lengths(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None


def cmd_gen_data(args) -> int:
    report = generate_corpus(args.task, args.encoding, args.lengths, args.count, args.seed,
                             args.output, args.fuel, "train" if args.train else "test0")
    print(f"kept\t{report.kept}")
    print(f"dropped\t{report.dropped}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cotcrasp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", help="evaluate rule bodies or an expression on a word")
    e.add_argument("program")
    e.add_argument("word")
    e.add_argument("--expr")
    e.add_argument("--all-positions", action="store_true")
    e.set_defaults(func=cmd_eval)

    for name, func, helptext in (("run", cmd_run, "generate a CoT and print the trace"),
                                 ("check", cmd_check, "exit with the verdict")):
        r = sub.add_parser(name, help=helptext)
        r.add_argument("program")
        r.add_argument("word")
        r.add_argument("--fuel", type=int)
        r.add_argument("--fuel-cap", type=int, default=GENERAL_FUEL_CAP)
        if name == "run":
            r.add_argument("--trace", help="write the run as a dataset record")
        r.set_defaults(func=func)

    s = sub.add_parser("simulate-cm", help="run a counter machine")
    s.add_argument("cm")
    s.add_argument("--init", default="")
    s.add_argument("--fuel", type=int, default=10 ** 6)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("assemble", help="assemble register code into a counter machine")
    a.add_argument("source", nargs="?")
    a.add_argument("--task", help="use a canned task machine instead of a source file")
    a.add_argument("--encoding", choices=ENCODINGS, default="unary")
    a.add_argument("--print-source", action="store_true")
    a.add_argument("-o", "--output")
    a.set_defaults(func=cmd_assemble)

    c = sub.add_parser("compile", help="compile a counter machine into a CoT program")
    c.add_argument("cm")
    c.add_argument("--alphabet", required=True)
    c.add_argument("--mode", choices=sorted(MODE_ALIASES), default="perm")
    c.add_argument("--no-strict-length", action="store_true")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compile)

    v = sub.add_parser("verify", help="exhaustive check against a reference predicate")
    v.add_argument("program")
    v.add_argument("--oracle", required=True)
    v.add_argument("--encoding", default="unary")
    v.add_argument("--max-len", type=int, required=True)
    v.add_argument("--fuel", type=int, required=True)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("rpe", help="tabulate beta and its 1-positions")
    r.add_argument("--from", dest="from_", type=int, required=True)
    r.add_argument("--to", type=int, required=True)
    r.set_defaults(func=cmd_rpe)

    g = sub.add_parser("gen-data", help="write a trace-supervised corpus")
    g.add_argument("--task", required=True)
    g.add_argument("--encoding", choices=("unary", "binary"), required=True)
    g.add_argument("--lengths", type=_lengths, required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    g.add_argument("--train", action="store_true", help="label lengths 1..100 as train")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen_data)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"cotcrasp: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, CraspError, ValueError) as e:
        print(f"cotcrasp: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
