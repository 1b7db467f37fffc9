"""Compare the native and pure-Python evaluation kernels.

Usage: python3 benchmarks/bench_kernel.py [--steps N] [--repeats R]
"""

from __future__ import annotations

import argparse
import time

from cotcrasp.asm import stdlib_machine
from cotcrasp.compiler import compile_machine
from cotcrasp.dataset import task_program
from cotcrasp.lowering import BACKENDS
from cotcrasp.machine import parity_machine, run


def best_of(repeats, fn):
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def parity_steps(backend, n):
    program = compile_machine(parity_machine(), ("a", "b"), "perm")

    def go():
        s = program.session(backend).extend(["a"] * (2 * n))
        assert s.generate(n + 1).steps == n + 1
    return go


def general_prime(backend):
    program = task_program("prime", "binary")
    word = ["one", "zero", "one", "one"]

    def go():
        program.session(backend).extend(word).generate(10 ** 7)
    return go


def explore_gcd(backend, max_len):
    program = task_program("gcd", "unary")

    def go():
        program.session(backend).explore(max_len, 10 ** 6)
    return go


def machine_run(backend):
    m = stdlib_machine("prime", "unary")

    def go():
        run(m, [997] + [0] * (m.k - 1), 10 ** 8, record=False, backend=backend)
    return go


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=10 ** 5, help="PARITY steps per run")
    ap.add_argument("--explore-len", type=int, default=7)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    cases = [
        (f"parity {args.steps} steps", lambda b: parity_steps(b, args.steps)),
        ("binary prime 1011", general_prime),
        (f"explore gcd to length {args.explore_len}", lambda b: explore_gcd(b, args.explore_len)),
        ("counter machine prime(997)", machine_run),
    ]
    backends = sorted(BACKENDS)
    print(f"{'case':<34}" + "".join(f"{b:>12}" for b in backends) + ("   speedup" if len(backends) > 1 else ""))
    for name, make in cases:
        row = {b: best_of(args.repeats, make(b)) for b in backends}
        line = f"{name:<34}" + "".join(f"{row[b]:>11.3f}s" for b in backends)
        if "native" in row:
            line += f"   {row['python'] / row['native']:>6.1f}x"
        print(line)
    if "native" not in BACKENDS:
        print("native kernel not built; only the Python fallback was timed")


if __name__ == "__main__":
    main()
