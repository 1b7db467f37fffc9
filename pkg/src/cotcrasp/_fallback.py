"""Pure-Python incremental evaluation kernels.

Mirrors ``_native.pyx`` call for call; selected when the compiled extension
is unavailable. Opcode numbers are shared with ``lowering.py``.
"""

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1

TRUE, ATOM, NOT, AND, OR, LT, EQ, GT = range(8)
CONST, COUNT, COUNT_ATOM, COUNTREL, ADD, SUB, SCALE = range(8, 15)

ACCEPT, STUCK, FUEL = 0, 1, 2


def _high_zero(x):
    if x <= 0:
        return -1
    mask = ~x & ((1 << x.bit_length()) - 1)
    return mask.bit_length() - 1 if mask else -1


def _checked(v):
    if v < INT64_MIN or v > INT64_MAX:
        from .syntax import IntegerOverflow
        raise IntegerOverflow("count term left the 64-bit range")
    return v


class Evaluator:
    def __init__(self, ops, a, b, k, ntok, eager, rule_body, rule_head,
                 cand_ptr, cand_idx, final_mask):
        self.ops = list(ops)
        self.a = list(a)
        self.b = list(b)
        self.k = list(k)
        self.ntok = ntok
        self.eager = list(eager)
        self.count_nodes = [e for e in self.eager if self.ops[e] == COUNT]
        self.rule_body = list(rule_body)
        self.rule_head = list(rule_head)
        self.cands = [list(cand_idx[cand_ptr[t]:cand_ptr[t + 1]]) for t in range(ntok)]
        self.final = [bool(x) for x in final_mask]
        n = len(self.ops)
        self.val = [0] * n
        self.stamp = [0] * n
        self.acc = [0] * n
        self.hist = {e: [0] for e in self.eager if self.ops[e] == COUNTREL}
        self.tokcount = [0] * ntok
        self.cur = 0
        self.length = 0
        self.last = -1

    def reset(self):
        self.acc = [0] * len(self.ops)
        self.tokcount = [0] * self.ntok
        for h in self.hist.values():
            del h[1:]
        self.length = 0
        self.last = -1
        self.cur += 1

    def _ev(self, i):
        if self.stamp[i] == self.cur:
            return self.val[i]
        op = self.ops[i]
        if op == COUNT:
            return self.acc[i]
        if op == COUNT_ATOM:
            return self.tokcount[self.a[i]]
        ev = self._ev
        if op == TRUE:
            v = 1
        elif op == ATOM:
            v = 1 if self.last == self.a[i] else 0
        elif op == NOT:
            v = 1 - ev(self.a[i])
        elif op == AND:
            v = 1 if ev(self.a[i]) and ev(self.b[i]) else 0
        elif op == OR:
            v = 1 if ev(self.a[i]) or ev(self.b[i]) else 0
        elif op == LT:
            v = 1 if ev(self.a[i]) < ev(self.b[i]) else 0
        elif op == EQ:
            v = 1 if ev(self.a[i]) == ev(self.b[i]) else 0
        elif op == GT:
            v = 1 if ev(self.a[i]) > ev(self.b[i]) else 0
        elif op == CONST:
            v = self.k[i]
        elif op == COUNTREL:
            h = self.hist[i]
            z = _high_zero(self.length)
            if z <= 0:
                v = 0
            elif self.b[i] == 1:
                v = h[z]
            else:
                low = self.length & ((1 << z) - 1)
                v = 0
                while low:
                    bit = low.bit_length() - 1
                    p = z - bit
                    v += h[p] - h[p - 1]
                    low ^= 1 << bit
        elif op == ADD:
            v = _checked(ev(self.a[i]) + ev(self.b[i]))
        elif op == SUB:
            v = _checked(ev(self.a[i]) - ev(self.b[i]))
        elif op == SCALE:
            v = _checked(self.k[i] * ev(self.a[i]))
        else:
            raise ValueError(f"bad opcode {op}")
        self.val[i] = v
        self.stamp[i] = self.cur
        return v

    def push(self, tok):
        if not 0 <= tok < self.ntok:
            raise IndexError(f"token id {tok} out of range")
        self.length += 1
        self.last = tok
        self.tokcount[tok] += 1
        self.cur += 1
        for e in self.eager:
            if self.ops[e] == COUNT:
                self.acc[e] += self._ev(self.a[e])
            else:
                h = self.hist[e]
                del h[self.length:]
                h.append(h[-1] + self._ev(self.a[e]))

    def value(self, node):
        if self.length == 0:
            from .syntax import EmptyState
            raise EmptyState("no position to evaluate at")
        return self._ev(node)

    def step(self):
        if self.length == 0:
            from .syntax import EmptyState
            raise EmptyState("no position to evaluate at")
        for r in self.cands[self.last]:
            if self._ev(self.rule_body[r]):
                return self.rule_head[r]
        return -1

    def generate(self, max_steps, trace=None):
        steps = 0
        while steps < max_steps:
            tok = self.step()
            if tok < 0:
                return STUCK, steps
            self.push(tok)
            steps += 1
            if trace is not None:
                trace.append(tok)
            if self.final[tok]:
                return ACCEPT, steps
        return FUEL, steps

    def save(self):
        return (self.length, self.last, list(self.tokcount),
                [self.acc[c] for c in self.count_nodes])

    def restore(self, snap):
        self.length, self.last, tc, accs = snap
        self.tokcount = list(tc)
        for c, v in zip(self.count_nodes, accs):
            self.acc[c] = v
        self.cur += 1

    def explore(self, letters, max_len, fuel_base, fuel_per_len):
        """Run every word over ``letters`` of length 1..max_len, sharing prefixes."""
        accepted, unknown = [], []
        n_words = 0
        n_stuck = 0
        word = []

        def rec(depth):
            nonlocal n_words, n_stuck
            here = self.save()
            for tok in letters:
                self.restore(here)
                self.push(tok)
                word.append(tok)
                pushed = self.save()
                verdict, steps = self.generate(fuel_base + fuel_per_len * (depth + 1))
                n_words += 1
                if verdict == ACCEPT:
                    accepted.append((tuple(word), steps))
                elif verdict == FUEL:
                    unknown.append(tuple(word))
                else:
                    n_stuck += 1
                if depth + 1 < max_len:
                    self.restore(pushed)
                    rec(depth + 1)
                word.pop()
            self.restore(here)

        self.reset()
        if max_len >= 1:
            rec(0)
        return n_words, n_stuck, accepted, unknown


class MachineRunner:
    """Counter machine stepper over flattened transition tables."""

    def __init__(self, k, n_states, trans_ptr, tgt, guard_ptr, guard_ctr, guard_pos,
                 effects, final_mask, initial):
        self.k = k
        self.trans_ptr = list(trans_ptr)
        self.tgt = list(tgt)
        self.guards = [
            [(guard_ctr[g], guard_pos[g]) for g in range(guard_ptr[t], guard_ptr[t + 1])]
            for t in range(len(tgt))
        ]
        self.effects = [tuple(effects[t * k:(t + 1) * k]) for t in range(len(tgt))]
        self.final = [bool(x) for x in final_mask]
        self.initial = initial

    def _enabled(self, t, x):
        for c, pos in self.guards[t]:
            if pos:
                if x[c] <= 0:
                    return False
            elif x[c] != 0:
                return False
        return True

    def step(self, state, x):
        """Index of the enabled transition or -1; raises on a genuine choice."""
        found = -1
        for t in range(self.trans_ptr[state], self.trans_ptr[state + 1]):
            if self._enabled(t, x):
                if found < 0:
                    found = t
                elif self.tgt[t] != self.tgt[found] or self.effects[t] != self.effects[found]:
                    raise RuntimeError(f"transitions {found} and {t} are both enabled")
        return found

    def run(self, init, fuel, record):
        x = list(init)
        state = self.initial
        trace = [] if record else None
        steps = 0
        verdict = FUEL
        while steps < fuel:
            t = self.step(state, x)
            if t < 0:
                verdict = STUCK
                break
            eff = self.effects[t]
            for c in range(self.k):
                x[c] += eff[c]
            state = self.tgt[t]
            steps += 1
            if record:
                trace.append(t)
            if self.final[state]:
                verdict = ACCEPT
                break
        return verdict, steps, trace, state, x
