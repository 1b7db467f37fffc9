# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled incremental evaluation kernels.

Same interface as ``_fallback.py``. Values are 64-bit; additions, differences
and scalings are overflow-checked.
"""

from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memcpy, memset

cdef extern from *:
    """
    static int ck_add(long long a, long long b, long long *r) { return __builtin_add_overflow(a, b, r); }
    static int ck_sub(long long a, long long b, long long *r) { return __builtin_sub_overflow(a, b, r); }
    static int ck_mul(long long a, long long b, long long *r) { return __builtin_mul_overflow(a, b, r); }
    static int high_zero(long long x) {
        if (x <= 0) return -1;
        unsigned long long ux = (unsigned long long)x;
        int bl = 64 - __builtin_clzll(ux);
        unsigned long long m = (bl == 64) ? ~ux : (~ux & ((1ULL << bl) - 1ULL));
        if (m == 0) return -1;
        return 63 - __builtin_clzll(m);
    }
    """
    int ck_add(long long a, long long b, long long *r) nogil
    int ck_sub(long long a, long long b, long long *r) nogil
    int ck_mul(long long a, long long b, long long *r) nogil
    int high_zero(long long x) nogil
    int __builtin_clzll(unsigned long long x) nogil



cdef enum:
    TRUE = 0
    ATOM = 1
    NOT = 2
    AND = 3
    OR = 4
    LT = 5
    EQ = 6
    GT = 7
    CONST = 8
    COUNT = 9
    COUNT_ATOM = 10
    COUNTREL = 11
    ADD = 12
    SUB = 13
    SCALE = 14
    ACCEPT = 0
    STUCK = 1
    FUEL = 2


cdef int* _ints(object seq) except NULL:
    cdef Py_ssize_t n = len(seq), i
    cdef int* p = <int*>malloc((n + 1) * sizeof(int))
    if p == NULL:
        raise MemoryError()
    for i in range(n):
        p[i] = seq[i]
    return p


cdef long long* _longs(object seq) except NULL:
    cdef Py_ssize_t n = len(seq), i
    cdef long long* p = <long long*>malloc((n + 1) * sizeof(long long))
    if p == NULL:
        raise MemoryError()
    for i in range(n):
        p[i] = seq[i]
    return p


cdef class Evaluator:
    cdef int n, ntok, n_eager, n_counts, n_rules, n_rel
    cdef int *op
    cdef int *a
    cdef int *b
    cdef long long *k
    cdef long long *val
    cdef unsigned long long *stamp
    cdef long long *acc
    cdef long long *tokcount
    cdef int *eager
    cdef int *count_nodes
    cdef int *relslot
    cdef long long **hist
    cdef Py_ssize_t hist_cap
    cdef int *rule_body
    cdef int *rule_head
    cdef int *cand_ptr
    cdef int *cand_idx
    cdef char *final
    cdef unsigned long long cur
    cdef long long _length
    cdef int _last
    cdef int overflow

    def __cinit__(self, ops, a, b, k, int ntok, eager, rule_body, rule_head,
                  cand_ptr, cand_idx, final_mask):
        cdef int i, j, s
        self.n = len(ops)
        self.ntok = ntok
        self.op = _ints(ops)
        self.a = _ints(a)
        self.b = _ints(b)
        self.k = _longs(k)
        self.val = <long long*>malloc((self.n + 1) * sizeof(long long))
        self.stamp = <unsigned long long*>malloc((self.n + 1) * sizeof(unsigned long long))
        self.acc = <long long*>malloc((self.n + 1) * sizeof(long long))
        self.tokcount = <long long*>malloc((ntok + 1) * sizeof(long long))
        self.relslot = <int*>malloc((self.n + 1) * sizeof(int))
        if (self.val == NULL or self.stamp == NULL or self.acc == NULL
                or self.tokcount == NULL or self.relslot == NULL):
            raise MemoryError()
        memset(self.stamp, 0, (self.n + 1) * sizeof(unsigned long long))
        memset(self.acc, 0, (self.n + 1) * sizeof(long long))
        memset(self.tokcount, 0, (ntok + 1) * sizeof(long long))
        self.n_eager = len(eager)
        self.eager = _ints(eager)
        counts = [e for e in eager if ops[e] == COUNT]
        self.n_counts = len(counts)
        self.count_nodes = _ints(counts)
        rels = [e for e in eager if ops[e] == COUNTREL]
        self.n_rel = len(rels)
        for i in range(self.n):
            self.relslot[i] = -1
        self.hist_cap = 1024
        self.hist = <long long**>malloc((self.n_rel + 1) * sizeof(long long*))
        if self.hist == NULL:
            raise MemoryError()
        for s in range(self.n_rel):
            self.relslot[rels[s]] = s
            self.hist[s] = <long long*>malloc(self.hist_cap * sizeof(long long))
            if self.hist[s] == NULL:
                raise MemoryError()
            self.hist[s][0] = 0
        self.n_rules = len(rule_body)
        self.rule_body = _ints(rule_body)
        self.rule_head = _ints(rule_head)
        self.cand_ptr = _ints(cand_ptr)
        self.cand_idx = _ints(cand_idx)
        self.final = <char*>malloc(ntok + 1)
        if self.final == NULL:
            raise MemoryError()
        for i in range(ntok):
            self.final[i] = 1 if final_mask[i] else 0
        self.cur = 1
        self._length = 0
        self._last = -1
        self.overflow = 0

    def __dealloc__(self):
        cdef int s
        free(self.op); free(self.a); free(self.b); free(self.k)
        free(self.val); free(self.stamp); free(self.acc); free(self.tokcount)
        free(self.eager); free(self.count_nodes); free(self.relslot)
        if self.hist != NULL:
            for s in range(self.n_rel):
                free(self.hist[s])
            free(self.hist)
        free(self.rule_body); free(self.rule_head)
        free(self.cand_ptr); free(self.cand_idx); free(self.final)

    property length:
        def __get__(self):
            return self._length

    property last:
        def __get__(self):
            return self._last

    cdef void _grow(self, Py_ssize_t need) except *:
        cdef Py_ssize_t cap = self.hist_cap
        cdef int s
        cdef long long *p
        if need < cap:
            return
        while cap <= need:
            cap *= 2
        for s in range(self.n_rel):
            p = <long long*>realloc(self.hist[s], cap * sizeof(long long))
            if p == NULL:
                raise MemoryError()
            self.hist[s] = p
        self.hist_cap = cap

    cdef long long ev(self, int i) nogil:
        cdef long long v, x, y, low
        cdef long long *h
        cdef int o, z, bit
        if self.stamp[i] == self.cur:
            return self.val[i]
        o = self.op[i]
        if o == COUNT:
            return self.acc[i]
        if o == COUNT_ATOM:
            return self.tokcount[self.a[i]]
        if o == TRUE:
            v = 1
        elif o == ATOM:
            v = 1 if self._last == self.a[i] else 0
        elif o == NOT:
            v = 1 - self.ev(self.a[i])
        elif o == AND:
            v = 1 if (self.ev(self.a[i]) and self.ev(self.b[i])) else 0
        elif o == OR:
            v = 1 if (self.ev(self.a[i]) or self.ev(self.b[i])) else 0
        elif o == LT:
            v = 1 if self.ev(self.a[i]) < self.ev(self.b[i]) else 0
        elif o == EQ:
            v = 1 if self.ev(self.a[i]) == self.ev(self.b[i]) else 0
        elif o == GT:
            v = 1 if self.ev(self.a[i]) > self.ev(self.b[i]) else 0
        elif o == CONST:
            v = self.k[i]
        elif o == COUNTREL:
            h = self.hist[self.relslot[i]]
            z = high_zero(self._length)
            if z <= 0:
                v = 0
            elif self.b[i] == 1:
                v = h[z]
            else:
                low = self._length & ((1LL << z) - 1)
                v = 0
                while low:
                    bit = 63 - __builtin_clzll(<unsigned long long>low)
                    v += h[z - bit] - h[z - bit - 1]
                    low ^= (1LL << bit)
        elif o == ADD:
            x = self.ev(self.a[i])
            y = self.ev(self.b[i])
            if ck_add(x, y, &v):
                self.overflow = 1
                v = 0
        elif o == SUB:
            x = self.ev(self.a[i])
            y = self.ev(self.b[i])
            if ck_sub(x, y, &v):
                self.overflow = 1
                v = 0
        elif o == SCALE:
            x = self.ev(self.a[i])
            if ck_mul(self.k[i], x, &v):
                self.overflow = 1
                v = 0
        else:
            v = 0
        self.val[i] = v
        self.stamp[i] = self.cur
        return v

    cdef inline void _raise_overflow(self) except *:
        if self.overflow:
            self.overflow = 0
            from .syntax import IntegerOverflow
            raise IntegerOverflow("count term left the 64-bit range")

    cdef void _push(self, int tok) except *:
        cdef int e, node, s
        self._length += 1
        self._last = tok
        self.tokcount[tok] += 1
        self.cur += 1
        if self.n_rel:
            self._grow(self._length + 1)
        for e in range(self.n_eager):
            node = self.eager[e]
            if self.op[node] == COUNT:
                self.acc[node] += self.ev(self.a[node])
            else:
                s = self.relslot[node]
                self.hist[s][self._length] = self.hist[s][self._length - 1] + self.ev(self.a[node])
        if self.overflow:
            self._raise_overflow()

    cdef int _step(self) except -2:
        cdef int r, t = self._last
        for r in range(self.cand_ptr[t], self.cand_ptr[t + 1]):
            if self.ev(self.rule_body[self.cand_idx[r]]):
                if self.overflow:
                    self._raise_overflow()
                return self.rule_head[self.cand_idx[r]]
        if self.overflow:
            self._raise_overflow()
        return -1

    cdef int _generate(self, long long max_steps, list trace, long long *steps) except -1:
        cdef int tok
        cdef long long n = 0
        while n < max_steps:
            tok = self._step()
            if tok < 0:
                steps[0] = n
                return STUCK
            self._push(tok)
            n += 1
            if trace is not None:
                trace.append(tok)
            if self.final[tok]:
                steps[0] = n
                return ACCEPT
        steps[0] = n
        return FUEL

    def reset(self):
        memset(self.acc, 0, (self.n + 1) * sizeof(long long))
        memset(self.tokcount, 0, (self.ntok + 1) * sizeof(long long))
        self._length = 0
        self._last = -1
        self.cur += 1

    def push(self, int tok):
        if tok < 0 or tok >= self.ntok:
            raise IndexError(f"token id {tok} out of range")
        self._push(tok)

    def value(self, int node):
        cdef long long v
        if self._length == 0:
            from .syntax import EmptyState
            raise EmptyState("no position to evaluate at")
        if node < 0 or node >= self.n:
            raise IndexError(f"node {node} out of range")
        v = self.ev(node)
        self._raise_overflow()
        return v

    def step(self):
        if self._length == 0:
            from .syntax import EmptyState
            raise EmptyState("no position to evaluate at")
        return self._step()

    def generate(self, long long max_steps, list trace=None):
        cdef long long steps = 0
        cdef int verdict = self._generate(max_steps, trace, &steps)
        return verdict, steps

    def save(self):
        accs = [self.acc[self.count_nodes[i]] for i in range(self.n_counts)]
        tc = [self.tokcount[i] for i in range(self.ntok)]
        return (self._length, self._last, tc, accs)

    def restore(self, snap):
        cdef int i
        length, last, tc, accs = snap
        self._length = length
        self._last = last
        for i in range(self.ntok):
            self.tokcount[i] = tc[i]
        for i in range(self.n_counts):
            self.acc[self.count_nodes[i]] = accs[i]
        self.cur += 1

    def explore(self, letters, int max_len, long long fuel_base, long long fuel_per_len):
        """Run every word over ``letters`` of length 1..max_len, sharing prefixes."""
        cdef int nl = len(letters), depth, i, verdict
        cdef int width = self.ntok + self.n_counts
        cdef long long steps = 0, n_words = 0, n_stuck = 0
        cdef int *lets
        cdef int *choice
        cdef long long *snaps
        accepted = []
        unknown = []
        if max_len < 1 or nl == 0:
            return 0, 0, accepted, unknown
        lets = _ints(letters)
        choice = <int*>malloc((max_len + 1) * sizeof(int))
        snaps = <long long*>malloc((max_len + 2) * (width + 2) * sizeof(long long))
        if choice == NULL or snaps == NULL:
            free(lets); free(choice); free(snaps)
            raise MemoryError()
        try:
            self.reset()
            self._snap(snaps)
            depth = 0
            choice[0] = -1
            while depth >= 0:
                choice[depth] += 1
                if choice[depth] >= nl:
                    depth -= 1
                    continue
                self._load(snaps + depth * (width + 2))
                self._push(lets[choice[depth]])
                self._snap(snaps + (depth + 1) * (width + 2))
                verdict = self._generate(fuel_base + fuel_per_len * (depth + 1), None, &steps)
                n_words += 1
                if verdict == STUCK:
                    n_stuck += 1
                else:
                    word = tuple([lets[choice[i]] for i in range(depth + 1)])
                    if verdict == ACCEPT:
                        accepted.append((word, steps))
                    else:
                        unknown.append(word)
                if depth + 1 < max_len:
                    depth += 1
                    choice[depth] = -1
            self._load(snaps)
        finally:
            free(lets); free(choice); free(snaps)
        return n_words, n_stuck, accepted, unknown

    cdef void _snap(self, long long *buf):
        cdef int i
        buf[0] = self._length
        buf[1] = self._last
        memcpy(buf + 2, self.tokcount, self.ntok * sizeof(long long))
        for i in range(self.n_counts):
            buf[2 + self.ntok + i] = self.acc[self.count_nodes[i]]

    cdef void _load(self, long long *buf):
        cdef int i
        self._length = buf[0]
        self._last = <int>buf[1]
        memcpy(self.tokcount, buf + 2, self.ntok * sizeof(long long))
        for i in range(self.n_counts):
            self.acc[self.count_nodes[i]] = buf[2 + self.ntok + i]
        self.cur += 1


cdef class MachineRunner:
    cdef int k, n_states, n_trans, initial
    cdef int *trans_ptr
    cdef int *tgt
    cdef int *guard_ptr
    cdef int *guard_ctr
    cdef int *guard_pos
    cdef long long *effects
    cdef int *eff_ptr
    cdef int *eff_ctr
    cdef long long *eff_val
    cdef char *final

    def __cinit__(self, int k, int n_states, trans_ptr, tgt, guard_ptr, guard_ctr,
                  guard_pos, effects, final_mask, int initial):
        cdef int i
        # sparse copy of the effect vectors: most transitions touch one counter
        ptr, ctr, val = [0], [], []
        for i in range(len(tgt)):
            for c in range(k):
                if effects[i * k + c]:
                    ctr.append(c)
                    val.append(effects[i * k + c])
            ptr.append(len(ctr))
        self.eff_ptr = _ints(ptr)
        self.eff_ctr = _ints(ctr)
        self.eff_val = _longs(val)
        self.k = k
        self.n_states = n_states
        self.n_trans = len(tgt)
        self.initial = initial
        self.trans_ptr = _ints(trans_ptr)
        self.tgt = _ints(tgt)
        self.guard_ptr = _ints(guard_ptr)
        self.guard_ctr = _ints(guard_ctr)
        self.guard_pos = _ints(guard_pos)
        self.effects = _longs(effects)
        self.final = <char*>malloc(n_states + 1)
        if self.final == NULL:
            raise MemoryError()
        for i in range(n_states):
            self.final[i] = 1 if final_mask[i] else 0

    def __dealloc__(self):
        free(self.trans_ptr); free(self.tgt); free(self.guard_ptr)
        free(self.guard_ctr); free(self.guard_pos); free(self.effects); free(self.final)
        free(self.eff_ptr); free(self.eff_ctr); free(self.eff_val)

    cdef inline bint _enabled(self, int t, long long *x) nogil:
        cdef int g
        cdef long long v
        for g in range(self.guard_ptr[t], self.guard_ptr[t + 1]):
            v = x[self.guard_ctr[g]]
            if self.guard_pos[g]:
                if v <= 0:
                    return False
            elif v != 0:
                return False
        return True

    cdef int _step(self, int state, long long *x) except -2:
        cdef int t, found = -1, c
        cdef bint same
        for t in range(self.trans_ptr[state], self.trans_ptr[state + 1]):
            if self._enabled(t, x):
                if found < 0:
                    found = t
                else:
                    same = self.tgt[t] == self.tgt[found]
                    for c in range(self.k):
                        if self.effects[t * self.k + c] != self.effects[found * self.k + c]:
                            same = False
                    if not same:
                        raise RuntimeError(f"transitions {found} and {t} are both enabled")
        return found

    def step(self, int state, x):
        cdef long long *buf = _longs(x)
        try:
            return self._step(state, buf)
        finally:
            free(buf)

    def run(self, init, long long fuel, bint record):
        cdef long long *x = _longs(init)
        cdef int state = self.initial, t, e, verdict = FUEL
        cdef long long steps = 0
        trace = [] if record else None
        try:
            while steps < fuel:
                t = self._step(state, x)
                if t < 0:
                    verdict = STUCK
                    break
                for e in range(self.eff_ptr[t], self.eff_ptr[t + 1]):
                    x[self.eff_ctr[e]] += self.eff_val[e]
                state = self.tgt[t]
                steps += 1
                if record:
                    trace.append(t)
                if self.final[state]:
                    verdict = ACCEPT
                    break
            out = [x[e] for e in range(self.k)]
        finally:
            free(x)
        return verdict, steps, trace, state, out
