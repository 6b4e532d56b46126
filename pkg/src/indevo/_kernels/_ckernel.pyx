# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics must stay identical to ``_pykernel``."""

cdef enum:
    LIMIT = 0
    HALTED = 1
    EDGE = 2
    WATCH = 3


def execute(const long long[::1] next_state,
            const long long[::1] writes,
            const long long[::1] moves,
            const unsigned char[::1] final_mask,
            long long[:, ::1] tapes,
            long long[::1] heads,
            long long state,
            long long n_symbols,
            long long limit,
            long long watch):
    cdef Py_ssize_t n_tapes = tapes.shape[0]
    cdef Py_ssize_t cap = tapes.shape[1]
    cdef long long steps = 0
    cdef long long idx, mul, nxt, base, h, new
    cdef Py_ssize_t t
    cdef int changed, edge

    while True:
        if final_mask[state]:
            return steps, state, HALTED
        idx = 0
        mul = 1
        for t in range(n_tapes):
            idx += tapes[t, heads[t]] * mul
            mul *= n_symbols
        idx += state * mul
        nxt = next_state[idx]
        if nxt < 0:
            return steps, state, HALTED
        if steps >= limit:
            return steps, state, LIMIT
        base = idx * n_tapes
        changed = 0
        edge = 0
        for t in range(n_tapes):
            h = heads[t]
            new = writes[base + t]
            if t == watch and tapes[t, h] != new:
                changed = 1
            tapes[t, h] = new
            h += moves[base + t]
            heads[t] = h
            if h == 0 or h == cap - 1:
                edge = 1
        state = nxt
        steps += 1
        if changed:
            return steps, state, WATCH
        if edge:
            return steps, state, EDGE


def apply_events(unsigned char[:, ::1] codes,
                 const long long[::1] rows,
                 const long long[::1] loci,
                 const long long[::1] kinds,
                 const long long[::1] values,
                 const long long[::1] seg_end,
                 long long n_symbols):
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t i, x, r, j, e
    for i in range(n):
        r = rows[i]
        j = loci[i]
        e = seg_end[j]
        if kinds[i] == 0:
            codes[r, j] = <unsigned char>((codes[r, j] + values[i]) % n_symbols)
        elif kinds[i] == 1:
            x = e - 1
            while x > j:
                codes[r, x] = codes[r, x - 1]
                x -= 1
            codes[r, j] = <unsigned char>values[i]
        else:
            for x in range(j, e - 1):
                codes[r, x] = codes[r, x + 1]
            codes[r, e - 1] = <unsigned char>values[i]
