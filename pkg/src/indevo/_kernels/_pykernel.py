"""Pure-Python fallback for the compiled kernels.

Both functions mirror ``_ckernel.pyx`` exactly; the test suite runs the two
side by side whenever the extension is importable.
"""

LIMIT = 0
HALTED = 1
EDGE = 2
WATCH = 3


def execute(next_state, writes, moves, final_mask, tapes, heads, state, n_symbols, limit, watch):
    n_tapes, cap = tapes.shape
    rows = [tapes[t] for t in range(n_tapes)]
    hs = [int(h) for h in heads]
    state = int(state)
    steps = 0
    try:
        while True:
            if final_mask[state]:
                return steps, state, HALTED
            idx = 0
            mul = 1
            for t in range(n_tapes):
                idx += int(rows[t][hs[t]]) * mul
                mul *= n_symbols
            idx += state * mul
            nxt = int(next_state[idx])
            if nxt < 0:
                return steps, state, HALTED
            if steps >= limit:
                return steps, state, LIMIT
            base = idx * n_tapes
            changed = False
            edge = False
            for t in range(n_tapes):
                h = hs[t]
                new = writes[base + t]
                row = rows[t]
                if t == watch and row[h] != new:
                    changed = True
                row[h] = new
                h += int(moves[base + t])
                hs[t] = h
                if h == 0 or h == cap - 1:
                    edge = True
            state = nxt
            steps += 1
            if changed:
                return steps, state, WATCH
            if edge:
                return steps, state, EDGE
    finally:
        for t in range(n_tapes):
            heads[t] = hs[t]


def apply_events(codes, rows, loci, kinds, values, seg_end, n_symbols):
    for r, j, kind, value in zip(rows.tolist(), loci.tolist(), kinds.tolist(), values.tolist()):
        e = int(seg_end[j])
        row = codes[r]
        if kind == 0:
            row[j] = (int(row[j]) + value) % n_symbols
        elif kind == 1:
            row[j + 1 : e] = row[j : e - 1].copy()
            row[j] = value
        else:
            row[j : e - 1] = row[j + 1 : e].copy()
            row[e - 1] = value
