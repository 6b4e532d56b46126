import numpy as np
import pytest

from indevo import _kernels
from indevo._kernels import _pykernel
from indevo.tm import CompiledMachine, random_machine

ck = _kernels._load_compiled()
compiled_only = pytest.mark.skipif(ck is None, reason="compiled kernel not built")


def _setup(rng):
    m = random_machine(rng, n_states=4, n_symbols=3, tapes=int(rng.integers(1, 4)), p_missing=0.05)
    c = CompiledMachine(m)
    cap = 64
    tapes = np.zeros((m.tapes, cap), dtype=np.int64)
    tapes[0, 32:36] = rng.integers(0, 4, size=4)
    heads = np.full(m.tapes, 32, dtype=np.int64)
    return c, tapes, heads


def _call(mod, c, tapes, heads, limit, watch):
    return mod.execute(c.next_state, c.writes, c.moves, c.final_mask, tapes, heads, c.state_index[c.machine.start_state], len(c.symbols), limit, watch)


@compiled_only
def test_execute_parity(rng):
    for _ in range(300):
        c, tapes, heads = _setup(rng)
        watch = int(rng.integers(-1, tapes.shape[0]))
        limit = int(rng.integers(0, 40))
        t1, h1, t2, h2 = tapes.copy(), heads.copy(), tapes.copy(), heads.copy()
        assert _call(ck, c, t1, h1, limit, watch) == _call(_pykernel, c, t2, h2, limit, watch)
        assert np.array_equal(t1, t2) and np.array_equal(h1, h2)


def _events(rng, n, L, k, m):
    rows = rng.integers(0, n, size=m)
    loci = rng.integers(0, L, size=m)
    kinds = rng.integers(0, 3, size=m)
    values = np.where(kinds == 0, rng.integers(1, k, size=m), rng.integers(0, k, size=m))
    return [np.ascontiguousarray(a, dtype=np.int64) for a in (rows, loci, kinds, values)]


@compiled_only
def test_apply_events_parity(rng):
    for _ in range(200):
        n, L, k = 5, 24, int(rng.integers(2, 5))
        seg_end = np.repeat(np.array([8, 16, 24], dtype=np.int64), 8)
        codes = rng.integers(0, k, size=(n, L)).astype(np.uint8)
        ev = _events(rng, n, L, k, int(rng.integers(0, 30)))
        a, b = codes.copy(), codes.copy()
        ck.apply_events(a, *ev, seg_end, k)
        _pykernel.apply_events(b, *ev, seg_end, k)
        assert np.array_equal(a, b)


def test_indels_stay_inside_segment():
    seg_end = np.repeat(np.array([4, 8], dtype=np.int64), 4)
    codes = np.array([[0, 1, 0, 1, 1, 1, 1, 1]], dtype=np.uint8)
    ev = [np.array(x, dtype=np.int64) for x in ([0], [1], [1], [1])]
    _kernels.apply_events(codes, *ev, seg_end, 2)
    assert codes.tolist() == [[0, 1, 1, 0, 1, 1, 1, 1]]
    ev = [np.array(x, dtype=np.int64) for x in ([0], [0], [2], [0])]
    _kernels.apply_events(codes, *ev, seg_end, 2)
    assert codes.tolist() == [[1, 1, 0, 0, 1, 1, 1, 1]]


def test_substitution_always_changes_symbol(rng):
    seg_end = np.full(6, 6, dtype=np.int64)
    for k in (2, 3, 5):
        codes = rng.integers(0, k, size=(50, 6)).astype(np.uint8)
        before = codes.copy()
        rows = np.arange(50, dtype=np.int64)
        loci = rng.integers(0, 6, size=50).astype(np.int64)
        vals = rng.integers(1, k, size=50).astype(np.int64)
        _kernels.apply_events(codes, rows, loci, np.zeros(50, dtype=np.int64), vals, seg_end, k)
        assert np.all(codes[rows, loci] != before[rows, loci])


def test_backend_name_reported():
    assert _kernels.BACKEND_NAME in ("cython", "python")
