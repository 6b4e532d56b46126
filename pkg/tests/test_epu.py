import json

import numpy as np
import pytest

from indevo.epu import (
    Epu,
    EpuError,
    Epuon,
    Expression,
    Genome,
    IdCounter,
    Interaction,
    RatePolicy,
    Replication,
    Variation,
    divergence,
    epuize,
    epuized_genome,
    evaluate_epu,
    replicate,
)
from indevo.tm import CodeError, encode_machine, random_machine, random_word, run

from conftest import bundled
from oracles import mean_band


def g(seq, **kw):
    return Genome.from_sequence(seq, **kw)


def test_zero_rate_identity(rng):
    parent = g("0110" * 25, epu_size=10)
    child = replicate(parent, rng, RatePolicy(0.0))
    assert child.sequence == parent.sequence
    assert {e.id for e in child.epus}.isdisjoint({e.id for e in parent.epus})


def test_forced_flip(rng):
    for s in ("0", "1"):
        assert replicate(g(s), rng, RatePolicy(1.0)).sequence != s


def test_parent_untouched(rng):
    parent = g("0" * 64, epu_size=8)
    before = parent.to_record()
    replicate(parent, rng, RatePolicy(0.5))
    assert parent.to_record() == before


def test_binomial_mean(rng):
    parent = g("0" * 10_000)
    counts = [sum(a != b for a, b in zip(replicate(parent, rng, RatePolicy(0.01)).sequence, parent.sequence))
              for _ in range(100)]
    lo, hi = mean_band(10_000, 0.01, 100)
    assert lo <= np.mean(counts) <= hi


def test_fidelity_is_default_base(rng):
    epu = Epu(1, Expression("0" * 1000), Replication(0.0), Interaction(), Variation.uniform(1000))
    child = replicate(Genome((epu,)), rng)
    assert child.sequence == "1" * 1000


def test_regulated_multiplier_needs_signal(rng):
    var = Variation((0.0,) * 50, (False,) * 50)
    epu = Epu(1, Expression("0" * 50, "stress", 0.5), Replication(), Interaction(), var)
    genome = Genome((epu,))
    assert replicate(genome, rng, RatePolicy(1.0, signals={"stress": 0.9})).sequence == "0" * 50
    assert replicate(genome, rng, RatePolicy(1.0, signals={"stress": 0.1})).sequence == "1" * 50


def test_divergence_cases():
    a = g("0" * 100)
    assert divergence(a, a) == 0.0
    assert divergence(g("0" * 10), g("1" * 10)) == 1.0
    b = g("1" * 16 + "0" * 84)
    assert divergence(a, b) == pytest.approx(0.16)
    assert divergence(g("0101"), g("010")) == pytest.approx(0.25)


def test_divergence_pseudometric(rng):
    for _ in range(1000):
        seqs = ["".join(rng.choice(["0", "1"], size=int(rng.integers(1, 12)))) for _ in range(3)]
        x, y, z = (g(s) for s in seqs)
        assert divergence(x, y) == divergence(y, x) >= 0
        assert divergence(x, z) <= divergence(x, y) + divergence(y, z) + 1e-12


def test_four_slots_required():
    for bad in (
        dict(expression=None),
        dict(replication=None),
        dict(interaction=None),
        dict(variation=None),
    ):
        kw = dict(expression=Expression("01"), replication=Replication(), interaction=Interaction(),
                  variation=Variation.uniform(2))
        kw.update(bad)
        with pytest.raises(EpuError):
            Epu(1, **kw)


@pytest.mark.parametrize("make", [
    lambda: Replication(1.5),
    lambda: Expression("0", threshold=-0.1),
    lambda: Interaction(((1, 2.0),)),
    lambda: Variation((-1.0,), (False,)),
    lambda: Genome(()),
])
def test_slot_ranges(make):
    with pytest.raises(EpuError):
        make()


def test_duplicate_ids_rejected():
    e = Epu(1, Expression("0"), Replication(), Interaction(), Variation.uniform(1))
    with pytest.raises(EpuError):
        Genome((e, e))


def test_record_roundtrip():
    genome = g("0110" * 4, epu_size=4, mutator=True, species="x")
    rec = json.loads(json.dumps(genome.to_record()))
    assert rec["schema_version"] == 1
    assert Genome.from_record(rec) == genome


def test_epuize_increment():
    code = encode_machine(bundled("increment"))
    epu = epuize(code)
    assert epu.sequence == code
    assert evaluate_epu(epu, "011").output == "100"


def test_epuize_malformed():
    with pytest.raises(CodeError):
        epuize("1|")


def test_epuized_copy_at_zero_rate_evaluates_identically(rng):
    m = random_machine(rng, n_states=4, n_final=1)
    genome = epuized_genome(encode_machine(m))
    copy = replicate(genome, rng, RatePolicy(0.0))
    for _ in range(100):
        w = random_word(rng, m)
        assert evaluate_epu(copy.epus[0], w, 500) == run(m, w, 500)


def test_id_counter_deterministic():
    a = IdCounter.from_rng(np.random.default_rng(3))
    b = IdCounter.from_rng(np.random.default_rng(3))
    assert list(a.take(5)) == list(b.take(5))


def test_epuon_links_and_generator():
    code = encode_machine(bundled("even_source"))
    nodes = [Epu(i, Expression("0"), Replication(), Interaction(), Variation.uniform(1)) for i in (10, 11, 22, 35)]
    memory = Epuon(nodes, generator=code)
    assert memory.consistent()
    sources = {s for s, _, _ in memory.edges()}
    assert sources == {10, 22}
    assert all(d != s for s, d, _ in memory.edges())

    linked = Epu(1, Expression("0"), Replication(), Interaction(((2, 0.5), (99, 1.0))), Variation.uniform(1))
    plain = Epuon([linked, Epu(2, Expression("1"), Replication(), Interaction(), Variation.uniform(1))])
    assert plain.edges() == [(1, 2, 0.5)]


def test_epuon_solution_memory(rng):
    memory = Epuon()
    genome = g("0110" * 4, epu_size=4)
    memory.store_solution("A", genome, 7.0, IdCounter(100))
    back, fit = memory.recall("A")
    assert back.sequence == genome.sequence and fit == 7.0
    memory.store_solution("A", g("1" * 16, epu_size=4), 9.0, IdCounter(200))
    assert memory.recall("A")[0].sequence == "1" * 16
    assert len(memory) == 4
    assert memory.recall("B") is None


def test_epuon_evaluates_stored_programs():
    code = encode_machine(bundled("increment"))
    memory = Epuon([epuize(code, IdCounter(5))])
    assert memory.evaluate(5, "0111").output == "1000"
