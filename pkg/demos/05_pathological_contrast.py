"""
Repeated variables: bits versus values
======================================

R = {(2i, 2i+1)} and Q(x) :- R(x, x). Every tuple differs in its lowest
bit, so the bitwise search refutes the whole query at the first bit. A
value-level join has to bind x to each first component before noticing
the mismatch.
"""

from radixjoin import EncodingSpec, booleanise_query, rtj
from radixjoin.analysis import gen_pathological_pairs
from radixjoin.baseline import lftj

for count in (10, 100, 1000, 10000):
    inst = gen_pathological_pairs(count)
    bq = booleanise_query(inst.query, EncodingSpec.for_universe(inst.db.universe_size))
    res, stats = rtj(bq, inst.db)
    res2, probes = lftj(inst.query, inst.db)
    assert res == res2 == set()
    print(f"N={count:6d}  radix candidates={stats.total_candidates}  "
          f"lftj bindings={probes.bindings}")
