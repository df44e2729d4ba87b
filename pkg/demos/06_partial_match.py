"""
Partial match on random data
============================

N uniform tuples of arity r with s positions fixed to constants. The
number of internal nodes the search visits grows like N**(1 - s/r).
"""

from radixjoin import EncodingSpec, booleanise_query, rtj
from radixjoin.analysis import fit_scaling_exponent, gen_bernoulli_relation

for r, s in ((2, 0), (2, 1), (3, 1), (3, 2), (2, 2)):
    series = []
    for n in (1 << 10, 1 << 12, 1 << 14, 1 << 16):
        inst = gen_bernoulli_relation(n, r=r, s=s, seed=5, width=24)
        bq = booleanise_query(inst.query, EncodingSpec.for_universe(inst.db.universe_size))
        _, stats = rtj(bq, inst.db)
        series.append((n, max(stats.internal_nodes, 1)))
    slope = fit_scaling_exponent(series, noise_floor=0)
    print(f"r={r} s={s}  expected {1 - s / r:.3f}  fitted {slope:.3f}")
