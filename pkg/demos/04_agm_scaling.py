"""
Worst-case output and work
==========================

On the full q x q grid the triangle query returns q**3 = N**1.5 answers
where N = q**2 is the relation size. The work of the bitwise search grows
at the same rate: the fitted exponent of candidates tested against N
stays close to 1.5.
"""

import numpy as np

from radixjoin import EncodingSpec, booleanise_query, rtj
from radixjoin.analysis import agm_bound, fit_scaling_exponent, fractional_cover_number, gen_agm_grid

print("fractional cover number:", fractional_cover_number(gen_agm_grid(2).query))
series = []
for side in (4, 8, 16, 32):
    inst = gen_agm_grid(side)
    bq = booleanise_query(inst.query, EncodingSpec.for_universe(inst.db.universe_size))
    answers, stats = rtj(bq, inst.db)
    N = inst.meta["N"]
    series.append((N, stats.total_candidates))
    print(f"q={side:3d} N={N:5d} answers={len(answers):6d} agm={agm_bound(inst.query, inst.db):8.0f}"
          f" candidates={stats.total_candidates}")
print("fitted exponent: %.3f" % fit_scaling_exponent(series))
print("ratio to N**1.5:", np.round([c / n ** 1.5 for n, c in series], 2))
