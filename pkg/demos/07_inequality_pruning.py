"""
Range constraints prune bit prefixes
====================================

A constraint such as x <= 9 is checked on partial bit strings: a prefix
survives only if some completion satisfies it. With the most significant
bit first, whole halves of the universe disappear at once.
"""

from radixjoin import BitOrder, Database, EncodingSpec, booleanise_query, rtj
from radixjoin.baseline import brute_force_join
from radixjoin.io import parse_query

db = Database.from_dict({"R": [(x, (3 * x) % 64) for x in range(64)]})
q = parse_query("Q(x, y) :- R(x, y), x <= 9, y >= 20.")
for convention in BitOrder:
    bq = booleanise_query(q, EncodingSpec.for_universe(db.universe_size, convention))
    res, stats = rtj(bq, db)
    assert res == brute_force_join(q, db)
    print(f"{convention.name:9s} answers={len(res)} nodes={list(stats.nodes_per_level)}")
