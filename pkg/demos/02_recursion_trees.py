"""
Watching the search
===================

The one-bit triangle instance with R = {(0,0),(1,0),(1,1)} and
S = T = {(0,1),(1,0)}. Each line of the trace is one node of the recursion
tree: the bits fixed so far and the candidates that survive at the next
level. Changing the variable order changes the tree but never the answer.
"""

from radixjoin import Database, EncodingSpec, booleanise_query, grtj
from radixjoin.analysis import TRIANGLE, subquery_profile
from radixjoin.planner import interleaved_variable_order

db = Database.from_dict({
    "R": [(0, 0), (1, 0), (1, 1)],
    "S": [(0, 1), (1, 0)],
    "T": [(0, 1), (1, 0)],
})
bq = booleanise_query(TRIANGLE, EncodingSpec.for_universe(db.universe_size))

for alpha in ([0, 1, 2], [0, 2, 1]):
    order = interleaved_variable_order(bq.variables, bq.width, alpha)
    print("order:", " ".join(str(v) for v in order))
    answers, stats = grtj(bq, db, order, trace=print)
    prof = subquery_profile(bq, db, [[v] for v in order])
    print("answers:", sorted(answers))
    print("nodes per level:", list(stats.nodes_per_level))
    print("subquery sizes: ", [1] + list(prof.sizes))
    print()
