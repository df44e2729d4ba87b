"""
Planning with precedence constraints
====================================

Each trie fixes the order in which it reveals bits. Reading a trie along a
prefix forces every bit to be expanded no later than the next bit of the
same trie. These constraints form a graph; its strongly connected
components must be expanded together and the components run in
topological order.
"""

from radixjoin import EncodingSpec, booleanise_query
from radixjoin.analysis import TRIANGLE
from radixjoin.planner import (
    default_index_orders,
    induced_constraints,
    plan_for_query,
    resolve_index_orders,
    scc_expansion_order,
)

bq = booleanise_query(TRIANGLE, EncodingSpec.for_universe(4))

# R reads a before b, S reads b before c, T reads c before a: a cycle
orders = {"R": [0, 1], "S": [0, 1], "T": [1, 0]}
idx = resolve_index_orders(bq, default_index_orders(bq, orders))
for atom, order in zip(bq.atoms, idx):
    print(atom.predicate, order)
g = induced_constraints(bq, idx)
print("edges:", sorted(f"{u}->{v}" for u, v in g.edges))
plan = scc_expansion_order(g)
print("groups:", [[str(v) for v in grp] for grp in plan.groups])

# the default orders agree with one variable order, so every group is a single bit
plan = plan_for_query(bq, default_index_orders(bq))
print("default groups:", [[str(v) for v in grp] for grp in plan.groups])
