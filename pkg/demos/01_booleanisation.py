"""
Turning values into bits
========================

Every value of a universe of size U becomes a string of w = ceil(log2 U)
bits. A relation of arity r becomes a set of r*w bit tuples and a query
variable x becomes the Boolean variables x_0 .. x_{w-1}.
"""

from radixjoin import BitOrder, EncodingSpec, booleanise_query, decode, encode
from radixjoin.analysis import TRIANGLE
from radixjoin.boolean import booleanise_relation
from radixjoin.relmodel import Relation

# a universe of 5 values needs 3 bits
lsb = EncodingSpec.for_universe(5)
msb = EncodingSpec.for_universe(5, BitOrder.MSB_AT_0)
print("width:", lsb.width)
for v in range(5):
    print(v, "lsb-first", encode(v, lsb), "msb-first", encode(v, msb))
    assert decode(encode(v, lsb), lsb) == v

# a relation is booleanised tuple by tuple
R = Relation.from_tuples("R", 2, [(1, 4), (3, 0)])
print(sorted(booleanise_relation(R, lsb)))

# the triangle query over that universe has 3 * 3 Boolean variables
bq = booleanise_query(TRIANGLE, lsb)
print(" ".join(str(v) for v in bq.bool_vars))
