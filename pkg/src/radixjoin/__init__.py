"""Worst-case optimal joins by bitwise backtracking over binary tries."""

from .analysis import (
    FractionalCover,
    GeneratedInstance,
    SubquerySizeProfile,
    fit_scaling_exponent,
    fractional_edge_cover,
    gen_agm_grid,
    gen_bernoulli_relation,
    gen_pathological_pairs,
    subquery_answer,
    subquery_profile,
    subquery_size_oracle,
    verify_instance_bound,
)
from .baseline import brute_force_join, leapfrog_unary, lftj, pairwise_hash_join
from .bittrie import AttributeBitOrder, BitTrie, build_trie, interleaved_attribute_order
from .boolean import (
    BitOrder,
    BoolVar,
    EncodingSpec,
    booleanise_query,
    booleanise_relation,
    compute_width,
    decode,
    encode,
)
from .engine import IndexCatalog, RecursionStats, grtj, rtj
from .io import format_query, load_database, parse_query
from .planner import (
    ExpansionPlan,
    VariableOrder,
    interleaved_variable_order,
    layer_plan,
    plan_for_query,
    scc_expansion_order,
)
from .relmodel import (
    Atom,
    ConjunctiveQuery,
    Database,
    Hypergraph,
    InequalityConstraint,
    Relation,
    build_hypergraph,
)

__version__ = "0.1.0"
