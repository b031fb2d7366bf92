"""Generators for the lower-bound model families."""

from .csp import (
    Clause,
    CspModelSpec,
    CspSampler,
    build_csp_model,
    clause_satisfied,
    compile_csp_to_hmm,
    letter_to_literal,
    literal_to_letter,
    planted_clause_distribution,
    sample_planted_clause,
    sample_uniform_clause,
    solution_table,
    transform_clause_c0_to_c,
    uniform_clause_probability,
)
from .cycles import (
    PermutationLabelSpec,
    build_cycle_hmm,
    build_permutation_hmm,
    cyclic_windows,
    distinct_windows,
    random_cycle_bits,
)
from .diagnostics import OddsTrace, posterior_odds_trace
from .parity import (
    ParityModelSpec,
    compile_parity_to_hmm,
    parity_block_distribution,
    parity_sample_block,
    parity_sample_blocks,
    sample_full_row_rank_matrix,
)
