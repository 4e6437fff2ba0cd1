"""selcoal: genealogies of selection-driven population models.

Simulators for the max-plus front-propagation particle system and the
extended Wright-Fisher model with heavy-tailed fitness, ancestral-partition
extraction, and exact coalescent-theory references (Kingman, beta family,
Bolthausen-Sznitman, discrete simultaneous-merger chains) to test the
simulations against.
"""

__version__ = "0.1.0"

from .partition import (
    MergerSignature,
    Partition,
    PartitionPath,
    all_partitions,
    is_refinement,
    make_partition,
    merge_blocks,
    merger_signature,
    partition_from_labels,
    partition_from_string,
    singleton_partition,
)
from .fitnesswf import (
    ConstantY,
    ExponentialY,
    GenerationRecord,
    InverseExponential,
    ParetoTail,
    normalize_fitness,
    sample_parents,
    sample_Y,
    wf_generation,
)
from .frontprop import (
    DeterministicNoise,
    ExponentialNoise,
    FrontModel,
    GumbelNoise,
    UniformNoise,
    front_position,
    gumbel_fitness,
    gumbel_speed_oracle,
    measure_front_speed,
    recenter,
    run_front,
    sample_invariant_gumbel,
    step_front,
)
from .genealogy import (
    AncestryHistory,
    CoalescenceStats,
    estimate_cN,
    first_merger_signatures,
    merger_statistics,
    one_generation_signatures,
    pairwise_coalescence_time,
    simulate_history,
    trace_partition_path,
)
from .coaltheory import (
    BetaMeasure,
    PointMassAtZero,
    RateTable,
    Uniform01,
    asymptotic_cn,
    beta_rate_closed_form,
    bsz_rate,
    build_rate_table,
    check_consistency,
    enumerate_merger_signatures,
    kingman_rate,
    lambda_rate_quadrature,
    signature_multiplicity,
    simulate_discrete_xi,
    simulate_lambda_coalescent,
    xi_discrete_prob,
    xi_recursion_residual,
    xi_signature_distribution,
)
from .moments import (
    QuadratureSpec,
    asymptotic_Ip,
    asymptotic_eta_moment,
    eta_moment_mc,
    eta_moment_quadrature,
    eta_moment_tail_bound,
    exp_integral_series,
    falling_factorial_log,
    laplace_Ip,
    mean_Y,
    mohle_ratio,
    nu_factorial_moment,
    pair_coalescence_quadrature,
    second_moment_Y,
)
from .seeding import as_generator, split, stream
