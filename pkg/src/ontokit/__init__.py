"""ontokit: numerical toolkit for ontological models of
prepare-and-measure quantum experiments.

The package covers the quantum probability layer (states, POVMs,
composites), a classical overlap calculus for finite probability
measures, a framework for ontological models with verifiers and
classifiers, a library of concrete models, antidistinguishability
constructions, and chained Bell correlation tools.
"""

from .antidistinguish import (
    AntidistinguishingCertificate,
    hardy_construction,
    hardy_phases,
    inefficiency_overlap_bound,
    pbr_kraus,
    pbr_overlap_witness,
    pbr_povm,
    pbr_qubit_basis,
    tensor_power_reduction,
    trine_example,
    verify_antidistinguishes,
)
from .builtins import (
    BlochVector,
    abcl_model,
    abcl_parameters,
    basis_fragment,
    bell_model,
    beltrametti_bugajski,
    bloch_to_state,
    kochen_specker_qubit,
    ks_born_mc,
    ks_born_quadrature,
    ks_me_integrals,
    ppm_natural_model,
    random_basis_fragment,
    spekkens_toy_bit,
    state_to_bloch,
)
from .chained import (
    ChainedBases,
    born_joint_table,
    chained_bases,
    chained_joint_prob,
    closed_form_IN,
    closed_form_joint_table,
    correlation_measure,
    embedded_conditional_table,
    max_born_residual,
)
from .distributions import (
    FiniteDistribution,
    JointDistribution,
    StochasticKernel,
    apply_stochastic,
    exclusion_failure,
    mix,
    overlap,
    overlap_by_partition,
    pair_guess_success,
    product_distribution,
    variational_distance,
)
from .linalg import (
    PMFragment,
    Povm,
    born_rule,
    conditional_state,
    fragment_from_json,
    fragment_to_json,
    ket,
    maximally_entangled,
    partial_trace,
    phase_align,
    projector,
    pure_overlap,
    tensor_product,
    validate_povm,
)
from .models import (
    FiniteMeasure,
    FiniteResponse,
    IntervalMeasure,
    IntervalResponse,
    OnticSpace,
    OntologicalModel,
    classify,
    condition_bell_local_model,
    cosupport,
    detect_preparation_contextuality,
    direct_product_model,
    discretize_model,
    fragment_product,
    is_ks_noncontextual,
    is_maximally_psi_epistemic,
    ks_analysis,
    measure_distance,
    measures_overlap,
    mix_models,
    model_from_json,
    model_to_json,
    ontologically_distinct,
    predicted_prob,
    verify_bell_conditioning,
    verify_preclusions,
    verify_reproduces,
    wpip_composite,
)
from .report import Check, Report, render_report

__version__ = "0.1.0"
