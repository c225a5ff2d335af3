"""Numerical verification laboratory for contrastive representation
learning over finite latent-class models.

Losses, supervised evaluations, and bound checks are exact population
quantities computed by finite-support enumeration; every inequality is
checked with explicit constants.
"""

from .errors import (
    ConfigError,
    ContrastLabError,
    DegenerateModelError,
    DivergedError,
    EnumerationCapError,
    UnknownClassError,
    UnknownPointError,
    ValidationError,
)
from .model import (
    BlockBatch,
    CollisionStats,
    FiniteDistribution,
    LatentClassModel,
    SampleBatch,
    Task,
    TaskWeights,
    collision_stats,
    load_model,
    nu_distribution,
    sample_batch,
    sample_block_batch,
    save_model,
    task_distribution_D,
    u_distribution,
)
from .representation import (
    ClassMoments,
    RepresentationFn,
    apply,
    class_moments,
    identity_representation,
    load_representation,
    project_norm_ball,
    save_representation,
    zero_representation,
)
from .losses import (
    CollisionSplit,
    LossKind,
    UnsupDecomposition,
    block_loss_empirical,
    block_loss_exact,
    collision_split,
    decompose_unsup,
    loss_value,
    unsup_loss_empirical,
    unsup_loss_exact,
)
from .supervised import (
    MeanClassifier,
    SupEvalResult,
    avg_sup_loss,
    mean_classifier,
    sup_loss_best,
    sup_loss_mean,
    weighted_avg_sup_loss,
)
from .deviation import DeviationSummary, deviation, gamma_multi, gamma_of, sigma_bound
from .training import (
    FunctionClass,
    TrainResult,
    erm_block,
    erm_descent,
    erm_finite,
    select_best_exact,
)
from .complexity import (
    GenBoundValue,
    RademacherEstimate,
    gen_bound,
    loss_bound_B,
    rademacher,
    restriction_vector,
)
from .verifier import (
    BoundCheck,
    ScenarioReport,
    check_corollary_4_7,
    check_eq_8_identity,
    check_lemma_4_3,
    check_lemma_4_4,
    check_lemma_4_6,
    check_lemma_B2_population,
    check_prop_6_2,
    check_theorem_4_1_statistical,
    check_theorem_4_5_population,
    check_theorem_B1_population,
    run_counterexample,
    run_scenario,
    summarize,
    sweep_negative_samples,
    write_report,
)
from .scenarios import Scenario, build as build_scenario

__version__ = "0.1.0"
