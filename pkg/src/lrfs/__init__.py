"""Labeled random finite set multi-object estimation.

GLMB/LMB filtering with Gibbs-sampling or ranked-assignment truncation,
multi-scan GLMB smoothing over association histories, closed-form
information divergences, OSPA metrics, and a scenario simulator.
"""

from .assoc import (
    KERNEL,
    CostMatrix,
    ExtendedAssociation,
    cost_matrix,
    gibbs_chain,
    gibbs_conditional,
    gibbs_sample,
    murty_kbest,
)
from .densities import (
    AssociationHistory,
    BernoulliRfs,
    GlmbDensity,
    GlmbHypothesis,
    LabeledIidCluster,
    LmbDensity,
    MultiBernoulli,
    PoissonRfs,
    cardinality_distribution,
    eval_density,
    joint_existence,
    phd,
    set_integral_oracle,
)
from .divergences import (
    bhattacharyya_lmb,
    chi2_lmb,
    csd_glmb,
    csd_lmb,
    divergence_poisson,
    kl_lmb,
    renyi_lmb,
)
from .filters import (
    FilterConfig,
    estimate,
    glmb_predict,
    glmb_update,
    joint_step,
    lmb_filter_step,
    lmb_predict,
    marginalize_to_mglmb,
    run_glmb_filter,
    truncate,
)
from .gaussians import GaussianMixture
from .kalman import (
    LinearGaussianMotion,
    LinearGaussianSensor,
    kalman_predict,
    kalman_update,
    mixture_reduce,
    rts_smooth,
)
from .labels import Label
from .metrics import ospa, ospa2
from .models import (
    BirthModel,
    Box,
    ObservationModel,
    ScoreMatrix,
    SurvivalModel,
    build_score_matrix,
    observation_likelihood,
    psi,
    transition_density,
)
from .sim import Scenario, SimParams, desk_scale_fig9, generate
from .smoother import (
    MsHypothesis,
    MultiScanGlmb,
    TrajectoryEstimate,
    TrajectoryRecord,
    TrajectoryStats,
    estimate_trajectories,
    freeze_before,
    history_log_weight,
    msglmb_extend,
    multiscan_gibbs,
    run_msglmb,
    sequential_factor_sample,
    trajectory_stats,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL",
    "CostMatrix",
    "ExtendedAssociation",
    "cost_matrix",
    "gibbs_chain",
    "gibbs_conditional",
    "gibbs_sample",
    "murty_kbest",
    "AssociationHistory",
    "BernoulliRfs",
    "GlmbDensity",
    "GlmbHypothesis",
    "LabeledIidCluster",
    "LmbDensity",
    "MultiBernoulli",
    "PoissonRfs",
    "cardinality_distribution",
    "eval_density",
    "joint_existence",
    "phd",
    "set_integral_oracle",
    "bhattacharyya_lmb",
    "chi2_lmb",
    "csd_glmb",
    "csd_lmb",
    "divergence_poisson",
    "kl_lmb",
    "renyi_lmb",
    "FilterConfig",
    "estimate",
    "glmb_predict",
    "glmb_update",
    "joint_step",
    "lmb_filter_step",
    "lmb_predict",
    "marginalize_to_mglmb",
    "run_glmb_filter",
    "truncate",
    "GaussianMixture",
    "LinearGaussianMotion",
    "LinearGaussianSensor",
    "kalman_predict",
    "kalman_update",
    "mixture_reduce",
    "rts_smooth",
    "Label",
    "ospa",
    "ospa2",
    "BirthModel",
    "Box",
    "ObservationModel",
    "ScoreMatrix",
    "SurvivalModel",
    "build_score_matrix",
    "observation_likelihood",
    "psi",
    "transition_density",
    "Scenario",
    "SimParams",
    "desk_scale_fig9",
    "generate",
    "MsHypothesis",
    "MultiScanGlmb",
    "TrajectoryEstimate",
    "TrajectoryRecord",
    "TrajectoryStats",
    "estimate_trajectories",
    "freeze_before",
    "history_log_weight",
    "msglmb_extend",
    "multiscan_gibbs",
    "run_msglmb",
    "sequential_factor_sample",
    "trajectory_stats",
]
